"""Weak-type characterisations of Sobolev and Lebesgue norms through difference quotients.

Submodules:
    funcspace        test-function corpus with exact reference norms
    measures         the weighted measure, difference quotients and superlevel-set curves
    norms            weak, Lorentz and strong functionals; fractional seminorms
    constants        sphere areas and the constant k(p, n)
    limits           plateau detection for the limiting formulae
    counterexamples  growth tables for the Cantor-type families
    interpolation    Lorentz-Hoelder and interpolation-inequality checks
    wavelets         Haar coefficients and the weak-l1 sandwich
    cli              the ``diffquot`` command line
"""

__version__ = "0.1.0"
