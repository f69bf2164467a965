"""Sphere constants that appear in the limiting formulae."""

from __future__ import annotations

import math

from scipy import integrate

__all__ = ["sphere_area", "k_constant", "k_constant_quadrature"]


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def k_constant(p: float, n: int) -> float:
    """Closed form of the sphere integral of |e . w|^p over S^{n-1}.

    Equals 2 pi^{(n-1)/2} Gamma((p+1)/2) / Gamma((n+p)/2).
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if p < 0:
        raise ValueError(f"exponent must be >= 0, got {p}")
    return 2.0 * math.pi ** ((n - 1) / 2) * math.gamma((p + 1) / 2) / math.gamma((n + p) / 2)


def k_constant_quadrature(p: float, n: int) -> float:
    """Same sphere integral by adaptive quadrature in the polar angle.

    Uses |w_1| = |cos phi| with the slice measure sigma_{n-2} sin^{n-2}(phi) dphi.
    Kept independent of :func:`k_constant` so the two can be cross-checked.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if n == 1:
        # S^0 = {-1, +1}
        return 2.0
    slice_area = sphere_area(n - 1)

    def integrand(phi: float) -> float:
        return abs(math.cos(phi)) ** p * math.sin(phi) ** (n - 2)

    # the integrand is symmetric about pi/2, where |cos| has its kink
    half, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * slice_area * half
