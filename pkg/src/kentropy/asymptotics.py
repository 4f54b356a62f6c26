"""Short-time density and small-ball area expansions, rigidity defect, Gauss-Bonnet."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, DomainError
from .functional import density_time_profile
from .kernels import ball_volume
from .submanifold import (
    CurvaturePointData,
    ImmersedSubmanifold,
    curvature_at,
    curvature_field,
    geodesic_ball_area,
    integrate,
    locate,
)

__all__ = [
    "ExpansionFit",
    "GenusReport",
    "default_profile_grid",
    "euler_characteristic",
    "fit_expansion",
    "fit_short_time_slope",
    "genus_bound_check",
    "karp_pinsky_coefficient",
    "karp_pinsky_fit",
    "rigidity_defect",
    "short_time_profile",
]

SLOPE_EXPONENTS = (1.0, 1.5, 2.0)
BALL_EXPONENTS = (2.0, 3.0)
MAX_CONDITION = 1e10


@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares coefficients of ``sum_j c_j x^{e_j}``.

    Attributes:
        coefficients: ``(exponent, value)`` pairs.
        residual: maximum absolute residual of the fit.
        grid: abscissae used, strictly decreasing.
    """

    coefficients: list
    residual: float
    grid: list

    def coefficient(self, exponent: float) -> float:
        for e, c in self.coefficients:
            if e == exponent:
                return c
        raise KeyError(exponent)


def fit_expansion(x, y, exponents) -> ExpansionFit:
    """Fit ``y ~ sum_j c_j x^{e_j}`` with column scaling and a conditioning check."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.column_stack([x**e for e in exponents])
    scale = np.abs(design).max(axis=0)
    cond = np.linalg.cond(design / scale)
    if not cond < MAX_CONDITION:
        raise ComputationError("ill-conditioned expansion fit", cond)
    coef, *_ = np.linalg.lstsq(design / scale, y, rcond=None)
    coef = coef / scale
    residual = float(np.max(np.abs(design @ coef - y)))
    return ExpansionFit([(float(e), float(c)) for e, c in zip(exponents, coef)], residual, [float(v) for v in x])


def fit_short_time_slope(profile, exponents=SLOPE_EXPONENTS) -> ExpansionFit:
    """Fit ``value(s) = 1 + c_1 s + c_1.5 s^1.5 + c_2 s^2``; ``c_1`` is the slope.

    Args:
        profile: ``(s, value)`` pairs from :func:`density_time_profile`.
        exponents: fitted powers of ``s``; the first must be 1.

    Raises:
        DomainError: with fewer than 4 points or a span below one decade.
    """
    pts = sorted(((float(s), float(v)) for s, v in profile), reverse=True)
    if len(pts) < 4:
        raise DomainError("slope fit needs at least 4 profile points")
    s = np.array([p[0] for p in pts])
    if len(set(s)) != len(s):
        raise DomainError("profile scales must be distinct")
    if s[0] < 10.0 * s[-1]:
        raise DomainError("profile scales must span at least one decade")
    v = np.array([p[1] for p in pts])
    return fit_expansion(s, v - 1.0, exponents)


def default_profile_grid(data: CurvaturePointData, kappa: float, points: int = 7, s_top: float = 0.05):
    """``s_k = s_max 2^-k`` with ``s_max = s_top min(1, 1/c)`` for curvature size ``c``."""
    c = max(float(data.normA2), float(data.normH2), kappa * kappa)
    s_max = s_top * min(1.0, 1.0 / c) if c > 0 else s_top
    return [s_max * 2.0**-k for k in range(points)]


def rigidity_defect(sigma: ImmersedSubmanifold, u, kappa: float) -> float:
    """``1/2 |A|^2 + 1/4 |H|^2 - R - n(n-1) kappa^2`` at the parameter point ``u``."""
    d = curvature_at(sigma, u)
    n = sigma.dim
    return 0.5 * d.normA2 + 0.25 * d.normH2 - d.scalar - n * (n - 1) * kappa**2


def short_time_profile(sigma: ImmersedSubmanifold, kappa: float, u, s_values=None, tol: float = 1e-11):
    """Density profile at the image of ``u`` on the default or given grid."""
    if s_values is None:
        s_values = default_profile_grid(curvature_at(sigma, u), kappa)
    x0 = sigma.position(u)[0]
    return density_time_profile(sigma, kappa, x0, s_values, tol)


def karp_pinsky_coefficient(data: CurvaturePointData, n: int) -> float:
    """``A = (1/2 |A|^2 + 1/4 |H|^2 - R) / (6 (n + 2))``."""
    return (0.5 * data.normA2 + 0.25 * data.normH2 - data.scalar) / (6.0 * (n + 2))


def default_radii(data: CurvaturePointData, length_scale: float, points: int = 7):
    """``R_k = R_max 2^(-k/2)`` with ``R_max`` 0.3 times the smallest curvature radius."""
    a2 = float(data.normA2)
    radius = 1.0 / math.sqrt(a2) if a2 > 1e-12 else length_scale
    return [0.3 * radius * 2.0 ** (-k / 2) for k in range(points)]


def karp_pinsky_fit(sigma: ImmersedSubmanifold, x0, radii=None, tol: float = 1e-3, *, u0=None) -> ExpansionFit:
    """Fit ``|B_R(x0) cap Sigma| = |B_1^n| R^n (1 + A R^2 + c_3 R^3)``.

    The coefficient of exponent 2 is ``A``.  Surfaces use the polar ball-area
    route (relative accuracy 1e-12); other dimensions use subdivision with
    boundary resolution ``tol``.
    """
    x0 = sigma.ambient.check_points(np.asarray(x0, dtype=float))
    if u0 is None:
        u0, gap = locate(sigma, x0)
        if gap > 1e-9:
            raise DomainError("x0 must lie on the submanifold")
    if radii is None:
        radii = default_radii(curvature_at(sigma, u0), sigma.length_scale)
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 3:
        raise DomainError("ball-area fit needs at least 3 radii")
    n = sigma.dim
    bound = ball_volume(n)
    ratios = []
    for R in radii:
        area = geodesic_ball_area(sigma, x0, R, tol, u0=u0).area
        ratios.append(area / (bound * R**n) - 1.0)
    return fit_expansion(radii, ratios, BALL_EXPONENTS)


# -- Gauss-Bonnet -------------------------------------------------------------


def _closed_surface(sigma: ImmersedSubmanifold):
    if not sigma.compact:
        raise DomainError(f"{sigma.name} is not closed")
    if sigma.dim != 2:
        raise DomainError("Gauss-Bonnet checks need a surface")


def euler_characteristic(sigma: ImmersedSubmanifold, tol: float = 1e-9) -> float:
    """``(1/4 pi) int R dV`` for a closed surface (Gauss curvature is ``R/2``)."""
    _closed_surface(sigma)
    res = integrate(sigma, lambda u, x: curvature_field(sigma, u).scalar, tol)
    return res.value / (4.0 * math.pi)


@dataclass(frozen=True)
class GenusReport:
    """Both sides of ``8 pi (1 - genus) >= 1/2 int |A|^2 + w |H|^2``.

    ``right`` uses ``w = 1/2``; ``right_quarter`` uses ``w = 1/4``, the weight
    obtained by integrating the pointwise defect inequality.
    """

    euler_characteristic: float
    genus: int
    left: float
    right: float
    right_quarter: float
    lam: float
    inequality_holds: bool
    consistent: bool


def genus_bound_check(sigma: ImmersedSubmanifold, lam: float, tol: float = 1e-6) -> GenusReport:
    """Evaluate the genus inequality and its implication pattern for ``lam``.

    The report is consistent when the Euler characteristic is within 0.02 of
    an even integer and, whenever ``lam <= 1 + tol``, the inequality holds.
    """
    _closed_surface(sigma)
    chi = euler_characteristic(sigma)
    genus = int(round(1.0 - chi / 2.0))
    left = 8.0 * math.pi * (1 - genus)

    def field(u, x):
        d = curvature_field(sigma, u)
        return np.stack([d.normA2, d.normH2])

    A2 = integrate(sigma, lambda u, x: field(u, x)[0], 1e-9).value
    H2 = integrate(sigma, lambda u, x: field(u, x)[1], 1e-9).value
    right = 0.5 * A2 + 0.5 * H2
    right_quarter = 0.5 * A2 + 0.25 * H2
    holds = left >= right - tol * max(1.0, abs(right))
    integral_ok = abs(chi - 2 * (1 - genus)) <= 0.02
    consistent = integral_ok and (lam > 1.0 + tol or holds)
    return GenusReport(chi, genus, left, right, right_quarter, float(lam), bool(holds), bool(consistent))
