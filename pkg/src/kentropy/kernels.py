"""Radial heat kernels of the Euclidean and hyperbolic space forms.

``K_{n,kappa}(t, r)`` is the heat kernel of the simply connected
``n``-dimensional space form of curvature ``-kappa**2`` written as a function
of time and geodesic distance.  ``kappa = 0`` is the Gaussian kernel; for
``kappa > 0`` the kernel is obtained from the unit-curvature one by scaling,
``K_{n,kappa}(t, r) = kappa**n K_{n,1}(kappa**2 t, kappa r)``.

Unit-curvature kernels are built from the one-dimensional Gaussian with the
operator ``D = -(1/sinh r) d/dr`` which raises the dimension by two::

    K_{m+2,1}(t, r) = exp(-m t) / (2 pi) * D K_{m,1}(t, r)

Odd dimensions are closed forms.  Even dimensions start from the classical
integral representation of the two-dimensional kernel and push ``D`` under the
integral sign, where it acts on the integrand in the same way (``D`` commutes
with the Abel-type transform ``f -> int_r^inf f(s) / sqrt(cosh s - cosh r) ds``
when ``f(s) = g(s) sinh s``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp
from numpy.polynomial import Chebyshev
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .errors import ComputationError, DomainError

__all__ = [
    "KernelSpec",
    "SmallTimeCoefficients",
    "ball_volume",
    "euclidean_kernel",
    "hyperbolic_kernel",
    "hyperbolic_tail_mass",
    "kernel",
    "kernel_profile",
    "kernel_radial_derivative",
    "radial_mass",
    "small_time_coefficients",
    "sphere_volume",
]

# below this radius the closed forms lose digits to csch cancellation
SERIES_RADIUS = 0.25
SERIES_ORDER = 14
# for n >= 2 the unit kernel is below exp(-250) past this radius
UNDERFLOW_RADIUS = 500.0
MASS_ABS_TOL = 1e-10
TRUNCATION_RATIO = 1e-16


@dataclass(frozen=True)
class KernelSpec:
    """Member ``(n, kappa)`` of the kernel family."""

    n: int
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be an integer >= 1, got {self.n}")
        if not self.kappa >= 0 or not math.isfinite(self.kappa):
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa}")

    def __call__(self, t, r):
        return kernel(self, t, r)


@dataclass(frozen=True)
class SmallTimeCoefficients:
    """Fitted ``a_n, b_n`` of ``K_{n,1} ~ (1 + a_n t + b_n rho^2) K_{n,0}``."""

    n: int
    a_n: float
    b_n: float
    fit_residual: float

    @property
    def relation_residual(self) -> float:
        """``a_n + 2n b_n + n(n-1)/3``; zero when the coefficient relation holds."""
        return self.a_n + 2 * self.n * self.b_n + self.n * (self.n - 1) / 3


def _output(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)) or np.any(~np.isfinite(t)):
        raise DomainError("time must be positive and finite")
    return t


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r >= 0)) or np.any(~np.isfinite(r)):
        raise DomainError("distance must be nonnegative and finite")
    return r


def sphere_volume(m: int) -> float:
    """Area of the unit sphere ``S^m``, by the two-step recursion from S^0, S^1."""
    if int(m) != m or m < 0:
        raise DomainError(f"sphere dimension must be an integer >= 0, got {m}")
    vol = 2.0 if m % 2 == 0 else 2.0 * math.pi
    for k in range(2 + m % 2, m + 1, 2):
        vol *= 2.0 * math.pi / (k - 1)
    return vol


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    if n < 1:
        raise DomainError(f"ball dimension must be >= 1, got {n}")
    return sphere_volume(n - 1) / n


def euclidean_kernel(n: int, t, r):
    """Gaussian kernel ``(4 pi t)^(-n/2) exp(-r^2 / 4t)``."""
    t = _check_time(t)
    r = _check_radius(r)
    return _output((4.0 * math.pi * t) ** (-0.5 * n) * np.exp(-(r * r) / (4.0 * t)))


# -- symbolic radial factors --------------------------------------------------


class _RadialFactor:
    """``Q_m`` with ``D^m exp(-r^2/4t) = exp(-r^2/4t) Q_m(r, 1/(2t))``.

    ``Q_{m+1} = (r w Q_m - dQ_m/dr) / sinh r`` with ``w = 1/(2t)``.  The
    closed form is used for ``r >= SERIES_RADIUS`` and a Taylor polynomial in
    ``r`` (exact rational coefficients, polynomial in ``w``) below it.
    """

    def __init__(self, m: int):
        r, w = sp.symbols("r w", positive=True)
        q = sp.Integer(1)
        for _ in range(m):
            q = sp.expand((r * w * q - sp.diff(q, r)) / sp.sinh(r))
        self.m = m
        self.expr = q
        self._closed = sp.lambdify((r, w), q, "numpy")
        series = sp.Poly(sp.series(q, r, 0, SERIES_ORDER + 1).removeO(), r, w)
        dr, dw = series.degree(r), series.degree(w)
        coeffs = np.zeros((max(dr, 0) + 1, max(dw, 0) + 1))
        for (i, j), c in series.terms():
            coeffs[i, j] = float(c)
        self.coeffs = coeffs

    def __call__(self, r, w):
        r, w = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(w, dtype=float))
        out = np.empty(r.shape)
        small = r < SERIES_RADIUS
        if np.any(small):
            out[small] = npoly.polyval2d(r[small], w[small], self.coeffs)
        big = ~small
        if np.any(big):
            with np.errstate(over="ignore", invalid="ignore"):
                out[big] = np.broadcast_to(self._closed(r[big], w[big]), r[big].shape)
        return out


@lru_cache(maxsize=None)
def _factor(m: int) -> _RadialFactor:
    return _RadialFactor(m)


# -- unit-curvature kernels -----------------------------------------------------


def _odd_unit_kernel(m: int, t, r):
    t, r = np.broadcast_arrays(t, r)
    out = np.zeros(t.shape)
    live = r <= UNDERFLOW_RADIUS if m > 0 else np.ones(t.shape, dtype=bool)
    tl, rl = t[live], r[live]
    pref = (4.0 * math.pi * tl) ** -0.5 * (2.0 * math.pi) ** -m
    out[live] = pref * np.exp(-m * m * tl - rl * rl / (4.0 * tl)) * _factor(m)(rl, 0.5 / tl)
    return out


_RULE_HI = np.polynomial.legendre.leggauss(20)
_RULE_LO = np.polynomial.legendre.leggauss(12)
_EVEN_RTOL = 1e-12
_EVEN_DECAY = 50.0
_SINH_CAP = 700.0


def _even_integrand(m, t, r, u):
    """Integrand of the even-dimension representation after ``s = r + u^2``.

    The Gaussian factor ``exp(-r^2/4t)`` is pulled out of the integral.
    """
    s = r + u * u
    w = 0.5 / t
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        core = np.exp(-(2.0 * r * u * u + u**4) / (4.0 * t)) * (2.0 * t) * _factor(m + 1)(s, w) * np.sinh(s)
        jac = 2.0 * u / np.sqrt(2.0 * np.sinh(r + 0.5 * u * u) * np.sinh(0.5 * u * u))
    val = core * jac
    return np.where(np.isfinite(val), val, 0.0)


def _panel_sum(m, t, r, edges, rule):
    x, wts = rule
    a, b = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (b - a)
    nodes = (a + half)[..., None] + half[..., None] * x
    f = _even_integrand(m, t[:, None, None], r[:, None, None], nodes)
    return half * np.einsum("kpq,q->kp", f, wts)


def _even_integral(m: int, t, r):
    t = np.ravel(t).astype(float)
    r = np.ravel(r).astype(float)
    result = np.empty(r.shape)
    umax = np.sqrt(np.sqrt(r * r + 4.0 * t * _EVEN_DECAY) - r)
    umax = np.minimum(umax, np.sqrt(np.maximum(_SINH_CAP - r, 1e-12)))
    todo = np.arange(r.size)
    residual = 0.0
    for panels in (8, 16, 32, 64, 128, 256, 512, 1024):
        if todo.size == 0:
            break
        rr, tt, uu = r[todo], t[todo], umax[todo]
        first = uu / panels
        # geometric grading resolves the sqrt(2r + u^2) layer near u = 0
        with np.errstate(divide="ignore"):
            levels = np.where(rr > 0, np.ceil(np.log2(first / (0.1 * np.sqrt(2.0 * rr)))), 0.0)
        depth = int(np.clip(levels.max(initial=0.0), 0, 50))
        grade = first[:, None] * 2.0 ** -np.arange(depth, 0, -1)
        uniform = uu[:, None] * np.arange(1, panels + 1) / panels
        edges = np.concatenate([np.zeros((rr.size, 1)), grade, uniform], axis=1)
        hi = _panel_sum(m, tt, rr, edges, _RULE_HI)
        lo = _panel_sum(m, tt, rr, edges, _RULE_LO)
        value = hi.sum(axis=1)
        err = np.abs(hi - lo).sum(axis=1)
        ok = err <= _EVEN_RTOL * np.abs(value) + 1e-300
        result[todo[ok]] = value[ok]
        if np.any(~ok):
            residual = float(np.max(err[~ok] / np.maximum(np.abs(value[~ok]), 1e-300)))
        todo = todo[~ok]
    if todo.size:
        raise ComputationError("even-dimension kernel quadrature did not converge", residual)
    return result


def _even_log_smooth(m: int, t, r):
    """``log K_{2m+2,1}(t, r) + r^2/4t``, free of Gaussian underflow."""
    pref = math.log(math.sqrt(2.0)) - 1.5 * np.log(4.0 * math.pi * t) - m * math.log(2.0 * math.pi)
    with np.errstate(divide="ignore"):
        return pref - ((2 * m + 1) ** 2) * t / 4.0 + np.log(_even_integral(m, t, r))


def _even_unit_kernel(m: int, t, r):
    t, r = np.broadcast_arrays(t, r)
    out = np.zeros(t.shape)
    live = r <= UNDERFLOW_RADIUS
    tl, rl = t[live], r[live]
    if tl.size:
        out[live] = np.exp(_even_log_smooth(m, tl, rl) - rl * rl / (4.0 * tl))
    return out


def _unit_kernel(n: int, t, r):
    if n % 2:
        return _odd_unit_kernel((n - 1) // 2, t, r)
    return _even_unit_kernel((n - 2) // 2, t, r)


def hyperbolic_kernel(spec: KernelSpec, t, r):
    """``K_{n,kappa}(t, r)`` for ``kappa > 0``."""
    if not spec.kappa > 0:
        raise DomainError("hyperbolic_kernel needs kappa > 0")
    t = _check_time(t)
    r = _check_radius(r)
    k = spec.kappa
    return _output(k**spec.n * _unit_kernel(spec.n, k * k * t, k * r))


def kernel(spec: KernelSpec, t, r):
    """Evaluate ``K_{n,kappa}(t, r)``; Gaussian when ``kappa == 0``."""
    if spec.kappa == 0:
        return euclidean_kernel(spec.n, t, r)
    return hyperbolic_kernel(spec, t, r)


def kernel_radial_derivative(spec: KernelSpec, t, r):
    """``d/dr K_{n,kappa}(t, r)`` through the dimension-raising identity.

    ``kappa = 0``: ``-2 pi r K_{n+2,0}(t, r)``.
    ``kappa > 0``: ``-2 pi / kappa * exp(n kappa^2 t) sinh(kappa r) K_{n+2,kappa}(t, r)``.
    """
    t = _check_time(t)
    r = _check_radius(r)
    up = KernelSpec(spec.n + 2, spec.kappa)
    if spec.kappa == 0:
        return _output(-2.0 * math.pi * r * euclidean_kernel(spec.n + 2, t, r))
    k = spec.kappa
    scale = np.exp(spec.n * k * k * t) * np.sinh(k * r) / k
    return _output(-2.0 * math.pi * scale * hyperbolic_kernel(up, t, r))


# -- fixed-time profiles ------------------------------------------------------


def _table_radius(n: int, t: float) -> float:
    """Radius past which ``K_{n,1}(t, .)`` carries less than ``e^-100`` of its mass."""
    return min(UNDERFLOW_RADIUS, (n - 1) * t + 20.0 * math.sqrt(t))


@lru_cache(maxsize=128)
def _even_table(n: int, t: float):
    """Chebyshev fit of ``log K_{n,1}(t, r) + r^2/4t`` on ``[0, r_hi]``.

    Converged when the last coefficients fall below 1e-12 relative to the
    largest one.
    """
    r_hi = _table_radius(n, t)
    m = (n - 2) // 2

    def smooth_part(r):
        return _even_log_smooth(m, np.full(np.shape(r), t), r)

    tail = float("nan")
    for deg in (32, 64, 128, 256, 512, 1024):
        cheb = Chebyshev.interpolate(smooth_part, deg, domain=[0.0, r_hi])
        tail = float(np.max(np.abs(cheb.coef[-4:])) / max(1.0, np.max(np.abs(cheb.coef))))
        if tail < 1e-12:
            return r_hi, cheb
    raise ComputationError(f"kernel table for n={n}, t={t} did not converge", tail)


def kernel_profile(spec: KernelSpec, t: float, *, cutoff: bool = False):
    """Return ``r -> K_{n,kappa}(t, r)`` for a fixed time, vectorized in ``r``.

    Even hyperbolic dimensions are served from a cached Chebyshev table;
    other members are evaluated directly.  With ``cutoff`` the even profile
    returns 0 past the table radius, where the kernel carries less than
    ``e^-100`` of its mass, instead of falling back to slow direct quadrature.
    """
    t = float(_check_time(t))
    if spec.kappa == 0 or spec.n % 2 == 1:
        return lambda r: kernel(spec, t, r)
    k = spec.kappa
    scaled_t = k * k * t
    if _unit_kernel(spec.n, np.array([scaled_t]), np.array([0.0]))[0] == 0.0:
        # the whole profile underflows
        return lambda r: _output(np.zeros(np.shape(_check_radius(r))))
    r_hi, cheb = _even_table(spec.n, scaled_t)

    def profile(r):
        x = k * _check_radius(r)
        out = np.zeros(x.shape)
        inside = x <= r_hi
        out[inside] = np.exp(cheb(x[inside]) - x[inside] ** 2 / (4.0 * scaled_t))
        if not cutoff and np.any(~inside):
            out[~inside] = _unit_kernel(spec.n, np.full(np.count_nonzero(~inside), scaled_t), x[~inside])
        return _output(k**spec.n * out)

    return profile


# -- radial masses ------------------------------------------------------------


def _truncation_radius(f, start: float, peak: float) -> float:
    """Smallest doubling of ``start`` past the peak where ``f`` is negligible."""
    fmax = max(f(peak), f(start))
    b = max(start, peak, 1e-3)
    for _ in range(200):
        if f(b) <= TRUNCATION_RATIO * fmax:
            return b
        b *= 1.25
    raise ComputationError("integrand does not decay", float(f(b)))


def _peak_location(f, scale: float) -> float:
    grid = np.linspace(0.0, scale, 401)
    values = np.array([f(x) for x in grid])
    return float(grid[int(np.argmax(values))])


def radial_mass(n: int, kappa: float, k_extra: int, t: float, R: float = math.inf) -> float:
    """Weighted radial integral ``int_0^R K_{n,kappa}(t, rho) w(rho) d rho``.

    The weight is ``rho^(n + k_extra - 1)`` for ``kappa = 0`` and
    ``(sinh(kappa rho)/kappa)^(n-1)`` for ``kappa > 0`` (``k_extra`` must be 0
    then).  Infinite ranges are truncated where the integrand falls below
    ``1e-16`` of its peak.

    Raises:
        ComputationError: if the adaptive rule cannot certify ``1e-10``
            absolute accuracy.
    """
    spec = KernelSpec(n, kappa)
    t = float(_check_time(t))
    if not R > 0:
        raise DomainError("R must be positive")
    if k_extra < 0 or (kappa > 0 and k_extra != 0):
        raise DomainError("k_extra must be 0 for kappa > 0 and >= 0 otherwise")
    profile = kernel_profile(spec, t)
    if kappa == 0:
        power = n + k_extra - 1

        def f(rho):
            return float(profile(rho)) * rho**power

        peak = math.sqrt(2.0 * t * power)
    else:

        def f(rho):
            return float(profile(rho)) * (math.sinh(kappa * rho) / kappa) ** (n - 1)

        peak = _peak_location(f, (n - 1) * kappa * t + 10.0 * math.sqrt(t))
    upper = min(R, _truncation_radius(f, 4.0 * math.sqrt(t) + peak, peak))
    points = [peak] if 0 < peak < upper else None
    value, err = integrate.quad(f, 0.0, upper, epsabs=MASS_ABS_TOL, epsrel=1e-12, limit=500, points=points)
    if err > MASS_ABS_TOL:
        raise ComputationError("radial mass quadrature", err)
    return value


def hyperbolic_tail_mass(n: int, t: float, R: float) -> float:
    """``int_R^inf K_{n,1}(t, rho) sinh^(n-1)(rho) d rho``, to relative 1e-10.

    Only defined for ``0 < t <= R / (2(n-1))``, the range of the Gaussian
    tail bound.
    """
    t = float(_check_time(t))
    if not R > 0:
        raise DomainError("R must be positive")
    if n > 1 and t > R / (2 * (n - 1)):
        raise DomainError(f"tail bound needs t <= R/(2(n-1)) = {R / (2 * (n - 1))}")
    profile = kernel_profile(KernelSpec(n, 1.0), t)

    def f(rho):
        return float(profile(rho)) * math.sinh(rho) ** (n - 1)

    if f(R) == 0.0:
        return 0.0
    peak = max(R, _peak_location(f, R + (n - 1) * t + 10.0 * math.sqrt(t)))
    upper = _truncation_radius(f, R + 4.0 * math.sqrt(t), peak)
    points = [peak] if R < peak < upper else None
    value, err = integrate.quad(f, R, upper, epsabs=0.0, epsrel=1e-10, limit=500, points=points)
    if err > 1e-8 * abs(value):
        raise ComputationError("tail mass quadrature", err)
    return value


# -- small-time coefficients ----------------------------------------------------


def small_time_coefficients(n: int) -> SmallTimeCoefficients:
    """Fit ``K_{n,1}/K_{n,0} - 1`` by ``a t + b rho^2`` plus all higher terms
    of weight 4 and 6.

    The grid is ``t = 1e-2 * 2^-k`` (k = 0..4) crossed with 16 radii in
    ``[0, 0.3]``.  The monomials ``t^2, t rho^2, rho^4`` and
    ``t^3, t^2 rho^2, t rho^4, rho^6`` are fitted alongside so the linear
    coefficients are not biased by them.
    """
    if n < 2:
        raise DomainError("small_time_coefficients needs n >= 2")
    t = 1e-2 * 2.0 ** -np.arange(5)
    rho = np.linspace(0.0, 0.3, 16)
    T, P = np.meshgrid(t, rho, indexing="ij")
    T, P = T.ravel(), P.ravel()
    ratio = _unit_kernel(n, T, P) / euclidean_kernel(n, T, P) - 1.0
    P2 = P * P
    design = np.column_stack([T, P2, T * T, T * P2, P2 * P2, T**3, T * T * P2, T * P2 * P2, P2**3])
    scale = np.abs(design).max(axis=0)
    cond = np.linalg.cond(design / scale)
    if cond > 1e10:
        raise ComputationError("ill-conditioned coefficient fit", cond)
    coef, *_ = np.linalg.lstsq(design / scale, ratio, rcond=None)
    coef = coef / scale
    residual = float(np.max(np.abs(design @ coef - ratio)))
    return SmallTimeCoefficients(n=n, a_n=float(coef[0]), b_n=float(coef[1]), fit_residual=residual)
