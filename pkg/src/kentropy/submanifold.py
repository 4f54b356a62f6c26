"""Parametric immersions into the model spaces and their curvature.

A chart is a callable ``chart(u, order)`` taking an ``(M, n)`` array of
parameter points and returning ``(F,)``, ``(F, dF)`` or ``(F, dF, ddF)`` with
shapes ``(M, N)``, ``(M, n, N)`` and ``(M, n, n, N)`` where ``N`` is the
ambient coordinate dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.optimize import brentq

from .ambient import AmbientSpace
from .errors import ComputationError, DomainError
from .quadrature import CubatureResult, adaptive_cubature, box_integrals, split_cells, uniform_cells

__all__ = [
    "CurvaturePointData",
    "Focus",
    "ImmersedSubmanifold",
    "curvature_at",
    "curvature_field",
    "first_fundamental_form",
    "geodesic_ball_area",
    "integrate",
    "locate",
    "window_boundary_distance",
]

MIN_METRIC_EIGENVALUE = 1e-10


@dataclass(frozen=True)
class ImmersedSubmanifold:
    """An immersion of a parameter box into an ambient model space.

    Non-compact shapes are represented by a finite window of their parameter
    domain; ``seed_lower``/``seed_upper`` bound the region used to seed
    entropy searches and ``length_scale`` is the natural curvature length.
    ``normal_center`` marks charts in geodesic normal coordinates about that
    ambient point, where ``dist(F(u), center) = |u|``; cubature uses it for
    sharp distance floors.
    """

    name: str
    dim: int
    ambient: AmbientSpace
    lower: tuple
    upper: tuple
    periodic: tuple
    chart: Callable = field(repr=False, compare=False)
    compact: bool = True
    length_scale: float = 1.0
    derivative_mode: str = "analytic"
    fd_step: float | None = None
    params: tuple = ()
    seed_lower: tuple | None = None
    seed_upper: tuple | None = None
    normal_center: tuple | None = None

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float) - np.asarray(self.lower, dtype=float)

    @property
    def seed_box(self):
        lo = self.lower if self.seed_lower is None else self.seed_lower
        hi = self.upper if self.seed_upper is None else self.seed_upper
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)

    def position(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return self.chart(u, 0)[0]

    def frame(self, u, order: int = 2):
        """Position and parameter derivatives up to ``order``."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.derivative_mode == "analytic":
            return self.chart(u, order)
        return _finite_difference_frame(self, u, order, self._step())

    def _step(self) -> np.ndarray:
        if self.fd_step is not None:
            return np.full(self.dim, float(self.fd_step))
        return 1e-5 * self.extent

    def with_finite_differences(self, step: float | None = None) -> ImmersedSubmanifold:
        """Same immersion with derivatives from central differences of positions."""
        return replace(self, derivative_mode="finite-difference", fd_step=step)

    def scaled(self, c: float) -> ImmersedSubmanifold:
        """Dilation ``x -> c x`` of a Euclidean immersion."""
        if self.ambient.is_hyperbolic:
            raise DomainError("dilation is only defined for Euclidean ambients")
        if not c > 0:
            raise DomainError("dilation factor must be positive")
        base = self.chart

        def chart(u, order=2):
            return tuple(c * part for part in base(u, order))

        return replace(self, chart=chart, length_scale=c * self.length_scale, name=f"{self.name}*{c:g}")


def _finite_difference_frame(sigma: ImmersedSubmanifold, u, order, h):
    pos = lambda v: sigma.chart(v, 0)[0]  # noqa: E731
    F = pos(u)
    out = [F]
    if order == 0:
        return tuple(out)
    n = sigma.dim
    shifted = {}
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        shifted[(i, 1)] = pos(u + e)
        shifted[(i, -1)] = pos(u - e)
    dF = np.stack([(shifted[(i, 1)] - shifted[(i, -1)]) / (2 * h[i]) for i in range(n)], axis=1)
    out.append(dF)
    if order >= 2:
        ddF = np.empty(F.shape[:1] + (n, n) + F.shape[1:])
        for i in range(n):
            ddF[:, i, i] = (shifted[(i, 1)] - 2 * F + shifted[(i, -1)]) / h[i] ** 2
            for j in range(i + 1, n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i], ej[j] = h[i], h[j]
                mixed = (pos(u + ei + ej) - pos(u + ei - ej) - pos(u - ei + ej) + pos(u - ei - ej)) / (4 * h[i] * h[j])
                ddF[:, i, j] = ddF[:, j, i] = mixed
        out.append(ddF)
    return tuple(out)


@dataclass(frozen=True)
class CurvaturePointData:
    """Curvature quantities at one point or an array of points.

    ``scalar`` comes from the Gauss equation of a constant-curvature ambient.
    """

    metric: np.ndarray
    normA2: np.ndarray
    normH2: np.ndarray
    traceless2: np.ndarray
    scalar: np.ndarray
    position: np.ndarray
    mean_curvature: np.ndarray


def _signature(ambient: AmbientSpace) -> np.ndarray:
    eta = np.ones(ambient.coord_dim)
    if ambient.is_hyperbolic:
        eta[-1] = -1.0
    return eta


def _metric(ambient, dF, F):
    """Induced metric from spatial parts only.

    On the hyperboloid ``dt = (w . dw) / t``, so the Lorentzian Gram matrix
    equals ``dw_perp^T dw_perp + (w_hat . dw)^2 / (kappa t)^2`` where ``w_hat``
    is the unit spatial direction.  This form avoids the cancellation of
    ``O(e^{2 kappa r})`` terms far from the vertex.
    """
    if not ambient.is_hyperbolic:
        return np.einsum("miN,mjN->mij", dF, dF)
    w = F[:, :-1]
    dw = dF[..., :-1]
    norm = np.linalg.norm(w, axis=1)
    what = w / np.where(norm > 0, norm, 1.0)[:, None]
    radial = np.einsum("miN,mN->mi", dw, what)
    perp = dw - radial[:, :, None] * what[:, None, :]
    kt = ambient.kappa * F[:, -1]
    return np.einsum("miN,mjN->mij", perp, perp) + radial[:, :, None] * radial[:, None, :] / (kt * kt)[:, None, None]


def _check_metric(g):
    lam = np.linalg.eigvalsh(g)[:, 0]
    if np.any(~(lam > MIN_METRIC_EIGENVALUE)):
        raise DomainError(f"immersion degenerates: metric eigenvalue {lam.min():.3e}")


def curvature_field(sigma: ImmersedSubmanifold, U) -> CurvaturePointData:
    """Vectorized curvature quantities at parameter points ``U`` of shape (M, n)."""
    amb = sigma.ambient
    n = sigma.dim
    F, dF, ddF = sigma.frame(U, 2)
    if amb.is_hyperbolic:
        amb.check_points(F)
    eta = _signature(amb)
    g = _metric(amb, dF, F)
    _check_metric(g)
    # second derivatives tangent to the ambient model
    P = amb.tangent_projection(F[:, None, None, :], ddF)
    # Gram-Schmidt in the ambient inner product
    frame = []
    for k in range(n):
        v = dF[:, k].copy()
        for e in frame:
            v -= np.einsum("mN,mN,N->m", v, e, eta)[:, None] * e
        v /= np.sqrt(np.einsum("mN,mN,N->m", v, v, eta))[:, None]
        frame.append(v)
    E = np.stack(frame, axis=1)
    coeff = np.einsum("mijN,mkN,N->mijk", P, E, eta)
    A = P - np.einsum("mijk,mkN->mijN", coeff, E)
    ginv = np.linalg.inv(g)
    H = np.einsum("mij,mijN->mN", ginv, A)
    normA2 = np.einsum("mik,mjl,mijN,mklN,N->m", ginv, ginv, A, A, eta)
    normH2 = np.einsum("mN,mN,N->m", H, H, eta)
    traceless2 = normA2 - normH2 / n
    scalar = -n * (n - 1) * amb.kappa**2 + normH2 - normA2
    return CurvaturePointData(g, normA2, normH2, traceless2, scalar, F, H)


def curvature_at(sigma: ImmersedSubmanifold, u) -> CurvaturePointData:
    """Curvature quantities at a single parameter point."""
    data = curvature_field(sigma, np.atleast_2d(np.asarray(u, dtype=float)))
    return CurvaturePointData(
        metric=data.metric[0],
        normA2=float(data.normA2[0]),
        normH2=float(data.normH2[0]),
        traceless2=float(data.traceless2[0]),
        scalar=float(data.scalar[0]),
        position=data.position[0],
        mean_curvature=data.mean_curvature[0],
    )


def first_fundamental_form(sigma: ImmersedSubmanifold, u) -> np.ndarray:
    F, dF = sigma.frame(np.atleast_2d(np.asarray(u, dtype=float)), 1)
    g = _metric(sigma.ambient, dF, F)
    _check_metric(g)
    return g[0]


def _jacobian(sigma, U):
    F, dF = sigma.frame(U, 1)
    g = _metric(sigma.ambient, dF, F)
    det = np.linalg.det(g)
    return F, np.sqrt(np.maximum(det, 0.0)), g


# -- integration --------------------------------------------------------------


@dataclass(frozen=True)
class Focus:
    """Localization hint for integrands concentrated near an ambient point.

    ``envelope(d)`` must bound the integrand from above at ambient distance
    ``>= d`` from ``point``; cells are refined down to ``scale``.
    """

    point: np.ndarray
    scale: float
    envelope: Callable


def _probe_offsets(dim: int) -> np.ndarray:
    """Corners and face centers of the unit cube, relative to its center."""
    corners = np.array(np.meshgrid(*([[-0.5, 0.5]] * dim), indexing="ij")).reshape(dim, -1).T
    faces = np.concatenate([0.5 * np.eye(dim), -0.5 * np.eye(dim)])
    return np.concatenate([corners, faces])


def _cell_bounds(sigma: ImmersedSubmanifold, lo, hi):
    """Center images, a radius bound, an area bound and per-axis lengths of cells.

    Radii and Jacobians are sampled at the center, corners and face centers so
    that strongly stretched charts (hyperbolic exponential charts) are not
    underestimated.
    """
    amb = sigma.ambient
    eta = _signature(amb)
    m, dim = lo.shape
    center = 0.5 * (lo + hi)
    width = hi - lo
    F, dF = sigma.frame(center, 1)
    offsets = _probe_offsets(dim)
    probes = (center[:, None, :] + offsets[None] * width[:, None, :]).reshape(-1, dim)
    Fp, dFp = sigma.frame(probes, 1)
    radius = amb.distance(Fp.reshape(m, len(offsets), -1), F[:, None, :]).max(axis=1)
    jac = np.sqrt(np.maximum(np.linalg.det(_metric(amb, dFp, Fp)), 0.0)).reshape(m, -1)
    jac_max = np.maximum(jac.max(axis=1), np.sqrt(np.maximum(np.linalg.det(_metric(amb, dF, F)), 0.0)))
    lengths = np.sqrt(np.abs(np.einsum("miN,miN,N->mi", dF, dF, eta))) * width
    return F, radius, jac_max * np.prod(width, axis=1), lengths


def _focus_prefilter(sigma: ImmersedSubmanifold, focus: Focus, tol: float, max_cells: int):
    amb = sigma.ambient
    anchor_gap = None
    if sigma.normal_center is not None:
        anchor_gap = float(amb.distance(np.asarray(sigma.normal_center), focus.point))

    peaked = focus.scale <= 2.0 * sigma.length_scale

    def prefilter(lo, hi):
        kept_lo, kept_hi = [], []
        culled = 0.0
        total = 0
        for _ in range(200):
            if len(lo) == 0:
                break
            F, radius, area, lengths = _cell_bounds(sigma, lo, hi)
            dist = amb.distance(F, focus.point)
            dlo = np.maximum(dist - 1.25 * radius, 0.0)
            if anchor_gap is not None:
                nearest = np.linalg.norm(np.clip(0.0, lo, hi), axis=1)
                dlo = np.maximum(dlo, nearest - anchor_gap)
            bound = 8.0 * focus.envelope(dlo) * area
            cull = bound < 1e-4 * tol
            culled += float(bound[cull].sum())
            # only narrow peaks need pre-splitting; far survivors go to the adaptive loop
            refine = ~cull & (radius > focus.scale) & (dlo < 2.0 * focus.scale) & peaked
            done = ~cull & ~refine
            kept_lo.append(lo[done])
            kept_hi.append(hi[done])
            total += int(done.sum())
            if total + 2 * int(refine.sum()) > max_cells:
                raise ComputationError("localized cubature exceeded cell budget", culled)
            lo, hi = split_cells(lo[refine], hi[refine], np.argmax(lengths[refine], axis=1))
        if len(lo):
            kept_lo.append(lo)
            kept_hi.append(hi)
        dim = sigma.dim
        return (
            np.concatenate(kept_lo) if kept_lo else np.empty((0, dim)),
            np.concatenate(kept_hi) if kept_hi else np.empty((0, dim)),
            culled,
        )

    return prefilter


def integrate(
    sigma: ImmersedSubmanifold,
    f: Callable,
    tol: float = 1e-10,
    *,
    focus: Focus | None = None,
    initial=None,
    max_cells: int = 400_000,
) -> CubatureResult:
    """Integrate ``f(u, x)`` against the induced volume over the parameter box.

    ``f`` receives parameter points ``u`` (M, n) and their images ``x`` (M, N).
    With ``focus`` the box is pre-split around the focus point and cells whose
    contribution is provably negligible are dropped.
    """
    if initial is None:
        initial = [8 if p else 4 for p in sigma.periodic]

    def integrand(U):
        F, jac, _ = _jacobian(sigma, U)
        return np.asarray(f(U, F), dtype=float) * jac

    prefilter = None if focus is None else _focus_prefilter(sigma, focus, tol, max_cells)
    return adaptive_cubature(
        integrand, sigma.lower, sigma.upper, tol, initial=initial, prefilter=prefilter, max_cells=max_cells
    )


def window_boundary_distance(sigma: ImmersedSubmanifold, x0, samples: int | None = None) -> float:
    """Smallest ambient distance from ``x0`` to the image of the window boundary.

    Periodic axes contribute no boundary; a compact shape returns ``inf``.
    """
    free = [a for a, p in enumerate(sigma.periodic) if not p]
    if sigma.compact or not free:
        return math.inf
    n = sigma.dim
    if samples is None:
        samples = 257 if n <= 2 else 33
    lower = np.asarray(sigma.lower, dtype=float)
    upper = np.asarray(sigma.upper, dtype=float)
    axes = [np.linspace(lower[a], upper[a], samples) for a in range(n)]
    best = math.inf
    for a in free:
        for side in (lower[a], upper[a]):
            grids = list(axes)
            grids[a] = np.array([side])
            pts = np.stack([g.ravel() for g in np.meshgrid(*grids, indexing="ij")], axis=-1)
            d = sigma.ambient.distance(sigma.position(pts), x0)
            best = min(best, float(d.min()))
    return best


def locate(sigma: ImmersedSubmanifold, x0, samples: int = 48):
    """Parameter point whose image is nearest to ``x0``; returns ``(u, distance)``."""
    x0 = sigma.ambient.check_points(np.asarray(x0, dtype=float))
    lower = np.asarray(sigma.lower, dtype=float)
    upper = np.asarray(sigma.upper, dtype=float)
    axes = [np.linspace(a, b, samples) for a, b in zip(lower, upper)]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    d = sigma.ambient.distance(sigma.position(pts), x0)
    start = pts[int(np.argmin(d))]

    def objective(u):
        return float(sigma.ambient.distance(sigma.position(u)[0], x0)) ** 2

    res = optimize.minimize(objective, start, method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 4000})
    u = res.x
    return u, float(sigma.ambient.distance(sigma.position(u)[0], x0))


# -- areas of geodesic balls --------------------------------------------------


@dataclass(frozen=True)
class BallArea:
    area: float
    error: float
    method: str


def _ball_area_polar(sigma: ImmersedSubmanifold, u0, x0, R: float, rtol: float) -> BallArea:
    """Area of ``{dist(F(u), x0) < R}`` by rays from ``u0`` in a 2-d chart."""
    amb = sigma.ambient
    g0 = first_fundamental_form(sigma, u0)
    lam_min = float(np.linalg.eigvalsh(g0)[0])
    gl_x, gl_w = np.polynomial.legendre.leggauss(24)
    gl_x = 0.5 * (gl_x + 1.0)
    gl_w = 0.5 * gl_w

    def dist_along(direction, rho):
        return float(amb.distance(sigma.position(u0 + rho * direction)[0], x0))

    def wedge(phi):
        direction = np.array([math.cos(phi), math.sin(phi)])
        hi = 1.5 * R / math.sqrt(lam_min)
        for _ in range(60):
            if dist_along(direction, hi) > R:
                break
            hi *= 1.5
        else:
            raise ComputationError("ball boundary not bracketed along a ray", hi)
        rho_star = brentq(lambda p: dist_along(direction, p) - R, 0.0, hi, xtol=1e-15, rtol=1e-15)
        rho = rho_star * gl_x
        U = u0 + rho[:, None] * direction
        _, jac, g = _jacobian(sigma, U)
        _check_metric(g)
        return rho_star * float(np.sum(gl_w * jac * rho))

    count = 16
    values = np.array([wedge(2 * math.pi * j / count) for j in range(count)])
    area = 2 * math.pi * values.mean()
    err = math.inf
    while count < 4096:
        extra = np.array([wedge(2 * math.pi * (j + 0.5) / count) for j in range(count)])
        values = np.concatenate([values, extra])
        count *= 2
        refined = 2 * math.pi * values.mean()
        err = abs(refined - area)
        area = refined
        if err <= rtol * area:
            return BallArea(area, err, "polar")
    raise ComputationError("polar ball area did not converge", err)


def _ball_area_subdivision(sigma: ImmersedSubmanifold, x0, R: float, tol: float, max_cells: int) -> BallArea:
    """Indicator integration with refinement of cells crossing the sphere."""
    amb = sigma.ambient
    eta = _signature(amb)
    counts = [8 if p else 4 for p in sigma.periodic]
    lo, hi = uniform_cells(sigma.lower, sigma.upper, counts)
    area = 0.0
    err = 0.0
    cells = 0

    def jac_only(U):
        return _jacobian(sigma, U)[1]

    def inside_jac(U):
        F, jac, _ = _jacobian(sigma, U)
        return jac * (amb.distance(F, x0) < R)

    for _ in range(200):
        if len(lo) == 0:
            break
        cells += len(lo)
        if cells > max_cells:
            raise ComputationError("ball area exceeded cell budget", err)
        center = 0.5 * (lo + hi)
        F, dF = sigma.frame(center, 1)
        lengths = np.sqrt(np.abs(np.einsum("miN,miN,N->mi", dF, dF, eta))) * (hi - lo)
        diam = np.sqrt(np.sum(lengths**2, axis=1))
        d = amb.distance(F, x0)
        inside = d + diam < R
        outside = d - diam > R
        crossing = ~inside & ~outside
        if np.any(inside):
            area += float(box_integrals(jac_only, lo[inside], hi[inside]).sum())
        small = crossing & (diam < tol * R)
        if np.any(small):
            part = box_integrals(inside_jac, lo[small], hi[small], order=4)
            whole = box_integrals(jac_only, lo[small], hi[small], order=4)
            area += float(part.sum())
            err += 0.5 * float(np.minimum(part, whole - part).sum()) + 1e-3 * float(whole.sum())
        split = crossing & ~small
        lo, hi = split_cells(lo[split], hi[split], np.argmax(lengths[split], axis=1))
    return BallArea(area, err, "subdivision")


def geodesic_ball_area(
    sigma: ImmersedSubmanifold,
    x0,
    R: float,
    tol: float = 1e-3,
    *,
    u0=None,
    method: str = "auto",
    max_cells: int = 2_000_000,
) -> BallArea:
    """Induced area of ``Sigma`` inside the ambient geodesic ball ``B_R(x0)``.

    ``method="subdivision"`` refines cells crossing the ball boundary until
    their diameter is below ``tol * R``.  ``method="polar"`` (surfaces with
    ``x0`` on them) integrates along parameter rays from the preimage of
    ``x0`` up to the boundary root and is accurate to relative ``1e-12``.
    ``"auto"`` picks polar when applicable and falls back to subdivision
    when the rays fail (e.g. a ball reaching a chart pole).
    """
    if not R > 0:
        raise DomainError("R must be positive")
    x0 = sigma.ambient.check_points(np.asarray(x0, dtype=float))
    auto = method == "auto"
    if auto:
        method = "subdivision"
        if sigma.dim == 2:
            if u0 is None:
                u0, gap = locate(sigma, x0)
                if gap < 1e-9 * max(1.0, R):
                    method = "polar"
            else:
                method = "polar"
    if method == "polar":
        if sigma.dim != 2:
            raise DomainError("polar ball areas need a surface")
        if u0 is None:
            u0, gap = locate(sigma, x0)
            if gap > 1e-9 * max(1.0, R):
                raise DomainError("polar ball area needs x0 on the surface")
        try:
            return _ball_area_polar(sigma, np.asarray(u0, dtype=float), x0, R, 1e-12)
        except ComputationError:
            if not auto:
                raise
            method = "subdivision"
    if method == "subdivision":
        return _ball_area_subdivision(sigma, x0, R, tol, max_cells)
    raise DomainError(f"unknown ball-area method {method!r}")
