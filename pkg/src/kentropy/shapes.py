"""Catalog of analytic immersions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .ambient import AmbientSpace
from .errors import DomainError
from .submanifold import ImmersedSubmanifold

__all__ = ["CATALOG", "shape_catalog"]

TWO_PI = 2.0 * math.pi


def _pack(order, F, dF=None, ddF=None):
    return (F, dF, ddF)[: order + 1]


def _plane(L: float = 10.0, k: int = 1) -> ImmersedSubmanifold:
    k = int(k)
    if not L > 0 or k < 0:
        raise DomainError("plane needs window L > 0 and codimension k >= 0")
    N = 2 + k

    def chart(u, order=2):
        m = len(u)
        F = np.zeros((m, N))
        F[:, :2] = u
        dF = np.zeros((m, 2, N))
        dF[:, 0, 0] = dF[:, 1, 1] = 1.0
        return _pack(order, F, dF, np.zeros((m, 2, 2, N)))

    return ImmersedSubmanifold(
        "plane", 2, AmbientSpace.euclidean(N), (-L, -L), (L, L), (False, False), chart,
        compact=False, length_scale=1.0, params=(L, k), seed_lower=(-1.0, -1.0), seed_upper=(1.0, 1.0),
        normal_center=(0.0,) * N,
    )


def _sphere(rho: float = 1.0) -> ImmersedSubmanifold:
    if not rho > 0:
        raise DomainError("sphere radius must be positive")

    def chart(u, order=2):
        th, ph = u[:, 0], u[:, 1]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        F = rho * np.stack([st * cp, st * sp, ct], axis=-1)
        if order == 0:
            return (F,)
        zero = np.zeros_like(th)
        Ft = rho * np.stack([ct * cp, ct * sp, -st], axis=-1)
        Fp = rho * np.stack([-st * sp, st * cp, zero], axis=-1)
        dF = np.stack([Ft, Fp], axis=1)
        Ftp = rho * np.stack([-ct * sp, ct * cp, zero], axis=-1)
        Fpp = rho * np.stack([-st * cp, -st * sp, zero], axis=-1)
        ddF = np.stack([np.stack([-F, Ftp], axis=1), np.stack([Ftp, Fpp], axis=1)], axis=1)
        return _pack(order, F, dF, ddF)

    return ImmersedSubmanifold(
        "sphere", 2, AmbientSpace.euclidean(3), (0.0, 0.0), (math.pi, TWO_PI), (False, True), chart,
        compact=True, length_scale=rho, params=(rho,),
    )


def _cylinder(a: float = 1.0, L: float = 20.0) -> ImmersedSubmanifold:
    if not a > 0 or not L > 0:
        raise DomainError("cylinder needs radius a > 0 and window L > 0")

    def chart(u, order=2):
        th, z = u[:, 0], u[:, 1]
        c, s = np.cos(th), np.sin(th)
        zero = np.zeros_like(th)
        F = np.stack([a * c, a * s, z], axis=-1)
        if order == 0:
            return (F,)
        dF = np.stack([np.stack([-a * s, a * c, zero], axis=-1), np.stack([zero, zero, zero + 1.0], axis=-1)], axis=1)
        ddF = np.zeros((len(u), 2, 2, 3))
        ddF[:, 0, 0] = np.stack([-a * c, -a * s, zero], axis=-1)
        return _pack(order, F, dF, ddF)

    return ImmersedSubmanifold(
        "cylinder", 2, AmbientSpace.euclidean(3), (0.0, -L), (TWO_PI, L), (True, False), chart,
        compact=False, length_scale=a, params=(a, L), seed_lower=(0.0, -2.0 * a), seed_upper=(TWO_PI, 2.0 * a),
    )


def _torus(R0: float = 2.0, a: float = 1.0) -> ImmersedSubmanifold:
    if not (0 < a < R0):
        raise DomainError("torus needs 0 < a < R0")

    def chart(u, order=2):
        p, q = u[:, 0], u[:, 1]
        cu, su, cv, sv = np.cos(p), np.sin(p), np.cos(q), np.sin(q)
        rad = R0 + a * cv
        zero = np.zeros_like(p)
        F = np.stack([rad * cu, rad * su, a * sv], axis=-1)
        if order == 0:
            return (F,)
        Fu = np.stack([-rad * su, rad * cu, zero], axis=-1)
        Fv = np.stack([-a * sv * cu, -a * sv * su, a * cv], axis=-1)
        dF = np.stack([Fu, Fv], axis=1)
        Fuu = np.stack([-rad * cu, -rad * su, zero], axis=-1)
        Fuv = np.stack([a * sv * su, -a * sv * cu, zero], axis=-1)
        Fvv = np.stack([-a * cv * cu, -a * cv * su, -a * sv], axis=-1)
        ddF = np.stack([np.stack([Fuu, Fuv], axis=1), np.stack([Fuv, Fvv], axis=1)], axis=1)
        return _pack(order, F, dF, ddF)

    return ImmersedSubmanifold(
        "torus", 2, AmbientSpace.euclidean(3), (0.0, 0.0), (TWO_PI, TWO_PI), (True, True), chart,
        compact=True, length_scale=a, params=(R0, a),
    )


def _graph(L: float = 2.0, terms: Sequence[Sequence[float]] = ()) -> ImmersedSubmanifold:
    """Graph ``z = sum c x^i y^j`` over ``[-L, L]^2`` from ``(i, j, c)`` terms."""
    if not L > 0:
        raise DomainError("graph window must be positive")
    terms = [tuple(t) for t in terms]
    deg = 0
    for i, j, _ in terms:
        if int(i) != i or int(j) != j or i < 0 or j < 0:
            raise DomainError(f"graph exponents must be nonnegative integers, got {(i, j)}")
        deg = max(deg, int(i), int(j))
    C = np.zeros((deg + 1, deg + 1))
    for i, j, c in terms:
        C[int(i), int(j)] += c
    Cx, Cy = npoly.polyder(C, axis=0), npoly.polyder(C, axis=1)
    Cxx, Cxy, Cyy = npoly.polyder(Cx, axis=0), npoly.polyder(Cx, axis=1), npoly.polyder(Cy, axis=1)

    def chart(u, order=2):
        x, y = u[:, 0], u[:, 1]
        m = len(u)
        F = np.stack([x, y, npoly.polyval2d(x, y, C)], axis=-1)
        if order == 0:
            return (F,)
        dF = np.zeros((m, 2, 3))
        dF[:, 0, 0] = dF[:, 1, 1] = 1.0
        dF[:, 0, 2] = npoly.polyval2d(x, y, Cx)
        dF[:, 1, 2] = npoly.polyval2d(x, y, Cy)
        ddF = np.zeros((m, 2, 2, 3))
        ddF[:, 0, 0, 2] = npoly.polyval2d(x, y, Cxx)
        ddF[:, 0, 1, 2] = ddF[:, 1, 0, 2] = npoly.polyval2d(x, y, Cxy)
        ddF[:, 1, 1, 2] = npoly.polyval2d(x, y, Cyy)
        return _pack(order, F, dF, ddF)

    return ImmersedSubmanifold(
        "graph", 2, AmbientSpace.euclidean(3), (-L, -L), (L, L), (False, False), chart,
        compact=False, length_scale=1.0, params=(L, tuple(terms)),
        seed_lower=(-0.5 * L, -0.5 * L), seed_upper=(0.5 * L, 0.5 * L),
    )


def _geodesic_sphere_h3(rho: float = 1.0, kappa: float = 1.0) -> ImmersedSubmanifold:
    if not rho > 0 or not kappa > 0:
        raise DomainError("geodesic sphere needs rho > 0 and kappa > 0")
    S = math.sinh(kappa * rho) / kappa
    C = math.cosh(kappa * rho) / kappa
    unit = _sphere(1.0).chart

    def chart(u, order=2):
        parts = unit(u, order)
        F = np.concatenate([S * parts[0], np.full((len(u), 1), C)], axis=-1)
        if order == 0:
            return (F,)
        dF = np.concatenate([S * parts[1], np.zeros(parts[1].shape[:-1] + (1,))], axis=-1)
        if order == 1:
            return (F, dF)
        ddF = np.concatenate([S * parts[2], np.zeros(parts[2].shape[:-1] + (1,))], axis=-1)
        return (F, dF, ddF)

    return ImmersedSubmanifold(
        "geodesic-sphere-h3", 2, AmbientSpace.hyperbolic(3, kappa), (0.0, 0.0), (math.pi, TWO_PI), (False, True),
        chart, compact=True, length_scale=min(rho, 1.0 / kappa), params=(rho, kappa),
    )


# Taylor coefficients in x = s^2 of sinh(s)/s and cosh(s), highest power first for polyval
_SINHC = np.array([1.0 / math.factorial(2 * k + 1) for k in range(22)])[::-1]
_COSH = np.array([1.0 / math.factorial(2 * k) for k in range(22)])[::-1]
_SINHC_D = (np.polyder(_SINHC), np.polyder(_SINHC, 2))
_COSH_D = (np.polyder(_COSH), np.polyder(_COSH, 2))


def _sinhc_parts(q, kappa):
    """``phi = sinh(s)/s`` and ``psi = cosh(s)/kappa`` with ``s = kappa sqrt(q)``,
    plus their first two derivatives in ``q``."""
    s = kappa * np.sqrt(q)
    small = s < 1.0
    phi = np.empty_like(q)
    d1 = np.empty_like(q)
    d2 = np.empty_like(q)
    psi = np.cosh(s) / kappa
    e1 = np.empty_like(q)
    e2 = np.empty_like(q)
    if np.any(small):
        x = kappa * kappa * q[small]
        k2 = kappa * kappa
        phi[small] = np.polyval(_SINHC, x)
        d1[small] = k2 * np.polyval(_SINHC_D[0], x)
        d2[small] = k2 * k2 * np.polyval(_SINHC_D[1], x)
        e1[small] = kappa * np.polyval(_COSH_D[0], x)
        e2[small] = kappa**3 * np.polyval(_COSH_D[1], x)
    big = ~small
    if np.any(big):
        sb = s[big]
        sh, ch = np.sinh(sb), np.cosh(sb)
        phi[big] = sh / sb
        d1[big] = kappa**2 * (sb * ch - sh) / (2 * sb**3)
        d2[big] = kappa**4 * (sb * sb * sh - 3 * sb * ch + 3 * sh) / (4 * sb**5)
        e1[big] = kappa * sh / (2 * sb)
        e2[big] = kappa**3 * (sb * ch - sh) / (4 * sb**3)
    return phi, d1, d2, psi, e1, e2


def _totally_geodesic_hn(n: int = 2, kappa: float = 1.0, window: float | None = None) -> ImmersedSubmanifold:
    """``H^n`` inside ``H^(n+1)`` through the exponential chart at the vertex."""
    n = int(n)
    if n < 1 or not kappa > 0:
        raise DomainError("totally geodesic H^n needs n >= 1 and kappa > 0")
    W = 12.0 / kappa if window is None else float(window)
    N = n + 2
    eye = np.eye(n)

    def chart(u, order=2):
        m = len(u)
        q = np.sum(u * u, axis=1)
        phi, d1, d2, psi, e1, e2 = _sinhc_parts(q, kappa)
        F = np.zeros((m, N))
        F[:, :n] = phi[:, None] * u
        F[:, -1] = psi
        if order == 0:
            return (F,)
        dF = np.zeros((m, n, N))
        dF[:, :, :n] = phi[:, None, None] * eye + 2 * d1[:, None, None] * u[:, :, None] * u[:, None, :]
        dF[:, :, -1] = 2 * e1[:, None] * u
        if order == 1:
            return (F, dF)
        ddF = np.zeros((m, n, n, N))
        # d_k d_i (phi u_j)
        sym = (
            eye[None, :, :, None] * u[:, None, None, :]
            + eye[None, :, None, :] * u[:, None, :, None]
            + eye[None, None, :, :] * u[:, :, None, None]
        )
        cubic = u[:, :, None, None] * u[:, None, :, None] * u[:, None, None, :]
        ddF[:, :, :, :n] = 2 * d1[:, None, None, None] * sym + 4 * d2[:, None, None, None] * cubic
        ddF[:, :, :, -1] = 2 * e1[:, None, None] * eye + 4 * e2[:, None, None] * u[:, :, None] * u[:, None, :]
        return (F, dF, ddF)

    name = "totally-geodesic-h2-h3" if n == 2 else "totally-geodesic-hn"
    return ImmersedSubmanifold(
        name, n, AmbientSpace.hyperbolic(n + 1, kappa), (-W,) * n, (W,) * n, (False,) * n, chart,
        compact=False, length_scale=1.0 / kappa, params=(n, kappa, W),
        seed_lower=(-2.0 / kappa,) * n, seed_upper=(2.0 / kappa,) * n,
        normal_center=(0.0,) * (n + 1) + (1.0 / kappa,),
    )


@dataclass(frozen=True)
class CatalogEntry:
    builder: Callable
    parameters: str
    description: str


CATALOG = {
    "plane": CatalogEntry(_plane, "L=10, k=1", "flat R^2 in R^(2+k), window [-L, L]^2"),
    "sphere": CatalogEntry(_sphere, "rho=1", "round sphere of radius rho in R^3"),
    "cylinder": CatalogEntry(_cylinder, "a=1, L=20", "round cylinder of radius a in R^3, window |z| <= L"),
    "torus": CatalogEntry(_torus, "R0=2, a=1", "torus of revolution in R^3"),
    "graph": CatalogEntry(_graph, "L=2 (+ terms i j c)", "graph z = p(x, y) of a polynomial over [-L, L]^2"),
    "totally-geodesic-h2-h3": CatalogEntry(
        lambda kappa=1.0, window=None: _totally_geodesic_hn(2, kappa, window),
        "kappa=1, window=12/kappa",
        "totally geodesic H^2 in H^3",
    ),
    "geodesic-sphere-h3": CatalogEntry(_geodesic_sphere_h3, "rho=1, kappa=1", "distance sphere of radius rho in H^3"),
    "totally-geodesic-hn": CatalogEntry(_totally_geodesic_hn, "n=2, kappa=1, window=12/kappa", "totally geodesic H^n in H^(n+1)"),
}


def shape_catalog(name: str, parameters: Sequence[float] = (), *, terms=None) -> ImmersedSubmanifold:
    """Build a catalog shape from positional parameters (defaults fill the rest).

    ``terms`` supplies the ``(i, j, c)`` monomials of a ``"graph"`` surface.
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        raise DomainError(f"unknown shape {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    params = [float(p) for p in parameters]
    try:
        if name == "graph":
            return entry.builder(*params, terms=terms or ())
        return entry.builder(*params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name!r}: {exc}") from None
