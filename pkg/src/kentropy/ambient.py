"""Constant-curvature model spaces: Euclidean space and the hyperboloid model.

Hyperbolic points are stored in Lorentzian coordinates ``(x_1..x_d, x_{d+1})``
with the form ``<x, y>_L = sum_i x_i y_i - x_{d+1} y_{d+1}`` and live on the
upper sheet ``<x, x>_L = -1/kappa^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["AmbientSpace", "distance", "lorentz_inner", "project_to_hyperboloid"]

HYPERBOLOID_TOL = 1e-8
ARCCOSH_TOL = 1e-10


def lorentz_inner(x, y):
    """Lorentzian form with signature (d, 1); the last coordinate is timelike."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DomainError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    prod = x * y
    return prod[..., :-1].sum(axis=-1) - prod[..., -1]


def project_to_hyperboloid(d: int, kappa: float, raw):
    """Lift spatial coordinates ``w`` in R^d to ``(w, sqrt(|w|^2 + 1/kappa^2))``."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    w = np.asarray(raw, dtype=float)
    if w.shape[-1] != d:
        raise DomainError(f"expected {d} spatial coordinates, got {w.shape[-1]}")
    last = np.sqrt(np.sum(w * w, axis=-1) + 1.0 / kappa**2)
    return np.concatenate([w, last[..., None]], axis=-1)


@dataclass(frozen=True)
class AmbientSpace:
    """Euclidean ``R^dim`` or hyperbolic ``H^dim`` of curvature ``-kappa^2``."""

    kind: str
    dim: int
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "hyperbolic"):
            raise DomainError(f"unknown ambient kind {self.kind!r}")
        if self.dim < 1:
            raise DomainError("ambient dimension must be >= 1")
        if self.kind == "euclidean" and self.kappa != 0:
            raise DomainError("euclidean ambient has kappa = 0")
        if self.kind == "hyperbolic" and not self.kappa > 0:
            raise DomainError("hyperbolic ambient needs kappa > 0")

    @classmethod
    def euclidean(cls, dim: int) -> AmbientSpace:
        return cls("euclidean", dim, 0.0)

    @classmethod
    def hyperbolic(cls, dim: int, kappa: float = 1.0) -> AmbientSpace:
        return cls("hyperbolic", dim, float(kappa))

    @property
    def is_hyperbolic(self) -> bool:
        return self.kind == "hyperbolic"

    @property
    def coord_dim(self) -> int:
        """Length of the coordinate vectors representing points."""
        return self.dim + 1 if self.is_hyperbolic else self.dim

    def inner(self, x, y):
        """Ambient inner product of (tangent) vectors in coordinates."""
        if self.is_hyperbolic:
            return lorentz_inner(x, y)
        return np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)

    def check_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.coord_dim:
            raise DomainError(f"points need {self.coord_dim} coordinates, got {x.shape[-1]}")
        if self.is_hyperbolic:
            k2 = self.kappa**2
            drift = np.abs(lorentz_inner(x, x) + 1.0 / k2)
            scale = 1.0 / k2 + np.sum(x * x, axis=-1)
            if np.any(drift > HYPERBOLOID_TOL * scale) or np.any(x[..., -1] <= 0):
                raise DomainError("point is off the hyperboloid")
        return x

    def distance(self, x, y):
        """Geodesic distance, broadcasting over leading axes."""
        x = self.check_points(x)
        y = self.check_points(y)
        if not self.is_hyperbolic:
            diff = x - y
            return np.sqrt(np.sum(diff * diff, axis=-1))
        k = self.kappa
        arg = -k * k * lorentz_inner(x, y)
        slack = ARCCOSH_TOL * (1.0 + k * k * np.linalg.norm(x, axis=-1) * np.linalg.norm(y, axis=-1))
        if np.any(arg < 1.0 - slack):
            raise DomainError("arccosh argument below 1: points not on one sheet")
        # chordal form: |x - y|_L^2 = 4 sinh^2(k d / 2) / k^2, exact near the diagonal
        diff = x - y
        chord2 = np.maximum(lorentz_inner(diff, diff), 0.0)
        return 2.0 / k * np.arcsinh(0.5 * k * np.sqrt(chord2))

    def tangent_projection(self, x, v):
        """Project ambient coordinate vectors ``v`` onto the tangent space at ``x``."""
        if not self.is_hyperbolic:
            return np.asarray(v, dtype=float)
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v + self.kappa**2 * lorentz_inner(v, x)[..., None] * x

    def exp(self, x, v):
        """Exponential map at ``x`` applied to a tangent vector ``v``."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if not self.is_hyperbolic:
            return x + v
        k = self.kappa
        norm = np.sqrt(np.maximum(lorentz_inner(v, v), 0.0))[..., None]
        safe = np.where(norm > 0, norm, 1.0)
        step = np.where(norm > 0, np.sinh(k * norm) / (k * safe), 1.0)
        return np.cosh(k * norm) * x + step * v

    def from_spatial(self, w):
        """Chart used by searches: identity (Euclidean) or hyperboloid lift."""
        if self.is_hyperbolic:
            return project_to_hyperboloid(self.dim, self.kappa, w)
        return np.asarray(w, dtype=float)

    def to_spatial(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., :-1] if self.is_hyperbolic else x

    def centroid(self, points):
        """Mean of points, renormalized onto the hyperboloid when needed."""
        m = np.mean(np.asarray(points, dtype=float), axis=0)
        if not self.is_hyperbolic:
            return m
        return m / (self.kappa * math.sqrt(-lorentz_inner(m, m)))


def distance(space: AmbientSpace, x, y):
    return space.distance(x, y)
