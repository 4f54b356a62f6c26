"""Acceptance checks, grouped into the suites behind ``kentropy verify``.

Every criterion function returns a list of :class:`Check` rows; a criterion
passes when all its rows pass.
"""

from __future__ import annotations

import math
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import sympy as sp
from scipy import integrate as sci_integrate

from .asymptotics import (
    euler_characteristic,
    fit_short_time_slope,
    genus_bound_check,
    karp_pinsky_fit,
    rigidity_defect,
    short_time_profile,
)
from .functional import entropy, gaussian_density
from .kernels import KernelSpec, hyperbolic_tail_mass, kernel, radial_mass, small_time_coefficients, sphere_volume
from .shapes import CATALOG, shape_catalog
from .submanifold import curvature_field

__all__ = ["CRITERIA", "SUITES", "Check", "run_criterion", "run_suite"]

TIMES = (0.05, 0.5, 2.0)


@dataclass(frozen=True)
class Check:
    """One claim with its computed value and allowed deviation."""

    claim: str
    computed: float
    tolerance: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _near(claim, computed, target, tol, relative=False) -> Check:
    dev = abs(computed - target)
    if relative:
        dev /= abs(target)
    return Check(claim, float(computed), tol, bool(dev <= tol))


def _bounded(claim, computed, bound) -> Check:
    return Check(claim, float(computed), bound, bool(computed <= bound))


# -- criterion 1: K_5 from K_3 -----------------------------------------------------


def _millson_k5():
    """``K_{5,1}`` from the closed-form ``K_{3,1}`` by one dimension-raising step,
    and the heat operator applied to it, both as numeric callables."""
    t, r = sp.symbols("t r", positive=True)
    k3 = (4 * sp.pi * t) ** sp.Rational(-3, 2) * r / sp.sinh(r) * sp.exp(-t - r**2 / (4 * t))
    k5 = -sp.exp(-3 * t) / (2 * sp.pi * sp.sinh(r)) * sp.diff(k3, r)
    heat = sp.diff(k5, t) - sp.diff(k5, r, 2) - 4 * sp.cosh(r) / sp.sinh(r) * sp.diff(k5, r)
    return sp.lambdify((t, r), k5, "numpy"), sp.lambdify((t, r), heat, "numpy")


def criterion_1() -> list:
    k5, heat = _millson_k5()
    checks = []
    vol = sphere_volume(4)
    for t in TIMES:
        r = np.linspace(0.05, 6.0 * math.sqrt(t) + 4.0 * t, 400)
        scale = np.max(np.abs(k5(t, r))) / t
        residual = float(np.max(np.abs(heat(t, r))) / scale)
        checks.append(_bounded(f"K5 heat residual (relative) t={t}", residual, 1e-4))
        upper = 4.0 * t + 40.0 * math.sqrt(t)
        mass, _ = sci_integrate.quad(lambda x: k5(t, x) * math.sinh(x) ** 4, 1e-12, upper, epsabs=1e-13, epsrel=1e-12, limit=400)
        checks.append(_near(f"|S^4| int K5 sinh^4 = 1, t={t}", vol * mass, 1.0, 1e-6))
        lib = kernel(KernelSpec(5, 1.0), t, r)
        agree = float(np.max(np.abs(lib - k5(t, r))) / np.max(np.abs(lib)))
        checks.append(_bounded(f"library K5 matches Millson step, t={t}", agree, 1e-8))
    return checks


# -- criterion 2: even-dimensional normalization ----------------------------------------


def criterion_2() -> list:
    return [
        _near(f"|S^1| int K2 sinh = 1, t={t}", sphere_volume(1) * radial_mass(2, 1.0, 0, t), 1.0, 1e-5) for t in TIMES
    ]


# -- criterion 3: small-time coefficients ------------------------------------------


def criterion_3() -> list:
    c3 = small_time_coefficients(3)
    checks = [_near("a_3 = -1", c3.a_n, -1.0, 1e-3), _near("b_3 = -1/6", c3.b_n, -1.0 / 6.0, 1e-3)]
    for n in (2, 5):
        c = small_time_coefficients(n)
        checks.append(_bounded(f"|a_n + 2n b_n + n(n-1)/3|, n={n}", abs(c.relation_residual), 1e-3))
    return checks


# -- criterion 4: tail bound ----------------------------------------------------


def criterion_4() -> list:
    R = 1.0
    scaled = {t: hyperbolic_tail_mass(3, t, R) * math.exp(R * R / (16 * t)) for t in (0.05, 0.02, 0.01)}
    ref = scaled[0.05]
    return [_bounded(f"tail e^(R^2/16t) / value at t=0.05, t={t}", v / ref, 10.0) for t, v in scaled.items()]


# -- criterion 5: short-time slope ------------------------------------------------


def _center(sigma):
    lo, hi = sigma.seed_box
    return 0.5 * (lo + hi)


def short_time_slope(name: str, kappa: float, u=None) -> float:
    sigma = shape_catalog(name)
    u = _center(sigma) if u is None else np.asarray(u, dtype=float)
    return fit_short_time_slope(short_time_profile(sigma, kappa, u)).coefficient(1.0)


def criterion_5() -> list:
    return [
        _near("cylinder slope c1 = 1/4 (relative)", short_time_slope("cylinder", 0.0), 0.25, 0.02, relative=True),
        _near("sphere slope c1 = 0", short_time_slope("sphere", 0.0), 0.0, 0.01),
        _near("H2 in H3 slope c1 = 0", short_time_slope("totally-geodesic-h2-h3", 1.0, (0.3, 0.2)), 0.0, 0.01),
    ]


# -- criterion 6: Karp-Pinsky coefficient -------------------------------------------


def karp_pinsky_A(name: str) -> float:
    sigma = shape_catalog(name)
    u = _center(sigma)
    return karp_pinsky_fit(sigma, sigma.position(u)[0], u0=u).coefficient(2.0)


def criterion_6() -> list:
    return [
        _near("cylinder A = 1/32 (relative)", karp_pinsky_A("cylinder"), 1.0 / 32.0, 0.02, relative=True),
        _near("sphere A = 0", karp_pinsky_A("sphere"), 0.0, 1e-3),
        _near("plane A = 0", karp_pinsky_A("plane"), 0.0, 1e-3),
    ]


# -- criterion 7: entropy values ------------------------------------------------------

ENTROPY_ORACLES = (
    ("plane", 0.0, 1.0, 1e-6),
    ("sphere", 0.0, 4.0 / math.e, 1e-3),
    ("cylinder", 0.0, math.sqrt(2.0 * math.pi / math.e), 5e-3),
    ("totally-geodesic-h2-h3", 1.0, 1.0, 1e-4),
)


def criterion_7() -> list:
    checks = []
    for name, kappa, target, tol in ENTROPY_ORACLES:
        res = entropy(shape_catalog(name), kappa)
        checks.append(_near(f"lambda({name}) = {target:.6f}", res.lam, target, tol))
        checks.append(Check(f"lambda({name}) >= 1 - 1e-6", res.lam, 1e-6, bool(res.lam >= 1.0 - 1e-6)))
    return checks


# -- criterion 8: rigidity identity ----------------------------------------------------

UMBILIC = ("plane", "sphere", "geodesic-sphere-h3", "totally-geodesic-h2-h3", "totally-geodesic-hn")


def _grid(sigma, k=5):
    lo, hi = sigma.seed_box
    axes = [lo[a] + (np.arange(k) + 0.5) / k * (hi[a] - lo[a]) for a in range(sigma.dim)]
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)


def criterion_8() -> list:
    checks = []
    for name in CATALOG:
        sigma = shape_catalog(name)
        if sigma.dim != 2:
            continue
        kappa = sigma.ambient.kappa
        pts = _grid(sigma)
        data = curvature_field(sigma, pts)
        defect = np.array([rigidity_defect(sigma, u, kappa) for u in pts])
        gap = float(np.max(np.abs(defect - 1.5 * data.traceless2)))
        checks.append(_bounded(f"{name}: |defect - 3/2 |A0|^2|", gap, 1e-8))
        if name in UMBILIC:
            checks.append(_bounded(f"{name}: |defect| (umbilic)", float(np.max(np.abs(defect))), 1e-8))
    return checks


# -- criterion 9: Gauss-Bonnet ---------------------------------------------------------


def criterion_9() -> list:
    sphere = shape_catalog("sphere")
    torus = shape_catalog("torus")
    checks = [
        _near("chi(sphere) = 2", euler_characteristic(sphere), 2.0, 0.02),
        _near("chi(torus) = 0", euler_characteristic(torus), 0.0, 0.02),
    ]
    # a single density probe is a certified lower bound for the entropy
    lam_sphere = 4.0 / math.e
    R0, a = torus.params[:2]
    lam_torus = gaussian_density(torus, 0.0, np.zeros(3), R0 * R0 / 4.0, with_tail=False).value
    for name, sigma, lam in (("sphere", sphere, lam_sphere), ("torus", torus, lam_torus)):
        rep = genus_bound_check(sigma, lam)
        checks.append(Check(f"{name}: genus report consistent (genus {rep.genus})", rep.left - rep.right, 0.0, rep.consistent))
    return checks


# -- criterion 10: determinism ---------------------------------------------------------

DETERMINISM_CONFIGS = (
    """[shape]
name = sphere
[task]
kind = short-time
[output]
path = out.json
""",
    """[task]
kind = kernel-table
n = 3
kappa = 1
t = 0.1 1
r = 0 0.5 2
[output]
path = out.csv
""",
)


def criterion_10() -> list:
    from .cli import execute
    from .config import parse_config

    checks = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, text in enumerate(DETERMINISM_CONFIGS):
            blobs = []
            for rep in range(2):
                cfg = parse_config(text, f"determinism-{i}", Path(tmp) / f"run{rep}")
                blobs.append(execute(cfg).read_bytes())
            same = blobs[0] == blobs[1]
            checks.append(Check(f"config {i} ({parse_config(text).task}) byte-identical", float(same), 0.0, same))
    return checks


CRITERIA = {
    1: ("K5 by the Millson step: heat residual and normalization", criterion_1),
    2: ("even-dimension kernel normalization", criterion_2),
    3: ("small-time coefficient relation", criterion_3),
    4: ("hyperbolic tail bound", criterion_4),
    5: ("short-time slope", criterion_5),
    6: ("Karp-Pinsky coefficient", criterion_6),
    7: ("entropy values", criterion_7),
    8: ("rigidity identity", criterion_8),
    9: ("Gauss-Bonnet", criterion_9),
    10: ("determinism", criterion_10),
}

SUITES = {
    "kernels": (1, 2, 3, 4),
    "expansions": (5, 6, 8, 9),
    "entropy": (7,),
    "all": tuple(range(1, 11)),
}


def run_criterion(number: int) -> tuple[bool, list, float]:
    """Run one criterion; returns ``(passed, checks, seconds)``."""
    start = time.perf_counter()
    checks = CRITERIA[number][1]()
    return all(c.passed for c in checks), checks, time.perf_counter() - start


def run_suite(name: str, out=sys.stdout) -> bool:
    """Print a claim / computed / tolerance / verdict table; True iff all pass."""
    ok = True
    for number in SUITES[name]:
        title = CRITERIA[number][0]
        passed, checks, seconds = run_criterion(number)
        ok &= passed
        print(f"criterion {number}: {title} ({seconds:.1f} s)", file=out)
        for c in checks:
            print(f"  {c.claim:<52} {c.computed: .10g}  tol {c.tolerance:.1e}  {c.verdict}", file=out)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}", file=out)
    return ok
