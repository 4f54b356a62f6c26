import math

import numpy as np
import pytest

from kentropy import DomainError, shape_catalog
from kentropy.functional import (
    EntropySearch,
    density_time_profile,
    entropy,
    gaussian_density,
    thread_count,
)

LIGHT = EntropySearch(surface_seeds=16, offset_seeds=4, tau_points=12, refine_top=2)


# -- densities ------------------------------------------------------------------------


@pytest.mark.parametrize("tau", [1e-3, 0.1, 1.0])
def test_plane_density_is_one(tau):
    plane = shape_catalog("plane")
    p = gaussian_density(plane, 0.0, np.array([0.3, -0.2, 0.0]), tau)
    assert p.value == pytest.approx(1.0, abs=1e-8)
    assert p.quadrature_error >= 0
    assert p.window_tail < 1e-8


def test_plane_density_wide_kernel_loses_window_mass():
    # sqrt(4 tau) = 4 against the window half-width 10: the missing mass is reported
    p = gaussian_density(shape_catalog("plane"), 0.0, np.zeros(3), 4.0)
    assert 1.0 - p.value > 1e-4
    assert p.value + p.window_tail >= 1.0 - 1e-9


def test_sphere_center_density():
    sphere = shape_catalog("sphere", [2.0])
    assert gaussian_density(sphere, 0.0, np.zeros(3), 1.0).value == pytest.approx(4 / math.e, abs=1e-9)


@pytest.mark.parametrize("tau", [0.01, 0.3, 1.0])
def test_h2_density_is_one(tau):
    sigma = shape_catalog("totally-geodesic-h2-h3")
    x0 = sigma.position([0.5, -0.3])[0]
    assert gaussian_density(sigma, 1.0, x0, tau).value == pytest.approx(1.0, abs=1e-8)


def test_cylinder_on_surface_closed_form():
    from scipy.special import i0e

    cyl = shape_catalog("cylinder")
    x0 = cyl.position([0.0, 0.0])[0]
    for s in (0.05, 0.5, 2.0):
        exact = math.sqrt(math.pi / s) * i0e(1 / (2 * s))
        assert gaussian_density(cyl, 0.0, x0, s).value == pytest.approx(exact, abs=1e-9)


def test_window_tail_reported():
    plane = shape_catalog("plane", [3.0])
    p = gaussian_density(plane, 0.0, np.zeros(3), 4.0)
    assert 0 < p.window_tail < 1
    # mass beyond the nearest boundary point bounds the missing mass from above
    assert p.value < 1.0 <= p.value + p.window_tail + 1e-9
    assert gaussian_density(shape_catalog("sphere"), 0.0, np.zeros(3), 1.0).window_tail == 0.0


def test_density_errors():
    sphere = shape_catalog("sphere")
    with pytest.raises(DomainError):
        gaussian_density(sphere, 0.0, np.zeros(3), 0.0)
    with pytest.raises(DomainError):
        gaussian_density(sphere, 1.0, np.zeros(3), 1.0)
    with pytest.raises(DomainError):
        gaussian_density(shape_catalog("totally-geodesic-h2-h3"), 1.0, np.array([0, 0, 0, 2.0]), 1.0)


def test_density_positive_and_continuous_in_tau():
    torus = shape_catalog("torus")
    x0 = np.array([0.5, 0.2, 0.4])
    taus = np.geomspace(0.05, 20, 25)
    values = np.array([gaussian_density(torus, 0.0, x0, t, with_tail=False).value for t in taus])
    assert np.all(values > 0)
    quotients = np.abs(np.diff(values)) / np.diff(np.log(taus))
    assert np.all(quotients < 5.0)


# -- profiles -------------------------------------------------------------------------


def test_profile_examples():
    plane = shape_catalog("plane")
    prof = density_time_profile(plane, 0.0, np.zeros(3), [0.1, 0.05, 0.01])
    assert [v for _, v in prof] == pytest.approx([1, 1, 1], abs=1e-9)
    assert density_time_profile(plane, 0.0, np.zeros(3), []) == []


def test_cylinder_profile_slope():
    cyl = shape_catalog("cylinder")
    x0 = cyl.position([0.0, 0.0])[0]
    s = [0.04, 0.02, 0.01, 0.005]
    prof = density_time_profile(cyl, 0.0, x0, s)
    values = np.array([v for _, v in prof])
    assert np.all(values > 1)
    assert np.all(np.diff(values) < 0)
    slopes = (values - 1) / np.array(s)
    assert abs(slopes[-1] - 0.25) < abs(slopes[0] - 0.25)
    assert slopes[-1] == pytest.approx(0.25, rel=0.01)


def test_profile_rejects_nonpositive():
    with pytest.raises(DomainError):
        density_time_profile(shape_catalog("plane"), 0.0, np.zeros(3), [0.1, -1.0])


# -- entropy --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sphere_result():
    return entropy(shape_catalog("sphere"), 0.0, LIGHT)


def test_sphere_entropy_light(sphere_result):
    assert sphere_result.lam == pytest.approx(4 / math.e, abs=1e-6)
    assert np.linalg.norm(sphere_result.argmax_x0) < 1e-3
    assert sphere_result.argmax_tau == pytest.approx(0.25, rel=1e-2)


def test_supremum_dominance():
    seen = []
    import kentropy.functional as fn

    original = fn.gaussian_density

    def spy(*args, **kwargs):
        p = original(*args, **kwargs)
        seen.append(p.value)
        return p

    fn.gaussian_density = spy
    try:
        res = entropy(shape_catalog("sphere"), 0.0, LIGHT)
    finally:
        fn.gaussian_density = original
    assert res.lam >= max(seen)
    assert res.lam == max(seen)
    assert res.probes == len(seen)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_scale_invariance(sphere_result, c):
    res = entropy(shape_catalog("sphere").scaled(c), 0.0, LIGHT)
    assert res.lam == pytest.approx(sphere_result.lam, abs=1e-4)
    assert res.argmax_tau == pytest.approx(c * c * sphere_result.argmax_tau, rel=1e-3)


def test_lower_bound_holds_for_torus():
    res = entropy(shape_catalog("torus"), 0.0, LIGHT)
    assert res.lam >= 1 - 1e-6
    assert res.status in ("converged", "budget-exhausted")


def test_seed_order_is_deterministic():
    search = EntropySearch(surface_seeds=9, offset_seeds=2, tau_points=6, refine_top=1, seed_order=7)
    a = entropy(shape_catalog("sphere"), 0.0, search)
    b = entropy(shape_catalog("sphere"), 0.0, search)
    assert a.lam == b.lam and a.argmax_tau == b.argmax_tau and a.probes == b.probes


def test_budget_exhausted_status():
    search = EntropySearch(surface_seeds=4, offset_seeds=0, tau_points=4, refine_top=1, max_evaluations=5)
    assert entropy(shape_catalog("sphere"), 0.0, search).status == "budget-exhausted"


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("KENTROPY_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("KENTROPY_THREADS", "0")
    assert thread_count() == 1
