import math

import numpy as np
import pytest

from kentropy import (
    DomainError,
    curvature_at,
    first_fundamental_form,
    geodesic_ball_area,
    integrate,
    shape_catalog,
)
from kentropy.quadrature import adaptive_cubature
from kentropy.shapes import CATALOG
from kentropy.submanifold import curvature_field, locate, window_boundary_distance

ALL_SHAPES = list(CATALOG)


def sample_points(sigma, k=4, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = sigma.seed_box
    return lo + rng.random((k, sigma.dim)) * (hi - lo)


# -- shapes and fundamental forms ----------------------------------------------------


def test_first_fundamental_form_examples():
    assert np.allclose(first_fundamental_form(shape_catalog("plane"), [0.3, -0.7]), np.eye(2))
    assert np.allclose(first_fundamental_form(shape_catalog("sphere", [2.0]), [math.pi / 2, 1.0]), np.diag([4.0, 4.0]))
    assert np.allclose(first_fundamental_form(shape_catalog("cylinder"), [0.4, 1.0]), np.eye(2))


def test_curvature_examples():
    d = curvature_at(shape_catalog("plane"), [0.2, 0.1])
    assert [d.normA2, d.normH2, d.traceless2, d.scalar] == pytest.approx([0, 0, 0, 0], abs=1e-14)
    rho = 1.7
    d = curvature_at(shape_catalog("sphere", [rho]), [1.0, 2.0])
    assert [d.normA2, d.normH2, d.traceless2, d.scalar] == pytest.approx(
        [2 / rho**2, 4 / rho**2, 0, 2 / rho**2], abs=1e-12
    )
    a = 0.5
    d = curvature_at(shape_catalog("cylinder", [a]), [1.0, 0.3])
    assert [d.normA2, d.normH2, d.traceless2, d.scalar] == pytest.approx(
        [1 / a**2, 1 / a**2, 0.5 / a**2, 0], abs=1e-12
    )
    d = curvature_at(shape_catalog("totally-geodesic-h2-h3"), [0.4, -1.1])
    assert [d.normA2, d.normH2, d.scalar] == pytest.approx([0, 0, -2], abs=1e-10)


def test_geodesic_sphere_is_umbilic():
    sigma = shape_catalog("geodesic-sphere-h3", [1.0, 1.0])
    data = curvature_field(sigma, sample_points(sigma, 20))
    assert np.max(np.abs(data.traceless2)) < 1e-12
    # principal curvatures coth(rho): |H|^2 = 4 coth^2
    assert np.allclose(data.normH2, 4 / math.tanh(1.0) ** 2, rtol=1e-12)


def test_torus_scalar_changes_sign():
    torus = shape_catalog("torus", [2.0, 1.0])
    outer = curvature_at(torus, [0.3, 0.0]).scalar
    inner = curvature_at(torus, [0.3, math.pi]).scalar
    assert outer > 0 > inner


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_gauss_equation_and_traceless(name):
    sigma = shape_catalog(name)
    n = sigma.dim
    k = sigma.ambient.kappa
    data = curvature_field(sigma, sample_points(sigma, 16))
    gauss = data.scalar + n * (n - 1) * k**2 - data.normH2 + data.normA2
    assert np.max(np.abs(gauss)) < 1e-8
    assert np.allclose(data.traceless2, data.normA2 - data.normH2 / n, atol=1e-10)
    assert np.all(data.normA2 >= data.normH2 / n - 1e-10)


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_finite_difference_curvature_agrees(name):
    sigma = shape_catalog(name)
    fd = sigma.with_finite_differences()
    for u in sample_points(sigma, 3, seed=1):
        a = curvature_at(sigma, u)
        b = curvature_at(fd, u)
        for q in ("normA2", "normH2", "scalar"):
            x, y = float(getattr(a, q)), float(getattr(b, q))
            assert abs(x - y) <= 1e-4 * max(1.0, abs(x)), (q, x, y)


def test_hyperbolic_charts_on_sheet():
    for name in ("totally-geodesic-h2-h3", "geodesic-sphere-h3"):
        sigma = shape_catalog(name)
        F = sigma.position(sample_points(sigma, 30))
        sigma.ambient.check_points(F)


def test_catalog_errors():
    with pytest.raises(DomainError):
        shape_catalog("klein-bottle")
    with pytest.raises(DomainError):
        shape_catalog("torus", [1.0, 2.0])
    with pytest.raises(DomainError):
        shape_catalog("sphere", [1.0, 2.0, 3.0])


def test_graph_surface():
    sigma = shape_catalog("graph", [1.0], terms=[(2, 0, 0.5), (0, 2, 0.5)])
    # z = (x^2 + y^2)/2 has principal curvatures 1 at the origin
    d = curvature_at(sigma, [0.0, 0.0])
    assert d.normA2 == pytest.approx(2.0)
    assert d.traceless2 == pytest.approx(0.0, abs=1e-14)


# -- integration ----------------------------------------------------------------------


def test_closed_form_areas():
    assert integrate(shape_catalog("sphere", [2.0]), lambda u, x: np.ones(len(u)), 1e-10).value == pytest.approx(
        16 * math.pi, rel=1e-8
    )
    assert integrate(shape_catalog("torus", [2.0, 1.0]), lambda u, x: np.ones(len(u)), 1e-10).value == pytest.approx(
        8 * math.pi**2, rel=1e-8
    )
    assert integrate(shape_catalog("sphere"), lambda u, x: np.zeros(len(u))).value == 0.0


def test_adaptive_cubature_smooth_function():
    res = adaptive_cubature(lambda U: np.exp(U[:, 0]) * np.cos(U[:, 1]), [0, 0], [1, math.pi / 2], 1e-12)
    assert res.value == pytest.approx(math.e - 1, rel=1e-12)


def test_window_boundary_distance():
    plane = shape_catalog("plane")
    assert window_boundary_distance(plane, np.zeros(3)) == pytest.approx(10.0)
    assert window_boundary_distance(shape_catalog("sphere"), np.zeros(3)) == math.inf


def test_locate_recovers_parameters():
    sigma = shape_catalog("torus")
    u = np.array([1.0, 2.0])
    found, gap = locate(sigma, sigma.position(u)[0])
    assert gap < 1e-10


# -- geodesic balls ---------------------------------------------------------------------


def test_plane_ball_is_disk():
    plane = shape_catalog("plane")
    for R in (0.1, 0.5, 2.0):
        assert geodesic_ball_area(plane, np.zeros(3), R).area == pytest.approx(math.pi * R * R, rel=1e-10)


def cylinder_ball_area(R):
    from scipy.integrate import quad

    top = 2 * math.asin(min(1.0, R / 2))
    value, _ = quad(lambda th: 2 * math.sqrt(max(R * R - 4 * math.sin(th / 2) ** 2, 0.0)), -top, top, epsabs=1e-14)
    return value


@pytest.mark.parametrize("R", [0.2, 0.6, 1.5])
def test_cylinder_ball_closed_form(R):
    cyl = shape_catalog("cylinder")
    x0 = cyl.position([0.0, 0.0])[0]
    assert geodesic_ball_area(cyl, x0, R, u0=[0.0, 0.0]).area == pytest.approx(cylinder_ball_area(R), rel=1e-10)


def test_cylinder_subdivision_agrees():
    cyl = shape_catalog("cylinder")
    x0 = cyl.position([0.0, 0.0])[0]
    sub = geodesic_ball_area(cyl, x0, 0.5, 1e-4, method="subdivision")
    assert sub.area == pytest.approx(cylinder_ball_area(0.5), rel=1e-5)


def test_ball_area_monotone_in_R():
    sphere = shape_catalog("sphere")
    x0 = sphere.position([1.0, 1.0])[0]
    areas = [geodesic_ball_area(sphere, x0, R).area for R in np.linspace(0.1, 1.5, 8)]
    assert np.all(np.diff(areas) > 0)


def test_ball_area_rejects_bad_radius():
    with pytest.raises(DomainError):
        geodesic_ball_area(shape_catalog("plane"), np.zeros(3), 0.0)
