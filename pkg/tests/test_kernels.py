import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kentropy import (
    ComputationError,
    DomainError,
    KernelSpec,
    euclidean_kernel,
    hyperbolic_kernel,
    hyperbolic_tail_mass,
    kernel,
    kernel_radial_derivative,
    radial_mass,
    small_time_coefficients,
    sphere_volume,
)
from kentropy.kernels import kernel_profile


def k3_closed(t, r):
    return (4 * math.pi * t) ** -1.5 * (r / math.sinh(r) if r else 1.0) * math.exp(-t - r * r / (4 * t))


# -- euclidean ------------------------------------------------------------------


def test_euclidean_examples():
    assert euclidean_kernel(2, 1 / (4 * math.pi), 0.0) == pytest.approx(1.0, rel=1e-15)
    assert euclidean_kernel(1, 1.0, 2.0) == pytest.approx((4 * math.pi) ** -0.5 * math.exp(-1), rel=1e-15)
    assert euclidean_kernel(3, 0.25, 1.0) == pytest.approx(math.pi**-1.5 * math.exp(-1), rel=1e-15)


@pytest.mark.parametrize("t, r", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5), (math.nan, 1.0)])
def test_bad_arguments(t, r):
    with pytest.raises(DomainError):
        kernel(KernelSpec(3, 1.0), t, r)


def test_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec(0)
    with pytest.raises(DomainError):
        KernelSpec(3, -1.0)
    with pytest.raises(DomainError):
        hyperbolic_kernel(KernelSpec(3, 0.0), 1.0, 1.0)


# -- hyperbolic closed forms ------------------------------------------------------


def test_k3_examples():
    spec = KernelSpec(3, 1.0)
    assert hyperbolic_kernel(spec, 1.0, 0.0) == pytest.approx((4 * math.pi) ** -1.5 * math.exp(-1), rel=1e-14)
    value = hyperbolic_kernel(spec, 1.0, 1.0)
    assert value == pytest.approx((4 * math.pi) ** -1.5 / math.sinh(1) * math.exp(-1.25), rel=1e-14)
    assert value == pytest.approx(5.47e-3, rel=1e-3)
    assert kernel(spec, 1.0, 1.0) == value


@pytest.mark.parametrize("r", [0.0, 1e-9, 1e-4, 0.1, 0.24, 0.26, 1.0, 5.0])
def test_k3_matches_closed_form_across_series_switch(r):
    assert hyperbolic_kernel(KernelSpec(3, 1.0), 0.3, r) == pytest.approx(k3_closed(0.3, r), rel=1e-13)


def test_kappa_to_zero_limit():
    flat = euclidean_kernel(3, 0.7, 1.3)
    errs = [abs(kernel(KernelSpec(3, k), 0.7, 1.3) - flat) for k in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6 * flat


def test_one_dimensional_kernel_is_kappa_free():
    r = np.linspace(0, 4, 9)
    for k in (0.5, 1.0, 3.0):
        assert np.allclose(kernel(KernelSpec(1, k), 0.8, r), euclidean_kernel(1, 0.8, r), rtol=1e-13, atol=0)


@settings(max_examples=40, deadline=None)
@given(
    n=st.sampled_from([1, 3, 5, 7]),
    k=st.floats(0.2, 3.0),
    t=st.floats(0.01, 3.0),
    r=st.floats(0.0, 4.0),
)
def test_scaling_odd(n, k, t, r):
    lhs = kernel(KernelSpec(n, k), t, r)
    rhs = k**n * kernel(KernelSpec(n, 1.0), k * k * t, k * r)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_scaling_example_kappa_two():
    t = np.array([0.1, 0.5, 1.0])
    r = np.array([0.3, 1.0, 2.0])
    assert np.allclose(kernel(KernelSpec(3, 2.0), t, r), 8 * kernel(KernelSpec(3, 1.0), 4 * t, 2 * r), rtol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_positive_and_decreasing(n):
    r = np.linspace(0.0, 6.0, 200)
    for t in (0.05, 0.5, 2.0):
        values = kernel(KernelSpec(n, 1.0), t, r)
        assert np.all(values > 0)
        assert np.all(np.diff(values) < 0)


# -- normalization and heat equation ------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 5])
@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_normalization(n, kappa):
    for t in (0.05, 0.5, 2.0):
        mass = sphere_volume(n - 1) * radial_mass(n, kappa, 0, t)
        assert mass == pytest.approx(1.0, abs=1e-6)


def _heat_residual(K, n, t, r, h):
    """Relative heat residual from central differences of steps h and 2h,
    Richardson-combined to cancel the O(h^2) truncation term."""

    def diffs(h):
        Kt = (K(t + h, r) - K(t - h, r)) / (2 * h)
        Kr = (K(t, r + h) - K(t, r - h)) / (2 * h)
        Krr = (K(t, r + h) - 2 * K(t, r) + K(t, r - h)) / h**2
        return np.array([Kt, Kr, Krr])

    Kt, Kr, Krr = (4 * diffs(h) - diffs(2 * h)) / 3
    return np.abs(Kt - Krr - (n - 1) / np.tanh(r) * Kr) / K(t, r)


@pytest.mark.parametrize("n", [2, 3])
def test_heat_equation_residual(n):
    spec = KernelSpec(n, 1.0)
    r = np.linspace(0.1, 3.0, 12)
    worst = max(_heat_residual(lambda t, r: kernel(spec, t, r), n, t, r, 1e-4).max() for t in np.linspace(0.1, 1.0, 4))
    assert worst <= 1e-4


def test_plain_differences_limited_by_truncation():
    # at t = 0.1, r = 3 the h^2 term alone is ~1e-2, even for the exact closed form
    t, r, h = 0.1, 3.0, 1e-4
    Kt = (k3_closed(t + h, r) - k3_closed(t - h, r)) / (2 * h)
    Kr = (k3_closed(t, r + h) - k3_closed(t, r - h)) / (2 * h)
    Krr = (k3_closed(t, r + h) - 2 * k3_closed(t, r) + k3_closed(t, r - h)) / h**2
    plain = abs(Kt - Krr - 2 / math.tanh(r) * Kr) / k3_closed(t, r)
    exact = _heat_residual(np.vectorize(k3_closed), 3, t, np.array([r]), h)[0]
    assert plain > 1e-3 > 1e-5 > exact


# -- Millson identity ------------------------------------------------------------------


def test_radial_derivative_examples():
    assert kernel_radial_derivative(KernelSpec(1), 1.0, 0.0) == 0.0
    assert kernel_radial_derivative(KernelSpec(1), 1.0, 1.0) == pytest.approx(-2 * math.pi * euclidean_kernel(3, 1.0, 1.0))
    spec = KernelSpec(3, 1.0)
    h = 1e-5
    fd = (kernel(spec, 0.5, 0.7 + h) - kernel(spec, 0.5, 0.7 - h)) / (2 * h)
    assert kernel_radial_derivative(spec, 0.5, 0.7) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("kappa", [0.0, 0.7, 1.0])
def test_radial_derivative_matches_finite_differences(n, kappa):
    spec = KernelSpec(n, kappa)
    h = 1e-5
    for t, r in [(0.2, 0.3), (1.0, 1.5), (2.0, 3.0)]:
        fd = (kernel(spec, t, r + h) - kernel(spec, t, r - h)) / (2 * h)
        assert kernel_radial_derivative(spec, t, r) == pytest.approx(fd, rel=1e-6)


# -- radial mass, tails, volumes ------------------------------------------------------------


def test_radial_mass_examples():
    assert radial_mass(3, 0.0, 0, 0.1) == pytest.approx(1 / (4 * math.pi), abs=1e-10)
    assert sphere_volume(2) * radial_mass(3, 1.0, 0, 0.5) == pytest.approx(1.0, abs=1e-9)
    assert radial_mass(2, 0.0, 2, 1.0) == pytest.approx(2 / math.pi, abs=1e-10)


def test_radial_mass_arguments():
    with pytest.raises(DomainError):
        radial_mass(3, 1.0, 1, 0.5)
    with pytest.raises(DomainError):
        radial_mass(3, 0.0, 0, 0.5, R=0.0)


def test_tail_mass():
    full = radial_mass(3, 1.0, 0, 0.05)
    tail = hyperbolic_tail_mass(3, 0.05, 1.0)
    assert 0 < tail < full
    assert hyperbolic_tail_mass(3, 0.01, 2.0) <= hyperbolic_tail_mass(3, 0.01, 1.0)
    assert tail == pytest.approx(full - radial_mass(3, 1.0, 0, 0.05, R=1.0), rel=1e-6)
    with pytest.raises(DomainError):
        hyperbolic_tail_mass(3, 0.3, 1.0)


def test_sphere_volumes():
    assert sphere_volume(0) == 2
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    assert sphere_volume(3) == pytest.approx(2 * math.pi**2)
    for m in range(1, 8):
        assert sphere_volume(m + 1) == pytest.approx(2 * math.pi / m * sphere_volume(m - 1))


# -- small-time coefficients ---------------------------------------------------------------


def test_small_time_k3():
    c = small_time_coefficients(3)
    assert c.a_n == pytest.approx(-1.0, abs=1e-3)
    assert c.b_n == pytest.approx(-1 / 6, abs=1e-3)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_coefficient_relation(n):
    c = small_time_coefficients(n)
    target = -n * (n - 1) / 3
    assert abs(c.a_n + 2 * n * c.b_n - target) <= 1e-3 * abs(target)


def test_small_time_needs_n_two():
    with pytest.raises(DomainError):
        small_time_coefficients(1)


# -- fixed-time profiles ----------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 4])
def test_even_profile_matches_direct(n):
    spec = KernelSpec(n, 1.0)
    r = np.linspace(0.0, 8.0, 41)
    for t in (0.02, 0.7, 5.0):
        profile = kernel_profile(spec, t)
        assert np.allclose(profile(r), kernel(spec, t, r), rtol=1e-9, atol=0)


def test_profile_underflow_gives_zero():
    profile = kernel_profile(KernelSpec(2, 1.0), 5000.0)
    assert np.all(profile(np.array([0.0, 10.0])) == 0.0)


def test_computation_error_is_runtime_error():
    assert issubclass(ComputationError, RuntimeError)
    assert ComputationError("x", 0.5).residual == 0.5
