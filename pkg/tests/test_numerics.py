import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sp_integrate
from scipy import special

from holosim.errors import BracketError, InvalidInputError, NumericalBlowupError
from holosim.numerics import (TimeGrid, angular, bessel_jn, embed, find_root_bracketed,
                              integrate, rk4_step, tensor_product)


@given(st.integers(-5, 5), st.floats(-10, 10, allow_nan=False))
def test_bessel_matches_scipy(order, x):
    assert bessel_jn(order, x) == pytest.approx(special.jv(order, x), abs=1e-12)


@pytest.mark.parametrize("order", [0, 1, 2, 5])
@pytest.mark.parametrize("x", [0.3, 1.58, 1.98, 2.404825557695773, 7.5])
def test_bessel_matches_integral_representation(order, x):
    # J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt
    val, _ = sp_integrate.quad(lambda t: math.cos(order * t - x * math.sin(t)), 0, math.pi,
                               epsabs=1e-13, epsrel=0, limit=200)
    assert bessel_jn(order, x) == pytest.approx(val / math.pi, abs=1e-12)


def test_bessel_special_values():
    assert bessel_jn(0, 0.0) == 1.0
    assert bessel_jn(3, 0.0) == 0.0
    assert abs(bessel_jn(0, 2.404825557695773)) < 1e-14
    assert bessel_jn(-1, 1.2) == pytest.approx(-bessel_jn(1, 1.2), abs=1e-16)


@given(st.integers(1, 4), st.floats(0.1, 10))
def test_bessel_recurrence(n, x):
    lhs = bessel_jn(n - 1, x) + bessel_jn(n + 1, x)
    assert lhs == pytest.approx(2 * n / x * bessel_jn(n, x), abs=1e-11)


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_bessel_rejects_non_finite(bad):
    with pytest.raises(InvalidInputError):
        bessel_jn(1, bad)


def test_bessel_rejects_large_order():
    with pytest.raises(InvalidInputError):
        bessel_jn(6, 1.0)


def test_tensor_product_order_and_embed():
    a = np.array([[0, 1], [1, 0]])
    b = np.diag([1, 2, 3])
    k = tensor_product(a, b)
    assert k.shape == (6, 6)
    # left factor most significant
    assert k[0, 3] == 1 and k[2, 5] == 3
    e = embed(b, 1, (2, 3))
    assert np.allclose(e, np.kron(np.eye(2), b))
    with pytest.raises(InvalidInputError):
        tensor_product(np.array([np.nan]))
    with pytest.raises(InvalidInputError):
        tensor_product()


def test_angular_units():
    assert angular(1000.0) == pytest.approx(2 * math.pi)


def test_time_grid_covering_and_samples():
    g = TimeGrid.covering(10.0, 0.3, samples=5)
    assert g.step <= 0.3
    assert g.n_steps * g.step == pytest.approx(10.0)
    times = g.sample_times()
    assert times[0] == 0.0 and times[-1] == pytest.approx(10.0)
    with pytest.raises(InvalidInputError):
        TimeGrid(0.0, 1.0, 0.3)
    with pytest.raises(InvalidInputError):
        TimeGrid(1.0, 0.0, 0.1)


def _two_level_h(t):
    return np.array([[0.3, 0.8 * np.exp(-1j * 0.7 * t)], [0.8 * np.exp(1j * 0.7 * t), -0.3]])


def test_rk4_fourth_order_convergence():
    y0 = np.array([1.0, 0.0], dtype=complex)
    t_end = 5.0
    ref = sp_integrate.solve_ivp(lambda t, y: -1j * (_two_level_h(t) @ y), (0, t_end), y0,
                                 method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]
    errors = []
    for n in (50, 100, 200):
        y = integrate(lambda t, y: -1j * (_two_level_h(t) @ y), y0, TimeGrid(0.0, t_end, t_end / n))
        errors.append(np.linalg.norm(y - ref))
    orders = [math.log2(errors[k] / errors[k + 1]) for k in range(2)]
    assert all(3.8 < p < 4.2 for p in orders), orders


def test_rk4_step_blowup_and_bad_dt():
    with pytest.raises(NumericalBlowupError), np.errstate(over="ignore", invalid="ignore"):
        rk4_step(lambda t, y: y * 1e308, np.ones(2), 0.0, 10.0)
    with pytest.raises(InvalidInputError):
        rk4_step(lambda t, y: y, np.ones(2), 0.0, 0.0)


def test_integrate_calls_samples_in_order():
    seen = []
    integrate(lambda t, y: 0 * y, np.ones(1), TimeGrid(0.0, 1.0, 0.1, stride=3),
              lambda t, y: seen.append(t))
    assert seen[0] == 0.0 and seen[-1] == pytest.approx(1.0)
    assert len(seen) == 5


@given(st.floats(-3, 3))
def test_find_root_bracketed_cubic(c):
    root = find_root_bracketed(lambda x: x**3 + x - c, -3, 3)
    assert root**3 + root - c == pytest.approx(0, abs=1e-11)


def test_find_root_requires_sign_change():
    with pytest.raises(BracketError):
        find_root_bracketed(lambda x: x * x + 1, -1, 1)
    assert find_root_bracketed(lambda x: x, 0.0, 1.0) == 0.0
