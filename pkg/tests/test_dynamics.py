import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from conftest import random_unitary
from holosim.dynamics import (CachedHamiltonian, LindbladGenerator, check_density_matrix,
                              evolve_lindblad, evolve_unitary, propagator)
from holosim.effective import EffectiveThreeLevel, effective_hamiltonian_1q
from holosim.errors import InvalidInputError, StepSizeError
from holosim.numerics import TimeGrid
from holosim.simulate import simulate_state_1q


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def test_cached_hamiltonian_reuses_values():
    calls = []

    def h(t):
        calls.append(t)
        return np.eye(2) * t

    cached = CachedHamiltonian(h, size=2)
    cached(0.1), cached(0.1), cached(0.2), cached(0.3), cached(0.1)
    assert calls == [0.1, 0.2, 0.3, 0.1]


def test_amplitude_damping():
    rate = 0.3
    lower = np.array([[0, 1], [0, 0]], dtype=complex) * math.sqrt(rate)
    rho0 = np.diag([0, 1]).astype(complex)
    res = evolve_lindblad(lambda t: np.zeros((2, 2)), [lower], rho0, TimeGrid.covering(5, 1e-2, samples=10),
                          labels={"g": 0, "e": 1})
    assert np.allclose(res.populations["e"], np.exp(-rate * res.times), atol=1e-9)
    assert np.allclose(res.populations["leakage"], 0, atol=1e-12)


def test_pure_dephasing_kills_coherence():
    rate = 0.2
    lz = np.diag([1, -1]).astype(complex) * math.sqrt(rate / 2)
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    res = evolve_lindblad(lambda t: np.zeros((2, 2)), [lz], rho0, TimeGrid(0, 3, 1e-2))
    assert res.final_state[0, 1] == pytest.approx(0.5 * math.exp(-rate * 3), abs=1e-10)


def test_zero_rates_match_unitary():
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 4)
    psi = random_unitary(rng, 4)[:, 0]
    rho0 = np.outer(psi, psi.conj())
    res = evolve_lindblad(lambda t: h, [np.zeros((4, 4))], rho0, TimeGrid(0, 2, 1e-3))
    u = expm(-1j * h * 2)
    assert np.allclose(res.final_state, u @ rho0 @ u.conj().T, atol=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_propagator_matches_matrix_exponential(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 3)
    assert np.allclose(propagator(lambda t: h, 1.7, 1e-3), expm(-1j * h * 1.7), atol=1e-10)


def test_time_dependent_propagator_matches_reference_solver():
    model = EffectiveThreeLevel(3.0, 4.0, detuning=10.0, chirp=6.0, phase0=0.2)

    def h(t):
        return effective_hamiltonian_1q(model, t)

    tau = 40.0
    u = propagator(h, tau, 2e-3)
    ref = solve_ivp(lambda t, y: -1j * (h(t) @ y), (0, tau), np.eye(3, dtype=complex)[:, 0],
                    method="DOP853", rtol=1e-12, atol=1e-12)
    assert np.allclose(u[:, 0], ref.y[:, -1], atol=1e-9)


def test_propagator_at_zero_time():
    assert np.array_equal(propagator(lambda t: np.ones((2, 2)), 0.0, 1e-3), np.eye(2))


def test_evolve_unitary_outputs():
    model = EffectiveThreeLevel(3.0, 4.0)
    psi0 = np.array([1, 0, 0], dtype=complex)
    res = evolve_unitary(lambda t: effective_hamiltonian_1q(model, t), psi0, TimeGrid.covering(10, 1e-3, samples=4),
                         labels={"b": 0, "a": 2}, target=psi0, full_propagator=True, model=model)
    assert len(res.times) == 5
    assert np.allclose(res.populations["b"] + res.populations["a"], 1, atol=1e-12)
    assert np.allclose(res.fidelity, res.populations["b"])
    assert np.allclose(res.propagator[:, 0], res.final_vector)
    assert res.diagnostics["xi"][-1] == pytest.approx(model.precession_rate() * 10)
    with pytest.raises(InvalidInputError):
        evolve_unitary(lambda t: np.zeros((2, 2)), np.array([1, 1]), TimeGrid(0, 1, 0.1))


def test_norm_drift_raises():
    h = np.diag([0.0, 400.0]).astype(complex)
    psi0 = np.array([1, 1], dtype=complex) / math.sqrt(2)
    with pytest.raises(StepSizeError):
        evolve_unitary(lambda t: h, psi0, TimeGrid(0, 1, 1e-2))


def test_check_density_matrix():
    check_density_matrix(np.diag([0.3, 0.7]).astype(complex))
    with pytest.raises(StepSizeError):
        check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(StepSizeError):
        check_density_matrix(np.diag([0.3, 0.6]))
    with pytest.raises(StepSizeError):
        check_density_matrix(np.diag([1.2, -0.2]))
    check_density_matrix(np.diag([0.3, 0.6]), trace=False)


def test_lindblad_generator_splits_diagonal_operators():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 3)
    ops = [np.diag([0.1, 0.2, 0.3]).astype(complex), np.triu(rng.normal(size=(3, 3)), 1) * 0.2]
    x = random_hermitian(rng, 3)
    gen = LindbladGenerator(lambda t: h, ops)
    expected = -1j * (h @ x - x @ h)
    for L in ops:
        Ld = L.conj().T
        expected += L @ x @ Ld - 0.5 * (Ld @ L @ x + x @ Ld @ L)
    assert np.allclose(gen(0.0, x), expected, atol=1e-13)
    assert len(gen.dense) == 1


def test_lindblad_preserves_trace_and_positivity():
    rng = np.random.default_rng(11)
    h = random_hermitian(rng, 4)
    ops = [np.triu(rng.normal(size=(4, 4)), 1) * 0.3, np.diag(rng.normal(size=4)) * 0.2]
    psi = random_unitary(rng, 4)[:, 0]
    # check=True verifies trace, Hermiticity and positivity at every sample
    res = evolve_lindblad(lambda t: h, ops, np.outer(psi, psi.conj()), TimeGrid.covering(5, 1e-3, samples=50))
    assert np.trace(res.final_state).real == pytest.approx(1.0, abs=1e-10)


def test_step_halving_changes_rz_fidelity_little(rz_schedule, sq_pair):
    psi = np.array([1, 1], dtype=complex) / math.sqrt(2)
    coarse = simulate_state_1q(rz_schedule, sq_pair, psi, dt=1e-3, samples=2).fidelity[-1]
    fine = simulate_state_1q(rz_schedule, sq_pair, psi, dt=5e-4, samples=2).fidelity[-1]
    assert abs(coarse - fine) < 1e-5
