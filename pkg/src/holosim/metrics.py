"""Figures of merit: state and averaged gate fidelities, the trace-overlap
robustness fidelity, robustness scans and the infidelity budget."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .design import (SingleQubitGateSpec, design_conventional_gate,
                     design_single_qubit_gate, ideal_unitary_1q, ideal_unitary_2q)
from .errors import InvalidInputError
from .simulate import (LogicalProcess, effective_propagators, full_model_propagators,
                       simulate_process_1q, simulate_process_cp)

SQ_INPUTS = 1001
CP_INPUTS = 10001
GOLDEN = (1 + math.sqrt(5)) / 2


def state_fidelity(rho, psi) -> float:
    """<psi|rho|psi> for a pure target."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise InvalidInputError(f"dimension mismatch: rho {rho.shape}, psi {psi.shape}")
    value = psi.conj() @ rho @ psi
    if abs(value.imag) > 1e-10:
        raise InvalidInputError(f"fidelity has imaginary part {value.imag:.2e}; rho not Hermitian")
    return float(value.real)


def sq_input_states(n: int = SQ_INPUTS) -> np.ndarray:
    """cos(t)|0> + sin(t)|1> for n angles spread uniformly over [0, 2pi]."""
    theta = np.linspace(0.0, 2 * np.pi, n)
    return np.stack([np.cos(theta), np.sin(theta)], axis=1).astype(complex)


def lattice_generator(n: int) -> int:
    """Generator of a Fibonacci-like rank-1 lattice with n points: the integer
    closest to n/golden coprime with n."""
    base = int(round(n / GOLDEN))
    for step in range(n):
        for cand in (base + step, base - step):
            if 0 < cand < n and math.gcd(cand, n) == 1:
                return cand
    return 1


def torus_lattice(n: int = CP_INPUTS) -> np.ndarray:
    """n points (a_k, b_k) = 2pi (k/n, frac(k z/n)) on [0, 2pi)^2."""
    z = lattice_generator(n)
    k = np.arange(n)
    return 2 * np.pi * np.stack([k / n, (k * z % n) / n], axis=1)


def cp_input_states(n: int = CP_INPUTS) -> np.ndarray:
    """Product states (cos a|0> + sin a|1>) x (cos b|0> + sin b|1>) on a torus lattice."""
    pts = torus_lattice(n)
    q1 = np.stack([np.cos(pts[:, 0]), np.sin(pts[:, 0])], axis=1)
    q2 = np.stack([np.cos(pts[:, 1]), np.sin(pts[:, 1])], axis=1)
    return np.einsum("ni,nj->nij", q1, q2).reshape(n, 4).astype(complex)


def fidelities_over_inputs(process: LogicalProcess, target, inputs, t_index=-1) -> np.ndarray:
    """State fidelity of every input against target @ input."""
    c = np.asarray(inputs, dtype=complex)
    f = c @ np.asarray(target).T
    return np.real(np.einsum("ni,nj,nk,nl,ijkl->n", c, c.conj(), f.conj(), f,
                             process.tensor[t_index]))


def average_fidelity(process: LogicalProcess, target, inputs, t_index=-1) -> float:
    return float(np.mean(fidelities_over_inputs(process, target, inputs, t_index)))


def gate_fidelity_series(process: LogicalProcess, target, inputs) -> np.ndarray:
    """Averaged fidelity to the final target at every sampled time."""
    c = np.asarray(inputs, dtype=complex)
    f = c @ np.asarray(target).T
    # Contract the input average once: S[ijkl] = mean_n c_i c_j* f_k* f_l
    s = np.einsum("ni,nj,nk,nl->ijkl", c, c.conj(), f.conj(), f) / len(c)
    return np.real(np.einsum("ijkl,tijkl->t", s, process.tensor))


def gate_fidelity_1q(schedule, device, target=None, *, inputs: int = SQ_INPUTS,
                     process: LogicalProcess | None = None, **sim) -> float:
    """Average state fidelity over cos(t)|0>_L + sin(t)|1>_L inputs.

    ``sim`` is forwarded to ``simulate_process_1q`` (decoherence, dephasing,
    dt) when no precomputed ``process`` is given.
    """
    if target is None:
        target = ideal_unitary_1q(schedule.spec) if schedule.spec is not None else np.eye(2)
    if process is None:
        process = simulate_process_1q(schedule, device, **sim)
    return average_fidelity(process, target, sq_input_states(inputs))


def gate_fidelity_2q(design, device, spectators=(None, None), *, inputs: int = CP_INPUTS,
                     process: LogicalProcess | None = None, **sim) -> float:
    """Average over product logical inputs on a rank-1 torus lattice."""
    if process is None:
        process = simulate_process_cp(design, device, spectators, **sim)
    return average_fidelity(process, ideal_unitary_2q(design.gamma), cp_input_states(inputs))


def robustness_fidelity(u_ideal, u_perturbed) -> float:
    """Re Tr(U^dagger U') / Re Tr(U^dagger U). Sensitive to global phase by design."""
    u = np.asarray(u_ideal, dtype=complex)
    v = np.asarray(u_perturbed, dtype=complex)
    if u.shape != v.shape:
        raise InvalidInputError("unitaries must have equal shape")
    return float(np.real(np.trace(u.conj().T @ v)) / np.real(np.trace(u.conj().T @ u)))


@dataclass
class RobustnessTable:
    axis: str
    errors: np.ndarray
    f_toc: np.ndarray
    f_conv: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.f_toc - self.f_conv

    def mean_delta(self) -> float:
        return float(np.mean(self.delta))


def robustness_scan(spec: SingleQubitGateSpec, device, axis: str = "drift", grid=None, *,
                    detuning: float = 0.0, beta1: float | None = None,
                    dt: float = 5e-3, model: str = "effective") -> RobustnessTable:
    """Fidelities of the time-optimal and the conventional gate under a
    drift-difference (x g) or coupling-deviation error.

    Both schemes run at the same composite coupling g; each is compared with
    its own error-free propagator. ``model`` picks the effective three-level
    model (default) or the closed full pair.
    """
    if model not in ("effective", "full"):
        raise InvalidInputError("model must be 'effective' or 'full'")
    if grid is None:
        grid = np.linspace(-0.1, 0.1, 41)
    grid = np.asarray(grid, dtype=float)
    toc = design_single_qubit_gate(spec, device, detuning, beta1)
    conv = design_conventional_gate(spec, device, coupling=toc.model.g)
    out = []
    for sched in (toc, conv):
        values = np.concatenate(([0.0], grid))
        if model == "effective":
            us = effective_propagators(sched, values, axis, dt)
        else:
            us = full_model_propagators(sched, device, values, axis, dt)
        out.append(np.array([robustness_fidelity(us[0], u) for u in us[1:]]))
    return RobustnessTable(axis, grid, out[0], out[1])


@dataclass
class InfidelityBudget:
    """Split of 1 - F into decoherence, rotating-wave (high-order) and residual parts."""

    decoherence: float
    high_order: float
    residual: float

    @property
    def total(self) -> float:
        return self.decoherence + self.high_order + self.residual

    def clamped(self):
        return {k: max(v, 0.0) for k, v in asdict(self).items()}


def infidelity_budget(f_open: float, f_closed: float, f_effective: float = 1.0) -> InfidelityBudget:
    """decoherence = F_closed - F_open, high-order = F_effective - F_closed,
    residual = 1 - F_effective (error of the effective model itself)."""
    return InfidelityBudget(f_closed - f_open, f_effective - f_closed, 1.0 - f_effective)


@dataclass
class GateReport:
    """Per-gate summary written as JSON by the experiment runner."""

    name: str
    schedule: dict
    ideal_unitary: np.ndarray
    state_fidelities: dict = field(default_factory=dict)
    gate_fidelity: float | None = None
    budget: InfidelityBudget | None = None
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        u = np.asarray(self.ideal_unitary)
        return {
            "name": self.name,
            "schedule": self.schedule,
            "ideal_unitary": {"real": u.real.tolist(), "imag": u.imag.tolist()},
            "state_fidelities": dict(self.state_fidelities),
            "gate_fidelity": self.gate_fidelity,
            "budget": None if self.budget is None else self.budget.clamped(),
            "budget_raw": None if self.budget is None else asdict(self.budget),
            "wall_clock_s": self.wall_clock,
            **self.extra,
        }


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def fit_rabi_rate(times, population, amplitude: float, guess: float, span: float = 0.2,
                  points: int = 401) -> float:
    """Least-squares rate w (rad/ns) of amplitude * sin^2(w t) through sampled
    populations. Fast counter-rotating wiggles average out of the fit.

    Scans w over guess * [1 - span, 1 + span] and refines the best point with
    a parabola through its neighbours.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(population, dtype=float)
    rates = guess * np.linspace(1 - span, 1 + span, points)
    cost = np.array([np.sum((p - amplitude * np.sin(w * t) ** 2) ** 2) for w in rates])
    k = int(np.argmin(cost))
    if k in (0, points - 1):
        raise InvalidInputError("Rabi rate outside the scanned window; widen span")
    c0, c1, c2 = cost[k - 1:k + 2]
    h = rates[1] - rates[0]
    denom = c0 - 2 * c1 + c2
    return float(rates[k] + (0.5 * h * (c0 - c2) / denom if denom > 0 else 0.0))
