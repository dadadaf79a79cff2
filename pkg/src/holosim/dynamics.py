"""Fixed-step RK4 propagation of states, propagators and density matrices.

Hamiltonians are callables t -> (D, D) complex array in rad/ns. Density
matrices may carry leading batch axes; every generator acts on the last two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, StepSizeError
from .numerics import TimeGrid, integrate

NORM_TOL = 1e-6


class CachedHamiltonian:
    """Memoizes the last few evaluations: RK4 asks for the midpoint twice and
    the end point again at the start of the next step."""

    def __init__(self, hamiltonian, size: int = 3):
        self.hamiltonian = hamiltonian
        self.size = size
        self._cache = {}

    def __call__(self, t):
        h = self._cache.get(t)
        if h is None:
            h = self.hamiltonian(t)
            if len(self._cache) >= self.size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[t] = h
        return h


@dataclass
class EvolutionResult:
    """Sampled output of one propagation.

    ``populations`` maps labels to arrays over ``times``; ``leakage`` is
    everything outside the labelled states. ``final_state`` is a density
    matrix (or a batch of operators for process runs).
    """

    times: np.ndarray
    populations: dict = field(default_factory=dict)
    fidelity: np.ndarray | None = None
    final_state: np.ndarray | None = None
    final_vector: np.ndarray | None = None
    propagator: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _as_frame(frame):
    return (lambda t: None) if frame is None else frame


class _Recorder:
    """Collects populations and fidelity at sample points, in an optional
    rotating frame V(t) (the state is reported as V rho V^dagger)."""

    def __init__(self, labels, target, frame, vector: bool):
        self.labels = labels or {}
        self.target = None if target is None else np.asarray(target, dtype=complex)
        self.frame = _as_frame(frame)
        self.vector = vector
        self.times = []
        self.pops = {k: [] for k in self.labels}
        if self.labels:
            self.pops["leakage"] = []
        self.fid = []

    def _populations(self, x):
        if self.vector:
            return np.abs(x) ** 2
        return np.real(np.diagonal(x, axis1=-2, axis2=-1))

    def __call__(self, t, x):
        v = self.frame(t)
        if v is not None:
            x = v @ x if self.vector else v @ x @ v.conj().T
        self.times.append(t)
        if self.labels:
            diag = self._populations(x)
            total = diag.sum(axis=-1)
            used = 0.0
            for label, idx in self.labels.items():
                p = diag[..., np.atleast_1d(idx)].sum(axis=-1)
                self.pops[label].append(p)
                used = used + p
            self.pops["leakage"].append(total - used)
        if self.target is not None:
            f = self.target
            if self.vector:
                self.fid.append(np.abs(np.vdot(f, x)) ** 2)
            else:
                self.fid.append(np.real(f.conj() @ x @ f))

    def result(self, **kw):
        return EvolutionResult(
            times=np.array(self.times),
            populations={k: np.array(v) for k, v in self.pops.items()},
            fidelity=np.array(self.fid) if self.target is not None else None,
            **kw)


def evolve_unitary(hamiltonian, psi0, grid: TimeGrid, *, labels=None, target=None,
                   frame=None, full_propagator: bool = False, model=None) -> EvolutionResult:
    """Integrate d psi/dt = -i H(t) psi.

    With ``full_propagator`` the identity is propagated alongside and
    returned as ``result.propagator``. Passing the effective ``model`` adds
    the precession angle xi(t) and mixing angle chi to the diagnostics.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise InvalidInputError("initial state must be normalized")
    h = CachedHamiltonian(hamiltonian)
    dim = psi0.shape[0]
    cols = 1 + (dim if full_propagator else 0)
    state = np.zeros((dim, cols), dtype=complex)
    state[:, 0] = psi0
    if full_propagator:
        state[:, 1:] = np.eye(dim)

    def gen(t, y):
        return -1j * (h(t) @ y)

    rec = _Recorder(labels, target, frame, vector=True)
    norms = []

    def on_sample(t, y):
        n = np.linalg.norm(y[:, 0])
        norms.append(n)
        if abs(n - 1) > NORM_TOL:
            raise StepSizeError(f"norm drifted to {n:.9f} at t={t:.4g} ns; reduce dt")
        rec(t, y[:, 0])

    final = integrate(gen, state, grid, on_sample)
    kw = {"final_vector": final[:, 0],
          "final_state": np.outer(final[:, 0], final[:, 0].conj())}
    if full_propagator:
        u = final[:, 1:]
        if np.linalg.norm(u.conj().T @ u - np.eye(dim)) > 1e-8:
            raise StepSizeError("propagator lost unitarity; reduce dt")
        kw["propagator"] = u
    diag = {"norm": np.array(norms)}
    if model is not None:
        diag["chi"] = model.mixing()
        diag["xi"] = model.precession_rate() * np.array(rec.times)
    return rec.result(diagnostics=diag, **kw)


def propagator(hamiltonian, tau: float, dt: float) -> np.ndarray:
    """U(tau, 0) of a closed system, integrated column by column with RK4."""
    probe = np.asarray(hamiltonian(0.0))
    dim = probe.shape[0]
    if tau == 0:
        return np.eye(dim, dtype=complex)
    grid = TimeGrid.covering(tau, dt)
    h = CachedHamiltonian(hamiltonian)
    u = integrate(lambda t, y: -1j * (h(t) @ y), np.eye(dim, dtype=complex), grid)
    if np.linalg.norm(u.conj().T @ u - np.eye(dim)) > 1e-8:
        raise StepSizeError("propagator lost unitarity; reduce dt")
    return u


def _is_diagonal(op) -> bool:
    return np.count_nonzero(op - np.diag(np.diagonal(op))) == 0


class LindbladGenerator:
    """Right-hand side of the Lindblad equation acting on (..., D, D).

    Jump operators are split into diagonal ones, whose sandwich L X L^dagger
    is an elementwise product, and general ones. ``elementwise`` adds an
    extra term W * X (broadcast over batch axes) for dissipators that are
    diagonal in the basis, e.g. those coming from frozen spectators.
    """

    def __init__(self, hamiltonian, collapse_ops=(), elementwise=None):
        self.h = CachedHamiltonian(hamiltonian)
        ops = [np.asarray(L, dtype=complex) for L in collapse_ops if np.any(L)]
        probe = np.asarray(hamiltonian(0.0))
        dim = probe.shape[0]
        self.dense = [(L, L.conj().T) for L in ops if not _is_diagonal(L)]
        diag_ops = [np.diagonal(L) for L in ops if _is_diagonal(L)]
        w = np.zeros((dim, dim), dtype=complex)
        for l in diag_ops:
            w += np.outer(l, l.conj())
        gamma = sum((L.conj().T @ L for L in ops), np.zeros((dim, dim), dtype=complex))
        self.half_gamma = 0.5 * gamma
        if elementwise is not None:
            w = w + np.asarray(elementwise)
        self.w = w if np.any(w) else None

    def __call__(self, t, x):
        heff = self.h(t) - 1j * self.half_gamma
        out = -1j * (heff @ x - x @ heff.conj().T)
        for L, Ld in self.dense:
            out += L @ x @ Ld
        if self.w is not None:
            out += self.w * x
        return out


def check_density_matrix(rho, t=None, trace: bool = True):
    """Raise StepSizeError when rho breaks trace, Hermiticity or positivity bounds."""
    where = "" if t is None else f" at t={t:.4g} ns"
    herm = np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2)))
    if herm > 1e-10:
        raise StepSizeError(f"density matrix lost Hermiticity ({herm:.2e}){where}")
    if trace:
        tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
        if np.max(np.abs(tr - 1)) > 1e-8:
            raise StepSizeError(f"trace drifted to {tr}{where}")
    herm_part = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
    low = np.min(np.linalg.eigvalsh(herm_part))
    if low < -1e-8:
        raise StepSizeError(f"density matrix lost positivity (eigenvalue {low:.2e}){where}")


def evolve_lindblad(hamiltonian, collapse_ops, rho0, grid: TimeGrid, *, labels=None,
                    target=None, frame=None, elementwise=None, on_sample=None,
                    check: bool = True) -> EvolutionResult:
    """Integrate the Lindblad master equation for rho0 (or a batch of operators).

    With ``check`` each sample is verified to be a valid density matrix.
    ``on_sample(t, x)`` receives the raw (lab-frame) state at every sample.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if check:
        check_density_matrix(rho0)
    gen = LindbladGenerator(hamiltonian, collapse_ops, elementwise)
    rec = _Recorder(labels, target, frame, vector=False)

    def sample(t, x):
        if check:
            check_density_matrix(x, t)
        if on_sample is not None:
            on_sample(t, x)
        if labels or target is not None:
            rec(t, x)
        else:
            rec.times.append(t)

    final = integrate(gen, rho0, grid, sample)
    return rec.result(final_state=final)
