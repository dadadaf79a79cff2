"""Full-device simulation of designed gates.

Results are reported in the design frame: a slow diagonal rotation that
removes the detuning energies the effective model keeps. For resonant gates
the frame is the identity.

Logical processes are obtained by propagating the operator basis |i><j| of
the logical subspace. Because the Lindblad map is linear, every input state
and every fidelity average follows from these few runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .design import CpGateDesign, PulseSchedule, ideal_unitary_1q, ideal_unitary_2q
from .device import (CP_PAIR_LEVELS, CP_SPECTATOR_LEVELS, DrivenPair, PairHamiltonian,
                     TransmonSpec, collapse_operators, lowering)
from .dynamics import CachedHamiltonian, EvolutionResult, check_density_matrix, evolve_lindblad
from .errors import InvalidInputError, StepSizeError
from .numerics import TimeGrid, angular, integrate

SQ_LABELS = ("0", "1")
CP_LABELS = ("00", "01", "10", "11")
DEFAULT_DT = 1e-3  # ns


@dataclass
class LogicalProcess:
    """Sampled action of a noisy gate on the logical subspace.

    ``tensor[t, i, j, k, l] = <k| E_t(|i><j|) |l>`` in the design frame,
    ``auxiliary[t, i, j]`` is the same for the auxiliary state, and
    ``trace[t, i, j]`` the full trace of E_t(|i><j|).
    """

    times: np.ndarray
    tensor: np.ndarray
    auxiliary: np.ndarray
    trace: np.ndarray
    labels: tuple

    @property
    def dim(self) -> int:
        return len(self.labels)

    def output(self, coeffs, t_index=-1):
        """Logical block of the output density matrix for input amplitudes."""
        c = np.asarray(coeffs, dtype=complex)
        return np.einsum("i,j,ijkl->kl", c, c.conj(), self.tensor[t_index])

    def state_fidelity(self, coeffs, target, t_index=-1) -> float:
        f = np.asarray(target, dtype=complex)
        return float(np.real(f.conj() @ self.output(coeffs, t_index) @ f))

    def fidelity_series(self, coeffs, target):
        c = np.asarray(coeffs, dtype=complex)
        f = np.asarray(target, dtype=complex)
        return np.real(np.einsum("i,j,k,l,tijkl->t", c, c.conj(), f.conj(), f, self.tensor))

    def populations(self, coeffs):
        """Label -> population series, plus 'a' (auxiliary) and 'leakage'."""
        c = np.asarray(coeffs, dtype=complex)
        cc = np.outer(c, c.conj())
        out = {}
        total = np.real(np.einsum("ij,tij->t", cc, self.trace))
        used = np.zeros_like(total)
        for k, label in enumerate(self.labels):
            p = np.real(np.einsum("ij,tij->t", cc, self.tensor[:, :, :, k, k]))
            out[label] = p
            used += p
        out["a"] = np.real(np.einsum("ij,tij->t", cc, self.auxiliary))
        out["leakage"] = total - used - out["a"]
        return out


def single_qubit_pair(left: TransmonSpec, right: TransmonSpec, coupling: float,
                      schedule: PulseSchedule | None = None, levels: int | None = None) -> DrivenPair:
    """Pair hosting one logical qubit; the left transmon is modulated."""
    pair = DrivenPair(left, right, coupling, "left")
    if levels is not None:
        pair = pair.with_levels(levels)
    if schedule is not None:
        pair = pair.with_tones(schedule.tones)
    return pair


def cp_pair(middle_left: TransmonSpec, middle_right: TransmonSpec, coupling: float,
            levels: int | None = None) -> DrivenPair:
    """Middle pair of the two-qubit register; the right transmon is modulated."""
    pair = DrivenPair(middle_left, middle_right, coupling, "right")
    return pair if levels is None else pair.with_levels(levels)


def _logical_vectors_1q(pair: DrivenPair):
    vecs = np.zeros((2, pair.dim), dtype=complex)
    vecs[0, pair.index(0, 2)] = 1
    vecs[1, pair.index(2, 0)] = 1
    return vecs


def design_frame_1q(schedule: PulseSchedule, pair: DrivenPair):
    """V(t) = exp(i Delta t/2 (P+ - Pa)) on the pair, or None when Delta = 0."""
    if schedule.detuning == 0:
        return None
    model = schedule.model
    c, s = math.cos(model.theta / 2), math.sin(model.theta / 2)
    logical = _logical_vectors_1q(pair)
    bright = c * np.exp(1j * model.phi) * logical[0] + s * logical[1]
    p_bright = np.outer(bright, bright.conj())
    p_aux = np.zeros((pair.dim, pair.dim), dtype=complex)
    ia = pair.index(1, 1)
    p_aux[ia, ia] = 1
    rate = 0.5 * angular(schedule.detuning)
    eye = np.eye(pair.dim, dtype=complex)

    def frame(t):
        return eye + (np.exp(1j * rate * t) - 1) * p_bright + (np.exp(-1j * rate * t) - 1) * p_aux

    return frame


def design_frame_cp(design: CpGateDesign, pair: DrivenPair):
    """Diagonal frame removing the Delta' split of |02>, |11> and the ladder
    split of |22>, |13> on the middle pair."""
    k = np.zeros(pair.dim)
    k[pair.index(0, 2)] += 0.5 * angular(design.detuning)
    k[pair.index(1, 1)] -= 0.5 * angular(design.detuning)
    ladder = angular(design.ladder_detuning)
    k[pair.index(2, 2)] -= 0.5 * ladder
    k[pair.index(1, 3)] += 0.5 * ladder

    def frame(t):
        return np.diag(np.exp(1j * k * t))

    return frame


def _grid(duration, dt, samples):
    return TimeGrid.covering(duration, dt, samples=samples)


def simulate_state_1q(schedule: PulseSchedule, pair: DrivenPair, psi_logical,
                      *, decoherence: bool = True, dephasing: str = "collective",
                      dt: float = DEFAULT_DT, samples: int = 200) -> EvolutionResult:
    """Lindblad run of one logical input state; fidelity against the ideal
    gate output, populations of |0>_L, |1>_L, |a> and leakage."""
    pair = pair.with_tones(schedule.tones)
    logical = _logical_vectors_1q(pair)
    psi = np.asarray(psi_logical, dtype=complex) @ logical
    target = (ideal_unitary_1q(schedule.spec) @ np.asarray(psi_logical, dtype=complex)) @ logical
    h = PairHamiltonian(pair, schedule.tone_segments())
    ops = collapse_operators(pair, dephasing) if decoherence else []
    labels = {"0": pair.index(0, 2), "1": pair.index(2, 0), "a": pair.index(1, 1)}
    return evolve_lindblad(h, ops, np.outer(psi, psi.conj()), _grid(schedule.duration, dt, samples),
                           labels=labels, target=target, frame=design_frame_1q(schedule, pair))


def _process_from_blocks(times, blocks, vectors, aux_index, labels, same_label_only=False):
    """Project sampled operator blocks onto logical vectors.

    ``blocks[t, i, j]`` is the evolved |i><j| (design frame). With
    ``same_label_only`` only k = i, l = j survive (orthogonal spectators).
    """
    n = len(labels)
    # <k| X |l> for every block
    proj = np.einsum("ka,tijab,lb->tijkl", vectors.conj(), blocks, vectors)
    aux = blocks[:, :, :, aux_index, aux_index]
    tr = np.trace(blocks, axis1=-2, axis2=-1)
    if same_label_only:
        eye = np.eye(n)
        proj = proj * np.einsum("ik,jl->ijkl", eye, eye)[None]
        aux = aux * eye[None]
        tr = tr * eye[None]
    return LogicalProcess(np.asarray(times), proj, aux, tr, tuple(labels))


def _run_blocks(h, ops, x0, grid, frame, elementwise=None, diagonal_index=None):
    """Propagate a batch of operator blocks, storing design-frame samples."""
    times, samples = [], []

    def on_sample(t, x):
        if diagonal_index is not None:
            for i in diagonal_index:
                check_density_matrix(x[i], t, trace=False)
        v = frame(t) if frame is not None else None
        samples.append(x if v is None else v @ x @ v.conj().T)
        times.append(t)

    evolve_lindblad(h, ops, x0, grid, elementwise=elementwise, on_sample=on_sample, check=False)
    return np.array(times), np.array(samples)


def simulate_process_1q(schedule: PulseSchedule, pair: DrivenPair, *, decoherence: bool = True,
                        dephasing: str = "collective", dt: float = DEFAULT_DT,
                        samples: int = 100) -> LogicalProcess:
    """Noisy logical process of a single-qubit gate on the full pair."""
    pair = pair.with_tones(schedule.tones)
    logical = _logical_vectors_1q(pair)
    if schedule.duration == 0:
        blocks = np.einsum("ia,jb->ijab", logical, logical.conj())[None]
        return _process_from_blocks([0.0], blocks, logical, pair.index(1, 1), SQ_LABELS)
    x0 = np.einsum("ia,jb->ijab", logical, logical.conj()).reshape(4, pair.dim, pair.dim)
    h = PairHamiltonian(pair, schedule.tone_segments())
    ops = collapse_operators(pair, dephasing) if decoherence else []
    times, xs = _run_blocks(h, ops, x0, _grid(schedule.duration, dt, samples),
                            design_frame_1q(schedule, pair), diagonal_index=(0, 3))
    for x in xs[:, (0, 3)]:
        tr = np.real(np.trace(x, axis1=-2, axis2=-1))
        if np.max(np.abs(tr - 1)) > 1e-8:
            raise StepSizeError("trace of a logical input drifted; reduce dt")
    blocks = xs.reshape(len(times), 2, 2, pair.dim, pair.dim)
    return _process_from_blocks(times, blocks, logical, pair.index(1, 1), SQ_LABELS)


def spectator_elementwise(pair: DrivenPair, spectators, labels, dephasing: str):
    """Per-block elementwise generator from the frozen outer transmons.

    Spectator j sits in Fock level a_i (a_j) on the ket (bra) side of block
    (i, j). Its relaxation removes the no-jump weight at rate
    Gamma_1 (a_i + a_j)/2; its dephasing adds -Gamma_phi (a_i - a_j)^2 / 2 and,
    for collective dephasing shared with its partner in the middle pair,
    the cross term sqrt(Gamma_phi,s Gamma_phi,p)(a_i - a_j)(n_p(l) - n_p(k)).
    """
    d_l, d_r = pair.dims
    n_left = np.repeat(np.arange(d_l), d_r).astype(float)
    n_right = np.tile(np.arange(d_r), d_l).astype(float)
    partners = (pair.left, pair.right)
    partner_numbers = (n_left, n_right)
    out = np.zeros((len(labels), len(labels), pair.dim, pair.dim), dtype=complex)
    for i, li in enumerate(labels):
        for j, lj in enumerate(labels):
            e = np.zeros((pair.dim, pair.dim))
            for side, spec in enumerate(spectators):
                if spec is None:
                    continue
                ai = CP_SPECTATOR_LEVELS[li][side]
                aj = CP_SPECTATOR_LEVELS[lj][side]
                g1, gp = angular(spec.decay), angular(spec.dephasing)
                e = e - 0.5 * g1 * (ai + aj) - 0.5 * gp * (ai - aj) ** 2
                if dephasing == "collective" and ai != aj:
                    partner_gp = angular(partners[side].dephasing)
                    n_p = partner_numbers[side]
                    e = e + math.sqrt(gp * partner_gp) * (ai - aj) * (n_p[None, :] - n_p[:, None])
            out[i, j] = e
    return out


def _logical_vectors_cp(pair: DrivenPair):
    vecs = np.zeros((4, pair.dim), dtype=complex)
    for k, label in enumerate(CP_LABELS):
        vecs[k, pair.index(*CP_PAIR_LEVELS[label])] = 1
    return vecs


def simulate_process_cp(design: CpGateDesign, pair: DrivenPair, spectators=(None, None), *,
                        decoherence: bool = True, dephasing: str = "collective",
                        dt: float = DEFAULT_DT, samples: int = 100) -> LogicalProcess:
    """Noisy logical process of the controlled-phase gate.

    The middle pair is simulated in full; the outer transmons
    ``spectators = (T1, T4)`` stay in their Fock states and enter through
    ``spectator_elementwise`` (pass None to ignore one).
    """
    sched = design.schedule
    pair = pair.with_tones(sched.tones)
    logical = _logical_vectors_cp(pair)
    n = len(CP_LABELS)
    x0 = np.einsum("ia,jb->ijab", logical, logical.conj()).reshape(n * n, pair.dim, pair.dim)
    h = PairHamiltonian(pair, sched.tone_segments())
    if decoherence:
        # The middle transmons belong to different encoded pairs, so their
        # own dephasing channels are separate; correlations with their
        # partners are carried by the spectator term.
        ops = collapse_operators(pair, "independent")
        elem = spectator_elementwise(pair, spectators, CP_LABELS, dephasing).reshape(
            n * n, pair.dim, pair.dim)
    else:
        ops, elem = [], None
    diag_idx = [i * n + i for i in range(n)]
    times, xs = _run_blocks(h, ops, x0, _grid(design.duration, dt, samples),
                            design_frame_cp(design, pair), elementwise=elem,
                            diagonal_index=diag_idx)
    blocks = xs.reshape(len(times), n, n, pair.dim, pair.dim)
    return _process_from_blocks(times, blocks, logical, pair.index(1, 1), CP_LABELS,
                                same_label_only=True)


class _ProductLindblad:
    """Lindblad generator on a product of sites with local jump operators.

    The state has shape (*dims, *dims). Dephasing-type operators that are
    diagonal in the product basis are folded into an elementwise factor.
    """

    def __init__(self, dims, hamiltonian, h_site, jumps, diag_jumps):
        self.dims = tuple(dims)
        self.nsite = len(dims)
        self.h = hamiltonian
        self.h_site = h_site
        self.jumps = [(site, np.asarray(op, dtype=complex)) for site, op in jumps]
        total = int(np.prod(dims))
        gamma = np.zeros(total)
        w = np.zeros((total, total))
        for site, op in self.jumps:
            g = np.real(np.diagonal(op.conj().T @ op))
            gamma += _broadcast_site(g, site, dims)
        for vec in diag_jumps:
            v = np.asarray(vec, dtype=float)
            gamma += v * v
            w += np.outer(v, v)
        shape = self.dims * 2
        self.decay = (-0.5 * (gamma[:, None] + gamma[None, :])).reshape(shape)
        self.w = w.reshape(shape)

    def _left(self, op, site, x):
        y = np.tensordot(op, x, axes=([1], [site]))
        return np.moveaxis(y, 0, site)

    def _right(self, x, op, site):
        # x @ op^dagger on the bra index of ``site``
        ax = self.nsite + site
        y = np.tensordot(x, op.conj(), axes=([ax], [1]))
        return np.moveaxis(y, -1, ax)

    def __call__(self, t, x):
        h = self.h(t)
        out = -1j * (self._left(h, self.h_site, x) - self._right(x, h, self.h_site))
        out += (self.decay + self.w) * x
        for site, op in self.jumps:
            out += self._right(self._left(op, site, x), op, site)
        return out


def _broadcast_site(vec, site, dims):
    mats = [np.ones(d) for d in dims]
    mats[site] = vec
    out = mats[0]
    for m in mats[1:]:
        out = np.multiply.outer(out, m).ravel()
    return out


def simulate_cp_four_transmon(design: CpGateDesign, pair: DrivenPair, outer_left: TransmonSpec,
                              outer_right: TransmonSpec, coeffs, *, dephasing: str = "collective",
                              decoherence: bool = True, dt: float = 2e-3, samples: int = 50):
    """Direct Lindblad run on all four transmons for one input state.

    Sites are (T1, middle pair, T4); returns (times, fidelity series).
    """
    sched = design.schedule
    pair = pair.with_tones(sched.tones)
    d1, d4 = outer_left.levels, outer_right.levels
    dims = (d1, pair.dim, d4)
    total = d1 * pair.dim * d4
    h = PairHamiltonian(pair, sched.tone_segments())
    jumps, diag = [], []
    if decoherence:
        jumps.append((0, math.sqrt(angular(outer_left.decay)) * lowering(d1)))
        jumps.append((2, math.sqrt(angular(outer_right.decay)) * lowering(d4)))
        d_l, d_r = pair.dims
        jumps.append((1, math.sqrt(angular(pair.left.decay))
                      * np.kron(lowering(d_l), np.eye(d_r))))
        jumps.append((1, math.sqrt(angular(pair.right.decay))
                      * np.kron(np.eye(d_l), lowering(d_r))))
        n1 = _broadcast_site(np.arange(d1, dtype=float), 0, dims)
        n4 = _broadcast_site(np.arange(d4, dtype=float), 2, dims)
        n2 = _broadcast_site(np.repeat(np.arange(d_l), d_r).astype(float), 1, dims)
        n3 = _broadcast_site(np.tile(np.arange(d_r), d_l).astype(float), 1, dims)
        r = [math.sqrt(angular(s.dephasing)) for s in (outer_left, pair.left, pair.right, outer_right)]
        if dephasing == "collective":
            diag += [r[0] * n1 + r[1] * n2, r[2] * n3 + r[3] * n4]
        elif dephasing == "independent":
            diag += [r[0] * n1, r[1] * n2, r[2] * n3, r[3] * n4]
        else:
            raise InvalidInputError(f"unknown dephasing model {dephasing!r}")
    gen = _ProductLindblad(dims, h, 1, [j for j in jumps if np.any(j[1])], diag)

    logical = np.zeros((4, total), dtype=complex)
    for k, label in enumerate(CP_LABELS):
        a, b = CP_SPECTATOR_LEVELS[label]
        idx = (a * pair.dim + pair.index(*CP_PAIR_LEVELS[label])) * d4 + b
        logical[k, idx] = 1
    c = np.asarray(coeffs, dtype=complex)
    psi = c @ logical
    target = (ideal_unitary_2q(design.gamma) @ c) @ logical
    rho0 = np.outer(psi, psi.conj()).reshape(dims * 2)
    pair_frame = design_frame_cp(design, pair)
    times, fids = [], []

    def on_sample(t, x):
        v = np.diagonal(pair_frame(t))
        phase = _broadcast_site(v, 1, dims)
        rho = x.reshape(total, total)
        rho_d = phase[:, None] * rho * phase.conj()[None, :]
        check_density_matrix(rho, t)
        times.append(t)
        fids.append(float(np.real(target.conj() @ rho_d @ target)))

    integrate(gen, rho0, _grid(design.duration, dt, samples), on_sample)
    return np.array(times), np.array(fids)


def _effective_generators(schedule: PulseSchedule, axis: str):
    """H0(t) and dH(t) (rad/ns) with H = H0 + x dH for error value x.

    ``drift``: x is delta_d in units of g; ``coupling``: x is the relative
    coupling deviation.
    """
    from .effective import dressed_frame, effective_hamiltonian_1q

    model0 = schedule.model
    frame = dressed_frame(model0.theta, model0.phi, model0.role)
    drift_op = frame.to_dressed(np.diag([-1.0, 1.0, 0.0]).astype(complex)) * angular(model0.g)

    def h0(t):
        return effective_hamiltonian_1q(schedule.model_at(t), t)

    def dh(t):
        if axis == "drift":
            return drift_op
        m = schedule.model_at(t)
        out = np.zeros((3, 3), dtype=complex)
        out[0, 2] = angular(m.g) * np.exp(-1j * m.coupling_phase(t))
        out[2, 0] = np.conj(out[0, 2])
        return out

    return h0, dh, frame


def effective_propagators(schedule: PulseSchedule, values=(0.0,), axis: str = "drift",
                          dt: float = 5e-3):
    """Logical 2x2 gates of the effective model for a batch of error values.

    Returns an array (N, 2, 2) in the (|0>_L, |1>_L) basis.
    """
    if axis not in ("drift", "coupling"):
        raise InvalidInputError("axis must be 'drift' or 'coupling'")
    x = np.asarray(values, dtype=float)
    h0, dh, frame = _effective_generators(schedule, axis)
    u0 = np.broadcast_to(np.eye(3, dtype=complex), (len(x), 3, 3)).copy()
    if schedule.duration > 0:
        grid = TimeGrid.covering(schedule.duration, dt)
        xs = x[:, None, None]
        cache = {}

        def gen(t, u):
            h = cache.get(t)
            if h is None:
                if len(cache) > 2:
                    cache.pop(next(iter(cache)))
                h = cache[t] = h0(t)[None] + xs * dh(t)[None]
            return -1j * (h @ u)

        u0 = integrate(gen, u0, grid)
    logical = frame.matrix @ u0 @ frame.matrix.conj().T
    return logical[:, :2, :2]


def effective_evolution_1q(schedule: PulseSchedule, psi_logical, *, dt: float = 5e-3,
                           samples: int = 200):
    """Error-aware effective-model trajectory from a logical input.

    Returns (times, amplitudes) with amplitudes on (|0>_L, |1>_L, |a>).
    """
    from .effective import dressed_frame, effective_hamiltonian_1q

    model0 = schedule.model
    frame = dressed_frame(model0.theta, model0.phi, model0.role)
    psi = np.zeros(3, dtype=complex)
    psi[:2] = psi_logical
    grid = _grid(schedule.duration, dt, samples)
    times, amps = [], []

    def on_sample(t, y):
        times.append(t)
        amps.append(frame.matrix @ y)

    integrate(lambda t, y: -1j * (effective_hamiltonian_1q(schedule.model_at(t), t) @ y),
              frame.matrix.conj().T @ psi, grid, on_sample)
    return np.array(times), np.array(amps)


def full_evolution_1q(schedule: PulseSchedule, pair: DrivenPair, psi_logical, *,
                      dt: float = DEFAULT_DT, samples: int = 200):
    """Closed full-pair trajectory in the design frame, projected on
    (|0>_L, |1>_L, |a>). Returns (times, amplitudes, leakage)."""
    pair = pair.with_tones(schedule.tones)
    vecs = np.vstack([_logical_vectors_1q(pair), np.eye(pair.dim)[pair.index(1, 1)]])
    psi = np.asarray(psi_logical, dtype=complex) @ vecs[:2]
    frame = design_frame_1q(schedule, pair)
    times, amps = [], []

    def project(t, y):
        v = frame(t) if frame is not None else None
        y = y if v is None else v @ y
        times.append(t)
        amps.append(vecs.conj() @ y)

    h = CachedHamiltonian(PairHamiltonian(pair, schedule.tone_segments()))
    grid = _grid(schedule.duration, dt, samples)
    integrate(lambda t, y: -1j * (h(t) @ y), psi, grid, project)
    amps = np.array(amps)
    return np.array(times), amps, 1 - np.sum(np.abs(amps) ** 2, axis=1)


def full_model_propagators(schedule: PulseSchedule, pair: DrivenPair, values=(0.0,),
                           axis: str = "drift", dt: float = DEFAULT_DT):
    """Logical 2x2 gates of the closed full pair for a batch of error values.

    ``drift`` shifts the modulated transmon by x * g (the DFS-breaking drift
    difference); ``coupling`` scales the bare exchange coupling by (1 + x).
    Gates are taken in the design frame of the error-free schedule.
    """
    if axis not in ("drift", "coupling"):
        raise InvalidInputError("axis must be 'drift' or 'coupling'")
    pair = pair.with_tones(schedule.tones)
    logical = _logical_vectors_1q(pair)
    frame = design_frame_1q(schedule, pair)
    g = schedule.model.g
    out = []
    for x in np.asarray(values, dtype=float):
        if axis == "drift":
            mod = replace(pair.mod, drift=pair.mod.drift + x * g)
            variant = replace(pair, **{pair.modulated: mod})
        else:
            variant = replace(pair, coupling=pair.coupling * (1 + x))
        h = CachedHamiltonian(PairHamiltonian(variant, schedule.tone_segments()))
        cols = logical.T.copy()
        if schedule.duration > 0:
            cols = integrate(lambda t, y: -1j * (h(t) @ y), cols,
                             TimeGrid.covering(schedule.duration, dt))
        if frame is not None:
            cols = frame(schedule.duration) @ cols
        out.append(logical.conj() @ cols)
    return np.array(out)
