"""Transmon hardware, two-tone parametric drives and the driven-pair
Hamiltonian in the interaction picture.

Basis convention: a pair state |l, r> has flat index ``l * d_right + r``
(left transmon most significant).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import InvalidDeviceError, InvalidInputError
from .numerics import angular, embed


@dataclass(frozen=True)
class TransmonSpec:
    """One anharmonic transmon. Frequencies and rates in MHz."""

    frequency: float
    anharmonicity: float
    levels: int = 5
    drift: float = 0.0
    decay: float = 0.0
    dephasing: float = 0.0

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 3:
            raise InvalidDeviceError(f"levels must be an integer >= 3, got {self.levels!r}")
        vals = (self.frequency, self.anharmonicity, self.drift, self.decay, self.dephasing)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidDeviceError("transmon parameters must be finite")
        if self.anharmonicity <= 0:
            raise InvalidDeviceError("anharmonicity must be positive")
        if self.decay < 0 or self.dephasing < 0:
            raise InvalidDeviceError("decay and dephasing rates must be non-negative")

    def level_energy(self, n: int) -> float:
        """Bare energy of level n in MHz (drift excluded)."""
        return n * self.frequency - n * (n - 1) * self.anharmonicity / 2

    def with_levels(self, levels: int) -> "TransmonSpec":
        return replace(self, levels=levels)


@dataclass(frozen=True)
class DriveTone:
    """One frequency-modulation tone F(t) = beta sin(2pi (f + offset) t + phase)."""

    amplitude: float
    frequency: float
    offset: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise InvalidInputError("tone amplitude must be non-negative")

    def modulation(self, t):
        return self.amplitude * np.sin(angular(self.frequency + self.offset) * t + self.phase)


OFF = DriveTone(0.0, 0.0)


@dataclass(frozen=True)
class DrivenPair:
    """Two capacitively coupled transmons, one of them frequency modulated."""

    left: TransmonSpec
    right: TransmonSpec
    coupling: float
    modulated: str = "left"
    tones: tuple = (OFF, OFF)

    def __post_init__(self):
        if self.modulated not in ("left", "right"):
            raise InvalidDeviceError("modulated must be 'left' or 'right'")
        if not (math.isfinite(self.coupling) and self.coupling >= 0):
            raise InvalidDeviceError("coupling must be finite and non-negative")
        if len(self.tones) != 2:
            raise InvalidDeviceError("a driven pair carries exactly two tones")
        object.__setattr__(self, "tones", tuple(self.tones))

    @property
    def dims(self):
        return (self.left.levels, self.right.levels)

    @property
    def dim(self) -> int:
        return self.left.levels * self.right.levels

    @property
    def mod(self) -> TransmonSpec:
        return self.left if self.modulated == "left" else self.right

    @property
    def other(self) -> TransmonSpec:
        return self.right if self.modulated == "left" else self.left

    @property
    def detuning(self) -> float:
        """Frequency difference modulated minus other (MHz)."""
        return self.mod.frequency - self.other.frequency

    @property
    def drift_difference(self) -> float:
        return self.mod.drift - self.other.drift

    def index(self, left_level: int, right_level: int) -> int:
        return left_level * self.right.levels + right_level

    def with_tones(self, tones) -> "DrivenPair":
        return replace(self, tones=tuple(tones))

    def with_levels(self, levels: int) -> "DrivenPair":
        return replace(self, left=self.left.with_levels(levels),
                       right=self.right.with_levels(levels))


@dataclass(frozen=True)
class _Transitions:
    """Static part of the exchange coupling: where each term sits, its
    amplitude (rad/ns) and its carrier frequency (rad/ns)."""

    rows: np.ndarray
    cols: np.ndarray
    amplitudes: np.ndarray
    carriers: np.ndarray
    dim: int


@lru_cache(maxsize=64)
def _transitions(pair: DrivenPair) -> _Transitions:
    d_mod, d_oth = pair.mod.levels, pair.other.levels
    a_mod, a_oth = pair.mod.anharmonicity, pair.other.anharmonicity
    base = pair.detuning + pair.drift_difference
    rows, cols, amps, carriers = [], [], [], []
    for n in range(d_mod - 1):          # modulated transmon n -> n+1
        for m in range(1, d_oth):       # other transmon m -> m-1
            if pair.modulated == "left":
                r, c = pair.index(n + 1, m - 1), pair.index(n, m)
            else:
                r, c = pair.index(m - 1, n + 1), pair.index(m, n)
            rows.append(r)
            cols.append(c)
            amps.append(math.sqrt((n + 1) * m) * angular(pair.coupling))
            carriers.append(angular(base - n * a_mod + (m - 1) * a_oth))
    return _Transitions(np.array(rows, dtype=int), np.array(cols, dtype=int),
                        np.array(amps), np.array(carriers), pair.dim)


class PairHamiltonian:
    """Callable H(t) (rad/ns) of a driven pair in the interaction picture.

    ``segments`` optionally replaces the pair's tones piecewise in time: a
    sequence of (t_end, tones) with increasing t_end; the last segment
    extends to infinity.
    """

    def __init__(self, pair: DrivenPair, segments=None):
        self.pair = pair
        self._tr = _transitions(pair.with_tones((OFF, OFF)))
        if segments is None:
            segments = [(math.inf, pair.tones)]
        self.segments = [(float(t_end), tuple(tones)) for t_end, tones in segments]
        self.dim = pair.dim
        self._upper = np.zeros((self.dim, self.dim), dtype=complex)

    def tones_at(self, t: float):
        for t_end, tones in self.segments:
            if t < t_end:
                return tones
        return self.segments[-1][1]

    def drive_phase(self, t: float) -> float:
        return sum(tone.modulation(t) for tone in self.tones_at(t))

    def __call__(self, t: float) -> np.ndarray:
        tr = self._tr
        vals = tr.amplitudes * np.exp(1j * (tr.carriers * t + self.drive_phase(t)))
        upper = self._upper
        upper[tr.rows, tr.cols] = vals
        h = upper + upper.conj().T
        return h


def interaction_hamiltonian(pair: DrivenPair, t: float) -> np.ndarray:
    """Interaction-picture Hamiltonian of a driven pair at time t (rad/ns).

    Every exchange term in which the modulated transmon gains an excitation
    carries the drive phase exp(i(F1 + F2)); the Hermitian conjugate carries
    the opposite phase.
    """
    if t < 0:
        raise InvalidInputError("time must be non-negative")
    return PairHamiltonian(pair)(t)


def lowering(levels: int) -> np.ndarray:
    """Truncated lowering operator sum_n sqrt(n)|n-1><n|."""
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


def number(levels: int) -> np.ndarray:
    return np.diag(np.arange(levels)).astype(complex)


def excitation_number(pair: DrivenPair) -> np.ndarray:
    return (embed(number(pair.left.levels), 0, pair.dims)
            + embed(number(pair.right.levels), 1, pair.dims))


DEPHASING_MODELS = ("collective", "independent")


def collapse_operators(pair: DrivenPair, dephasing: str = "collective"):
    """Lindblad jump operators of a pair, in sqrt(rad/ns).

    Relaxation: sqrt(2 pi kappa_1) S_j for each transmon. Dephasing is either
    ``independent`` (one number operator per transmon) or ``collective``
    (a single operator sqrt(2 pi kappa_phi,l) n_l + sqrt(2 pi kappa_phi,r) n_r,
    i.e. fully correlated frequency noise on the encoded pair).
    """
    if dephasing not in DEPHASING_MODELS:
        raise InvalidInputError(f"dephasing model must be one of {DEPHASING_MODELS}")
    ops = []
    specs = (pair.left, pair.right)
    for j, spec in enumerate(specs):
        ops.append(math.sqrt(angular(spec.decay)) * embed(lowering(spec.levels), j, pair.dims))
    nums = [embed(number(s.levels), j, pair.dims) for j, s in enumerate(specs)]
    if dephasing == "independent":
        for spec, n in zip(specs, nums):
            ops.append(math.sqrt(angular(spec.dephasing)) * n)
    else:
        ops.append(sum(math.sqrt(angular(s.dephasing)) * n for s, n in zip(specs, nums)))
    return ops


@dataclass(frozen=True)
class DfsMap:
    """Logical labels mapped to physical basis indices.

    ``levels`` maps each label to its tuple of transmon levels; ``dims`` is
    the truncation of every transmon involved.
    """

    encoding: str
    dims: tuple
    logical: dict = field(default_factory=dict)
    auxiliary: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)

    def index_of(self, lv) -> int:
        idx = 0
        for level, d in zip(lv, self.dims):
            idx = idx * d + level
        return idx


# Level patterns of the encodings (transmon levels, left to right).
SINGLE_LEVELS = {"0": (0, 2), "1": (2, 0)}
SINGLE_AUX = {"a": (1, 1)}
DOUBLE_LEVELS = {"00": (0, 2, 0, 2), "01": (0, 2, 2, 0), "10": (2, 0, 0, 2), "11": (2, 0, 2, 0)}


def dfs_states(encoding: str = "single", levels=3) -> DfsMap:
    """Index map of the decoherence-free encoding.

    ``single``: one logical qubit on a pair (|0>_L = |02>, |1>_L = |20>,
    auxiliary |11>). ``double``: two logical qubits on four transmons; the
    auxiliary entry is the index of |11> within the middle pair alone, since
    the auxiliary state does not fix the outer transmons.
    """
    if encoding not in ("single", "double"):
        raise InvalidInputError("encoding must be 'single' or 'double'")
    n = 2 if encoding == "single" else 4
    dims = tuple(levels) if np.ndim(levels) else (int(levels),) * n
    if len(dims) != n:
        raise InvalidInputError(f"{encoding} encoding needs {n} truncations")
    if min(dims) < 3:
        raise InvalidDeviceError("truncation must host level 2")
    m = DfsMap(encoding, dims)
    pattern = SINGLE_LEVELS if encoding == "single" else DOUBLE_LEVELS
    for label, lv in pattern.items():
        m.logical[label] = m.index_of(lv)
        m.levels[label] = lv
    if encoding == "single":
        m.auxiliary["a"] = m.index_of((1, 1))
        m.levels["a"] = (1, 1)
    else:
        m.auxiliary["a"] = 1 * dims[2] + 1
        m.levels["a"] = (1, 1)
    return m


# Middle-pair (T2, T3) state and spectator levels (T1, T4) of each two-qubit
# logical state.
CP_PAIR_LEVELS = {label: (lv[1], lv[2]) for label, lv in DOUBLE_LEVELS.items()}
CP_SPECTATOR_LEVELS = {label: (lv[0], lv[3]) for label, lv in DOUBLE_LEVELS.items()}
