"""Pulse design for time-optimal holonomic gates.

The time-optimal path keeps the effective coupling g constant and sweeps
the coupling phase linearly at rate eta. Two conditions fix (eta, tau):
the bright state completes one cycle, tau * sqrt(g^2 + ((Delta + eta)/2)^2)
= 1/2 (in cycles), and the accumulated phase is gamma = pi - eta*tau/2
(angular). Eliminating eta leaves a quadratic in tau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import DriveTone, DrivenPair
from .effective import (J0_ZERO, EffectiveThreeLevel, effective_couplings,
                        leakage_precession_rate, solve_beta_for_theta, solve_resonance)
from .errors import DesignInfeasibleError, InvalidInputError
from .numerics import RAD_PER_NS_PER_MHZ, angular, bessel_jn, find_root_bracketed

PI = math.pi
# Maximum of J1, reached at this argument.
BETA_J1_MAX = 1.8411837813406593


@dataclass(frozen=True)
class SingleQubitGateSpec:
    """Holonomic gate exp(i gamma/2 (n . sigma)) with axis angles (theta, phi)."""

    gamma: float
    theta: float
    phi: float

    def __post_init__(self):
        if not 0 < self.gamma < 2 * PI:
            raise InvalidInputError("gamma must lie in (0, 2pi)")
        if not 0 <= self.theta <= PI:
            raise InvalidInputError("theta must lie in [0, pi]")
        if not 0 <= self.phi < 2 * PI:
            raise InvalidInputError("phi must lie in [0, 2pi)")

    @classmethod
    def rx(cls, angle):
        return cls(angle, PI / 2, PI)

    @classmethod
    def ry(cls, angle):
        return cls(angle, PI / 2, PI / 2)

    @classmethod
    def rz(cls, angle):
        return cls(angle, PI, PI)


def ideal_unitary_1q(spec: SingleQubitGateSpec) -> np.ndarray:
    """cos(gamma/2) I + i sin(gamma/2) [[cos t, sin t e^{i phi}], [sin t e^{-i phi}, -cos t]]."""
    c, s = math.cos(spec.gamma / 2), math.sin(spec.gamma / 2)
    ct, st = math.cos(spec.theta), math.sin(spec.theta)
    n = np.array([[ct, st * np.exp(1j * spec.phi)],
                  [st * np.exp(-1j * spec.phi), -ct]])
    return c * np.eye(2) + 1j * s * n


def ideal_unitary_2q(gamma: float) -> np.ndarray:
    """Controlled phase diag(1, 1, 1, e^{i gamma}) on |00>, |01>, |10>, |11>."""
    return np.diag([1, 1, 1, np.exp(1j * gamma)]).astype(complex)


@dataclass(frozen=True)
class TocSolution:
    """Constant chirp (MHz) and gate time (ns) of a time-optimal loop."""

    chirp: float
    duration: float
    xi_total: float
    gamma: float
    detuning: float
    coupling: float

    @property
    def tau0(self) -> float:
        """Resonant full-loop time pi/g in ns."""
        return PI / angular(self.coupling)

    def residuals(self):
        """(phase condition, cycle condition) residuals in radians."""
        r_phase = angular(self.chirp) * self.duration - 2 * (PI - self.gamma)
        rate = angular(math.hypot(self.coupling, (self.detuning + self.chirp) / 2))
        return r_phase, rate * self.duration - PI


def solve_toc(gamma: float, detuning: float, coupling: float) -> TocSolution:
    """Time-optimal (eta, tau) for holonomic phase gamma.

    With c = pi - gamma, G = 2pi g, D = 2pi Delta (rad/ns), the cycle
    condition becomes (G^2 + D^2/4) tau^2 + D c tau + c^2 - pi^2 = 0, which
    has exactly one positive root for gamma in (0, 2pi).
    """
    if not 0 < gamma < 2 * PI:
        raise DesignInfeasibleError(f"gamma must lie in (0, 2pi), got {gamma!r}")
    if not (coupling > 0 and math.isfinite(coupling) and math.isfinite(detuning)):
        raise DesignInfeasibleError("coupling must be positive and finite")
    c = PI - gamma
    big_g, big_d = angular(coupling), angular(detuning)
    a = big_g**2 + big_d**2 / 4
    b = big_d * c
    cc = c * c - PI * PI
    disc = math.sqrt(b * b - 4 * a * cc)
    # Stable form of the positive root.
    tau = (-b + disc) / (2 * a) if b <= 0 else (2 * cc) / (-b - disc)
    if not tau > 0:
        raise DesignInfeasibleError("no positive gate time solves the time-optimal conditions")
    chirp = 2 * c / tau / RAD_PER_NS_PER_MHZ
    rate = angular(math.hypot(coupling, (detuning + chirp) / 2))
    return TocSolution(chirp, tau, rate * tau, gamma, detuning, coupling)


def toc_closed_form_time(gamma: float, detuning: float, chirp: float, coupling: float) -> float:
    """tau0 sqrt(1 - (1 + Delta/eta)^2 (1 - gamma/pi)^2).

    At eta = 0 (gamma = pi) the product (Delta/eta)(1 - gamma/pi) tends to
    Delta*tau/(2 pi) and the expression becomes tau0 / sqrt(1 + (Delta tau0/2pi)^2)
    in angular units.
    """
    tau0 = PI / angular(coupling)
    # Near gamma = pi both chirp and (1 - gamma/pi) vanish and their ratio is
    # noise; use the limit instead.
    if chirp == 0 or abs(1 - gamma / PI) < 1e-12:
        if abs(1 - gamma / PI) >= 1e-12:
            raise InvalidInputError("zero chirp is only consistent with gamma = pi")
        x = angular(detuning) * tau0 / (2 * PI)
        return tau0 / math.sqrt(1 + x * x)
    f = (1 + detuning / chirp) * (1 - gamma / PI)
    return tau0 * math.sqrt(1 - f * f)


def conventional_time(coupling: float) -> float:
    """Single-loop gate time pi/g (ns), the same for every rotation angle."""
    return PI / angular(coupling)


@dataclass(frozen=True)
class Segment:
    """Constant-parameter stretch of a pulse: tones plus the effective model
    they realize. ``start`` and ``duration`` in ns."""

    start: float
    duration: float
    tones: tuple
    model: EffectiveThreeLevel

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class PulseSchedule:
    """Concrete drive program of a designed gate."""

    segments: tuple
    detuning: float
    scheme: str
    spec: object = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.segments:
            raise InvalidInputError("a schedule needs at least one segment")
        if self.scheme not in ("toc", "conventional"):
            raise InvalidInputError("scheme must be 'toc' or 'conventional'")

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def tones(self):
        return self.segments[0].tones

    @property
    def model(self) -> EffectiveThreeLevel:
        return self.segments[0].model

    def tone_segments(self):
        """(t_end, tones) pairs for a piecewise pair Hamiltonian."""
        return [(s.end, s.tones) for s in self.segments]

    def model_at(self, t: float) -> EffectiveThreeLevel:
        for s in self.segments:
            if t < s.end:
                return s.model
        return self.segments[-1].model

    def with_errors(self, drift_error=0.0, coupling_error=0.0) -> "PulseSchedule":
        segs = tuple(Segment(s.start, s.duration, s.tones,
                             s.model.perturbed(drift_error, coupling_error))
                     for s in self.segments)
        return PulseSchedule(segs, self.detuning, self.scheme, self.spec, self.extra)


def _wrap(angle: float) -> float:
    return float(np.mod(angle, 2 * PI))


def tone_phases(phase0: float, phi: float):
    """Tone phases giving coupling phase ``phase0`` at t = 0 and relative
    phase ``phi`` between the two logical channels."""
    p1 = _wrap(phase0 + PI)
    p2 = _wrap(phi - PI - 2 * p1)
    return p1, p2


def default_beta1(device: DrivenPair, theta: float, detuning: float = 0.0) -> float:
    """Largest composite coupling allowed by the rotating-wave bound g <= min(tone)/10.

    J1(beta1) peaks at 1.8412, so the bound only binds for weakly detuned
    tones.
    """
    res = solve_resonance(device.detuning, device.mod.anharmonicity,
                          device.other.anharmonicity, detuning)
    beta2 = solve_beta_for_theta(theta)
    limit = min(res.tone1, res.tone2) / 10

    def coupling(b1):
        return math.hypot(*effective_couplings(device.coupling, b1, beta2))

    if coupling(BETA_J1_MAX) <= limit:
        return BETA_J1_MAX
    return find_root_bracketed(lambda b: coupling(b) - limit, 0.0, BETA_J1_MAX, 1e-12)


def _single_qubit_tones(device: DrivenPair, beta1, beta2, detuning, chirp, phase0, phi):
    res = solve_resonance(device.detuning, device.mod.anharmonicity,
                          device.other.anharmonicity, detuning)
    p1, p2 = tone_phases(phase0, phi)
    # Tone 1 carries +eta and tone 2 carries -2 eta: the two-tone sideband
    # then sits at -eta and the single-tone one at +eta, which rotates the
    # bright-auxiliary coupling phase at eta without moving the dressed basis.
    return (DriveTone(beta1, res.tone1, chirp, p1), DriveTone(beta2, res.tone2, -2 * chirp, p2))


def design_single_qubit_gate(spec: SingleQubitGateSpec, device: DrivenPair,
                             detuning: float = 0.0, beta1: float | None = None) -> PulseSchedule:
    """Time-optimal square pulse with linear coupling-phase chirp."""
    if beta1 is None:
        beta1 = default_beta1(device, spec.theta, detuning)
    if not 0 < beta1 < J0_ZERO:
        raise DesignInfeasibleError(f"beta1 must lie in (0, {J0_ZERO}), got {beta1!r}")
    beta2 = solve_beta_for_theta(spec.theta)
    g1, g2 = effective_couplings(device.coupling, beta1, beta2)
    toc = solve_toc(spec.gamma, detuning, math.hypot(g1, g2))
    model = EffectiveThreeLevel(g1, g2, spec.phi, detuning, toc.chirp, 0.0)
    tones = _single_qubit_tones(device, beta1, beta2, detuning, toc.chirp, 0.0, spec.phi)
    seg = Segment(0.0, toc.duration, tones, model)
    return PulseSchedule((seg,), detuning, "toc", spec,
                         {"beta1": beta1, "beta2": beta2, "toc": toc})


def design_conventional_gate(spec: SingleQubitGateSpec, device: DrivenPair,
                             coupling: float | None = None, beta1: float | None = None) -> PulseSchedule:
    """Resonant single-loop baseline: two half-cycles of pi/(2g) each, the
    second with the coupling phase advanced by pi - gamma.

    ``coupling`` pins the composite g (for equal-coupling comparisons); the
    tone amplitude beta1 is then solved for it.
    """
    beta2 = solve_beta_for_theta(spec.theta)
    if coupling is not None:
        ratio = math.hypot(bessel_jn(1, beta2), bessel_jn(0, beta2)) * math.sqrt(2) * device.coupling
        if coupling > ratio * bessel_jn(1, BETA_J1_MAX):
            raise DesignInfeasibleError("requested coupling exceeds what the device can reach")
        beta1 = find_root_bracketed(lambda b: ratio * bessel_jn(1, b) - coupling,
                                    0.0, BETA_J1_MAX, 1e-13)
    elif beta1 is None:
        beta1 = default_beta1(device, spec.theta, 0.0)
    g1, g2 = effective_couplings(device.coupling, beta1, beta2)
    g = math.hypot(g1, g2)
    half = conventional_time(g) / 2
    segs = []
    for k, phase0 in enumerate((0.0, PI - spec.gamma)):
        model = EffectiveThreeLevel(g1, g2, spec.phi, 0.0, 0.0, phase0)
        tones = _single_qubit_tones(device, beta1, beta2, 0.0, 0.0, phase0, spec.phi)
        segs.append(Segment(k * half, half, tones, model))
    return PulseSchedule(tuple(segs), 0.0, "conventional", spec,
                         {"beta1": beta1, "beta2": beta2})


@dataclass(frozen=True)
class CpGateDesign:
    """Time-optimal controlled-phase design on the middle pair (MHz, ns)."""

    gamma: float
    beta3: float
    detuning: float
    chirp: float
    duration: float
    coupling: float
    alpha_mod: float
    alpha_other: float
    schedule: PulseSchedule = field(compare=False, default=None)

    @property
    def tau0(self) -> float:
        return PI / angular(self.coupling)

    @property
    def ladder_detuning(self) -> float:
        """Detuning of the |22> <-> |13> transition including the chirp (MHz)."""
        return self.detuning + self.alpha_mod - self.alpha_other + self.chirp

    def model(self) -> EffectiveThreeLevel:
        return EffectiveThreeLevel(self.coupling, 0.0, 0.0, self.detuning, self.chirp,
                                   0.0, role="double")

    def residuals(self):
        """Phase, bright-cycle and leakage-cycle residuals in radians."""
        r1 = angular(self.chirp) * self.duration - 2 * (PI - self.gamma)
        r2 = self.model().precession_rate() * self.duration - PI
        r3 = leakage_precession_rate(self.model(), self.alpha_mod, self.alpha_other) \
            * self.duration - 2 * PI
        return r1, r2, r3

    def closed_form_time(self) -> float:
        return toc_closed_form_time(self.gamma, self.detuning, self.chirp, self.coupling)


def design_cp_gate(gamma: float, pair: DrivenPair, beta3: float,
                   alpha2: float | None = None, alpha3: float | None = None,
                   scan_points: int = 64) -> CpGateDesign:
    """Solve the three design equations for (tau, eta, Delta').

    For fixed Delta' the time-optimal conditions give (tau, eta) in closed
    form; the remaining leakage-cycle condition is root-found on
    Delta' in (0, alpha3 - alpha2]. ``pair`` is the middle pair with the
    modulated transmon (anharmonicity alpha3) on the right.
    """
    alpha3 = pair.mod.anharmonicity if alpha3 is None else alpha3
    alpha2 = pair.other.anharmonicity if alpha2 is None else alpha2
    if not 0 < gamma < 2 * PI:
        raise DesignInfeasibleError("gamma must lie in (0, 2pi)")
    if alpha3 <= alpha2:
        raise DesignInfeasibleError("search box (0, alpha3 - alpha2] is empty")
    g = math.sqrt(2) * pair.coupling * bessel_jn(1, beta3)
    if g <= 0:
        raise DesignInfeasibleError("beta3 gives zero coupling")

    def leak_residual(dp):
        toc = solve_toc(gamma, dp, g)
        ladder = dp + alpha3 - alpha2 + toc.chirp
        return angular(math.sqrt(3 * g * g + ladder * ladder / 4)) * toc.duration - 2 * PI

    hi = alpha3 - alpha2
    grid = np.linspace(0.0, hi, scan_points + 1)[1:]
    grid = np.concatenate(([hi * 1e-9], grid))
    vals = [leak_residual(x) for x in grid]
    root = None
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            root = a
            break
        if fa * fb < 0:
            root = find_root_bracketed(leak_residual, a, b, 1e-14)
            break
    if root is None:
        raise DesignInfeasibleError(
            f"leakage-cycle condition has no root for Delta' in (0, {hi}] MHz; "
            f"residual ranges over [{min(vals):.4g}, {max(vals):.4g}] rad")
    toc = solve_toc(gamma, root, g)
    if not 0 < toc.chirp < 4 * g:
        raise DesignInfeasibleError(
            f"chirp {toc.chirp:.4g} MHz outside (0, 4 g') = (0, {4 * g:.4g}) MHz")
    design = CpGateDesign(gamma, beta3, root, toc.chirp, toc.duration, g, alpha3, alpha2)
    res = solve_resonance(pair.detuning, alpha3, alpha2, root)
    tones = (DriveTone(beta3, res.tone1, toc.chirp, PI), DriveTone(0.0, res.tone2, -2 * toc.chirp, 0.0))
    sched = PulseSchedule((Segment(0.0, toc.duration, tones, design.model()),), root, "toc",
                          None, {"beta3": beta3, "toc": toc})
    object.__setattr__(design, "schedule", sched)
    return design


def rabi_probe_schedule(device: DrivenPair, beta1: float, theta: float = PI / 2,
                        phi: float = PI, periods: float = 1.0) -> PulseSchedule:
    """Resonant, unchirped drive held for ``periods`` full bright-auxiliary
    cycles. Used to calibrate the effective couplings against the full model."""
    if not 0 < beta1 < J0_ZERO:
        raise DesignInfeasibleError(f"beta1 must lie in (0, {J0_ZERO}), got {beta1!r}")
    if not periods > 0:
        raise InvalidInputError("periods must be positive")
    beta2 = solve_beta_for_theta(theta)
    g1, g2 = effective_couplings(device.coupling, beta1, beta2)
    model = EffectiveThreeLevel(g1, g2, phi, 0.0, 0.0, 0.0)
    tones = _single_qubit_tones(device, beta1, beta2, 0.0, 0.0, 0.0, phi)
    duration = periods * 2 * conventional_time(model.g)
    return PulseSchedule((Segment(0.0, duration, tones, model),), 0.0, "conventional", None,
                         {"beta1": beta1, "beta2": beta2})
