"""Effective three-level description of a parametrically driven pair.

Expanding the drive phase exp(i beta sin(...)) into Bessel sidebands and
keeping only the stationary terms leaves a Lambda system: the two logical
states couple to the auxiliary state |11> with strengths g1 (two-tone
sideband) and g2 (single-tone sideband), both detuned by the same small
detuning. In the dressed basis only the bright state |psi+> couples.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (DesignInfeasibleError, InfeasibleResonanceError,
                     UnsupportedConfigurationError)
from .numerics import angular, bessel_jn, find_root_bracketed

# First zero of J0; J0/J1 falls from +inf to 0 on (0, J0_ZERO).
J0_ZERO = 2.404825557695773


@dataclass(frozen=True)
class ResonanceAssignment:
    """Base frequencies of the two tones (MHz) and the common detuning."""

    tone1: float
    tone2: float
    detuning: float

    def residuals(self, pair_detuning, alpha_mod, alpha_other):
        """Both resonance conditions as (value - detuning); zero when met."""
        r1 = pair_detuning + alpha_other - (self.tone1 + self.tone2) - self.detuning
        r2 = -(pair_detuning - alpha_mod - self.tone1) - self.detuning
        return r1, r2


def solve_resonance(pair_detuning: float, alpha_mod: float, alpha_other: float,
                    detuning: float = 0.0) -> ResonanceAssignment:
    """Tone frequencies that bring both sidebands within ``detuning`` of
    resonance: tone 1 drives |0>_L <-> |a> together with tone 2, tone 1 alone
    drives |a> <-> |1>_L."""
    w1 = pair_detuning - alpha_mod + detuning
    w2 = alpha_mod + alpha_other - 2 * detuning
    if w1 <= 0 or w2 <= 0:
        raise InfeasibleResonanceError(
            f"tone frequencies must be positive, got {w1:.6g} and {w2:.6g} MHz")
    if abs(detuning) > 0.1 * min(w1, w2):
        warnings.warn("detuning is not small compared with the tone frequencies; "
                      "the rotating-wave reduction may be poor", RuntimeWarning)
    return ResonanceAssignment(w1, w2, detuning)


def effective_couplings(coupling: float, beta1: float, beta2: float):
    """(g1, g2) in MHz for tone amplitudes beta1, beta2."""
    if beta1 < 0 or beta2 < 0:
        raise ValueError("tone amplitudes must be non-negative")
    common = math.sqrt(2) * coupling * bessel_jn(1, beta1)
    return common * bessel_jn(1, beta2), common * bessel_jn(0, beta2)


def mixing_angle(g1: float, g2: float) -> float:
    return math.pi if g1 == 0 else 2 * math.atan(g2 / g1)


def solve_beta_for_theta(theta: float, beta1: float | None = None,
                         tol: float = 1e-14) -> float:
    """Second-tone amplitude giving mixing angle ``theta``.

    The ratio g2/g1 = J0(beta2)/J1(beta2) does not depend on beta1, which is
    accepted only for signature symmetry with the design routines.
    """
    if not 0 < theta <= math.pi:
        raise DesignInfeasibleError(f"theta must lie in (0, pi], got {theta!r}")
    if theta == math.pi:
        return 0.0
    c, s = math.cos(theta / 2), math.sin(theta / 2)

    def f(b):
        return c * bessel_jn(0, b) - s * bessel_jn(1, b)

    return find_root_bracketed(f, 0.0, J0_ZERO, tol)


@dataclass(frozen=True)
class EffectiveThreeLevel:
    """Parameters of the effective Lambda system (MHz, radians).

    In the two-qubit role g1, g2 stand for the couplings of the |02>_23 and
    |20>_23 channels of the middle pair.
    """

    g1: float
    g2: float
    phi: float = 0.0
    detuning: float = 0.0
    chirp: float = 0.0
    phase0: float = 0.0
    drift_error: float = 0.0
    coupling_error: float = 0.0
    role: str = "single"

    @property
    def g(self) -> float:
        return math.hypot(self.g1, self.g2)

    @property
    def theta(self) -> float:
        return mixing_angle(self.g1, self.g2)

    def coupling_phase(self, t):
        """Phase of the bright-auxiliary coupling at time t (rad)."""
        return angular(self.chirp) * t + self.phase0

    def mixing(self) -> float:
        """chi = atan(2g / (eta + Delta)) in (0, pi)."""
        return math.atan2(2 * self.g, self.chirp + self.detuning)

    def precession_rate(self) -> float:
        """Rate of the bright-auxiliary rotation angle xi (rad/ns)."""
        return angular(math.hypot(self.g, (self.detuning + self.chirp) / 2))

    def perturbed(self, drift_error=0.0, coupling_error=0.0) -> "EffectiveThreeLevel":
        return replace(self, drift_error=drift_error, coupling_error=coupling_error)


@dataclass(frozen=True)
class DressedFrame:
    """Columns of ``matrix`` are |psi+>, |psi->, |a> in the (|0>_L, |1>_L, |a>) basis."""

    matrix: np.ndarray

    def bright(self):
        return self.matrix[:, 0]

    def dark(self):
        return self.matrix[:, 1]

    def to_dressed(self, op):
        """Express a logical-basis operator in the dressed basis."""
        return self.matrix.conj().T @ op @ self.matrix

    def to_logical(self, op):
        return self.matrix @ op @ self.matrix.conj().T


def dressed_frame(theta: float, phi: float, role: str = "single") -> DressedFrame:
    """Bright/dark basis for mixing angle theta and relative phase phi.

    Single-qubit role puts the phase on |0>_L; the two-qubit role puts
    exp(-i phi) on the second component.
    """
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    m = np.zeros((3, 3), dtype=complex)
    if role == "single":
        m[:2, 0] = (c * np.exp(1j * phi), s)
        m[:2, 1] = (s * np.exp(1j * phi), -c)
    elif role == "double":
        m[:2, 0] = (c, s * np.exp(-1j * phi))
        m[:2, 1] = (s, -c * np.exp(-1j * phi))
    else:
        raise ValueError("role must be 'single' or 'double'")
    m[2, 2] = 1.0
    return DressedFrame(m)


def effective_hamiltonian_1q(model: EffectiveThreeLevel, t: float) -> np.ndarray:
    """Effective Hamiltonian (rad/ns) on (|psi+>, |psi->, |a>).

    Includes the detuning term -Delta/2 (P+ - Pa), the chirped coupling and
    the drift-difference error delta_d (|1><1| - |0><0|) rotated into the
    dressed basis.
    """
    half = 0.5 * angular(model.detuning)
    h = np.diag([-half, 0.0, half]).astype(complex)
    amp = angular(model.g * (1 + model.coupling_error))
    h[0, 2] = amp * np.exp(-1j * model.coupling_phase(t))
    h[2, 0] = np.conj(h[0, 2])
    if model.drift_error:
        frame = dressed_frame(model.theta, model.phi, model.role)
        err = np.diag([-1.0, 1.0, 0.0]).astype(complex) * angular(model.drift_error)
        h = h + frame.to_dressed(err)
    return h


def bright_state_evolution(model: EffectiveThreeLevel, t: float) -> np.ndarray:
    """Closed-form evolution of |psi+> under the error-free effective model.

    Returns the amplitudes on (|psi+>, |psi->, |a>) at time t.
    """
    xi = model.precession_rate() * t
    chi = model.mixing()
    half_chirp = 0.5 * angular(model.chirp) * t
    return np.array([
        (math.cos(xi) + 1j * math.sin(xi) * math.cos(chi)) * np.exp(-1j * half_chirp),
        0.0,
        -1j * math.sin(xi) * math.sin(chi) * np.exp(1j * (half_chirp + model.phase0)),
    ])


def leakage_hamiltonian_2q(model: EffectiveThreeLevel, alpha_mod: float,
                           alpha_other: float, t: float = 0.0) -> np.ndarray:
    """Generator (rad/ns) of the |22> excursion on (|13>, |22>, |31>).

    Written in the frame where the ladder detuning is split symmetrically
    between |13> and |22>, so |22> precesses at
    sqrt(3 g'^2 + ((Delta' + alpha_mod - alpha_other + eta)/2)^2).
    """
    if model.role != "double":
        raise UnsupportedConfigurationError("leakage ladder needs a two-qubit model")
    if model.g2 != 0:
        raise UnsupportedConfigurationError("leakage ladder assumes the second tone is off")
    ladder = angular(model.detuning + alpha_mod - alpha_other + model.chirp)
    h = np.diag([-0.5 * ladder, 0.5 * ladder, 0.0]).astype(complex)
    amp = math.sqrt(3) * angular(model.g1 * (1 + model.coupling_error))
    h[0, 1] = amp * np.exp(-1j * model.phase0)
    h[1, 0] = np.conj(h[0, 1])
    return h


def leakage_precession_rate(model: EffectiveThreeLevel, alpha_mod, alpha_other) -> float:
    ladder = model.detuning + alpha_mod - alpha_other + model.chirp
    return angular(math.sqrt(3 * model.g1**2 + (ladder / 2) ** 2))
