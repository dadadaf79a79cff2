"""Acceptance suite: one PASS/FAIL line per criterion, then the assertion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even
without ``-s``). The expensive full-device runs come from session fixtures
shared with the module tests.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from holosim.design import (PI, conventional_time, design_cp_gate, ideal_unitary_1q,
                            ideal_unitary_2q, solve_toc, toc_closed_form_time)
from holosim.dynamics import check_density_matrix
from holosim.effective import bright_state_evolution, dressed_frame, effective_hamiltonian_1q
from holosim.metrics import average_fidelity, cp_input_states, infidelity_budget, sq_input_states
from holosim.numerics import TimeGrid, angular, integrate
from holosim.scenarios import (CP_PLOT_INPUT, SQ_PLOT_INPUTS, effective_gate_fidelity, robustness,
                               sim_options)
from holosim.simulate import (effective_propagators, full_model_propagators,
                              simulate_cp_four_transmon, simulate_state_1q)

PP = 1e-2  # one percentage point

TARGET_STATE = {"rx": 0.9964, "rz": 0.9963}
TARGET_GATE = {"rx": 0.9951, "rz": 0.9974}
TARGET_CP_STATE = 0.9950
TARGET_CP_GATE = 0.9955
TARGET_BUDGET = {"rx": (0.29 * PP, 0.20 * PP), "rz": (0.12 * PP, 0.14 * PP)}
FIDELITY_TOL = 0.3 * PP
FOUR_TRANSMON_TOL = 0.15 * PP
BUDGET_TOL = 0.1 * PP
STATE_RUNTIME_S = 120.0
GATE_RUNTIME_S = 600.0
CP_DESIGN_RUNTIME_S = 1.0


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        return ok
    return emit


def test_criterion_1_single_qubit_state_fidelity(cfg, sq_pair, rx_schedule, rz_schedule, report):
    parts, ok = [], True
    for name, sched in (("rx", rx_schedule), ("rz", rz_schedule)):
        psi = np.array(SQ_PLOT_INPUTS[name], dtype=complex)
        start = time.perf_counter()
        f = simulate_state_1q(sched, sq_pair, psi, **sim_options(cfg)).fidelity[-1]
        elapsed = time.perf_counter() - start
        good = abs(f - TARGET_STATE[name]) <= FIDELITY_TOL and elapsed <= STATE_RUNTIME_S
        ok &= good
        parts.append(f"{name} F={100 * f:.3f}% (target {100 * TARGET_STATE[name]:.2f}+-0.3) "
                     f"in {elapsed:.1f}s")
    assert report(1, ok, "; ".join(parts))


def test_criterion_2_single_qubit_gate_fidelity(sq_processes, rx_schedule, rz_schedule, report):
    inputs = sq_input_states(1001)
    parts, ok, total = [], True, 0.0
    for name, sched in (("rx", rx_schedule), ("rz", rz_schedule)):
        run = sq_processes[name, True]
        total += run.seconds
        f = average_fidelity(run.value, ideal_unitary_1q(sched.spec), inputs)
        ok &= abs(f - TARGET_GATE[name]) <= FIDELITY_TOL
        parts.append(f"{name} F={100 * f:.3f}% (target {100 * TARGET_GATE[name]:.2f}+-0.3)")
    ok &= total <= GATE_RUNTIME_S
    parts.append(f"{total:.1f}s total")
    assert report(2, ok, "; ".join(parts))


def test_criterion_3_controlled_phase(cfg, cp_setup, cp_processes, report):
    pair, outer, design = cp_setup
    proc = cp_processes[True].value
    target = ideal_unitary_2q(design.gamma)
    psi = np.array(CP_PLOT_INPUT, dtype=complex)
    f_state = proc.state_fidelity(psi, target @ psi)
    f_gate = average_fidelity(proc, target, cp_input_states(10001))
    sim = cfg["simulation"]
    _, four = simulate_cp_four_transmon(design, pair, outer[0], outer[1], psi,
                                        dephasing=cfg["device"]["dephasing_model"],
                                        dt=sim["four_transmon_dt_ps"] * 1e-3, samples=10)
    gap = abs(four[-1] - f_state)
    ok = (abs(f_state - TARGET_CP_STATE) <= FIDELITY_TOL
          and abs(f_gate - TARGET_CP_GATE) <= FIDELITY_TOL
          and gap <= FOUR_TRANSMON_TOL)
    assert report(3, ok, f"state F={100 * f_state:.3f}% (target 99.50+-0.3); gate "
                         f"F={100 * f_gate:.3f}% (target 99.55+-0.3); four-transmon "
                         f"F={100 * four[-1]:.3f}%, gap {100 * gap:.3f} pp (<=0.15)")


def test_criterion_4_cp_design(cp_setup, report):
    pair, _, _ = cp_setup
    start = time.perf_counter()
    design = design_cp_gate(PI / 2, pair, 1.54)
    elapsed = time.perf_counter() - start
    worst = max(abs(r) for r in design.residuals())
    ok = (pair.coupling == 10.0 and pair.mod.anharmonicity == 330.0
          and pair.other.anharmonicity == 300.0
          and abs(design.detuning - 11.8) <= 0.3 and worst < 1e-9
          and elapsed < CP_DESIGN_RUNTIME_S)
    assert report(4, ok, f"detuning {design.detuning:.4f} MHz (11.8+-0.3), max residual "
                         f"{worst:.2e} rad, {1e3 * elapsed:.1f} ms")


def test_criterion_5_gate_time_curve(report):
    g = 1.0
    worst = 0.0
    for ratio in (0.0, 0.5, 1.837):
        for gamma in np.linspace(0.1 * PI, PI, 181):
            toc = solve_toc(gamma, ratio * g, g)
            closed = toc_closed_form_time(gamma, ratio * g, toc.chirp, g)
            worst = max(worst, abs(closed - toc.duration) / closed)
    quarter = solve_toc(PI / 2, 0.0, g).duration / conventional_time(g)
    quarter_gap = abs(quarter - math.sqrt(3) / 2)
    ok = worst <= 1e-9 and quarter_gap <= 1e-12 and conventional_time(g) == PI / angular(g)
    assert report(5, ok, f"max relative gap {worst:.2e} (<=1e-9); tau/tau0 at pi/2 "
                         f"off sqrt(3)/2 by {quarter_gap:.1e} (<=1e-12); conventional = pi/g")


def test_criterion_6_infidelity_budget(cfg, sq_processes, rx_schedule, rz_schedule, report):
    inputs = sq_input_states(1001)
    dt_eff = cfg["scan"]["effective_dt_ps"] * 1e-3
    parts, ok = [], True
    for name, sched in (("rx", rx_schedule), ("rz", rz_schedule)):
        target = ideal_unitary_1q(sched.spec)
        b = infidelity_budget(average_fidelity(sq_processes[name, True].value, target, inputs),
                              average_fidelity(sq_processes[name, False].value, target, inputs),
                              effective_gate_fidelity(sched, inputs, dt_eff))
        want = TARGET_BUDGET[name]
        ok &= abs(b.decoherence - want[0]) <= BUDGET_TOL and abs(b.high_order - want[1]) <= BUDGET_TOL
        parts.append(f"{name} ({100 * b.decoherence:.3f}, {100 * b.high_order:.3f}) pp "
                     f"vs ({100 * want[0]:.2f}, {100 * want[1]:.2f})+-0.1")
    assert report(6, ok, "; ".join(parts))


def test_criterion_7_robustness(cfg, report):
    parts, ok = [], True
    for axis in ("drift", "coupling"):
        (table,), _ = robustness(cfg, axis)
        for name in ("rx", "rz"):
            rows = [r for r in table.rows if r[0] == name]
            errors = np.array([r[1] for r in rows])
            delta = np.array([r[4] for r in rows])
            at_zero = abs(delta[np.argmin(np.abs(errors))])
            mean = float(np.mean(delta))
            ok &= at_zero <= 1e-9 and mean > 0 and errors.min() <= -0.1 + 1e-12 \
                and errors.max() >= 0.1 - 1e-12
            parts.append(f"{axis}/{name} mean dF={mean:.2e}, |dF(0)|={at_zero:.0e}")
    assert report(7, ok, "; ".join(parts))


def _rk4_order():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    w, t_end = angular(50.0), 40.0
    y0 = np.array([1, 0], dtype=complex)
    exact = np.array([math.cos(w * t_end), -1j * math.sin(w * t_end)])
    errs = [np.linalg.norm(integrate(lambda t, y: -1j * w * (sx @ y), y0,
                                     TimeGrid(0.0, t_end, dt)) - exact) for dt in (0.2, 0.1)]
    return math.log2(errs[0] / errs[1])


def _connection_plus_energy_spread(model, duration):
    dark = np.array([0, 1, 0], dtype=complex)

    def basis(s):
        return np.stack([bright_state_evolution(model, s), dark], axis=1)

    h = 1e-4
    vals = []
    for t in np.linspace(1e-3, duration - 1e-3, 41):
        psi = basis(t)
        a = 1j * psi.conj().T @ ((basis(t + h) - basis(t - h)) / (2 * h))
        k = -psi.conj().T @ effective_hamiltonian_1q(model, t) @ psi
        vals.append(a + k)
    vals = np.array(vals)
    return float(np.abs(vals - vals[0]).max())


def test_criterion_8_invariants(cfg, sq_pair, rx_schedule, rz_schedule, sq_processes,
                                cp_processes, report):
    checks = {}

    # Lindblad bounds: every sample was verified during the runs; recheck the end
    # points. Frozen spectators remove the weight of their own jumps, so the open
    # two-qubit blocks only need trace <= 1.
    worst_trace, excess = 0.0, 0.0
    runs = [(r.value, True) for r in sq_processes.values()]
    runs += [(cp_processes[False].value, True), (cp_processes[True].value, False)]
    for proc, preserving in runs:
        for i in range(proc.dim):
            check_density_matrix(proc.tensor[-1, i, i], trace=False)
            tr = float(np.real(proc.trace[-1, i, i]))
            if preserving:
                worst_trace = max(worst_trace, abs(tr - 1))
            excess = max(excess, tr - 1)
    checks["trace"] = (worst_trace <= 1e-8 and excess <= 1e-8,
                       f"trace err {worst_trace:.1e}, max excess {excess:.1e}")

    dark_err, cyc_err, hol_err = 0.0, 0.0, 0.0
    for sched in (rx_schedule, rz_schedule):
        model = sched.model
        u = effective_propagators(sched, (0.0,), dt=5e-3)[0]
        dark = dressed_frame(model.theta, model.phi).dark()[:2]
        dark_err = max(dark_err, abs(abs(np.vdot(dark, u @ dark)) - 1))
        psi = bright_state_evolution(model, sched.duration)
        phase = PI - angular(model.chirp) * sched.duration / 2
        cyc_err = max(cyc_err, abs(abs(psi[0]) - 1), abs(np.angle(psi[0] * np.exp(-1j * phase))),
                      abs(np.angle(np.exp(1j * (phase - sched.spec.gamma)))))
        hol_err = max(hol_err, _connection_plus_energy_spread(model, sched.duration))
    checks["dark"] = (dark_err <= 1e-10, f"dark {dark_err:.1e}")
    checks["cyclic"] = (cyc_err <= 1e-6, f"cyclic/phase {cyc_err:.1e}")
    checks["holonomy"] = (hol_err <= 1e-6, f"K+A spread {hol_err:.1e}")

    shift = 0.35
    base = full_model_propagators(rx_schedule, sq_pair, (0.0,), dt=2e-3)[0]
    common = replace(sq_pair, left=replace(sq_pair.left, drift=shift),
                     right=replace(sq_pair.right, drift=shift))
    moved = full_model_propagators(rx_schedule, common, (0.0,), dt=2e-3)[0]
    dfs_err = float(np.abs(moved - base).max())
    checks["dfs"] = (dfs_err <= 1e-6, f"DFS {dfs_err:.1e}")

    closed = cp_processes[False].value
    ret = float(np.real(closed.tensor[-1, 1, 1, 1, 1]))
    checks["leak"] = (ret >= 0.99, f"|22> return {100 * ret:.2f}%")

    order = _rk4_order()
    checks["rk4"] = (abs(order - 4) <= 0.05, f"RK4 order {order:.3f}")

    trunc = 0.0
    for name, sched in (("rx", rx_schedule), ("rz", rz_schedule)):
        psi = np.array(SQ_PLOT_INPUTS[name], dtype=complex)
        f4 = simulate_state_1q(sched, sq_pair.with_levels(4), psi, **sim_options(cfg)).fidelity[-1]
        f6 = simulate_state_1q(sched, sq_pair.with_levels(6), psi, **sim_options(cfg)).fidelity[-1]
        trunc = max(trunc, abs(f6 - f4))
    checks["truncation"] = (trunc < 5e-4, f"d 4->6 {trunc:.1e}")

    ok = all(v[0] for v in checks.values())
    detail = "; ".join(("" if v[0] else "FAILED ") + v[1] for v in checks.values())
    assert report(8, ok, detail)
