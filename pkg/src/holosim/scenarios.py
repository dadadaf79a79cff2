"""Named experiment scenarios. Each builds its devices and gates from a
resolved configuration, runs the simulations and returns tables (one per
plot panel) plus JSON-ready gate reports."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .artifacts import Table
from .design import (CpGateDesign, PulseSchedule, SingleQubitGateSpec, conventional_time,
                     design_cp_gate, design_single_qubit_gate, ideal_unitary_1q,
                     ideal_unitary_2q, rabi_probe_schedule, solve_toc, toc_closed_form_time)
from .device import TransmonSpec
from .errors import InvalidInputError
from .metrics import (GateReport, Stopwatch, average_fidelity, cp_input_states, fit_rabi_rate,
                      gate_fidelity_series, infidelity_budget, robustness_scan,
                      sq_input_states)
from .numerics import angular
from .simulate import (cp_pair, effective_evolution_1q, effective_propagators,
                       full_evolution_1q, simulate_cp_four_transmon, simulate_process_1q,
                       simulate_process_cp, simulate_state_1q, single_qubit_pair)

# Inputs whose dynamics are plotted.
SQ_PLOT_INPUTS = {"rx": (1.0, 0.0), "rz": (1 / math.sqrt(2), 1 / math.sqrt(2))}
CP_PLOT_INPUT = np.array([0, 1, 0, 1]) / math.sqrt(2)
RABI_TOLERANCE = 0.01
OVERLAP_FLOOR = 0.995


# ----------------------------------------------------------------------------
# building blocks from config


def transmon(cfg, name: str, levels: int) -> TransmonSpec:
    t = cfg["device"]["transmons"][name]
    return TransmonSpec(t["frequency"], t["anharmonicity"], int(levels), t["drift"],
                        t["decay"], t["dephasing"])


def sq_device(cfg):
    levels = cfg["simulation"]["levels_single"]
    return single_qubit_pair(transmon(cfg, "T1", levels), transmon(cfg, "T2", levels),
                             cfg["device"]["coupling_12"])


def cp_device(cfg):
    sim = cfg["simulation"]
    pair = cp_pair(transmon(cfg, "T2", sim["levels_pair"]), transmon(cfg, "T3", sim["levels_pair"]),
                   cfg["device"]["coupling_23"])
    outer = (transmon(cfg, "T1", sim["levels_spectator"]), transmon(cfg, "T4", sim["levels_spectator"]))
    return pair, outer


def gate_spec(cfg, name: str) -> SingleQubitGateSpec:
    g = cfg["gates"][name]
    return SingleQubitGateSpec(g["gamma"], g["theta"], g["phi"] % (2 * math.pi))


def sq_schedule(cfg, name: str, device=None) -> PulseSchedule:
    g = cfg["gates"][name]
    return design_single_qubit_gate(gate_spec(cfg, name), device or sq_device(cfg),
                                    g["detuning"], g["beta1"])


def cp_design(cfg, pair=None) -> CpGateDesign:
    if pair is None:
        pair, _ = cp_device(cfg)
    g = cfg["gates"]["cp"]
    return design_cp_gate(g["gamma"], pair, g["beta3"])


def sim_options(cfg, decoherence=None):
    sim = cfg["simulation"]
    return {
        "decoherence": sim["decoherence"] if decoherence is None else decoherence,
        "dephasing": cfg["device"]["dephasing_model"],
        "dt": sim["dt_ps"] * 1e-3,
        "samples": sim["samples"],
    }


def schedule_to_dict(schedule: PulseSchedule) -> dict:
    segs = []
    for s in schedule.segments:
        segs.append({
            "start_ns": s.start,
            "duration_ns": s.duration,
            "tones": [asdict(t) for t in s.tones],
            "effective": {k: v for k, v in asdict(s.model).items()},
        })
    out = {"scheme": schedule.scheme, "detuning_mhz": schedule.detuning,
           "duration_ns": schedule.duration, "segments": segs}
    if schedule.spec is not None:
        out["gate"] = asdict(schedule.spec)
    for key in ("beta1", "beta2"):
        if key in schedule.extra:
            out[key] = schedule.extra[key]
    return out


def cp_design_to_dict(design: CpGateDesign) -> dict:
    out = {k: getattr(design, k) for k in ("gamma", "beta3", "detuning", "chirp", "duration",
                                            "coupling", "alpha_mod", "alpha_other")}
    out["tau0"] = design.tau0
    out["residuals"] = list(design.residuals())
    out["schedule"] = schedule_to_dict(design.schedule)
    return out


def parallel_map(fn, items, threads: int):
    """Ordered map, fanned out to a process pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# scenario bodies


def gate_time_curve(cfg, threads=1):
    n = cfg["scan"]["angle_points"]
    angles = [2 * math.pi * k / (n + 1) for k in range(1, n + 1)]
    curve = Table("gate_time_curve", ["angle_rad", "tau_toc_over_tau0", "tau_conv_over_tau0"],
                  x="angle_rad", y=("tau_toc_over_tau0", "tau_conv_over_tau0"))
    detuned = Table("gate_time_detuning",
                    ["detuning_over_g", "angle_rad", "tau_toc_over_tau0", "closed_form_over_tau0"],
                    x="angle_rad", y=("tau_toc_over_tau0",), group="detuning_over_g")
    # tau/tau0 depends on the detuning only through Delta/g, so g = 1 MHz.
    g = 1.0
    tau0 = conventional_time(g)
    worst = 0.0
    for a in angles:
        curve.add(a, solve_toc(a, 0.0, g).duration / tau0, 1.0)
    for ratio in (0.0, 0.5, 1.837):
        for a in angles:
            toc = solve_toc(a, ratio * g, g)
            closed = toc_closed_form_time(a, ratio * g, toc.chirp, g) / tau0
            worst = max(worst, abs(closed - toc.duration / tau0) / closed)
            detuned.add(ratio, a, toc.duration / tau0, closed)
    report = {"name": "gate-time-curve", "max_relative_closed_form_gap": worst,
              "tau_over_tau0_at_half_pi": solve_toc(math.pi / 2, 0.0, g).duration / tau0}
    return [curve, detuned], [report]


def _robustness_one(args):
    cfg, name, axis = args
    device = sq_device(cfg)
    sched = sq_schedule(cfg, name, device)
    scan = cfg["scan"]
    grid = np.linspace(scan["min"], scan["max"], int(scan["points"]))
    table = robustness_scan(sched.spec, device, axis, grid,
                            detuning=scan["detuning_over_g"] * sched.model.g,
                            beta1=cfg["gates"][name]["beta1"], model=scan["model"],
                            dt=scan[f"{scan['model']}_dt_ps"] * 1e-3)
    return name, table, sched.model.g


def robustness(cfg, axis, threads=1):
    rows = parallel_map(_robustness_one, [(cfg, "rx", axis), (cfg, "rz", axis)], threads)
    table = Table(f"robustness_{axis}", ["gate", "error", "f_toc", "f_conv", "delta_f"],
                  x="error", y=("delta_f",), group="gate")
    reports = []
    for name, t, g in rows:
        for e, a, b, d in zip(t.errors, t.f_toc, t.f_conv, t.delta):
            table.add(name, e, a, b, d)
        zero = np.argmin(np.abs(t.errors))
        reports.append({"name": name, "axis": axis, "model": cfg["scan"]["model"], "coupling_mhz": g,
                        "detuning_mhz": cfg["scan"]["detuning_over_g"] * g,
                        "mean_delta_f": t.mean_delta(),
                        "delta_f_at_zero": float(t.delta[zero]) if t.errors[zero] == 0 else None})
    return [table], reports


def sq_dynamics(cfg, name, threads=1):
    device = sq_device(cfg)
    sched = sq_schedule(cfg, name, device)
    psi = np.array(SQ_PLOT_INPUTS[name], dtype=complex)
    opts = sim_options(cfg)
    with Stopwatch() as sw:
        res = simulate_state_1q(sched, device, psi, **opts)
    label = name[1]
    table = Table(f"sq_dynamics_{label}",
                  ["t_ns", "pop_0L", "pop_1L", "pop_aux", "pop_leak", "fidelity"],
                  x="t_ns", y=("pop_0L", "pop_1L", "pop_aux", "fidelity"))
    p = res.populations
    for k, t in enumerate(res.times):
        table.add(t, p["0"][k], p["1"][k], p["a"][k], p["leakage"][k], res.fidelity[k])
    report = GateReport(name, schedule_to_dict(sched), ideal_unitary_1q(sched.spec),
                        {"input": [list(map(float, psi.real)), list(map(float, psi.imag))],
                         "final": float(res.fidelity[-1])},
                        wall_clock=sw.elapsed, extra={"decoherence": opts["decoherence"]})
    return [table], [report.to_dict()]


def _sq_process(args):
    cfg, name, decoherence = args
    device = sq_device(cfg)
    sched = sq_schedule(cfg, name, device)
    with Stopwatch() as sw:
        proc = simulate_process_1q(sched, device, **sim_options(cfg, decoherence))
    return sched, proc, sw.elapsed


def sq_gate_fidelity(cfg, threads=1):
    runs = parallel_map(_sq_process, [(cfg, "rx", None), (cfg, "rz", None)], threads)
    inputs = sq_input_states(cfg["simulation"]["inputs_single"])
    table = Table("sq_gate_fidelity", ["gate", "t_ns", "gate_fidelity"],
                  x="t_ns", y=("gate_fidelity",), group="gate")
    reports = []
    for name, (sched, proc, elapsed) in zip(("rx", "rz"), runs):
        target = ideal_unitary_1q(sched.spec)
        series = gate_fidelity_series(proc, target, inputs)
        for t, f in zip(proc.times, series):
            table.add(name, t, f)
        reports.append(GateReport(name, schedule_to_dict(sched), target,
                                  gate_fidelity=average_fidelity(proc, target, inputs),
                                  wall_clock=elapsed,
                                  extra={"inputs": len(inputs)}).to_dict())
    return [table], reports


def _cp_process(cfg, decoherence=None):
    pair, outer = cp_device(cfg)
    design = cp_design(cfg, pair)
    spectators = outer if cfg["simulation"]["spectators"] else (None, None)
    opts = sim_options(cfg, decoherence)
    with Stopwatch() as sw:
        proc = simulate_process_cp(design, pair, spectators, **opts)
    return pair, outer, design, proc, sw.elapsed


def cp_dynamics(cfg, threads=1):
    pair, outer, design, proc, elapsed = _cp_process(cfg)
    target = ideal_unitary_2q(design.gamma)
    pops = proc.populations(CP_PLOT_INPUT)
    fid = proc.fidelity_series(CP_PLOT_INPUT, target @ CP_PLOT_INPUT)
    table = Table("cp_dynamics", ["t_ns", "pop_00", "pop_01", "pop_10", "pop_11", "pop_aux",
                                  "pop_leak", "fidelity"],
                  x="t_ns", y=("pop_01", "pop_11", "pop_aux", "fidelity"))
    for k, t in enumerate(proc.times):
        table.add(t, pops["00"][k], pops["01"][k], pops["10"][k], pops["11"][k],
                  pops["a"][k], pops["leakage"][k], fid[k])
    extra = {"design": cp_design_to_dict(design), "decoherence": cfg["simulation"]["decoherence"]}
    tables = [table]
    if cfg["simulation"]["four_transmon_check"]:
        sim = cfg["simulation"]
        with Stopwatch() as sw:
            times, fids = simulate_cp_four_transmon(
                design, pair, outer[0], outer[1], CP_PLOT_INPUT,
                dephasing=cfg["device"]["dephasing_model"], decoherence=sim["decoherence"],
                dt=sim["four_transmon_dt_ps"] * 1e-3, samples=sim["samples"])
        check = Table("cp_four_transmon_check", ["t_ns", "fidelity"], x="t_ns", y=("fidelity",))
        for t, f in zip(times, fids):
            check.add(t, f)
        tables.append(check)
        extra["four_transmon"] = {"final_fidelity": float(fids[-1]),
                                  "difference_pp": 100 * float(fids[-1] - fid[-1]),
                                  "wall_clock_s": sw.elapsed}
    report = GateReport("cp", cp_design_to_dict(design)["schedule"], target,
                        {"final": float(fid[-1])}, wall_clock=elapsed, extra=extra)
    return tables, [report.to_dict()]


def cp_gate_fidelity(cfg, threads=1):
    pair, outer, design, proc, elapsed = _cp_process(cfg)
    target = ideal_unitary_2q(design.gamma)
    inputs = cp_input_states(cfg["simulation"]["inputs_double"])
    series = gate_fidelity_series(proc, target, inputs)
    table = Table("cp_gate_fidelity", ["gate", "t_ns", "gate_fidelity"],
                  x="t_ns", y=("gate_fidelity",), group="gate")
    for t, f in zip(proc.times, series):
        table.add("cp", t, f)
    report = GateReport("cp", cp_design_to_dict(design)["schedule"], target,
                        gate_fidelity=float(series[-1]), wall_clock=elapsed,
                        extra={"inputs": len(inputs), "design": cp_design_to_dict(design)})
    return [table], [report.to_dict()]


def effective_gate_fidelity(schedule: PulseSchedule, inputs, dt: float) -> float:
    """Average fidelity of the noiseless effective-model gate."""
    u = effective_propagators(schedule, (0.0,), "drift", dt)[0]
    target = ideal_unitary_1q(schedule.spec)
    c = np.asarray(inputs, dtype=complex)
    return float(np.mean(np.abs(np.einsum("ni,ij,nj->n", (c @ target.T).conj(), u, c)) ** 2))


def infidelity_budget_scenario(cfg, threads=1):
    decoherent = cfg["simulation"]["decoherence"]
    jobs = [(cfg, name, flag) for name in ("rx", "rz") for flag in (decoherent, False)]
    runs = parallel_map(_sq_process, jobs, threads)
    inputs = sq_input_states(cfg["simulation"]["inputs_single"])
    table = Table("infidelity_budget", ["gate", "level", "f_open", "f_closed", "f_effective",
                                        "decoherence", "high_order", "residual"])
    reports = []
    dt_eff = cfg["scan"]["effective_dt_ps"] * 1e-3
    for k, name in enumerate(("rx", "rz")):
        (sched, p_open, t_open), (_, p_closed, t_closed) = runs[2 * k], runs[2 * k + 1]
        target = ideal_unitary_1q(sched.spec)
        psi = np.array(SQ_PLOT_INPUTS[name], dtype=complex)
        f_eff = effective_gate_fidelity(sched, inputs, dt_eff)
        f_eff_state = effective_gate_fidelity(sched, psi[None], dt_eff)
        levels = {
            "gate": (average_fidelity(p_open, target, inputs),
                     average_fidelity(p_closed, target, inputs), f_eff),
            "state": (p_open.state_fidelity(psi, target @ psi),
                      p_closed.state_fidelity(psi, target @ psi), f_eff_state),
        }
        budgets = {}
        for level, (fo, fc, fe) in levels.items():
            b = infidelity_budget(fo, fc, fe)
            budgets[level] = asdict(b)
            table.add(name, level, fo, fc, fe, b.decoherence, b.high_order, b.residual)
        gb = infidelity_budget(*levels["gate"])
        reports.append(GateReport(name, schedule_to_dict(sched), target,
                                  {"final": levels["state"][0]}, levels["gate"][0], gb,
                                  t_open + t_closed,
                                  extra={"budgets": budgets}).to_dict())
    return [table], reports


def _calibrate_one(args):
    cfg, beta1 = args
    device = sq_device(cfg)
    g = cfg["gates"]["rx"]
    sched = rabi_probe_schedule(device, beta1, g["theta"], g["phi"] % (2 * math.pi),
                                cfg["calibration"]["periods"])
    dt = cfg["simulation"]["dt_ps"] * 1e-3
    samples = 1000
    tf, af, _ = full_evolution_1q(sched, device, [1, 0], dt=dt, samples=samples)
    te, ae = effective_evolution_1q(sched, [1, 0], dt=dt, samples=samples)
    weight = math.cos(sched.model.theta / 2) ** 2
    expected = angular(sched.model.g)
    w_full = fit_rabi_rate(tf, np.abs(af[:, 2]) ** 2, weight, expected)
    w_eff = fit_rabi_rate(te, np.abs(ae[:, 2]) ** 2, weight, expected)
    # Phase offset of <a|U(t)|0_L> between the models, weighted over the run.
    offset = float(np.angle(np.sum(ae[:, 2].conj() * af[:, 2])))
    return beta1, sched.model.g, w_full, w_eff, offset


def _overlap_one(args):
    cfg, name = args
    device = sq_device(cfg)
    sched = sq_schedule(cfg, name, device)
    dt = cfg["simulation"]["dt_ps"] * 1e-3
    samples = cfg["simulation"]["samples"]
    tf, af, leak = full_evolution_1q(sched, device, [1, 0], dt=dt, samples=samples)
    te, ae = effective_evolution_1q(sched, [1, 0], dt=dt, samples=samples)
    return name, tf, np.abs(np.sum(ae.conj() * af, axis=1)) ** 2, leak


def calibrate_effective(cfg, threads=1):
    betas = cfg["calibration"]["betas"]
    jobs = [(_calibrate_one, (cfg, b)) for b in betas] + [(_overlap_one, (cfg, n)) for n in ("rx", "rz")]
    results = parallel_map(_call, jobs, threads)
    cal = Table("calibration_rabi", ["beta1", "coupling_mhz", "rabi_full", "rabi_effective",
                                     "rabi_ratio", "phase_offset_rad"],
                x="beta1", y=("rabi_ratio",))
    reports = []
    ok = True
    for beta1, g, w_full, w_eff, offset in results[:len(betas)]:
        ratio = w_full / w_eff
        cal.add(beta1, g, w_full, w_eff, ratio, offset)
        within = abs(ratio - 1) <= RABI_TOLERANCE
        # A flipped phase convention shows up as an offset near pi.
        phase_ok = abs(offset) < 0.5
        ok = ok and within and phase_ok
        reports.append({"name": f"rabi_beta1_{beta1:g}", "rabi_ratio": ratio,
                        "within_tolerance": within, "phase_offset_rad": offset,
                        "phase_convention_ok": phase_ok})
    ovl = Table("effective_overlap", ["gate", "t_ns", "overlap", "leakage"],
                x="t_ns", y=("overlap",), group="gate")
    for name, times, overlap, leak in results[len(betas):]:
        for t, o, l in zip(times, overlap, leak):
            ovl.add(name, t, o, l)
        passed = overlap[-1] >= OVERLAP_FLOOR
        ok = ok and passed
        reports.append({"name": f"overlap_{name}", "final_overlap": float(overlap[-1]),
                        "above_floor": bool(passed)})
    reports.append({"name": "calibration", "passed": bool(ok)})
    return [cal, ovl], reports


def _call(job):
    fn, args = job
    return fn(args)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    runtime_s: float
    run: object


SCENARIOS = {s.name: s for s in (
    Scenario("calibrate-effective",
             "effective vs full model: Rabi rates, coupling phase and gate overlap", 90,
             calibrate_effective),
    Scenario("cp-dynamics", "controlled-phase populations and fidelity over the gate", 35,
             cp_dynamics),
    Scenario("cp-gate-fidelity", "controlled-phase fidelity averaged over 10001 product inputs",
             35, cp_gate_fidelity),
    Scenario("gate-time-curve", "time-optimal vs conventional gate time over the rotation angle",
             1, gate_time_curve),
    Scenario("infidelity-budget", "decoherence / high-order / residual split for R_x and R_z",
             70, infidelity_budget_scenario),
    Scenario("robustness-coupling", "fidelity gain over the conventional gate vs coupling error",
             5, lambda cfg, threads=1: robustness(cfg, "coupling", threads)),
    Scenario("robustness-drift", "fidelity gain over the conventional gate vs drift difference",
             5, lambda cfg, threads=1: robustness(cfg, "drift", threads)),
    Scenario("sq-dynamics-x", "R_x(pi/2) populations and state fidelity from |0>_L", 15,
             lambda cfg, threads=1: sq_dynamics(cfg, "rx", threads)),
    Scenario("sq-dynamics-z", "R_z(pi/2) populations and state fidelity from |+>_L", 10,
             lambda cfg, threads=1: sq_dynamics(cfg, "rz", threads)),
    Scenario("sq-gate-fidelity", "R_x and R_z fidelity averaged over 1001 inputs", 35,
             sq_gate_fidelity),
)}


def list_scenarios():
    """(name, description, runtime estimate in s), alphabetical."""
    return [(s.name, s.description, s.runtime_s) for s in sorted(SCENARIOS.values(),
                                                                  key=lambda s: s.name)]


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise InvalidInputError(f"unknown scenario {name!r}; try 'holosim list'") from None
