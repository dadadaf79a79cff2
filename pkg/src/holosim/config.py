"""Scenario configuration: a YAML tree validated against a frozen schema.

Every leaf has a default (the reference device and gate parameters), so an
empty file is a complete configuration. Validation returns the resolved
tree together with a provenance map saying which leaves the user set.

Angles may be written as numbers or as simple expressions of ``pi`` such
as ``pi/2``, ``3*pi/4`` or ``-pi``.
"""
from __future__ import annotations

import copy
import math
import re

import yaml

from .errors import ConfigError

TRANSMON_DEFAULTS = {
    # Absolute frequencies only matter through their differences
    # (500 MHz within the first pair, 560 MHz across the middle pair).
    "T1": {"frequency": 5000.0, "anharmonicity": 320.0},
    "T2": {"frequency": 4500.0, "anharmonicity": 300.0},
    "T3": {"frequency": 5060.0, "anharmonicity": 330.0},
    "T4": {"frequency": 4600.0, "anharmonicity": 310.0},
}

DEFAULTS = {
    "device": {
        "transmons": {
            name: {**vals, "drift": 0.0, "decay": 0.004, "dephasing": 0.004}
            for name, vals in TRANSMON_DEFAULTS.items()
        },
        "coupling_12": 12.0,
        "coupling_23": 10.0,
        "dephasing_model": "collective",
    },
    "gates": {
        "rx": {"gamma": "pi/2", "theta": "pi/2", "phi": "pi", "detuning": 0.0, "beta1": 1.58},
        "rz": {"gamma": "pi/2", "theta": "pi", "phi": "pi", "detuning": 18.0, "beta1": 1.98},
        "cp": {"gamma": "pi/2", "beta3": 1.54},
    },
    "simulation": {
        "dt_ps": 1.0,
        "levels_single": 4,
        "levels_pair": 4,
        "levels_spectator": 3,
        "decoherence": True,
        "spectators": True,
        "four_transmon_check": False,
        "four_transmon_dt_ps": 4.0,
        "inputs_single": 1001,
        "inputs_double": 10001,
        "samples": 200,
    },
    "scan": {
        "min": -0.1,
        "max": 0.1,
        "points": 41,
        "detuning_over_g": 1.837,
        "effective_dt_ps": 5.0,
        "angle_points": 119,
        "model": "effective",
        "full_dt_ps": 2.0,
    },
    "calibration": {
        "betas": [0.6, 1.0, 1.58, 1.98],
        "periods": 1.0,
    },
    "output": {
        "directory": None,
        "formats": ["csv", "json"],
    },
}

ANGLE_KEYS = {"gamma", "theta", "phi"}
_ANGLE_RE = re.compile(
    r"^\s*(?P<sign>[-+])?\s*(?:(?P<num>\d+(?:\.\d*)?)\s*\*\s*)?pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$")
FORMATS = ("csv", "json", "svg")


def parse_angle(value, path="angle"):
    """Number or 'k*pi/m' expression -> float radians."""
    if isinstance(value, bool):
        raise ConfigError([(path, "expected an angle")])
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _ANGLE_RE.match(value)
        if m:
            x = math.pi * float(m.group("num") or 1.0) / float(m.group("den") or 1.0)
            return -x if m.group("sign") == "-" else x
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError([(path, f"cannot read {value!r} as an angle")])


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _merge(default, user, path, provenance, problems):
    """Overlay ``user`` on ``default``; record provenance of every leaf."""
    if isinstance(default, dict):
        if user is None:
            user = {}
        if not isinstance(user, dict):
            problems.append((path, "expected a mapping"))
            return copy.deepcopy(default)
        out = {}
        for key in user:
            if key not in default:
                problems.append((f"{path}.{key}" if path else str(key), "unknown key"))
        for key, dval in default.items():
            sub = f"{path}.{key}" if path else key
            if key in user:
                out[key] = _merge(dval, user[key], sub, provenance, problems)
            else:
                out[key] = copy.deepcopy(dval)
                _mark(dval, sub, provenance, "default")
        return out
    provenance[path] = "user"
    return copy.deepcopy(user)


def _mark(value, path, provenance, tag):
    if isinstance(value, dict):
        for k, v in value.items():
            _mark(v, f"{path}.{k}", provenance, tag)
    else:
        provenance[path] = tag


def _check(cfg, problems):
    def num(path, value, lo=None, hi=None, strict_lo=False, integer=False, allow_none=False):
        if value is None and allow_none:
            return
        if not _is_number(value) or not math.isfinite(value):
            problems.append((path, f"expected a finite number, got {value!r}"))
            return
        if integer and int(value) != value:
            problems.append((path, "expected an integer"))
        if lo is not None and (value <= lo if strict_lo else value < lo):
            problems.append((path, f"must be {'>' if strict_lo else '>='} {lo}"))
        if hi is not None and value > hi:
            problems.append((path, f"must be <= {hi}"))

    dev = cfg["device"]
    for name, t in dev["transmons"].items():
        p = f"device.transmons.{name}"
        num(f"{p}.frequency", t["frequency"], 0, strict_lo=True)
        num(f"{p}.anharmonicity", t["anharmonicity"], 0, strict_lo=True)
        num(f"{p}.drift", t["drift"])
        num(f"{p}.decay", t["decay"], 0)
        num(f"{p}.dephasing", t["dephasing"], 0)
    num("device.coupling_12", dev["coupling_12"], 0, strict_lo=True)
    num("device.coupling_23", dev["coupling_23"], 0, strict_lo=True)
    if dev["dephasing_model"] not in ("collective", "independent"):
        problems.append(("device.dephasing_model", "must be 'collective' or 'independent'"))

    for gname, gate in cfg["gates"].items():
        for key in list(gate):
            p = f"gates.{gname}.{key}"
            if key in ANGLE_KEYS:
                try:
                    gate[key] = parse_angle(gate[key], p)
                except ConfigError as exc:
                    problems.extend(exc.problems)
                    continue
                num(p, gate[key])
        if gname in ("rx", "rz"):
            num(f"gates.{gname}.detuning", gate["detuning"])
            num(f"gates.{gname}.beta1", gate["beta1"], 0, 2.4048, strict_lo=True, allow_none=True)
            g = gate.get("gamma")
            if _is_number(g) and not 0 < g < 2 * math.pi:
                problems.append((f"gates.{gname}.gamma", "must lie in (0, 2pi)"))
            th = gate.get("theta")
            if _is_number(th) and not 0 < th <= math.pi:
                problems.append((f"gates.{gname}.theta", "must lie in (0, pi]"))
        else:
            num("gates.cp.beta3", gate["beta3"], 0, 3.83, strict_lo=True)
            g = gate.get("gamma")
            if _is_number(g) and not 0 < g < math.pi:
                problems.append(("gates.cp.gamma", "must lie in (0, pi)"))

    sim = cfg["simulation"]
    num("simulation.dt_ps", sim["dt_ps"], 0, 50, strict_lo=True)
    num("simulation.four_transmon_dt_ps", sim["four_transmon_dt_ps"], 0, 50, strict_lo=True)
    for key in ("levels_single", "levels_pair", "levels_spectator"):
        num(f"simulation.{key}", sim[key], 3, 8, integer=True)
    if _is_number(sim["levels_pair"]) and sim["levels_pair"] < 4:
        problems.append(("simulation.levels_pair", "the pair must host level 3 (>= 4)"))
    for key in ("inputs_single", "inputs_double", "samples"):
        num(f"simulation.{key}", sim[key], 2, integer=True)
    for key in ("decoherence", "spectators", "four_transmon_check"):
        if not isinstance(sim[key], bool):
            problems.append((f"simulation.{key}", "expected true or false"))

    scan = cfg["scan"]
    num("scan.min", scan["min"], -1)
    num("scan.max", scan["max"], hi=1)
    if _is_number(scan["min"]) and _is_number(scan["max"]) and scan["min"] >= scan["max"]:
        problems.append(("scan.max", "must exceed scan.min"))
    num("scan.points", scan["points"], 2, integer=True)
    num("scan.angle_points", scan["angle_points"], 2, integer=True)
    num("scan.detuning_over_g", scan["detuning_over_g"])
    num("scan.effective_dt_ps", scan["effective_dt_ps"], 0, 100, strict_lo=True)
    num("scan.full_dt_ps", scan["full_dt_ps"], 0, 50, strict_lo=True)
    if scan["model"] not in ("effective", "full"):
        problems.append(("scan.model", "must be 'effective' or 'full'"))

    cal = cfg["calibration"]
    if not isinstance(cal["betas"], list) or not cal["betas"]:
        problems.append(("calibration.betas", "expected a non-empty list"))
    else:
        for i, b in enumerate(cal["betas"]):
            num(f"calibration.betas[{i}]", b, 0, 2.4048, strict_lo=True)
    num("calibration.periods", cal["periods"], 0, 10, strict_lo=True)

    out = cfg["output"]
    if out["directory"] is not None and not isinstance(out["directory"], str):
        problems.append(("output.directory", "expected a path string"))
    fmts = out["formats"]
    if isinstance(fmts, str):
        fmts = out["formats"] = [f.strip() for f in fmts.split(",") if f.strip()]
    if not isinstance(fmts, list) or any(f not in FORMATS for f in fmts):
        problems.append(("output.formats", f"entries must be among {FORMATS}"))


def resolve(user_tree=None):
    """(resolved config, provenance) for a parsed user tree; raises ConfigError."""
    problems = []
    provenance = {}
    if user_tree is None:
        user_tree = {}
    if not isinstance(user_tree, dict):
        raise ConfigError([("", "top level must be a mapping")])
    cfg = _merge(DEFAULTS, user_tree, "", provenance, problems)
    if not problems:
        _check(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg, provenance


def load_text(text: str):
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError([(where, f"YAML parse error: {getattr(exc, 'problem', exc)}")]) from exc
    return resolve(tree)


def validate_config(path=None):
    """Read, default-fill and check a config file (None = all defaults)."""
    if path is None:
        return resolve({})
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read file: {exc.strerror}")]) from exc
    return load_text(text)


def set_override(cfg, provenance, dotted: str, value):
    """Apply a command-line override to a resolved config."""
    node = cfg
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node[k]
    node[keys[-1]] = value
    provenance[dotted] = "cli"
