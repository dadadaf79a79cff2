"""Artifact writers: deterministic CSV, JSON, minimal SVG line plots and the
run manifest."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
from dataclasses import dataclass, field

import numpy as np


def fmt(value) -> str:
    """12 significant digits for numbers, plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v == 0.0:
            return "0"
        return format(v, ".12g")
    return str(value)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def run_hash(scenario: str, config: dict, version: str) -> str:
    """Hash of everything that determines the numeric outputs."""
    payload = canonical_json({"scenario": scenario, "config": config, "version": version})
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class Table:
    """One plot panel: named columns of equal length."""

    name: str
    columns: list
    rows: list = field(default_factory=list)
    x: str | None = None
    y: tuple = ()
    group: str | None = None

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values")
        self.rows.append(values)

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def csv_text(table: Table, header_hash: str) -> str:
    lines = [f"# holosim {table.name}", f"# manifest-hash: {header_hash}", ",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def svg_text(table: Table, width: int = 640, height: int = 400) -> str:
    """Polyline plot of the table's y columns against its x column."""
    xs_all = np.array(table.column(table.x), dtype=float)
    series = []
    groups = [None]
    if table.group:
        groups = sorted(set(table.column(table.group)), key=str)
    for g in groups:
        if g is None:
            mask = np.ones(len(xs_all), dtype=bool)
        else:
            mask = np.array([v == g for v in table.column(table.group)])
        for col in table.y:
            ys = np.array(table.column(col), dtype=float)[mask]
            label = col if g is None else f"{g}:{col}"
            series.append((label, xs_all[mask], ys))
    allx = np.concatenate([s[1] for s in series])
    ally = np.concatenate([s[2] for s in series])
    x0, x1 = float(np.min(allx)), float(np.max(allx))
    y0, y1 = float(np.min(ally)), float(np.max(ally))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pad = 50

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{table.name}</text>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">{table.x}</text>',
             f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{fmt(round(x0, 6))}</text>',
             f'<text x="{width - pad}" y="{height - pad + 15}" text-anchor="end" font-size="10">{fmt(round(x1, 6))}</text>',
             f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="10">{fmt(round(y0, 6))}</text>',
             f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="10">{fmt(round(y1, 6))}</text>']
    for k, (label, xs, ys) in enumerate(series):
        color = SVG_COLORS[k % len(SVG_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 4}" y="{pad + 14 * k}" font-size="10" fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def versions(package_version: str) -> dict:
    import numpy
    import yaml

    return {
        "holosim": package_version,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "pyyaml": yaml.__version__,
    }


def write_artifacts(out_dir, scenario, tables, reports, config, provenance, formats,
                    package_version, extra=None):
    """Write CSV/SVG per table, one JSON report and manifest.json.

    Returns the manifest dict.
    """
    os.makedirs(out_dir, exist_ok=True)
    rhash = run_hash(scenario, config, package_version)
    files = []
    stem = scenario.replace("-", "_")
    for table in tables:
        if "csv" in formats:
            path = os.path.join(out_dir, f"{table.name}.csv")
            write_text(path, csv_text(table, rhash))
            files.append(path)
        if "svg" in formats and table.x and table.y and table.rows:
            path = os.path.join(out_dir, f"{table.name}.svg")
            write_text(path, svg_text(table))
            files.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, f"{stem}_report.json")
        write_text(path, json.dumps({"scenario": scenario, "manifest_hash": rhash,
                                     "reports": reports}, indent=2, sort_keys=True,
                                    default=_json_default) + "\n")
        files.append(path)
    manifest = {
        "scenario": scenario,
        "manifest_hash": rhash,
        "config": config,
        "provenance": provenance,
        "versions": versions(package_version),
        "outputs": {os.path.basename(p): sha256_file(p) for p in files},
    }
    if extra:
        manifest.update(extra)
    write_text(os.path.join(out_dir, "manifest.json"),
               json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return manifest
