"""Experiment reports and their on-disk forms (CSV, JSON, SVG).

Every file written here starts with the experiment name, seed and full
parameter set so that an output can be traced back to the run that made it.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ExperimentReport", "map_replicas", "write_csv", "svg_plot"]


def _plain(obj):
    """Convert numpy scalars/arrays so json and repr are stable."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        # strict JSON has no NaN; an undefined statistic becomes null
        return float(obj) if math.isfinite(obj) else None
    return obj


@dataclass
class ExperimentReport:
    name: str
    params: dict
    statistics: dict
    passed: bool
    seed: int
    runtime_seconds: float = 0.0
    # bulky per-replica arrays for CSV/SVG output; never part of the JSON summary
    data: dict = field(default_factory=dict, repr=False, compare=False)

    def summary(self, include_runtime=True):
        out = {
            "name": self.name,
            "params": _plain(self.params),
            "statistics": _plain(self.statistics),
            "pass": bool(self.passed),
            "seed": int(self.seed),
        }
        if include_runtime:
            out["runtime_seconds"] = float(self.runtime_seconds)
        return out

    def to_json(self, include_runtime=True):
        return json.dumps(self.summary(include_runtime), sort_keys=True, indent=2) + "\n"

    def header_lines(self):
        params = json.dumps(_plain(self.params), sort_keys=True)
        return [f"experiment: {self.name}", f"seed: {int(self.seed)}", f"params: {params}"]

    def write_json(self, path):
        path = Path(path)
        path.write_text(self.to_json())
        return path

    def verdict_lines(self):
        return [
            f"{self.name}: {'PASS' if self.passed else 'FAIL'}",
            *(f"  {k} = {_fmt(v)}" for k, v in sorted(self.statistics.items())),
        ]


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def map_replicas(fn, args, threads=1):
    """Ordered map over replica arguments.

    Results come back in argument order whatever the pool size, so any
    aggregation done afterwards does not depend on ``threads``.
    """
    args = list(args)
    if threads is None or threads <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, args, chunksize=max(1, len(args) // (4 * threads))))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_csv(path, header, rows, comments=()):
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_plot(
    series,
    title="",
    xlabel="",
    ylabel="",
    comments=(),
    logx=False,
    logy=False,
    width=640,
    height=420,
):
    """Render line series as a standalone SVG document.

    ``series`` is a list of dicts with keys ``x``, ``y``, ``label`` and
    optional ``style`` (``"line"``, ``"step"`` or ``"points"``).
    """
    left, right, top, bottom = 70, 20, 40, 55
    pw, ph = width - left - right, height - top - bottom

    def tx(v):
        return np.log10(v) if logx else v

    def ty(v):
        return np.log10(v) if logy else v

    xs = [tx(np.asarray(s["x"], dtype=float)) for s in series]
    ys = [ty(np.asarray(s["y"], dtype=float)) for s in series]
    allx = np.concatenate([a[np.isfinite(a)] for a in xs]) if xs else np.array([0.0, 1.0])
    ally = np.concatenate([a[np.isfinite(a)] for a in ys]) if ys else np.array([0.0, 1.0])
    x_lo, x_hi = (float(allx.min()), float(allx.max())) if allx.size else (0.0, 1.0)
    y_lo, y_hi = (float(ally.min()), float(ally.max())) if ally.size else (0.0, 1.0)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def px(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    for c in comments:
        out.append(f"<!-- {str(c).replace('--', '- -')} -->")
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>'
    )
    for frac in np.linspace(0.0, 1.0, 5):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        xl = f"1e{xv:.2g}" if logx else f"{xv:.3g}"
        yl = f"1e{yv:.2g}" if logy else f"{yv:.3g}"
        out.append(
            f'<text x="{px(xv):.2f}" y="{top + ph + 16}" text-anchor="middle">{xl}</text>'
        )
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.2f}" text-anchor="end">{yl}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{ylabel}</text>'
    )
    for idx, (s, xa, ya) in enumerate(zip(series, xs, ys)):
        color = s.get("color", _COLORS[idx % len(_COLORS)])
        style = s.get("style", "line")
        ok = np.isfinite(xa) & np.isfinite(ya)
        xa, ya = xa[ok], ya[ok]
        if style == "points":
            for a, b in zip(xa, ya):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{color}"/>')
        else:
            if style == "step" and xa.size:
                xa = np.repeat(xa, 2)[1:]
                ya = np.repeat(ya, 2)[:-1]
            if xa.size > 4000:
                keep = np.unique(np.linspace(0, xa.size - 1, 4000).astype(int))
                xa, ya = xa[keep], ya[keep]
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xa, ya))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * idx
        out.append(
            f'<line x1="{left + 10}" y1="{ly}" x2="{left + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{left + 36}" y="{ly + 4}">{s.get("label", "")}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
