"""Command-line harness: ``lpplab <subcommand> [flags]``.

Every subcommand writes ``<name>.csv``, ``<name>.svg`` and ``<name>.json``
into ``--out`` and exits 0 exactly when its report passes. ``--config``
takes a JSON object whose keys are flag names (dashes or underscores);
flags given on the command line win.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import thresholds
from .env import RngSpec, brownian_row, make_grid
from .fractal import (
    StopRule,
    default_nc_tol,
    levy_experiment,
    local_limit_experiment,
    nc_mask,
    pooled_box_dimension,
    box_counts,
    zero_set_mask,
)
from .identities import IDENTITIES, run_identities
from .lpp import Profile
from .report import ExperimentReport, map_replicas, svg_plot, write_csv
from .sheet import SheetParams, default_sheet_params, difference_profile, growth_experiment

# per-subcommand defaults; keys are argparse dest names
DEFAULTS = {
    "common": {"seed": 0, "threads": 1, "out": "out", "stream": 0},
    "identities": {"count": 1000, "samples": 400},
    "levy": {"replicas": 5000, "rate": 4.0, "t_max": 1.0, "dx": 1e-5, "epsilon": None},
    "profile": {"n": 128, "y_a": -0.25, "y_b": 0.25, "window": [-1.0, 1.0], "cells": 2**17},
    "dimension": {
        "replicas": 50, "n": 128, "y_a": -0.25, "y_b": 0.25, "window": [-1.0, 1.0],
        "cells": 2**17, "k_min": 2, "k_max": None, "tol_factor": thresholds.NC_TOL_FACTOR,
        "zero_dx": 1e-6, "zero_replicas": 20, "target": "both",
    },
    "local-limit": {
        "replicas": 1000, "n": 16, "y_a": -0.25, "y_b": 0.25, "window": [-1.0, 1.0],
        "cells": 2**19, "rule": ["tau:0", "rho:0", "xi:-1,0.9"],
        "eps": [2.0**-6, 2.0**-8, 2.0**-10], "t_eval": 1.0, "oracle": False,
        "oracle_length": 2.0**-7, "oracle_cells": 2**16, "tol": None,
    },
    "growth": {
        "replicas": 200, "n": 4096, "y_a": 4.25, "y_b": 4.75, "M": [1.0, 2.0, 4.0, 8.0],
        "dx_env": 0.25,
    },
}

# boxes at the finest fitted level hold at least this many grid cells
MIN_CELLS_PER_BOX = 64


def _add_common(p):
    s = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=s, help="master seed (u64)")
    p.add_argument("--replicas", type=int, default=s)
    p.add_argument("--threads", type=int, default=s, help="worker processes")
    p.add_argument("--out", default=s, help="output directory")
    p.add_argument("--config", default=s, help="JSON file of flag values")
    p.add_argument("--stream", type=int, default=s, help="first RNG stream index")


def _add_sheet(p):
    s = argparse.SUPPRESS
    p.add_argument("--n", type=int, default=s, help="number of lines")
    p.add_argument("--y-a", type=float, default=s)
    p.add_argument("--y-b", type=float, default=s)
    p.add_argument("--window", type=float, nargs=2, default=s, metavar=("LO", "HI"))
    p.add_argument("--cells", type=int, default=s, help="evaluation cells in the window")


def build_parser():
    s = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="lpplab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", help="fuzz the exact identities")
    _add_common(p)
    p.add_argument("--count", type=int, default=s, help="random environments")
    p.add_argument("--samples", type=int, default=s, help="sampled tuples per environment")

    p = sub.add_parser("levy", help="running max vs occupation local time")
    _add_common(p)
    p.add_argument("--rate", type=float, default=s)
    p.add_argument("--t-max", type=float, default=s)
    p.add_argument("--dx", type=float, default=s)
    p.add_argument("--epsilon", type=float, default=s)

    p = sub.add_parser("profile", help="one difference profile D(x)")
    _add_common(p)
    _add_sheet(p)

    p = sub.add_parser("dimension", help="box-counting dimension of NC(D) and a zero-set calibration")
    _add_common(p)
    _add_sheet(p)
    p.add_argument("--k-min", type=int, default=s)
    p.add_argument("--k-max", type=int, default=s)
    p.add_argument("--tol-factor", type=float, default=s)
    p.add_argument("--zero-dx", type=float, default=s)
    p.add_argument("--zero-replicas", type=int, default=s)
    p.add_argument("--target", choices=("D", "zero-set", "both"), default=s)

    p = sub.add_parser("local-limit", help="increments of D at random points of increase")
    _add_common(p)
    _add_sheet(p)
    p.add_argument("--rule", action="append", default=s,
                   help="tau:L, rho:H, rho_c:C,H or xi:C,D (repeatable)")
    p.add_argument("--eps", type=float, nargs="+", default=s)
    p.add_argument("--t-eval", type=float, default=s)
    p.add_argument("--oracle", action="store_true", default=s)
    p.add_argument("--oracle-length", type=float, default=s)
    p.add_argument("--oracle-cells", type=int, default=s)
    p.add_argument("--tol", type=float, default=s)

    p = sub.add_parser("growth", help="slope of mean D(M) in M")
    _add_common(p)
    p.add_argument("--n", type=int, default=s)
    p.add_argument("--y-a", type=float, default=s)
    p.add_argument("--y-b", type=float, default=s)
    p.add_argument("--M", type=float, nargs="+", default=s)
    p.add_argument("--dx-env", type=float, default=s)
    return parser


def resolve(command, flags, config=None):
    """Merge defaults, config file values and flags (in rising priority)."""
    opts = dict(DEFAULTS["common"])
    opts.update(DEFAULTS[command])
    for key, val in (config or {}).items():
        key = key.replace("-", "_")
        if key not in opts:
            raise ValueError(f"unknown config key {key!r} for {command}")
        opts[key] = val
    opts.update({k: v for k, v in flags.items() if k not in ("command", "config")})
    if opts.get("replicas", 1) is not None and opts.get("replicas", 1) < 1:
        raise ValueError("--replicas must be positive")
    if opts["threads"] < 1:
        raise ValueError("--threads must be positive")
    return opts


def _sheet_params(o):
    lo, hi = o["window"]
    return default_sheet_params(o["n"], o["y_a"], o["y_b"], (lo, hi), o["cells"], o["seed"], o["stream"])


def _ecdf(values):
    v = np.sort(np.asarray(values, dtype=float))
    return v, np.arange(1, v.size + 1) / v.size


def _emit(report, out, header, rows, svg):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    comments = report.header_lines()
    write_csv(out / f"{report.name}.csv", header, rows, comments)
    (out / f"{report.name}.svg").write_text(svg(comments))
    report.write_json(out / f"{report.name}.json")


# ---------------------------------------------------------------- subcommands


def cmd_identities(o):
    report = run_identities(o["count"], o["seed"], o["stream"], o["samples"])
    t = report.data["tally"]
    rows = [(n, t.violations[n], t.checks[n], t.worst[n]) for n in IDENTITIES]

    def svg(c):
        xs = np.arange(len(IDENTITIES))
        w = np.array([max(t.worst[n], 1e-18) for n in IDENTITIES])
        return svg_plot(
            [{"x": xs, "y": w, "label": "worst relative gap", "style": "points"},
             {"x": [0, len(xs) - 1], "y": [thresholds.IDENTITY_RTOL] * 2, "label": "tolerance"}],
            "identity fuzz: worst relative gap per identity", "identity #", "gap", c, logy=True,
        )

    _emit(report, o["out"], ["identity", "violations", "checks", "worst_rel"], rows, svg)
    return report


def cmd_levy(o):
    eps = o["epsilon"] or 10.0 * math.sqrt(o["rate"] * o["dx"])
    report = levy_experiment(o["rate"], o["t_max"], o["dx"], eps, o["replicas"],
                             RngSpec(o["seed"], o["stream"]), o["threads"])
    M, L, sigma = report.data["M"], report.data["L"], report.data["sigma"]
    rows = [(r, m, l) for r, (m, l) in enumerate(zip(M, L))]

    def svg(c):
        xm, fm = _ecdf(M)
        xl, fl = _ecdf(L)
        grid = np.linspace(0, max(xm[-1], xl[-1], 1e-9), 400)
        from .stats import half_normal_cdf

        return svg_plot(
            [{"x": xm, "y": fm, "label": "ECDF running max", "style": "step"},
             {"x": xl, "y": fl, "label": "ECDF occupation local time", "style": "step"},
             {"x": grid, "y": half_normal_cdf(sigma, grid) if sigma > 0 else np.ones_like(grid),
              "label": f"half-normal, sigma={sigma:g}"}],
            "Levy identity at t_max", "value", "CDF", c,
        )

    _emit(report, o["out"], ["replica", "M", "L"], rows, svg)
    return report


def cmd_profile(o):
    import time

    t0 = time.perf_counter()
    params = _sheet_params(o)
    D = difference_profile(params)
    inc = np.diff(D.values)
    tol = default_nc_tol(D)
    mask = nc_mask(D, tol)
    drops = int(np.count_nonzero(inc < -thresholds.IDENTITY_RTOL * max(1.0, np.abs(D.values).max())))
    frac = mask.fraction()
    stats = {
        "D_min": float(D.values.min()),
        "D_max": float(D.values.max()),
        "monotone_violations": drops,
        "flagged_fraction": frac,
        "flagged_fraction_threshold": thresholds.NC_MAX_FLAGGED_FRACTION,
        "nc_tol": tol,
    }
    report = ExperimentReport(
        "profile", params.as_dict(), stats,
        drops == 0 and frac < thresholds.NC_MAX_FLAGGED_FRACTION, params.rng.master_seed,
        time.perf_counter() - t0,
    )
    rows = zip(D.x, D.values)

    def svg(c):
        return svg_plot([{"x": D.x, "y": D.values, "label": "D(x)", "style": "line"}],
                        "difference profile", "x", "D", c)

    _emit(report, o["out"], ["x", "D"], rows, svg)
    return report


def _nc_replica(task):
    params, factors = task
    D = difference_profile(params)
    tol = default_nc_tol(D)
    return [nc_mask(D, tol * f) for f in factors]


def _zero_replica(task):
    grid, rng = task
    return zero_set_mask(Profile(grid, 0, brownian_row(grid, 1.0, rng, 1)))


def _auto_k_max(n_cells):
    return int(math.floor(math.log2(n_cells / MIN_CELLS_PER_BOX)))


def cmd_dimension(o):
    import time
    from dataclasses import replace

    t0 = time.perf_counter()
    stats, params_out, rows_by_level = {}, {}, {}
    passed = True
    series = []
    k_min = o["k_min"]
    if o["target"] in ("D", "both"):
        params = _sheet_params(o)
        base_tol = o["tol_factor"] / thresholds.NC_TOL_FACTOR
        factors = (base_tol, base_tol / 10.0, base_tol * 10.0)
        tasks = [(replace(params, rng=params.rng.child(params.rng.stream_index + r)), factors)
                 for r in range(o["replicas"])]
        masks = map_replicas(_nc_replica, tasks, o["threads"])
        k_max = o["k_max"] or _auto_k_max(params.x_grid.n_points - 1)
        fits = [pooled_box_dimension([m[i] for m in masks], k_min, k_max) for i in range(3)]
        fit = fits[0]
        stats.update({
            "nc_slope": fit.slope, "nc_r_squared": fit.r_squared,
            "nc_slope_tol_div10": fits[1].slope, "nc_slope_tol_x10": fits[2].slope,
            "nc_flagged_fraction": float(np.mean([m[0].fraction() for m in masks])),
            "nc_levels": f"{fit.levels[0]}..{fit.levels[-1]}",
        })
        lo, hi = thresholds.NC_SLOPE_BAND
        ok = lo <= fit.slope <= hi and fit.r_squared >= thresholds.NC_MIN_R2
        stats["nc_pass"] = bool(ok)
        passed = passed and ok
        params_out.update({"sheet": params.as_dict(), "replicas": o["replicas"],
                           "tol_factor": o["tol_factor"], "k_min": k_min, "k_max_D": k_max})
        counts = sum(box_counts(m[0], k_min, k_max) for m in masks) / len(masks)
        for k, c in zip(range(k_min, k_max + 1), counts):
            rows_by_level.setdefault(k, {})["D"] = (params.x_grid.length * 2.0**-k, c)
        series.append({"x": 2.0 ** np.array(fit.levels), "y": fit.counts, "label": "NC(D)",
                       "style": "points"})
        series.append({"x": 2.0 ** np.array(fit.levels),
                       "y": np.exp(fit.intercept) * (2.0 ** np.array(fit.levels) / params.x_grid.length) ** fit.slope,
                       "label": f"fit slope {fit.slope:.3f}"})
    if o["target"] in ("zero-set", "both"):
        n_pts = int(round(1.0 / o["zero_dx"])) + 1
        grid = make_grid(0.0, 1.0 / (n_pts - 1), n_pts)
        # calibration streams sit after the D replicas so they never overlap
        off = o["stream"] + o["replicas"]
        tasks = [(grid, RngSpec(o["seed"], off + r)) for r in range(o["zero_replicas"])]
        zmasks = map_replicas(_zero_replica, tasks, o["threads"])
        kz = _auto_k_max(n_pts - 1) if o["k_max"] is None else o["k_max"]
        zfit = pooled_box_dimension(zmasks, k_min, kz)
        lo, hi = thresholds.ZERO_SET_SLOPE_BAND
        ok = lo <= zfit.slope <= hi and zfit.r_squared >= thresholds.ZERO_SET_MIN_R2
        stats.update({"zero_slope": zfit.slope, "zero_r_squared": zfit.r_squared,
                      "zero_levels": f"{zfit.levels[0]}..{zfit.levels[-1]}", "zero_pass": bool(ok)})
        passed = passed and ok
        params_out.update({"zero_dx": o["zero_dx"], "zero_replicas": o["zero_replicas"],
                           "k_max_zero": kz, "k_min": k_min})
        counts = sum(box_counts(m, k_min, kz) for m in zmasks) / len(zmasks)
        for k, c in zip(range(k_min, kz + 1), counts):
            rows_by_level.setdefault(k, {})["Z"] = (2.0**-k, c)
        series.append({"x": 2.0 ** np.array(zfit.levels), "y": zfit.counts,
                       "label": "Brownian zero set", "style": "points"})
    report = ExperimentReport("dimension", params_out, stats, bool(passed), o["seed"],
                              time.perf_counter() - t0)
    nan = float("nan")
    rows = [
        (k, rows_by_level[k].get("D", (nan, nan))[0], rows_by_level[k].get("D", (nan, nan))[1],
         rows_by_level[k].get("Z", (nan, nan))[0], rows_by_level[k].get("Z", (nan, nan))[1])
        for k in sorted(rows_by_level)
    ]

    def svg(c):
        return svg_plot(series, "box counts", "1/delta (relative)", "N(delta)", c, logx=True, logy=True)

    _emit(report, o["out"], ["level", "delta_D", "mean_count_D", "delta_zero", "mean_count_zero"],
          rows, svg)
    return report


def cmd_local_limit(o):
    params = _sheet_params(o)
    rules = [StopRule.parse(r) for r in o["rule"]]
    og = None
    if o["oracle"]:
        og = make_grid(0.0, o["oracle_length"] / o["oracle_cells"], o["oracle_cells"] + 1)
    report = local_limit_experiment(
        params, rules, o["eps"], o["t_eval"], o["replicas"], o["threads"], o["tol"],
        oracle=o["oracle"], oracle_grid=og,
    )
    samples, eps, sigma = report.data["samples"], report.data["eps"], report.data["sigma"]
    rows = [
        (rule.label, e, r, samples[r, a, b])
        for a, rule in enumerate(rules)
        for b, e in enumerate(eps)
        for r in range(samples.shape[0])
        if np.isfinite(samples[r, a, b])
    ]

    def svg(c):
        from .stats import half_normal_cdf

        series = []
        top = 1e-9
        for a, rule in enumerate(rules):
            col = samples[:, a, -1]
            col = col[np.isfinite(col)]
            if col.size:
                x, f = _ecdf(col)
                top = max(top, x[-1])
                series.append({"x": x, "y": f, "label": f"{rule.label}, eps={eps[-1]:g}", "style": "step"})
        g = np.linspace(0, top, 400)
        series.append({"x": g, "y": half_normal_cdf(sigma, g), "label": f"half-normal sigma={sigma:g}"})
        return svg_plot(series, "rescaled increments at a point of increase", "value", "CDF", c)

    _emit(report, o["out"], ["rule", "eps", "replica", "value"], rows, svg)
    return report


def cmd_growth(o):
    n, y_a, y_b = o["n"], o["y_a"], o["y_b"]
    M = [float(m) for m in o["M"]]
    dx = o["dx_env"]
    h = n ** (2.0 / 3.0)
    x_grid = make_grid(M[0], 1.0, 2) if len(M) < 2 else make_grid(M[0], M[-1] - M[0], 2)
    params = SheetParams(n, y_a, y_b, x_grid, dx, RngSpec(o["seed"], o["stream"]))
    report = growth_experiment(params, M, o["replicas"], o["threads"])
    mean, se = report.data["mean"], report.data["stderr"]
    rows = list(zip(M, mean, se))
    slope, icpt = report.statistics["slope"], report.statistics["intercept"]

    def svg(c):
        mm = np.array(M)
        return svg_plot(
            [{"x": mm, "y": mean, "label": "mean D(M)", "style": "points"},
             {"x": mm, "y": slope * mm + icpt, "label": f"fit slope {slope:.3f}"},
             {"x": mm, "y": report.statistics["target"] * mm + icpt, "label": "target slope"}],
            f"growth of mean D (n={n}, h={h:.1f})", "M", "mean D(M)", c,
        )

    _emit(report, o["out"], ["M", "mean_D", "stderr"], rows, svg)
    return report


COMMANDS = {
    "identities": cmd_identities,
    "levy": cmd_levy,
    "profile": cmd_profile,
    "dimension": cmd_dimension,
    "local-limit": cmd_local_limit,
    "growth": cmd_growth,
}


def main(argv=None):
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns["command"]
    config = None
    if "config" in ns:
        config = json.loads(Path(ns["config"]).read_text())
        if not isinstance(config, dict):
            parser.error("--config must hold a JSON object")
    try:
        opts = resolve(command, ns, config)
        report = COMMANDS[command](opts)
    except ValueError as exc:
        print(f"lpplab {command}: {exc}", file=sys.stderr)
        return 2
    print("\n".join(report.verdict_lines()))
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
