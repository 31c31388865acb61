"""Brownian LPP prelimit of the parabolic Airy sheet and its difference profile.

With ``h = n**(2/3)`` the sheet coordinate ``y`` is the start ``(2*y*h, n)``
and ``x`` is the end ``(n + 2*x*h, 1)``; the estimator is

    S_n(y, x) = n**(-1/3) * (B[(2yh, n) -> (n + 2xh, 1)] - 2n - 2(x - y)h)

in an environment of ``n`` independent rate-one Brownian lines. The
difference profile is ``D(x) = S_n(y_b, x) - S_n(y_a, x)`` on one shared
environment.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .env import Grid, LineEnsemble, RngSpec, brownian_row, make_grid
from .errors import OutOfRangeError
from .lpp import BoundaryData, LatticePoint, Profile, lpp_profile, lpp_value, z_layers
from .report import ExperimentReport, map_replicas
from .stats import linear_fit
from . import thresholds

__all__ = [
    "SheetParams",
    "BoundaryData",
    "default_sheet_params",
    "environment_grid",
    "sheet_environment",
    "sheet_value",
    "raw_difference_profile",
    "difference_profile",
    "boundary_data",
    "z_processes",
    "maximizer_index",
    "maximizer_indices",
    "growth_experiment",
]


@dataclass(frozen=True)
class SheetParams:
    n: int
    y_a: float
    y_b: float
    x_grid: Grid
    dx_env: float
    rng: RngSpec
    rate: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.y_b < self.y_a:
            raise ValueError("need y_b >= y_a")
        if not self.dx_env > 0:
            raise ValueError("dx_env must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    @property
    def h(self):
        return self.n ** (2.0 / 3.0)

    def start_position(self, y):
        return 2.0 * y * self.h

    def end_position(self, x):
        return self.n + 2.0 * np.asarray(x, dtype=float) * self.h

    def as_dict(self):
        return {
            "n": self.n,
            "y_a": self.y_a,
            "y_b": self.y_b,
            "x0": self.x_grid.x0,
            "x_dx": self.x_grid.dx,
            "x_points": self.x_grid.n_points,
            "dx_env": self.dx_env,
            "rate": self.rate,
            "seed": self.rng.master_seed,
            "stream": self.rng.stream_index,
        }


def default_sheet_params(
    n=128, y_a=-0.25, y_b=0.25, window=(-1.0, 1.0), cells=2**17, seed=0, stream=0
):
    """Desk-scale defaults: an evaluation window of ``cells`` cells, one
    environment step per window cell."""
    lo, hi = window
    x_grid = make_grid(lo, (hi - lo) / cells, cells + 1)
    dx_env = x_grid.dx * 2.0 * n ** (2.0 / 3.0)
    return SheetParams(n, y_a, y_b, x_grid, dx_env, RngSpec(seed, stream))


def environment_grid(params, xs=None):
    """Environment grid covering both starts and every end position.

    The first evaluation point lands exactly on a grid point; the rest are
    snapped to their nearest grid point.
    """
    xs = params.x_grid.points if xs is None else np.asarray(xs, dtype=float)
    ends = params.end_position(xs)
    lo = min(params.start_position(params.y_a), params.start_position(params.y_b))
    dx = params.dx_env
    anchor = float(ends[0])
    i0 = max(0, math.ceil((anchor - lo) / dx - 1e-9))
    x0 = anchor - i0 * dx
    n_pts = int(math.floor((float(np.max(ends)) - x0) / dx + 0.5)) + 1
    return make_grid(x0, dx, max(n_pts, 2))


def _snap(grid, pos, what):
    idx = int(np.rint((pos - grid.x0) / grid.dx))
    if not 0 <= idx < grid.n_points:
        raise OutOfRangeError(f"{what} position {pos:.6g} lies outside the environment")
    if abs(grid.point(idx) - pos) > 0.5 * grid.dx * (1 + 1e-9):
        raise OutOfRangeError(f"{what} position {pos:.6g} cannot be snapped to the grid")
    return idx


def _snap_all(grid, positions, what):
    idx = np.rint((np.asarray(positions) - grid.x0) / grid.dx).astype(np.int64)
    if idx.min() < 0 or idx.max() >= grid.n_points:
        raise OutOfRangeError(f"{what} positions fall outside the environment")
    return idx


def sheet_environment(params, xs=None):
    """Materialize the ``n``-line Brownian environment addressed by ``params.rng``."""
    grid = environment_grid(params, xs)
    rows = [brownian_row(grid, params.rate, params.rng, line) for line in range(1, params.n + 1)]
    return LineEnsemble(grid, np.array(rows), params.rate)


def sheet_value(env, params, y, x):
    """Scaled passage value estimating the sheet at ``(y, x)``."""
    if env.k < params.n:
        raise OutOfRangeError(f"environment has {env.k} lines, need n = {params.n}")
    i_s = _snap(env.grid, params.start_position(y), "start")
    i_e = _snap(env.grid, float(params.end_position(x)), "end")
    if i_e < i_s:
        raise OutOfRangeError("end position lies left of the start position")
    raw = lpp_value(env, LatticePoint(i_s, params.n), LatticePoint(i_e, 1))
    n, h = params.n, params.h
    return (raw - 2.0 * n - 2.0 * (x - y) * h) / n ** (1.0 / 3.0)


def _passage_to_top(row_of, n, starts):
    """Passage values to line 1 from ``(y, n)`` for each ``y`` in ``starts``.

    ``row_of(line)`` supplies full rows; they are requested from line ``n``
    upwards, once each, so a sampler never has to hold the whole ensemble.
    Arithmetic matches :func:`lpplab.lpp.lpp_profile` operation for operation.
    """
    bottom = row_of(n)
    Ls = [bottom[y:] - bottom[y] for y in starts]
    bufs = [np.empty_like(L) for L in Ls]
    for j in range(n - 1, 0, -1):
        row = row_of(j)
        for y, L, buf in zip(starts, Ls, bufs):
            fj = row[y:]
            np.subtract(L, fj, out=buf)
            np.maximum.accumulate(buf, out=buf)
            np.add(buf, fj, out=L)
    return Ls


def raw_difference_profile(env, start_a, start_b, target_line=1):
    """Unscaled ``f[start_b -> (x, m)] - f[start_a -> (x, m)]`` for ``x >= both starts``."""
    if start_a.line_index != start_b.line_index:
        raise ValueError("both starts must be on the same line")
    pa = lpp_profile(env, start_a, target_line)
    pb = lpp_profile(env, start_b, target_line)
    off = max(pa.offset, pb.offset)
    va = pa.values[off - pa.offset :]
    vb = pb.values[off - pb.offset :]
    return Profile(env.grid, off, vb - va)


def _difference_values(params, xs, env=None):
    grid = env.grid if env is not None else environment_grid(params, xs)
    if env is not None and env.k < params.n:
        raise OutOfRangeError(f"environment has {env.k} lines, need n = {params.n}")
    i_a = _snap(grid, params.start_position(params.y_a), "start y_a")
    i_b = _snap(grid, params.start_position(params.y_b), "start y_b")
    idx = _snap_all(grid, params.end_position(xs), "end")
    if idx.min() < max(i_a, i_b):
        raise OutOfRangeError("evaluation window starts left of a start position")
    if env is not None:
        row_of = env.line
    else:
        def row_of(line):
            return brownian_row(grid, params.rate, params.rng, line)
    La, Lb = _passage_to_top(row_of, params.n, [i_a, i_b])
    n, h = params.n, params.h
    shift = 2.0 * (params.y_b - params.y_a) * h
    return ((Lb[idx - i_b] - La[idx - i_a]) + shift) / n ** (1.0 / 3.0)


def difference_profile(params, env=None):
    """``D(x) = S_n(y_b, x) - S_n(y_a, x)`` on ``params.x_grid``.

    Without ``env`` the environment is drawn line by line from
    ``params.rng``; the result equals the one computed on
    :func:`sheet_environment` bit for bit.
    """
    vals = _difference_values(params, params.x_grid.points, env)
    return Profile(params.x_grid, 0, vals)


def boundary_data(env, start, column, k):
    """Finite-depth boundary vector ``b_i = f[start -> (col, i)] - f[start -> (col, 1)]``.

    The additive normalizer of the limiting object is left out; every use
    here is invariant under adding one constant to all ``b_i``.
    """
    start.check(env)
    if column < start.grid_index or column >= env.grid.n_points:
        raise ValueError("boundary column must lie right of the start, inside the grid")
    if not 1 <= k <= start.line_index:
        raise ValueError(f"k must lie in 1..{start.line_index}")
    n, y = start.line_index, start.grid_index
    c = column - y
    f = env.lines[:, y : column + 1]
    L = f[n - 1] - f[n - 1, 0]
    at_col = np.empty(n)
    at_col[n - 1] = L[c]
    for j in range(n - 1, 0, -1):
        fj = f[j - 1]
        L = np.maximum.accumulate(L - fj) + fj
        at_col[j - 1] = L[c]
    return BoundaryData(column, at_col[:k] - at_col[0])


def z_processes(env, boundary):
    """``[Z_1, .., Z_K]`` from the boundary column rightward."""
    layers = z_layers(env, boundary, 1)
    return [Profile(env.grid, boundary.column_index, row) for row in layers[::-1]]


def _candidates(env, boundary):
    lam = boundary.column_index
    K = boundary.k
    if K > env.k:
        raise ValueError(f"boundary has {K} values but the environment only {env.k} lines")
    return np.array(
        [
            boundary.values[j - 1] + lpp_profile(env, LatticePoint(lam, j), 1).values
            for j in range(1, K + 1)
        ]
    )


def _first_argmax(cand, rtol):
    best = cand.max(axis=0)
    tol = rtol * np.maximum(1.0, np.abs(best))
    return np.argmax(cand >= best - tol, axis=0) + 1


def maximizer_indices(env, boundary, rtol=0.0):
    """Smallest line ``j`` maximizing ``b_j + f[(lam, j) -> (x, 1)]``, for every ``x >= lam``.

    With ``rtol > 0`` candidates within ``rtol*max(1, |best|)`` of the best
    count as ties, which keeps the smallest-index rule stable under roundoff.
    """
    return _first_argmax(_candidates(env, boundary), rtol)


def maximizer_index(env, boundary, x_index, rtol=0.0):
    lam = boundary.column_index
    if x_index < lam or x_index >= env.grid.n_points:
        raise ValueError("x_index must lie at or right of the boundary column")
    cand = _candidates(env, boundary)[:, x_index - lam]
    return int(_first_argmax(cand[:, None], rtol)[0])


def _growth_replica(task):
    params, M = task
    return _difference_values(params, M)


def growth_experiment(params, M_list, replicas, threads=1):
    """Mean of ``D(M)`` against ``M`` and its least-squares slope.

    Each replica draws one environment (stream ``params.rng.stream_index + r``)
    and evaluates ``D`` at every ``M``. The pass band is
    ``[0.85, 1.15] * 2*(y_b - y_a)``; for ``y_a == y_b`` the slope must be 0.
    """
    t0 = time.perf_counter()
    M = np.asarray(M_list, dtype=float)
    if M.ndim != 1 or M.size < 2 or np.any(np.diff(M) <= 0):
        raise ValueError("M_list must be increasing with at least two values")
    if replicas < thresholds.GROWTH_MIN_REPLICAS:
        raise ValueError(f"growth needs at least {thresholds.GROWTH_MIN_REPLICAS} replicas")
    base = params.rng
    tasks = [(replace(params, rng=base.child(base.stream_index + r)), M) for r in range(replicas)]
    samples = np.array(map_replicas(_growth_replica, tasks, threads))
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(replicas)
    slope, intercept, r2 = linear_fit(M, mean)
    target = 2.0 * (params.y_b - params.y_a)
    lo, hi = thresholds.GROWTH_SLOPE_BAND
    if target == 0:
        passed = abs(slope) <= thresholds.IDENTITY_ATOL
    else:
        passed = lo * target <= slope <= hi * target
    stats = {
        "slope": slope,
        "intercept": intercept,
        "r_squared": r2,
        "target": target,
        "slope_ratio": slope / target if target else float("nan"),
        "replicas": replicas,
    }
    for m, mu, se in zip(M, mean, stderr):
        stats[f"mean_D@{m:g}"] = float(mu)
        stats[f"stderr_D@{m:g}"] = float(se)
    report = ExperimentReport(
        name="growth",
        params={**params.as_dict(), "M_list": M.tolist(), "replicas": replicas},
        statistics=stats,
        passed=bool(passed),
        seed=params.rng.master_seed,
        runtime_seconds=time.perf_counter() - t0,
        data={"M": M, "mean": mean, "stderr": stderr, "samples": samples},
    )
    return report
