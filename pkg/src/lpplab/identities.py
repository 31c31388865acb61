"""Fuzz suite for the exact identities of the discrete model.

Every check here is an exact property of LPP on any piecewise-linear
environment, so a single violation means a bug. Comparisons allow a
relative slack of ``IDENTITY_RTOL`` (absolute floor ``IDENTITY_ATOL``) for
roundoff only.
"""
from __future__ import annotations

import time

import numpy as np

from . import thresholds
from .env import LineEnsemble, RngSpec, fixture_ensemble, make_grid, refine, sample_brownian_lines
from .lpp import (
    BoundaryData,
    LatticePoint,
    Profile,
    geodesic,
    lpp_profile,
    lpp_table,
    lpp_value,
    pitman_transform,
    z_layers,
)
from .report import ExperimentReport
from .sheet import boundary_data, maximizer_indices, raw_difference_profile, z_processes

__all__ = ["IDENTITIES", "Tally", "random_environment", "check_environment", "e2_ledger", "run_identities"]

IDENTITIES = (
    "crossing",
    "column_decomposition",
    "superadditivity",
    "pitman_shift",
    "pitman_max",
    "z_recursion",
    "z_ordering",
    "boundary_monotone",
    "ab_monotone",
    "maximizer_monotone_x",
    "maximizer_order_start",
    "d_monotone",
    "geodesic_weight",
)

# roundoff slack for the smallest-index tie rule
TIE_RTOL = 1e-10


class Tally:
    """Per-identity violation counts and the worst relative discrepancy seen."""

    def __init__(self, names=IDENTITIES, rtol=thresholds.IDENTITY_RTOL, atol=thresholds.IDENTITY_ATOL):
        self.rtol, self.atol = rtol, atol
        self.violations = dict.fromkeys(names, 0)
        self.checks = dict.fromkeys(names, 0)
        self.worst = dict.fromkeys(names, 0.0)

    def _record(self, name, gap, scale):
        gap = np.asarray(gap, dtype=float).ravel()
        scale = np.asarray(scale, dtype=float).ravel()
        if gap.size == 0:
            return
        tol = np.maximum(self.atol, self.rtol * scale)
        self.checks[name] += gap.size
        self.violations[name] += int(np.count_nonzero(gap > tol))
        rel = gap / np.maximum(1.0, scale)
        self.worst[name] = max(self.worst[name], float(rel.max(initial=0.0)))

    def geq(self, name, lhs, rhs):
        """Record ``lhs >= rhs`` elementwise."""
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float))
        self._record(name, rhs - lhs, np.maximum(np.abs(lhs), np.abs(rhs)))

    def eq(self, name, lhs, rhs):
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float))
        self._record(name, np.abs(lhs - rhs), np.maximum(np.abs(lhs), np.abs(rhs)))

    def flag(self, name, ok):
        ok = np.asarray(ok, dtype=bool).ravel()
        self.checks[name] += ok.size
        self.violations[name] += int(np.count_nonzero(~ok))

    @property
    def total_violations(self):
        return sum(self.violations.values())


def random_environment(gen, rng, index):
    """Brownian lines with random depth, length, rate and start."""
    k = int(gen.integers(2, 7))
    n_points = int(gen.integers(8, 65))
    rate = float(gen.uniform(0.1, 4.0))
    grid = make_grid(float(gen.uniform(-1, 1)), float(gen.uniform(0.01, 0.5)), n_points)
    env = sample_brownian_lines(grid, k, rate, rng.child(rng.stream_index + index))
    # random offsets per line: LPP only sees increments, but the code must too
    shift = gen.normal(size=(k, 1)) * 3.0
    return LineEnsemble(grid, env.lines + shift, rate)


def _sorted_pair(gen, hi, size):
    a = gen.integers(0, hi, size=(2, size))
    return np.sort(a, axis=0)


def check_environment(env, gen, tally, samples=400):
    k, N = env.lines.shape
    T = lpp_table(env)

    # crossing: starts p1 <= p2 and ends q1 <= q2 in both coordinates
    (y1, y2), (x1, x2) = _sorted_pair(gen, N, samples), _sorted_pair(gen, N, samples)
    (n1, n2), (m1, m2) = _sorted_pair(gen, k, samples), _sorted_pair(gen, k, samples)
    ok = (y1 <= x2) & (m2 <= n1) & (y2 <= x1) & (m1 <= n2)
    s = np.flatnonzero(ok)
    lhs = T[n1[s], y1[s], x1[s], m1[s]] + T[n2[s], y2[s], x2[s], m2[s]]
    rhs = T[n1[s], y1[s], x2[s], m2[s]] + T[n2[s], y2[s], x1[s], m1[s]]
    tally.geq("crossing", lhs, rhs)

    # column decomposition at every column between start and end
    for n in range(1, k + 1):
        a = T[n - 1, :, :, :n]  # [y, lam, i-1]
        b = T[:n, :, :, 0]  # [i-1, lam, x]
        via = a[:, :, :, None] + np.transpose(b, (1, 0, 2))[None, :, :, :]
        best = via.max(axis=2)  # [y, lam, x]
        direct = np.broadcast_to(T[n - 1, :, None, :, 0], best.shape)
        y, lam, x = np.nonzero(np.isfinite(best))
        tally.eq("column_decomposition", direct[y, lam, x], best[y, lam, x])

    # superadditivity a -> b -> c
    ys = np.sort(gen.integers(0, N, size=(3, samples)), axis=0)
    ls = np.sort(gen.integers(0, k, size=(3, samples)), axis=0)[::-1]
    tally.geq(
        "superadditivity",
        T[ls[0], ys[0], ys[2], ls[2]],
        T[ls[0], ys[0], ys[1], ls[1]] + T[ls[1], ys[1], ys[2], ls[2]],
    )

    # Pitman transform: shift and distribution over maxima
    g = env.grid
    rows = [Profile(g, 0, env.lines[i] - env.lines[i, 0]) for i in range(k)]
    f1 = rows[0]
    a_shift = float(gen.normal())
    tally.eq(
        "pitman_shift",
        pitman_transform(f1, rows[1].with_values(rows[1].values + a_shift)).values,
        a_shift + pitman_transform(f1, rows[1]).values,
    )
    others = rows[1:]
    env_max = f1.with_values(np.max([r.values for r in others], axis=0))
    tally.eq(
        "pitman_max",
        pitman_transform(f1, env_max).values,
        np.max([pitman_transform(f1, r).values for r in others], axis=0),
    )

    # Z recursion against the direct supremum, with an arbitrary boundary
    lam = int(gen.integers(0, N - 1))
    K = int(gen.integers(1, k + 1))
    bvals = gen.normal(size=K) * 2.0
    bd = BoundaryData(lam, bvals)
    Z = z_layers(env, bd, 1)[::-1]  # Z[i-1] is line i
    for i in range(1, K + 1):
        direct = np.max(
            [bvals[j - 1] + T[j - 1, lam, lam:, i - 1] for j in range(i, K + 1)], axis=0
        )
        tally.eq("z_recursion", Z[i - 1], direct)
    if K > 1:
        tally.geq("z_ordering", Z[:-1], Z[1:])

    # boundary data from two genuine starts on the deepest line
    ya, yb = np.sort(gen.choice(N - 1, size=2, replace=False))
    col = int(gen.integers(yb, N))
    start_a, start_b = LatticePoint(int(ya), k), LatticePoint(int(yb), k)
    ba = boundary_data(env, start_a, col, k)
    bb = boundary_data(env, start_b, col, k)
    tally.geq("boundary_monotone", ba.values[:-1], ba.values[1:])
    tally.geq("boundary_monotone", bb.values[:-1], bb.values[1:])
    diff = bb.values - ba.values
    i_idx, j_idx = np.triu_indices(k)
    tally.geq("ab_monotone", diff[j_idx], diff[i_idx])

    # smallest maximizing line: monotone in x and ordered in the start
    ia = maximizer_indices(env, ba, rtol=TIE_RTOL)
    ib = maximizer_indices(env, bb, rtol=TIE_RTOL)
    tally.flag("maximizer_monotone_x", np.diff(ia) >= 0)
    tally.flag("maximizer_monotone_x", np.diff(ib) >= 0)
    tally.flag("maximizer_order_start", ia <= ib)

    # difference profile between the two starts
    D = raw_difference_profile(env, start_a, start_b)
    tally.geq("d_monotone", D.values[1:], D.values[:-1])

    # geodesic weight and monotone jumps
    n = int(gen.integers(1, k + 1))
    m = int(gen.integers(1, n + 1))
    y = int(gen.integers(0, N))
    x = int(gen.integers(y, N))
    geo = geodesic(env, LatticePoint(y, n), LatticePoint(x, m))
    val = lpp_value(env, LatticePoint(y, n), LatticePoint(x, m))
    w = geo.weight(env)
    scale = max(abs(w), abs(val))
    tally.flag("geodesic_weight", abs(w - val) <= max(thresholds.IDENTITY_ATOL, 1e-12 * scale))
    times = geo.times()
    tally.flag("geodesic_weight", all(a <= b for a, b in zip(times, times[1:])))


def e2_ledger():
    """Hand-computed values on the two-line fixture; name -> (got, want)."""
    E = fixture_ensemble("E2")
    s = LatticePoint(0, 2)
    out = {
        "lpp_profile": (lpp_profile(E, s, 1).values.tolist(), [0.0, 1.0, 2.0]),
        "lpp_value@0.5": (lpp_value(E, s, LatticePoint(1, 1)), 1.0),
        "lpp_value@1.0": (lpp_value(E, s, LatticePoint(2, 1)), 2.0),
        "geodesic_jump_x": (
            [E.grid.point(t) for t in geodesic(E, s, LatticePoint(2, 1)).jump_indices],
            [1.0],
        ),
        "boundary": (boundary_data(E, s, 1, 2).values.tolist(), [0.0, -2.0]),
    }
    z = z_processes(E, BoundaryData(0, [0.3, 0.0]))
    out["Z_1"] = (z[0].values.tolist(), [0.3, 1.3, 2.0])
    out["Z_2"] = (z[1].values.tolist(), [0.0, -1.0, 2.0])
    idx = maximizer_indices(E, BoundaryData(0, [0.3, 0.0]))
    out["maximizer@0.5"] = (int(idx[1]), 1)
    out["maximizer@1.0"] = (int(idx[2]), 2)
    R = refine(E, 2)
    D = raw_difference_profile(R, LatticePoint(0, 2), LatticePoint(1, 2))
    out["D@0.5"] = (D.at(R.grid.nearest_index(0.5)), -0.5)
    out["D@1.0"] = (D.at(R.grid.nearest_index(1.0)), 0.5)
    return out


def run_identities(count, seed, stream=0, samples=400):
    """Run every identity on ``count`` random environments plus the E2 ledger."""
    t0 = time.perf_counter()
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = RngSpec(seed, stream)
    gen = rng.generator(0)
    tally = Tally()
    for index in range(count):
        env = random_environment(gen, rng, index + 1)
        check_environment(env, gen, tally, samples)
    ledger = e2_ledger()
    ledger_ok = {name: got == want for name, (got, want) in ledger.items()}
    stats = {f"violations[{n}]": v for n, v in tally.violations.items()}
    stats.update({f"checks[{n}]": c for n, c in tally.checks.items()})
    stats.update({f"worst_rel[{n}]": w for n, w in tally.worst.items()})
    stats["violations_total"] = tally.total_violations
    stats["worst_rel"] = max(tally.worst.values())
    stats["e2_ledger_mismatches"] = sum(not ok for ok in ledger_ok.values())
    passed = tally.total_violations == 0 and all(ledger_ok.values())
    return ExperimentReport(
        name="identities",
        params={"count": count, "stream": stream, "samples": samples,
                "rtol": thresholds.IDENTITY_RTOL, "atol": thresholds.IDENTITY_ATOL},
        statistics=stats,
        passed=bool(passed),
        seed=seed,
        runtime_seconds=time.perf_counter() - t0,
        data={"tally": tally, "ledger": ledger},
    )
