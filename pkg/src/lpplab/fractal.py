"""Running maxima, local time, non-constant points and box-counting dimension.

Also hosts two experiment kernels: the Levy-identity check (running maximum
versus occupation local time of an independent path) and the local limit of
the difference profile at random points of increase.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import thresholds
from .env import Grid, RngSpec, brownian_row, make_grid
from .errors import EmptySetError, ResolutionError
from .lpp import Profile
from .report import ExperimentReport, map_replicas
from .sheet import SheetParams, difference_profile
from .stats import half_normal_cdf, half_normal_mean, ks_one_sample, ks_two_sample, linear_fit

__all__ = [
    "PointMask",
    "DimensionFit",
    "StopRule",
    "running_max",
    "running_max_incremental",
    "local_time_occupation",
    "nc_mask",
    "default_nc_tol",
    "zero_set_mask",
    "box_counts",
    "box_dimension",
    "pooled_box_dimension",
    "levy_experiment",
    "locate_stop",
    "local_limit_experiment",
]


@dataclass(frozen=True, eq=False)
class PointMask:
    """Indicator over the cells ``[point(i), point(i+1)]`` of ``grid``."""

    grid: Grid
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool, ndmin=1)
        if m.shape != (self.grid.n_points - 1,):
            raise ValueError(
                f"mask needs {self.grid.n_points - 1} cells, got {m.shape}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def n_cells(self):
        return self.mask.size

    def fraction(self):
        return float(self.mask.mean())


@dataclass(frozen=True)
class DimensionFit:
    scales: tuple
    counts: tuple
    slope: float
    r_squared: float
    intercept: float = 0.0
    levels: tuple = ()


def running_max(p):
    return p.with_values(np.maximum.accumulate(p.values))


def running_max_incremental(grid, rate, rng, line=1, chunk=1 << 16):
    """Final running maximum of :func:`lpplab.env.brownian_row`, drawn chunk by chunk.

    Uses the same stream and the same left-to-right summation, so it agrees
    bit for bit with ``brownian_row(...).max()`` while holding one chunk.
    """
    gen = rng.generator(line)
    scale = np.sqrt(rate * grid.dx)
    left = grid.n_points - 1
    pos, best = 0.0, 0.0
    while left > 0:
        m = min(chunk, left)
        steps = gen.standard_normal(m) * scale
        steps[0] += pos
        path = np.cumsum(steps)
        best = max(best, float(path.max()))
        pos = float(path[-1])
        left -= m
    return best


def local_time_occupation(path, epsilon, rate=1.0):
    """Occupation estimate of local time at zero.

    ``L(t_j) = rate * dx / (2 eps) * #{i < j : |path(t_i)| < eps}``. Time is
    counted in units of quadratic variation (the ``rate`` factor), the
    normalization under which local time and running maximum of a rate
    ``rate`` path share one law; with ``rate = 1`` it is the plain
    occupation density.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    near = (np.abs(path.values) < epsilon).astype(float)
    counts = np.concatenate([[0.0], np.cumsum(near[:-1])])
    return path.with_values(counts * (rate * path.grid.dx / (2.0 * epsilon)))


def default_nc_tol(D):
    return thresholds.NC_TOL_FACTOR * max(1.0, float(np.max(np.abs(D.values))))


def nc_mask(D, tol=None):
    """Cells on which ``D`` increases by more than ``tol``."""
    tol = default_nc_tol(D) if tol is None else float(tol)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return PointMask(D.support, np.diff(D.values) > tol)


def zero_set_mask(path, epsilon=0.0):
    """Cells where the piecewise-linear path comes within ``epsilon`` of 0."""
    v = path.values
    lo = np.minimum(v[:-1], v[1:])
    hi = np.maximum(v[:-1], v[1:])
    return PointMask(path.support, (lo <= epsilon) & (hi >= -epsilon))


def box_counts(mask, k_min, k_max, base=2):
    """Occupied box counts for levels ``k_min..k_max``.

    Level ``k`` splits the domain into ``base**k`` equal boxes; cell ``i``
    belongs to box ``floor(i * base**k / n_cells)``.
    """
    if k_min >= k_max or k_min < 0:
        raise ValueError("need 0 <= k_min < k_max")
    n = mask.n_cells
    if base**k_max > n:
        raise ValueError(f"{base}**{k_max} boxes exceed the {n} cells")
    hit = np.flatnonzero(mask.mask)
    counts = []
    for k in range(k_min, k_max + 1):
        boxes = (hit * base**k) // n
        counts.append(int(np.unique(boxes).size))
    return np.array(counts)


def _fit(domain, levels, counts, base, min_count):
    levels = np.asarray(levels)
    counts = np.asarray(counts, dtype=float)
    keep = counts >= min_count
    if keep.sum() < 2:
        raise ValueError("fewer than two levels left after dropping sparse levels")
    lv, ct = levels[keep], counts[keep]
    scales = domain * float(base) ** (-lv.astype(float))
    slope, intercept, r2 = linear_fit(np.log(1.0 / scales), np.log(ct))
    return DimensionFit(
        tuple(float(s) for s in scales),
        tuple(float(c) if c != int(c) else int(c) for c in ct),
        slope,
        r2,
        intercept,
        tuple(int(k) for k in lv),
    )


def box_dimension(mask, k_min, k_max, base=2, min_count=1):
    """Least-squares slope of ``log N(delta)`` on ``log(1/delta)``.

    Levels with fewer than ``min_count`` occupied boxes are dropped before
    the fit.
    """
    if not mask.mask.any():
        raise EmptySetError("mask has no flagged cells; dimension of the empty set")
    counts = box_counts(mask, k_min, k_max, base)
    return _fit(mask.grid.length, range(k_min, k_max + 1), counts, base, min_count)


def pooled_box_dimension(masks, k_min, k_max, base=2, min_count=thresholds.BOX_MIN_COUNT):
    """Fit on the mean box count over replicas; empty replicas count as zero."""
    masks = list(masks)
    if not masks:
        raise ValueError("no masks to pool")
    if not any(m.mask.any() for m in masks):
        raise EmptySetError("every mask is empty")
    total = np.zeros(k_max - k_min + 1)
    for m in masks:
        total += box_counts(m, k_min, k_max, base)
    mean = total / len(masks)
    return _fit(masks[0].grid.length, range(k_min, k_max + 1), mean, base, min_count)


# ---------------------------------------------------------------- Levy identity


def _levy_replica(task):
    grid, rate, eps, rng_m, rng_l = task
    m = float(brownian_row(grid, rate, rng_m, 1).max())
    path = Profile(grid, 0, brownian_row(grid, rate, rng_l, 1))
    ell = local_time_occupation(path, eps, rate).values[-1]
    return m, float(ell)


def levy_experiment(rate, t_max, dx, epsilon, replicas, rng, threads=1):
    """Running maximum versus occupation local time at ``t_max``.

    Replica ``r`` draws the maximum from stream ``2r`` and the local time
    from stream ``2r + 1`` (offset by ``rng.stream_index``).
    """
    t0 = time.perf_counter()
    if replicas < thresholds.LEVY_MIN_REPLICAS:
        raise ValueError(f"need at least {thresholds.LEVY_MIN_REPLICAS} replicas")
    if not rate > 0 or not dx > 0 or not epsilon > 0 or t_max < 0:
        raise ValueError("need rate, dx, epsilon > 0 and t_max >= 0")
    sigma = math.sqrt(rate * t_max)
    base = rng.stream_index
    if t_max == 0:
        M = np.zeros(replicas)
        L = np.zeros(replicas)
        ks2 = ks1 = 0.0
    else:
        n_pts = int(round(t_max / dx)) + 1
        grid = make_grid(0.0, t_max / (n_pts - 1), n_pts)
        tasks = [
            (grid, rate, epsilon, rng.child(base + 2 * r), rng.child(base + 2 * r + 1))
            for r in range(replicas)
        ]
        out = np.array(map_replicas(_levy_replica, tasks, threads))
        M, L = out[:, 0], out[:, 1]
        ks2 = ks_two_sample(M, L)
        ks1 = ks_one_sample(M, lambda x: half_normal_cdf(sigma, x))
    mean = float(M.mean())
    stderr = float(M.std(ddof=1) / math.sqrt(replicas))
    target = float(half_normal_mean(sigma))
    mean_ok = abs(mean - target) <= thresholds.LEVY_MEAN_STDERRS * stderr or stderr == 0
    passed = (
        ks2 <= thresholds.LEVY_KS_TWO_SAMPLE
        and ks1 <= thresholds.LEVY_KS_HALF_NORMAL
        and mean_ok
    )
    stats = {
        "ks_two_sample": ks2,
        "ks_half_normal": ks1,
        "threshold_two_sample": thresholds.LEVY_KS_TWO_SAMPLE,
        "threshold_half_normal": thresholds.LEVY_KS_HALF_NORMAL,
        "mean_M": mean,
        "stderr_M": stderr,
        "mean_L": float(L.mean()),
        "target_mean": target,
        "sigma": sigma,
        "n_effective": replicas,
    }
    return ExperimentReport(
        name="levy",
        params={"rate": rate, "t_max": t_max, "dx": dx, "epsilon": epsilon, "replicas": replicas,
                "stream": base},
        statistics=stats,
        passed=bool(passed),
        seed=rng.master_seed,
        runtime_seconds=time.perf_counter() - t0,
        data={"M": M, "L": L, "sigma": sigma},
    )


# ---------------------------------------------------------------- local limit


@dataclass(frozen=True)
class StopRule:
    """A rule picking a random point of increase of a non-decreasing profile.

    kinds: ``tau`` (first increase after ``a``), ``rho`` (first time at level
    ``a``), ``rho_c`` (first time after ``a`` at ``D(a) + b``), ``xi``
    (sampled from the measure ``dD`` on ``[a, b]``).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    KINDS = ("tau", "rho", "rho_c", "xi")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown stop rule {self.kind!r}")
        if self.kind == "rho_c" and not self.b > 0:
            raise ValueError("rho_c needs a positive level increment")
        if self.kind == "xi" and not self.b > self.a:
            raise ValueError("xi needs an interval with c < d")

    @classmethod
    def tau_lambda(cls, lam):
        return cls("tau", lam)

    @classmethod
    def rho(cls, h):
        return cls("rho", h)

    @classmethod
    def rho_c(cls, c, h):
        return cls("rho_c", c, h)

    @classmethod
    def xi(cls, c, d):
        return cls("xi", c, d)

    @classmethod
    def parse(cls, text):
        """``tau:LAMBDA``, ``rho:H``, ``rho_c:C,H`` or ``xi:C,D``."""
        kind, _, rest = text.partition(":")
        vals = [float(v) for v in rest.split(",")] if rest else []
        want = 2 if kind in ("rho_c", "xi") else 1
        if len(vals) != want:
            raise ValueError(f"stop rule {text!r}: expected {want} number(s)")
        return cls(kind, *vals)

    @property
    def label(self):
        if self.kind in ("tau", "rho"):
            return f"{self.kind}:{self.a:g}"
        return f"{self.kind}:{self.a:g},{self.b:g}"


def _first_at_or_after(grid, x):
    return max(0, int(math.ceil((x - grid.x0) / grid.dx - 1e-9)))


def locate_stop(D, rule, tol, u=None):
    """Grid index of the stopping point, or ``None`` if it does not trigger.

    The returned index is the first grid point at which the trigger holds,
    i.e. the right end of the triggering cell, so it only looks at ``D`` up
    to itself. ``u`` in [0, 1) is the uniform draw used by ``xi``.
    """
    v = D.values
    g = D.support
    n = v.size
    if rule.kind == "tau":
        i0 = _first_at_or_after(g, rule.a)
        if i0 >= n - 1:
            return None
        hits = np.flatnonzero(np.diff(v[i0:]) > tol)
        return int(i0 + hits[0] + 1) if hits.size else None
    if rule.kind == "rho":
        hits = np.flatnonzero(v >= rule.a)
        # already above the level at the window start: the hitting time lies outside
        if not hits.size or hits[0] == 0:
            return None
        return int(hits[0])
    i0 = _first_at_or_after(g, rule.a)
    if i0 >= n:
        return None
    if rule.kind == "rho_c":
        level = v[i0] + rule.b
    else:
        i1 = min(n - 1, int(math.floor((rule.b - g.x0) / g.dx + 1e-9)))
        total = v[i1] - v[i0]
        if total <= tol:
            return None
        level = v[i0] + u * total
        # u < 1, so the level is reached by i1 at the latest
        hits = np.flatnonzero(v[i0 + 1 : i1 + 1] >= level)
        return int(i0 + 1 + hits[0])
    hits = np.flatnonzero(v[i0:] >= level)
    return int(i0 + hits[0]) if hits.size else None


def _local_replica(task):
    params, oracle_grid, rules, steps, eps, tol = task
    if oracle_grid is not None:
        path = brownian_row(oracle_grid, thresholds.LOCAL_LIMIT_RATE, params.rng, 1)
        D = Profile(oracle_grid, 0, np.maximum.accumulate(path))
    else:
        D = difference_profile(params)
    tol_r = default_nc_tol(D) if tol is None else tol
    u = float(params.rng.generator(0).random())
    out = np.full((len(rules), len(steps)), np.nan)
    v = D.values
    for a, rule in enumerate(rules):
        j = locate_stop(D, rule, tol_r, u)
        if j is None:
            continue
        for b, (k, e) in enumerate(zip(steps, eps)):
            if j + k < v.size:
                out[a, b] = (v[j + k] - v[j]) / math.sqrt(e)
    return out


def local_limit_experiment(
    params,
    stop_rule,
    eps_list,
    t_eval,
    replicas,
    threads=1,
    tol=None,
    oracle=False,
    oracle_grid=None,
    min_cells=thresholds.LOCAL_MIN_CELLS,
):
    """Rescaled increments ``eps**-1/2 (D(tau + eps t) - D(tau))`` at a stopping point.

    ``stop_rule`` may be one rule or a list; every rule is evaluated on the
    same simulated profiles. The KS distance against ``|N(0, 4 t_eval)|`` is
    reported per rule and per ``eps``; a rule passes on the smallest ``eps``.
    Replicas where a rule does not trigger (or ``tau + eps t_eval`` leaves
    the window) are excluded and counted. In oracle mode ``D`` is the
    running maximum of a rate-four Brownian path on ``oracle_grid``
    (default ``params.x_grid``).
    """
    t0 = time.perf_counter()
    rules = [stop_rule] if isinstance(stop_rule, StopRule) else list(stop_rule)
    if not rules:
        raise ValueError("no stop rule given")
    if not t_eval > 0:
        raise ValueError("t_eval must be positive")
    eps = [float(e) for e in eps_list]
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list must be positive and strictly decreasing")
    if replicas < thresholds.LOCAL_MIN_REPLICAS:
        raise ValueError(f"need at least {thresholds.LOCAL_MIN_REPLICAS} replicas")
    grid = (oracle_grid or params.x_grid) if oracle else params.x_grid
    steps = []
    for e in eps:
        span = e * t_eval / grid.dx
        if span < min_cells:
            raise ResolutionError(
                f"eps={e:g}: eps*t_eval covers {span:.1f} cells, fewer than {min_cells}"
            )
        steps.append(int(round(span)))
    base = params.rng
    tasks = [
        (replace(params, rng=base.child(base.stream_index + r)), grid if oracle else None,
         rules, steps, eps, tol)
        for r in range(replicas)
    ]
    samples = np.array(map_replicas(_local_replica, tasks, threads))
    sigma = math.sqrt(thresholds.LOCAL_LIMIT_RATE * t_eval)
    gate = thresholds.LOCAL_ORACLE_KS if oracle else thresholds.LOCAL_SHEET_KS

    def ref(x):
        return half_normal_cdf(sigma, x)

    stats = {"sigma": sigma, "threshold": gate, "replicas": replicas}
    passed = True
    for a, rule in enumerate(rules):
        lab = rule.label
        for b, e in enumerate(eps):
            col = samples[:, a, b]
            ok = col[np.isfinite(col)]
            key = f"{lab}@eps={e:g}"
            stats[f"n_effective[{key}]"] = int(ok.size)
            stats[f"ks[{key}]"] = ks_one_sample(ok, ref) if ok.size else float("nan")
            stats[f"mean[{key}]"] = float(ok.mean()) if ok.size else float("nan")
        col = samples[:, a, -1]
        n_eff = int(np.isfinite(col).sum())
        ks = stats[f"ks[{lab}@eps={eps[-1]:g}]"]
        stats[f"trigger_fraction[{lab}]"] = n_eff / replicas
        stats[f"statistic[{lab}]"] = ks
        rule_ok = n_eff >= thresholds.LOCAL_MIN_EFFECTIVE and ks <= gate
        stats[f"pass[{lab}]"] = bool(rule_ok)
        passed = passed and rule_ok
    stats["target_mean"] = float(half_normal_mean(sigma))
    return ExperimentReport(
        name="local-limit",
        params={
            **params.as_dict(),
            "rules": [r.label for r in rules],
            "eps_list": eps,
            "t_eval": t_eval,
            "replicas": replicas,
            "oracle": bool(oracle),
            "grid": [grid.x0, grid.dx, grid.n_points],
            "tol": tol,
        },
        statistics=stats,
        passed=bool(passed),
        seed=params.rng.master_seed,
        runtime_seconds=time.perf_counter() - t0,
        data={"samples": samples, "rules": rules, "eps": eps, "sigma": sigma},
    )
