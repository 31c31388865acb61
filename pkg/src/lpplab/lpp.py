"""Exact last passage percolation over piecewise-linear line ensembles.

Every routine works on grid points only. Because the rows of a
:class:`~lpplab.env.LineEnsemble` are piecewise linear, the difference of two
rows is piecewise linear with the same breakpoints, so the running maxima in
the recursion are attained on the grid and the values below are exact for the
stored environment.

The basic recursion, for a start ``(y, n)``, is

    L_n(x) = f_n(x) - f_n(y)
    L_j(x) = f_j(x) + max_{y <= s <= x} (L_{j+1}(s) - f_j(s)),   j < n

so that ``L_m(x) = f[(y, n) -> (x, m)]``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import Grid

__all__ = [
    "LatticePoint",
    "Geodesic",
    "Profile",
    "BoundaryData",
    "lpp_profile",
    "lpp_layers",
    "lpp_value",
    "lpp_table",
    "geodesic",
    "pitman_transform",
    "lpp_profile_with_boundary",
    "z_layers",
    "write_profile_csv",
    "write_geodesic_csv",
]


@dataclass(frozen=True)
class LatticePoint:
    grid_index: int
    line_index: int

    def check(self, env):
        if not 0 <= self.grid_index < env.grid.n_points:
            raise ValueError(
                f"grid index {self.grid_index} outside 0..{env.grid.n_points - 1}"
            )
        if not 1 <= self.line_index <= env.k:
            raise ValueError(f"line index {self.line_index} outside 1..{env.k}")


@dataclass(frozen=True, eq=False)
class Profile:
    """A function sampled on ``grid`` at indices ``offset .. offset+len-1``."""

    grid: Grid
    offset: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=1)
        if v.ndim != 1:
            raise ValueError("profile values must be one-dimensional")
        if self.offset < 0 or self.offset + len(v) > self.grid.n_points:
            raise ValueError("profile does not fit inside its grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def x(self):
        return self.grid.x0 + (self.offset + np.arange(len(self.values))) * self.grid.dx

    @property
    def support(self):
        """The sub-grid the values live on."""
        return self.grid.subgrid(self.offset, len(self.values))

    def at(self, grid_index):
        j = grid_index - self.offset
        if not 0 <= j < len(self.values):
            raise IndexError(f"grid index {grid_index} outside the profile")
        return float(self.values[j])

    def same_range(self, other):
        return (
            self.grid == other.grid
            and self.offset == other.offset
            and len(self) == len(other)
        )

    def with_values(self, values):
        return Profile(self.grid, self.offset, values)


@dataclass(frozen=True)
class Geodesic:
    """An up-right path stored by its jump grid indices.

    ``jump_indices[0]`` is the jump off the start line (line n to n-1) and
    the last entry is the jump onto the end line.
    """

    start: LatticePoint
    end: LatticePoint
    jump_indices: tuple

    def times(self):
        """Jump times padded with the endpoints, ordered deep line first."""
        return (self.start.grid_index, *self.jump_indices, self.end.grid_index)

    def line_at(self, grid_index):
        """Line occupied just after ``grid_index`` (jumps happen at the jump time)."""
        line = self.start.line_index
        for t in self.jump_indices:
            if t <= grid_index:
                line -= 1
        return line

    def weight(self, env):
        t = self.times()
        total = 0.0
        for pos, line in enumerate(range(self.start.line_index, self.end.line_index - 1, -1)):
            row = env.line(line)
            total += row[t[pos + 1]] - row[t[pos]]
        return total


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Boundary values ``b_1 .. b_K`` for lines 1..K at one grid column."""

    column_index: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=1)
        if v.ndim != 1 or len(v) < 1:
            raise ValueError("boundary needs at least one value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self):
        return len(self.values)

    def is_monotone(self, tol=0.0):
        return bool(np.all(np.diff(self.values) <= tol))


def _check_order(env, start, end):
    start.check(env)
    end.check(env)
    if end.grid_index < start.grid_index:
        raise ValueError("end lies to the left of start; paths only move right")
    if end.line_index > start.line_index:
        raise ValueError("end line is below start line; paths only move up")


def lpp_layers(env, start, target_line=1):
    """All intermediate profiles ``L_n, L_{n-1}, .., L_target`` from ``start``.

    Returns an array of shape ``(n - target + 1, n_points - y)``; row ``r``
    holds the passage values to line ``n - r``.
    """
    start.check(env)
    n, y = start.line_index, start.grid_index
    if not 1 <= target_line <= n:
        raise ValueError(
            f"target line {target_line} must lie in 1..{n} (paths only move up)"
        )
    f = env.lines[:, y:]
    out = np.empty((n - target_line + 1, f.shape[1]))
    out[0] = f[n - 1] - f[n - 1, 0]
    for r, j in enumerate(range(n - 1, target_line - 1, -1), start=1):
        fj = f[j - 1]
        np.maximum.accumulate(out[r - 1] - fj, out=out[r])
        out[r] += fj
    return out


def _profile_values(env, start, target_line):
    start.check(env)
    n, y = start.line_index, start.grid_index
    if not 1 <= target_line <= n:
        raise ValueError(
            f"target line {target_line} must lie in 1..{n} (paths only move up)"
        )
    f = env.lines[:, y:]
    L = f[n - 1] - f[n - 1, 0]
    buf = np.empty_like(L)
    for j in range(n - 1, target_line - 1, -1):
        fj = f[j - 1]
        np.subtract(L, fj, out=buf)
        np.maximum.accumulate(buf, out=buf)
        np.add(buf, fj, out=L)
    return L


def lpp_profile(env, start, target_line):
    """Profile ``x -> f[start -> (x, target_line)]`` for every grid ``x >= y``.

    Cost is one running-maximum pass per line, ``O((n - m + 1) * n_points)``.
    """
    return Profile(env.grid, start.grid_index, _profile_values(env, start, target_line))


def lpp_value(env, start, end):
    _check_order(env, start, end)
    vals = _profile_values(env, start, end.line_index)
    return float(vals[end.grid_index - start.grid_index])


def lpp_table(env):
    """Every passage value of a small environment at once.

    ``T[n-1, y, x, m-1] = f[(y, n) -> (x, m)]`` for ``x >= y`` and ``m <= n``;
    inadmissible entries are ``-inf``. Memory is ``k^2 * n_points^2`` doubles,
    so this is meant for fuzzing and oracles, not production environments.
    """
    k, N = env.lines.shape
    T = np.full((k, N, N, k), -np.inf)
    upper = np.triu(np.ones((N, N), dtype=bool))
    for n in range(1, k + 1):
        fn = env.lines[n - 1]
        L = np.where(upper, fn[None, :] - fn[:, None], -np.inf)
        T[n - 1, :, :, n - 1] = L
        for j in range(n - 1, 0, -1):
            fj = env.lines[j - 1][None, :]
            L = np.maximum.accumulate(L - fj, axis=1) + fj
            T[n - 1, :, :, j - 1] = L
    return T


def geodesic(env, start, end):
    """Leftmost geodesic from ``start`` to ``end``.

    Jump times are recovered backwards from the end; at each line the smallest
    grid index attaining the maximum is taken, which makes every jump time
    (and hence the path) pointwise leftmost among geodesics.
    """
    _check_order(env, start, end)
    y = start.grid_index
    layers = lpp_layers(env, start, end.line_index)
    n, m = start.line_index, end.line_index
    f = env.lines[:, y:]
    t = end.grid_index - y
    jumps = []
    # layers[r] is line n - r; the jump onto line j comes from layer of line j+1
    for j in range(m, n):
        diff = layers[n - (j + 1)][: t + 1] - f[j - 1, : t + 1]
        t = int(np.argmax(diff))
        jumps.append(t + y)
    return Geodesic(start, end, tuple(reversed(jumps)))


def pitman_transform(f1, f2):
    """``PT(f1, f2)(x) = f1(x) + max_{s <= x} (f2(s) - f1(s))`` in one pass."""
    if not f1.same_range(f2):
        raise ValueError("Pitman transform needs profiles on the same grid range")
    v = f1.values + np.maximum.accumulate(f2.values - f1.values)
    return f1.with_values(v)


def z_layers(env, boundary, target_line=1):
    """Boundary-respecting passage values ``Z_K, .., Z_target`` right of the column.

    ``Z_i(x) = max_{j >= i} (b_j + f[(lam, j) -> (lam + x, i)])``, computed by
    reflecting each line off the one below it:
    ``Z_i = max(PT(f_i, Z_{i+1}), b_i + f_i)`` with increments taken from the
    column. Row ``r`` of the result is line ``K - r``.
    """
    K = boundary.k
    lam = boundary.column_index
    if K > env.k:
        raise ValueError(f"boundary has {K} values but the environment only {env.k} lines")
    if not 0 <= lam < env.grid.n_points:
        raise ValueError(f"boundary column {lam} outside the grid")
    if not 1 <= target_line <= K:
        raise ValueError(f"target line {target_line} must lie in 1..{K}")
    b = boundary.values
    g = env.lines[:K, lam:] - env.lines[:K, lam : lam + 1]
    out = np.empty((K - target_line + 1, g.shape[1]))
    out[0] = b[K - 1] + g[K - 1]
    for r, i in enumerate(range(K - 1, target_line - 1, -1), start=1):
        gi = g[i - 1]
        reflected = gi + np.maximum.accumulate(out[r - 1] - gi)
        np.maximum(reflected, b[i - 1] + gi, out=out[r])
    return out


def lpp_profile_with_boundary(env, boundary, target_line=1):
    """Profile of ``Z_target`` starting at the boundary column, ``O(K * n_points)``."""
    vals = z_layers(env, boundary, target_line)[-1]
    return Profile(env.grid, boundary.column_index, vals)


def write_profile_csv(path, profile, comments=(), value_name="value"):
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", value_name])
        for x, v in zip(profile.x, profile.values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])
    return path


def write_geodesic_csv(path, geo, grid, comments=()):
    """One row per jump: the line jumped from and the jump position."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["line_index", "jump_x"])
        for line, t in zip(range(geo.start.line_index, geo.end.line_index, -1), geo.jump_indices):
            w.writerow([line, f"{grid.point(t):.17g}"])
    return path
