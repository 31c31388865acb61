"""Environments for semi-discrete LPP: grids, line ensembles and RNG streams.

A line ensemble is ``k`` real rows sampled on a shared uniform grid. Each row
is read as the continuous piecewise-linear interpolation of its samples, and
row 0 is the top line (line index 1).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "LineEnsemble",
    "RngSpec",
    "make_grid",
    "sample_brownian_lines",
    "iter_brownian_rows",
    "brownian_row",
    "fixture_ensemble",
    "refine",
    "write_ensemble_csv",
    "read_ensemble_csv",
]

FIXTURES = ("E2", "linear", "constant")


@dataclass(frozen=True)
class Grid:
    x0: float
    dx: float
    n_points: int

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx!r}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n_points!r}")

    def point(self, i):
        # x0 + i*dx, never accumulated, so every point is bit-reproducible
        return self.x0 + i * self.dx

    @property
    def points(self):
        return self.x0 + np.arange(self.n_points) * self.dx

    @property
    def length(self):
        return (self.n_points - 1) * self.dx

    def nearest_index(self, x):
        return int(np.rint((x - self.x0) / self.dx))

    def subgrid(self, offset, n_points):
        return Grid(self.point(offset), self.dx, n_points)


def make_grid(x0, dx, n_points):
    """Uniform grid ``x0 + i*dx`` for ``0 <= i < n_points``."""
    return Grid(float(x0), float(dx), int(n_points))


@dataclass(frozen=True)
class RngSpec:
    """Address of one reproducible random stream.

    The generator is Philox (counter-based) keyed through numpy's
    ``SeedSequence(entropy=master_seed, spawn_key=(stream_index, *sub))``.
    The spawn key is hashed together with the entropy pool, which is the same
    mixing numpy uses for ``SeedSequence.spawn``; distinct keys give
    independent streams and a given key always gives the same stream.
    ``sub`` addresses substreams, e.g. one per line of an ensemble, so lines
    can be drawn in any order.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")

    def seed_sequence(self, *sub):
        return np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_index, *sub)
        )

    def generator(self, *sub):
        return np.random.Generator(np.random.Philox(self.seed_sequence(*sub)))

    def child(self, stream_index):
        return RngSpec(self.master_seed, stream_index)


@dataclass(frozen=True, eq=False)
class LineEnsemble:
    grid: Grid
    lines: np.ndarray = field(repr=False)
    rate: float = 0.0

    def __post_init__(self):
        lines = np.array(self.lines, dtype=float, ndmin=2)
        if lines.shape[1] != self.grid.n_points:
            raise ValueError(
                f"lines have {lines.shape[1]} columns, grid has {self.grid.n_points} points"
            )
        if lines.shape[0] < 1:
            raise ValueError("a line ensemble needs at least one line")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        lines.setflags(write=False)
        object.__setattr__(self, "lines", lines)

    @property
    def k(self):
        return self.lines.shape[0]

    def line(self, index):
        """Row for 1-based ``index`` (1 is the top line)."""
        if not 1 <= index <= self.k:
            raise ValueError(f"line index {index} outside 1..{self.k}")
        return self.lines[index - 1]


def brownian_row(grid, rate, rng, line):
    """Line ``line`` (1-based) of the ensemble addressed by ``rng``."""
    gen = rng.generator(line)
    row = np.empty(grid.n_points)
    row[0] = 0.0
    np.cumsum(gen.standard_normal(grid.n_points - 1) * np.sqrt(rate * grid.dx), out=row[1:])
    return row


def iter_brownian_rows(grid, k, rate, rng, lines=None):
    """Yield ``(line, row)`` for the rows of :func:`sample_brownian_lines`.

    Each line has its own substream, so any order (``lines``, default
    1..k) reproduces the full matrix bit for bit with one row in memory.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not rate > 0:
        raise ValueError("rate must be positive")
    for line in lines if lines is not None else range(1, k + 1):
        if not 1 <= line <= k:
            raise ValueError(f"line {line} outside 1..{k}")
        yield line, brownian_row(grid, rate, rng, line)


def sample_brownian_lines(grid, k, rate, rng):
    """``k`` independent Brownian rows with variance ``rate*dx`` per step, anchored at 0."""
    rows = [row for _, row in iter_brownian_rows(grid, k, rate, rng)]
    return LineEnsemble(grid, np.array(rows), float(rate))


def fixture_ensemble(name, k=None, grid=None):
    """Deterministic test environments.

    ``"E2"`` is the two-line environment on {0, 0.5, 1} with top line
    [0, 1, 1] and second line [0, -1, 2]. ``"linear"`` has every line equal
    to ``t - x0`` and ``"constant"`` has every line zero; both default to
    two lines on {0, 0.5, 1}.
    """
    if name == "E2":
        if k not in (None, 2):
            raise ValueError("fixture E2 has exactly two lines")
        g = grid or make_grid(0.0, 0.5, 3)
        if g != make_grid(0.0, 0.5, 3):
            raise ValueError("fixture E2 lives on the grid {0, 0.5, 1}")
        return LineEnsemble(g, [[0.0, 1.0, 1.0], [0.0, -1.0, 2.0]], 0.0)
    if name not in FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; expected one of {FIXTURES}")
    k = 2 if k is None else int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    g = grid or make_grid(0.0, 0.5, 3)
    if name == "linear":
        row = g.points - g.x0
    else:
        row = np.zeros(g.n_points)
    return LineEnsemble(g, np.tile(row, (k, 1)), 0.0)


def refine(env, factor):
    """Resample ``env`` on a grid ``factor`` times finer.

    The rows are piecewise linear, so linear interpolation reproduces the same
    functions exactly and every LPP value between original grid points is
    unchanged.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError("refinement factor must be >= 1")
    g = env.grid
    fine = make_grid(g.x0, g.dx / factor, (g.n_points - 1) * factor + 1)
    j = np.arange(fine.n_points)
    left = np.minimum(j // factor, g.n_points - 2)
    frac = (j - left * factor) / factor
    lines = env.lines[:, left] + frac * (env.lines[:, left + 1] - env.lines[:, left])
    return LineEnsemble(fine, lines, env.rate)


def write_ensemble_csv(path, env, comments=()):
    """Write ``x,f1,...,fk`` rows with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [f"f{i + 1}" for i in range(env.k)])
        for j, x in enumerate(env.grid.points):
            w.writerow([f"{x:.17g}"] + [f"{v:.17g}" for v in env.lines[:, j]])
    return path


def read_ensemble_csv(path, rate=0.0):
    rows = []
    with Path(path).open() as fh:
        data = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(data)
    header = next(reader)
    if not header or header[0] != "x":
        raise ValueError("ensemble CSV must start with an 'x' column")
    for rec in reader:
        rows.append([float(v) for v in rec])
    arr = np.array(rows)
    xs = arr[:, 0]
    dx = (xs[-1] - xs[0]) / (len(xs) - 1)
    grid = make_grid(xs[0], dx, len(xs))
    return LineEnsemble(grid, arr[:, 1:].T, rate)
