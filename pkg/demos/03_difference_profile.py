"""One sample of the difference profile D and the set where it moves.

D is non-decreasing; it is flat almost everywhere and grows on a thin
set. Box counting over that set gives a slope near one half.
"""
import numpy as np

from lpplab.fractal import box_dimension, nc_mask
from lpplab.sheet import default_sheet_params, difference_profile

params = default_sheet_params(n=64, y_a=-0.25, y_b=0.25, window=(-1.0, 1.0), cells=2**16, seed=3)
D = difference_profile(params)
inc = np.diff(D.values)
print(f"D(-1) = {D.values[0]:.3f}, D(1) = {D.values[-1]:.3f}")
print(f"largest decrease (roundoff only): {min(0.0, inc.min()):.2e}")

mask = nc_mask(D)
print(f"cells where D increases: {mask.mask.sum()} of {mask.n_cells} ({100 * mask.fraction():.2f}%)")

fit = box_dimension(mask, 2, 10, min_count=4)
for k, c in zip(fit.levels, fit.counts):
    print(f"  level {k:2d}: {int(c):5d} boxes")
print(f"box-counting slope {fit.slope:.3f} (r^2 {fit.r_squared:.3f}) on a single replica")

# a coarse picture: where does D move?
bins = np.add.reduceat(mask.mask, np.arange(0, mask.n_cells, mask.n_cells // 64))
print("".join("#" if b else "." for b in bins))
