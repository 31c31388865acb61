"""Zooming in on D right after it starts to grow.

At the first point of increase after x = 0, the increment over a window
of width eps, divided by sqrt(eps), should look like |N(0, 4)|. The
oracle run replaces D by the running max of a rate-4 Brownian path to
show what a calibrated harness looks like.
"""
from lpplab.env import make_grid
from lpplab.fractal import StopRule, local_limit_experiment
from lpplab.sheet import default_sheet_params

rule = StopRule.tau_lambda(0.0)

og = make_grid(0.0, 2.0**-7 / 2**14, 2**14 + 1)
p = default_sheet_params(n=16, window=(-1.0, 1.0), cells=2**16, seed=5)
oracle = local_limit_experiment(p, rule, [2.0**-8], 1.0, 400, oracle=True, oracle_grid=og)
print("oracle:", f"KS = {oracle.statistics['ks[tau:0@eps=0.00390625]']:.3f}",
      f"mean = {oracle.statistics['mean[tau:0@eps=0.00390625]']:.3f}",
      f"(target {oracle.statistics['sigma'] * 0.7978845608:.3f})")

rep = local_limit_experiment(p, rule, [2.0**-4, 2.0**-6], 1.0, 200)
for e in (2.0**-4, 2.0**-6):
    key = f"tau:0@eps={e:g}"
    print(f"sheet eps={e:g}: n = {rep.statistics[f'n_effective[{key}]']},"
          f" KS = {rep.statistics[f'ks[{key}]']:.3f}, mean = {rep.statistics[f'mean[{key}]']:.3f}")
