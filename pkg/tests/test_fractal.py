import math

import numpy as np
import pytest
from oracles import brute_box_count, cantor_flags

from lpplab.env import RngSpec, brownian_row, fixture_ensemble, make_grid, refine
from lpplab.errors import EmptySetError, ResolutionError
from lpplab.fractal import (
    PointMask,
    StopRule,
    box_counts,
    box_dimension,
    levy_experiment,
    local_limit_experiment,
    local_time_occupation,
    locate_stop,
    nc_mask,
    pooled_box_dimension,
    running_max,
    running_max_incremental,
    zero_set_mask,
)
from lpplab.lpp import LatticePoint, Profile
from lpplab.sheet import default_sheet_params, raw_difference_profile


def prof(values, x0=0.0, dx=1.0):
    values = np.asarray(values, dtype=float)
    return Profile(make_grid(x0, dx, values.size), 0, values)


def test_running_max_examples():
    assert running_max(prof([0, -1, 2, 1])).values.tolist() == [0, 0, 2, 2]
    up = [0.0, 0.5, 0.5, 3.0]
    assert running_max(prof(up)).values.tolist() == up
    assert running_max(prof([1.5] * 4)).values.tolist() == [1.5] * 4


def test_running_max_incremental_bitwise():
    g = make_grid(0.0, 1e-3, 3001)
    rng = RngSpec(5, 2)
    for chunk in (7, 1000, 1 << 16):
        got = running_max_incremental(g, 4.0, rng, line=1, chunk=chunk)
        assert got == float(brownian_row(g, 4.0, rng, 1).max())


def test_local_time_examples():
    g = make_grid(0.0, 0.01, 101)
    assert not local_time_occupation(Profile(g, 0, 1 + g.points), 0.1).values.any()
    # (i - 50) / 100 rather than x - 0.5: keeps the points +-0.1 exact, so they
    # stay outside the open band as in exact arithmetic
    L = local_time_occupation(Profile(g, 0, (np.arange(101) - 50) / 100), 0.1)
    assert L.values[-1] == pytest.approx(0.95, abs=1e-12)
    assert L.values[0] == 0.0
    sat = local_time_occupation(Profile(g, 0, g.points - 0.5), 1.0)
    np.testing.assert_allclose(sat.values, g.points / 2.0, atol=1e-12)
    with pytest.raises(ValueError):
        local_time_occupation(Profile(g, 0, g.points), 0.0)


def test_local_time_rate_scaling():
    g = make_grid(0.0, 0.01, 101)
    p = Profile(g, 0, g.points - 0.5)
    a = local_time_occupation(p, 0.1).values
    b = local_time_occupation(p, 0.1, rate=4.0).values
    np.testing.assert_allclose(b, 4.0 * a, rtol=1e-15)


def test_nc_mask_examples():
    assert nc_mask(prof([0, 0, 1, 1, 2]), 0.5).mask.tolist() == [False, True, False, True]
    assert not nc_mask(prof([3.0] * 6)).mask.any()
    R = refine(fixture_ensemble("E2"), 2)
    D = raw_difference_profile(R, LatticePoint(0, 2), LatticePoint(1, 2))
    m = nc_mask(D, 0.1).mask
    # D sits on grid points 0.5 and 1.0 (raw cells [0.5, 0.75], [0.75, 1.0])
    assert m.any() and D.values[-1] - D.values[0] == 1.0
    with pytest.raises(ValueError):
        nc_mask(prof([0, 1]), -1.0)


def test_zero_set_mask():
    m = zero_set_mask(prof([1.0, -1.0, -2.0, 0.0, 3.0]))
    assert m.mask.tolist() == [True, False, True, True]


def test_box_counts_match_brute_force():
    gen = np.random.default_rng(1)
    flags = gen.random(1024) < 0.03
    mask = PointMask(make_grid(0, 1, 1025), flags)
    counts = box_counts(mask, 1, 9)
    assert list(counts) == [brute_box_count(flags, k) for k in range(1, 10)]
    with pytest.raises(ValueError):
        box_counts(mask, 3, 11)


def test_box_dimension_examples():
    full = PointMask(make_grid(0, 1, 1025), np.ones(1024, bool))
    assert box_dimension(full, 1, 8).slope == pytest.approx(1.0, abs=1e-12)
    one = np.zeros(1024, bool)
    one[345] = True
    assert box_dimension(PointMask(full.grid, one), 1, 8).slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EmptySetError):
        box_dimension(PointMask(full.grid, np.zeros(1024, bool)), 1, 8)


def test_cantor_oracle():
    flags = cantor_flags(8)
    mask = PointMask(make_grid(0, 1, 3**8 + 1), flags)
    fit = box_dimension(mask, 2, 7, base=3)
    assert list(fit.counts) == [2**k for k in range(2, 8)]
    assert fit.slope == pytest.approx(math.log(2) / math.log(3), abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_pooled_box_dimension():
    mask = PointMask(make_grid(0, 1, 3**8 + 1), cantor_flags(8))
    fit = pooled_box_dimension([mask, mask], 2, 7, base=3)
    assert fit.slope == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
    with pytest.raises(ValueError):
        pooled_box_dimension([], 1, 3)


def test_levy_degenerate_and_validation():
    rep = levy_experiment(4.0, 0.0, 1e-3, 0.05, 100, RngSpec(1))
    assert rep.statistics["ks_two_sample"] == 0.0
    assert rep.statistics["ks_half_normal"] == 0.0
    with pytest.raises(ValueError):
        levy_experiment(4.0, 1.0, 1e-3, 0.05, 99, RngSpec(1))
    with pytest.raises(ValueError):
        levy_experiment(4.0, 1.0, 1e-3, 0.0, 100, RngSpec(1))


def test_stop_rule_parse():
    assert StopRule.parse("tau:0") == StopRule.tau_lambda(0.0)
    assert StopRule.parse("xi:-0.5,0.5") == StopRule.xi(-0.5, 0.5)
    assert StopRule.parse("rho_c:0,0.2").label == "rho_c:0,0.2"
    for bad in ("tau", "xi:1", "foo:1", "xi:1,0", "rho_c:0,0"):
        with pytest.raises(ValueError):
            StopRule.parse(bad)


def test_locate_stop():
    D = prof([0, 0, 0, 1, 1, 2, 2], x0=-3.0)
    assert locate_stop(D, StopRule.tau_lambda(-3.0), 0.5) == 3
    assert locate_stop(D, StopRule.tau_lambda(0.0), 0.5) == 5
    assert locate_stop(D, StopRule.tau_lambda(2.0), 0.5) is None
    assert locate_stop(D, StopRule.rho(1.5), 0.0) == 5
    assert locate_stop(D, StopRule.rho(0.0), 0.0) is None  # met at the window start
    assert locate_stop(D, StopRule.rho(5.0), 0.0) is None
    assert locate_stop(D, StopRule.rho_c(-2.0, 1.5), 0.0) == 5
    assert locate_stop(D, StopRule.xi(-3.0, 3.0), 0.5, u=0.25) == 3
    assert locate_stop(D, StopRule.xi(-3.0, 3.0), 0.5, u=0.75) == 5
    assert locate_stop(D, StopRule.xi(-3.0, -1.5), 0.5, u=0.5) is None


def test_local_limit_validation():
    p = default_sheet_params(n=8, window=(-0.5, 0.5), cells=1024)
    with pytest.raises(ResolutionError):
        local_limit_experiment(p, StopRule.tau_lambda(0), [2.0**-6], 1.0, 200)
    with pytest.raises(ValueError):
        local_limit_experiment(p, StopRule.tau_lambda(0), [0.1, 0.2], 1.0, 200)
    with pytest.raises(ValueError):
        local_limit_experiment(p, StopRule.tau_lambda(0), [0.1], 1.0, 199)
    with pytest.raises(ValueError):
        local_limit_experiment(p, [], [0.1], 1.0, 200)


def test_local_limit_oracle_t_eval_scaling():
    p = default_sheet_params(n=8, window=(0.0, 1.0), cells=1 << 14, seed=9)
    a = local_limit_experiment(p, StopRule.tau_lambda(0.1), [2.0**-3], 1.0, 200, oracle=True)
    b = local_limit_experiment(p, StopRule.tau_lambda(0.1), [2.0**-4], 2.0, 200, oracle=True)
    assert b.statistics["sigma"] == pytest.approx(math.sqrt(2) * a.statistics["sigma"])
    # eps * t_eval is the same span, so the rescaled samples differ by sqrt(2) exactly
    assert b.statistics["ks[tau:0.1@eps=0.0625]"] == pytest.approx(
        a.statistics["ks[tau:0.1@eps=0.125]"], abs=1e-12
    )
