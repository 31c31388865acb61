import numpy as np
import pytest

import lpplab.identities as ident
from lpplab.env import RngSpec
from lpplab.identities import IDENTITIES, Tally, check_environment, e2_ledger, random_environment, run_identities


def test_e2_ledger_exact():
    for name, (got, want) in e2_ledger().items():
        assert got == want, name


def test_small_fuzz_run_is_clean():
    rep = run_identities(20, seed=3)
    assert rep.statistics["violations_total"] == 0
    assert rep.statistics["e2_ledger_mismatches"] == 0
    assert rep.passed
    assert all(rep.statistics[f"checks[{n}]"] > 0 for n in IDENTITIES)


def test_count_must_be_positive():
    with pytest.raises(ValueError):
        run_identities(0, seed=1)


def test_tally_semantics():
    t = Tally(names=("a",), rtol=1e-9, atol=1e-12)
    t.geq("a", [1.0, 2.0], [1.0, 2.0 + 1e-10])
    assert t.violations["a"] == 0
    t.geq("a", [1.0], [1.1])
    t.eq("a", [5.0], [5.0 + 1e-6])
    assert t.violations["a"] == 2
    t.flag("a", [True, False])
    assert t.violations["a"] == 3 and t.checks["a"] == 6


def test_broken_pitman_is_caught(monkeypatch):
    # running minimum in place of the running maximum: still shift-equivariant,
    # but it no longer commutes with taking the max over the second argument
    def broken(f1, f2):
        return f1.with_values(f1.values + np.minimum.accumulate(f2.values - f1.values))

    monkeypatch.setattr(ident, "pitman_transform", broken)
    rng = RngSpec(8)
    gen = rng.generator(0)
    t = Tally()
    for i in range(5):
        check_environment(random_environment(gen, rng, i + 1), gen, t, samples=50)
    assert t.violations["pitman_max"] > 0


def test_broken_lpp_table_is_caught(monkeypatch):
    real = ident.lpp_table

    def noisy(env):
        T = real(env).copy()
        T[np.isfinite(T)] += np.random.default_rng(0).normal(size=np.isfinite(T).sum()) * 1e-3
        return T

    monkeypatch.setattr(ident, "lpp_table", noisy)
    rng = RngSpec(8)
    gen = rng.generator(0)
    t = Tally()
    for i in range(3):
        check_environment(random_environment(gen, rng, i + 1), gen, t, samples=100)
    assert t.violations["column_decomposition"] > 0
    assert t.violations["z_recursion"] > 0
