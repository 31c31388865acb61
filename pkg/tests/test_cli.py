import json

import pytest

from lpplab.cli import DEFAULTS, main, resolve


def test_resolve_priority():
    o = resolve("levy", {"replicas": 150}, {"replicas": 120, "rate": 2.0})
    assert o["replicas"] == 150 and o["rate"] == 2.0
    assert o["dx"] == DEFAULTS["levy"]["dx"] and o["seed"] == 0
    o = resolve("growth", {}, {"dx-env": 0.5})
    assert o["dx_env"] == 0.5
    with pytest.raises(ValueError):
        resolve("levy", {}, {"bogus": 1})
    with pytest.raises(ValueError):
        resolve("levy", {"threads": 0})


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def read(tmp_path, name):
    return json.loads((tmp_path / f"{name}.json").read_text())


def test_identities_outputs(tmp_path, capsys):
    assert run(tmp_path, "identities", "--count", "3") == 0
    for ext in ("csv", "svg", "json"):
        assert (tmp_path / f"identities.{ext}").exists()
    js = read(tmp_path, "identities")
    assert js["pass"] is True and js["name"] == "identities"
    assert set(js) == {"name", "params", "statistics", "pass", "seed", "runtime_seconds"}
    csv = (tmp_path / "identities.csv").read_text().splitlines()
    assert csv[0] == "# experiment: identities" and csv[1] == "# seed: 0"
    assert "identities: PASS" in capsys.readouterr().out


def test_invalid_arguments_exit_2(tmp_path, capsys):
    assert run(tmp_path, "levy", "--replicas", "10") == 2
    assert run(tmp_path, "identities", "--count", "0") == 2
    assert run(tmp_path, "local-limit", "--n", "8", "--cells", "256", "--eps", "0.001",
               "--replicas", "200") == 2
    assert "lpplab" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_failing_experiment_exits_1(tmp_path):
    # one line and a coarse grid: the occupation estimator is far from the running max
    code = run(tmp_path, "levy", "--replicas", "100", "--dx", "0.01", "--epsilon", "0.5")
    assert code == 1
    assert read(tmp_path, "levy")["pass"] is False


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"count": 2, "seed": 7}))
    assert main(["identities", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    js = read(tmp_path, "identities")
    assert js["seed"] == 7 and js["params"]["count"] == 2


def strip(tmp_path, name):
    js = read(tmp_path, name)
    js.pop("runtime_seconds")
    return json.dumps(js, sort_keys=True)


@pytest.mark.parametrize(
    "argv, name",
    [
        (["levy", "--replicas", "120", "--dx", "1e-3"], "levy"),
        (["growth", "--n", "16", "--y-a", "0", "--y-b", "0.5", "--M", "0", "0.25", "0.5",
          "--dx-env", "0.5", "--replicas", "30"], "growth"),
        (["profile", "--n", "8", "--window", "-0.5", "0.5", "--cells", "512"], "profile"),
    ],
)
def test_threads_do_not_change_results(tmp_path, argv, name):
    a, b = tmp_path / "a", tmp_path / "b"
    main([*argv, "--out", str(a), "--threads", "1"])
    main([*argv, "--out", str(b), "--threads", "2"])
    assert strip(a, name) == strip(b, name)
    assert (a / f"{name}.csv").read_bytes() == (b / f"{name}.csv").read_bytes()
