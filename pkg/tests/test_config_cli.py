import json

import pytest

from diowave.cli import main
from diowave.config import SCENARIOS, ConfigError, ExperimentConfig, load_config

QUICK = {
    "admissibility-scan": ["R=8", "radii=[4,8]"],
    "cluster-report": ["R=8", "radii=[8,16]"],
    "resonance-census": ["R=4", "radii=[4]"],
    "divisor-ledger": ["R=4", "radii=[4,6]", "samples=100", "alpha0_constant=2", "theta=0.5"],
    "effective-run": ["R=4", "t1=2", "steps=[0.05,0.025,0.0125]"],
    "dispersive-check": ["L=400", "Nx=8192", "times=[1,2,5]"],
}


def _args(scenario, out, extra=()):
    argv = [scenario, "--out", str(out), "-q"]
    for kv in list(QUICK.get(scenario, [])) + list(extra):
        argv += ["--set", kv]
    return argv


def test_defaults_validate():
    for s in SCENARIOS:
        cfg = load_config(s)
        assert cfg.scenario == s
    assert load_config("nls-run").t0 == 0.0
    assert load_config("dispersive-check").d == 1


@pytest.mark.parametrize(
    "override",
    ["s=1.0", "delta=0.3", "theta=1.5", "c_d=3", "Nx=1000", "h=-1", "t1=0.5", "fixture=replay", "bogus=1", "nokey"],
)
def test_invalid_overrides(override):
    with pytest.raises(ConfigError):
        load_config("effective-run", overrides=[override])


def test_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"R": 5, "theta": 0.25}))
    cfg = load_config("effective-run", p, ["R=6"])
    assert cfg.R == 6 and cfg.theta == 0.25
    p.write_text(json.dumps({"scenario": "nls-run"}))
    with pytest.raises(ConfigError):
        load_config("effective-run", p)
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config("effective-run", p)
    with pytest.raises(ConfigError):
        load_config("effective-run", tmp_path / "missing.json")


def test_matrix_presets():
    assert load_config("admissibility-scan", overrides=["matrix=identity"]).dispersion_matrix().name == "identity"
    cfg = load_config("admissibility-scan", overrides=["matrix=entries", "matrix_entries=[[1,0.5],[0.5,2]]"])
    assert cfg.dispersion_matrix().entries[0, 1] == 0.5
    with pytest.raises(ConfigError):
        load_config("admissibility-scan", overrides=["matrix=entries", "matrix_entries=[[1,2],[2,1]]"]).dispersion_matrix()
    with pytest.raises(ConfigError):
        ExperimentConfig("effective-run", matrix="entries")


def test_exit_codes(tmp_path, capsys):
    assert main(_args("admissibility-scan", tmp_path / "a")) == 0
    assert main(_args("admissibility-scan", tmp_path / "b", ["matrix=identity"])) == 1
    assert main(_args("admissibility-scan", tmp_path / "c", ["theta=7"])) == 2
    assert main(["no-such-scenario", "--out", str(tmp_path)]) == 2
    assert main(["admissibility-scan"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(_args("admissibility-scan", blocker / "sub")) == 2


def test_step_size_breakdown_exits_one(tmp_path, capsys):
    code = main(_args("effective-run", tmp_path, ["amplitude=50", "steps=[0.5,0.25,0.125]", "h=0.5"]))
    assert code == 1
    assert "run failed" in capsys.readouterr().err


def test_summary_contents(tmp_path):
    main(_args("admissibility-scan", tmp_path))
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["scenario"] == "admissibility-scan"
    assert summary["pass"] is True
    for c in summary["checks"]:
        assert set(c) == {"id", "measured", "bound", "pass", "note"}


@pytest.mark.parametrize("scenario", sorted(QUICK))
def test_outputs_are_byte_identical(tmp_path, scenario):
    assert main(_args(scenario, tmp_path / "1")) in (0, 1)
    assert main(_args(scenario, tmp_path / "2")) in (0, 1)
    files = sorted(p.name for p in (tmp_path / "1").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "2").iterdir())
    for name in files:
        if name.endswith((".csv", ".svg")):
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes(), name


def test_fixture_record_and_compare(tmp_path):
    fx = tmp_path / "fixtures"
    rec = ["fixture=record", f"fixture_dir={fx}"]
    assert main(_args("divisor-ledger", tmp_path / "r", rec)) == 0
    assert (fx / "divisor-ledger.json").exists()
    cmp_ = ["fixture=compare", f"fixture_dir={fx}"]
    assert main(_args("divisor-ledger", tmp_path / "c", cmp_)) == 0
    data = json.loads((fx / "divisor-ledger.json").read_text())
    key = next(k for k, v in data.items() if isinstance(v, float) and v != 0)
    data[key] *= 1.5
    (fx / "divisor-ledger.json").write_text(json.dumps(data))
    assert main(_args("divisor-ledger", tmp_path / "m", cmp_)) == 1
    assert main(_args("divisor-ledger", tmp_path / "n", ["fixture=compare", f"fixture_dir={tmp_path / 'none'}"])) == 1


def test_zero_amplitude_effective_run_passes(tmp_path):
    assert main(_args("effective-run", tmp_path, ["amplitude=0"])) == 0
