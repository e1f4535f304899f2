"""Command-line interface: subcommands, manifests and exit codes."""

import hashlib
import json

import pytest
import yaml

from mfabc.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from mfabc.config import ExperimentConfig, build_campaign, build_problem, resolve_function


def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def toy_config(out, **extra):
    cfg = {"model": {"name": "toy"}, "distance": {"epsilon": 1.0}, "seed": 3, "out": str(out)}
    cfg.update(extra)
    return cfg


def check_manifest(out):
    manifest = json.loads((out / "manifest.json").read_text())
    for name, info in manifest["files"].items():
        data = (out / name).read_bytes()
        assert hashlib.sha256(data).hexdigest() == info["sha256"]
        assert len(data) == info["bytes"]
    return manifest


def test_run_fixed(tmp_path):
    out = tmp_path / "run"
    cfg = write_config(tmp_path, toy_config(out, campaign={
        "eta": {"kind": "fixed", "eta1": 0.5, "eta2": 0.4}, "stop": {"n": 500}}))
    assert main(["run", "--config", str(cfg)]) == EXIT_OK
    manifest = check_manifest(out)
    assert set(manifest["files"]) == {"samples.csv", "summary.json"}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n"] == 500
    assert manifest["campaign"]["eta"] == [0.5, 0.4]
    assert (out / "samples.csv").read_text().startswith("index,theta,w,w_tilde,case,")


def test_run_is_reproducible(tmp_path):
    cfg = write_config(tmp_path, toy_config(tmp_path / "a", campaign={"stop": {"n": 200}}))
    main(["run", "--config", str(cfg)])
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "samples.csv").read_bytes() == \
        (tmp_path / "b" / "samples.csv").read_bytes()


def test_run_adaptive_and_seed_override(tmp_path):
    out = tmp_path / "ad"
    cfg = write_config(tmp_path, toy_config(out, campaign={
        "eta": {"kind": "adaptive", "burn_in": 100, "freeze_after": "never"},
        "stop": {"n": 1000}}))
    assert main(["run", "--config", str(cfg), "--seed", "8"]) == EXIT_OK
    manifest = check_manifest(out)
    assert manifest["seed"] == 8
    assert manifest["campaign"]["gate_index"] == 99
    assert len(manifest["campaign"]["eta_trace"]) == 901


def test_benchmark_tune_and_study(tmp_path):
    bench = tmp_path / "bench"
    cfg = write_config(tmp_path, toy_config(bench, benchmark={"n": 3000}))
    assert main(["benchmark", "--config", str(cfg)]) == EXIT_OK
    manifest = check_manifest(bench)
    assert manifest["rows"] == 3000
    table = str(bench / "benchmark.csv")

    tune = tmp_path / "tune"
    cfg = write_config(tmp_path, toy_config(tune, tune={"table": table}), "tune.yaml")
    assert main(["tune", "--config", str(cfg)]) == EXIT_OK
    report = json.loads((tune / "tuning_report.json").read_text())
    assert {"estimates", "R_p", "R_n", "R_0", "eta1", "eta2", "mode", "flags"} <= set(report)

    study = tmp_path / "study"
    cfg = write_config(tmp_path, toy_config(study, study={
        "table": table, "kinds": ["efficiency", "variance", "burn_in"], "subsample": 100,
        "repeats": 10, "variance_repeats": 5, "budget": 200.0, "functions": ["param:theta"],
        "burn_in": 100, "phase": 100, "burn_in_repeats": 5}), "study.yaml")
    assert main(["study", "--config", str(cfg)]) == EXIT_OK
    manifest = check_manifest(study)
    assert {"fig2_efficiency.csv", "fig4_variance.csv", "fig5_burn_in.csv"} <= \
        set(manifest["files"])


def test_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "dry"
    cfg = write_config(tmp_path, toy_config(out))
    assert main(["run", "--config", str(cfg), "--dry-run"]) == EXIT_OK
    assert not out.exists()
    assert "run:" in capsys.readouterr().out


@pytest.mark.parametrize("bad", [
    {"distance": {"epsilon": -1}},
    {"distance": {"epsilon": 1}, "unknown_key": 1},
    {"distance": {"epsilon": 1}, "campaign": {"stop": {"n": 5, "budget": 1.0}}},
    {"distance": {"epsilon": 1}, "campaign": {"eta": {"kind": "optimal"}}},
    {"distance": {"epsilon": 1}, "campaign": {"eta": {"eta1": 1.5}}},
])
def test_invalid_config_exit_code(tmp_path, bad, capsys):
    cfg = write_config(tmp_path, bad)
    assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG
    assert "invalid config" in capsys.readouterr().err


def test_invalid_config_names_field(tmp_path, capsys):
    cfg = write_config(tmp_path, {"distance": {"epsilon": -1}})
    main(["run", "--config", str(cfg)])
    assert "distance.epsilon" in capsys.readouterr().err


def test_unparsable_and_missing_config(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_IO


def test_unknown_function_is_config_error(tmp_path):
    bench = tmp_path / "b"
    cfg = write_config(tmp_path, toy_config(bench, benchmark={"n": 200}))
    main(["benchmark", "--config", str(cfg)])
    cfg = write_config(tmp_path, toy_config(tmp_path / "t", tune={
        "table": str(bench / "benchmark.csv"), "function": "F9"}), "t.yaml")
    assert main(["tune", "--config", str(cfg)]) == EXIT_CONFIG


def test_missing_table_is_io_error(tmp_path):
    cfg = write_config(tmp_path, toy_config(tmp_path / "t", tune={"table": "/nonexistent.csv"}))
    assert main(["tune", "--config", str(cfg)]) == EXIT_IO


def test_config_builders():
    cfg = ExperimentConfig.model_validate({"model": {"name": "repressilator"},
                                           "distance": {"epsilon": 50}})
    problem = build_problem(cfg)
    assert problem.param_names == ("n", "K_h")
    spec = build_campaign(cfg, problem)
    assert spec.stop.n == 1000
    f = resolve_function("param:K_h", problem.param_names)
    assert f([2.0, 17.0]) == 17.0
    assert resolve_function("constant")([0.0]) == 1.0


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
