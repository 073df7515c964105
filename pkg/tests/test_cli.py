import json
from pathlib import Path

import numpy as np
import pytest

from qgsa.bench.config import ConfigError, RunConfig, load_config
from qgsa.bench.runner import TRACE_COLUMNS, compare, read_trace_csv, train
from qgsa.cli import main


def write_config(path, **overrides):
    cfg = {
        "name": "tiny",
        "dataset": {"kind": "synthetic", "n_per_class": 5, "d": 2, "seed": 3},
        "loss": "qh",
        "layers": 1,
        "optimizer": {"method": "qgsa_practical", "alpha": 0.1},
        "iterations": 8,
        "seeds": [0, 1],
        "evaluator": {"mode": "sampled", "shots": 50},
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def test_train_writes_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "runs"), "--plots"]) == 0
    run = tmp_path / "runs" / "tiny"
    assert sorted(p.name for p in run.iterdir()) == [
        "loss_vs_circuits.svg", "loss_vs_iteration.svg", "summary.json", "trace_seed0.csv", "trace_seed1.csv"]
    header = (run / "trace_seed0.csv").read_text().splitlines()[0]
    assert tuple(header.split(",")) == TRACE_COLUMNS
    assert (run / "loss_vs_iteration.svg").read_text().startswith("<svg")


def test_train_is_bitwise_deterministic(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    for out in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / out)]) == 0
    for f in ("trace_seed0.csv", "trace_seed1.csv"):
        assert (tmp_path / "a/tiny" / f).read_bytes() == (tmp_path / "b/tiny" / f).read_bytes()


def test_train_parallel_matches_serial(tmp_path):
    serial = train(RunConfig.from_dict(json.loads(write_config(tmp_path / "c.json").read_text())), tmp_path / "s")
    par_cfg = RunConfig.from_dict(json.loads(write_config(tmp_path / "p.json", workers=2).read_text()))
    parallel = train(par_cfg, tmp_path / "p")
    assert serial["final_losses"] == parallel["final_losses"]
    assert serial["total_circuits"] == parallel["total_circuits"]


def test_train_zero_iterations(tmp_path):
    cfg = write_config(tmp_path / "c.json", iterations=0)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "tiny/trace_seed0.csv").read_text().splitlines()
    assert len(rows) == 2
    summary = json.loads((tmp_path / "tiny/summary.json").read_text())
    assert summary["total_circuits"] == 0 and summary["cost"]["IonQ - Aria"] == 0


def test_summary_matches_traces(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.json"))
    summary = train(cfg, tmp_path)
    traces = [read_trace_csv(tmp_path / "tiny" / f) for f in summary["trace_files"]]
    finals = [t["loss"][-1] for t in traces]
    assert abs(np.mean(finals) - summary["final_loss_mean"]) <= 1e-12
    assert abs(np.std(finals) - summary["final_loss_std"]) <= 1e-12
    assert sum(int(t["circuits"][-1]) for t in traces) == summary["total_circuits"]
    assert sum(int(t["shots"][-1]) for t in traces) == summary["total_shots"]
    for t in traces:
        assert np.all(np.diff(t["circuits"]) >= 0)
        np.testing.assert_allclose(t["cost"], 0.3 * t["circuits"] + 0.00035 * t["shots"], rtol=1e-12)


def test_gd_trace_circuits_exact(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.json", optimizer={"method": "gd"}, iterations=4))
    summary = train(cfg, tmp_path)
    trace = read_trace_csv(tmp_path / "tiny" / summary["trace_files"][0])
    n, k = summary["n_examples"], summary["k"]
    np.testing.assert_array_equal(trace["circuits"], 2 * k * n * trace["t"])


def test_compare(tmp_path, capsys):
    runs = tmp_path / "runs"
    for method in ("gd", "qgsa_practical"):
        cfg = write_config(tmp_path / f"{method}.json", name=method, optimizer={"method": method})
        assert main(["train", "--config", str(cfg), "--out", str(runs)]) == 0
    capsys.readouterr()
    assert main(["compare", "--runs", str(runs)]) == 0
    out = capsys.readouterr().out
    assert "ratio vs GD" in out and "qgsa_practical" in out
    report = json.loads((runs / "compare.json").read_text())
    rows = {r["optimizer"]: r for r in report["runs"]}
    assert rows["gd"]["circuit_ratio_vs_gd"] == 1.0
    want = rows["qgsa_practical"]["total_circuits"] / rows["gd"]["total_circuits"]
    assert rows["qgsa_practical"]["circuit_ratio_vs_gd"] == pytest.approx(want)
    assert list(runs.glob("compare_*.svg"))


def test_compare_needs_two_runs(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json")
    main(["train", "--config", str(cfg), "--out", str(tmp_path / "runs")])
    assert main(["compare", "--runs", str(tmp_path / "runs")]) == 2
    assert "at least two" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        compare(tmp_path / "empty")


def test_shots_command(capsys):
    assert main(["shots", "--epsilon", "0.01", "--delta", "0.05"]) == 0
    assert "18445" in capsys.readouterr().out
    assert main(["shots", "--gap", "0.1", "--delta", "0.05"]) == 0
    assert "185" in capsys.readouterr().out
    assert main(["shots", "--epsilon", "0.01", "--delta", "0.05", "--range", "2"]) == 0
    assert "73778" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["shots", "--epsilon", "0.01", "--delta", "1.5"],
    ["shots", "--epsilon", "-1", "--delta", "0.05"],
    ["shots", "--gap", "0", "--delta", "0.05"],
    ["shots", "--delta", "0.05"],
])
def test_shots_errors(argv, capsys):
    assert main(argv) == 2
    captured = capsys.readouterr()
    assert "error" in captured.err and captured.out == ""


@pytest.mark.parametrize("override", [
    {"loss": "hinge"},
    {"optimizer": {"method": "adam"}},
    {"optimizer": {"momentum": 0.9}},
    {"seeds": []},
    {"dataset": {"kind": "mnist"}},
    {"evaluator": {"mode": "noisy"}},
    {"pricing": "Nobody - Nothing"},
])
def test_bad_config_exit_code(tmp_path, override, capsys):
    cfg = write_config(tmp_path / "c.json", **override)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.json")]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["train", "--config", str(tmp_path / "bad.json")]) == 2


def test_custom_pricing_file(tmp_path):
    (tmp_path / "prices.json").write_text(json.dumps([{"name": "Lab", "per_circuit": 1.0, "per_shot": 0.0}]))
    cfg = load_config(write_config(tmp_path / "c.json", pricing="Lab", pricing_file="prices.json"))
    summary = train(cfg, tmp_path / "out", base_dir=tmp_path)
    assert summary["cost"]["Lab"] == summary["total_circuits"]
    trace = read_trace_csv(tmp_path / "out/tiny/trace_seed0.csv")
    np.testing.assert_array_equal(trace["cost"], trace["circuits"])


def test_automatic_shot_counts(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.json",
                                   evaluator={"mode": "exact", "epsilon": 0.1, "delta": 0.05}))
    opt = cfg.optimizer_config()
    assert (opt.n_mu, opt.n_g) == (185, 185)


def test_shipped_configs_load():
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))
    assert len(paths) == 16
    for p in paths:
        cfg = load_config(p)
        assert cfg.iterations == 100 and len(cfg.seeds) == 10
