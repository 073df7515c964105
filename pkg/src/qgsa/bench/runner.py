"""Train/compare drivers: run seeds, write trace CSVs, summaries and charts."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..optimizers import OptimizerTrace, run_optimizer
from ..qml import RiskObjective, build_model, load_feature_csv, load_iris, synth_crack
from ..shots_cost import builtin_profiles
from .config import ConfigError, RunConfig
from .plots import write_chart

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "loss", "circuits", "shots", "cost", "alpha", "accepted", "sign")


def _resolve(path: str, base_dir: Path | None) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base_dir is None else base_dir / p


def build_problem(config: RunConfig, base_dir: Path | None = None) -> RiskObjective:
    ds = config.dataset
    if ds.kind == "iris":
        data = load_iris(_resolve(ds.path, base_dir) if ds.path else None, ds.classes)
    elif ds.kind == "csv":
        data = load_feature_csv(_resolve(ds.path, base_dir))
    else:
        data = synth_crack(ds.n_per_class, ds.d, ds.seed)
    model = build_model(data.d, config.layers)
    return RiskObjective(model, data, config.loss, config.mean_loss)


def initial_theta(config: RunConfig, k: int) -> np.ndarray:
    """Shared starting point: uniform on ``[0, 2 pi)^k`` from ``init_seed``."""
    return np.random.default_rng(config.init_seed).uniform(0.0, 2.0 * np.pi, size=k)


def run_seed(config: RunConfig, seed: int, base_dir: Path | None = None) -> OptimizerTrace:
    objective = build_problem(config, base_dir)
    theta0 = initial_theta(config, objective.k)
    return run_optimizer(config.optimizer_config(), objective, theta0, seed, config.profile(base_dir))


def run_seeds(config: RunConfig, base_dir: Path | None = None) -> list[OptimizerTrace]:
    seeds = sorted(config.seeds)
    if config.workers == 1 or len(seeds) == 1:
        return [run_seed(config, s, base_dir) for s in seeds]
    with ProcessPoolExecutor(max_workers=min(config.workers, len(seeds))) as pool:
        futures = [pool.submit(run_seed, config, s, base_dir) for s in seeds]
        return [f.result() for f in futures]


def write_trace_csv(path: Path, trace: OptimizerTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            sign = "" if r.sign is None else f"{r.sign:+d}"
            w.writerow([r.t, repr(r.loss), r.circuits, r.shots, repr(r.cost), repr(r.alpha),
                        int(r.accepted), sign])


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"empty trace {path}")
    return {
        "t": np.array([int(r["t"]) for r in rows]),
        "loss": np.array([float(r["loss"]) for r in rows]),
        "circuits": np.array([int(r["circuits"]) for r in rows]),
        "shots": np.array([int(r["shots"]) for r in rows]),
        "cost": np.array([float(r["cost"]) for r in rows]),
    }


def summarize(config: RunConfig, traces: list[OptimizerTrace], objective: RiskObjective,
              files: list[str], base_dir: Path | None = None) -> dict:
    finals = [t.final.loss for t in traces]
    circuits = sum(t.final.circuits for t in traces)
    shots = sum(t.final.shots for t in traces)
    updates = sum(t.final.update_circuits for t in traces)
    return {
        "name": config.name,
        "optimizer": config.optimizer_config().method,
        "dataset": objective.data.name,
        "loss": config.loss,
        "mean_loss": config.mean_loss,
        "k": objective.k,
        "n_examples": len(objective.data),
        "iterations": config.iterations,
        "seeds": sorted(config.seeds),
        "init_seed": config.init_seed,
        "pricing": config.pricing,
        "final_losses": finals,
        "final_loss_mean": float(np.mean(finals)),
        "final_loss_std": float(np.std(finals)),
        "final_loss_median": float(np.median(finals)),
        "total_circuits": circuits,
        "total_shots": shots,
        "total_update_circuits": updates,
        "cost": {p.name: p.price(circuits, shots) for p in config.profiles(base_dir)},
        "stop_reasons": [t.stop_reason for t in traces],
        "trace_files": files,
        "config": config.to_dict(),
    }


def _mean_curve(traces: list[dict[str, np.ndarray]], key: str):
    length = min(len(t["loss"]) for t in traces)
    x = np.mean([t[key][:length] for t in traces], axis=0)
    y = np.mean([t["loss"][:length] for t in traces], axis=0)
    return x, y


def train(config: RunConfig, out_dir: Path, base_dir: Path | None = None, plots: bool = False) -> dict:
    run_dir = Path(out_dir) / config.name
    run_dir.mkdir(parents=True, exist_ok=True)
    objective = build_problem(config, base_dir)
    traces = run_seeds(config, base_dir)
    files = []
    for trace in traces:
        name = f"trace_seed{trace.seed}.csv"
        write_trace_csv(run_dir / name, trace)
        files.append(name)
    summary = summarize(config, traces, objective, files, base_dir)
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if plots:
        rows = [read_trace_csv(run_dir / f) for f in files]
        label = summary["optimizer"]
        write_chart(run_dir / "loss_vs_iteration.svg", {label: _mean_curve(rows, "t")},
                    f"{config.name}: training loss", "iteration", "loss")
        write_chart(run_dir / "loss_vs_circuits.svg", {label: _mean_curve(rows, "circuits")},
                    f"{config.name}: training loss", "circuits executed", "loss")
    return summary


def compare(runs_dir: Path, plots: bool = True) -> dict:
    runs_dir = Path(runs_dir)
    summaries = []
    for path in sorted(runs_dir.glob("*/summary.json")):
        s = json.loads(path.read_text())
        s["_dir"] = path.parent
        summaries.append(s)
    if len(summaries) < 2:
        raise ConfigError(f"need at least two completed runs under {runs_dir}, found {len(summaries)}")
    groups: dict[tuple[str, str], list[dict]] = {}
    for s in summaries:
        groups.setdefault((s["dataset"], s["loss"]), []).append(s)
    rows = []
    for (dataset, loss), members in sorted(groups.items()):
        gd = next((m for m in members if m["optimizer"] == "gd"), None)
        for m in members:
            ratio = update_ratio = None
            if gd is not None and gd["total_circuits"]:
                # per-seed averages, so runs with different seed counts compare fairly
                scale = len(gd["seeds"]) / len(m["seeds"])
                ratio = m["total_circuits"] / gd["total_circuits"] * scale
                update_ratio = m["total_update_circuits"] / gd["total_update_circuits"] * scale
            rows.append({
                "run": m["name"],
                "optimizer": m["optimizer"],
                "dataset": dataset,
                "loss": loss,
                "final_loss_mean": m["final_loss_mean"],
                "final_loss_std": m["final_loss_std"],
                "total_circuits": m["total_circuits"],
                "total_update_circuits": m["total_update_circuits"],
                "total_shots": m["total_shots"],
                "cost": {p.name: p.price(m["total_circuits"], m["total_shots"]) for p in builtin_profiles()},
                "circuit_ratio_vs_gd": ratio,
                "update_circuit_ratio_vs_gd": update_ratio,
            })
        if plots:
            by_iter, by_circ = {}, {}
            for m in members:
                traces = [read_trace_csv(m["_dir"] / f) for f in m["trace_files"]]
                by_iter[m["name"]] = _mean_curve(traces, "t")
                by_circ[m["name"]] = _mean_curve(traces, "circuits")
            stem = f"compare_{dataset}_{loss}".replace(" ", "_")
            write_chart(runs_dir / f"{stem}_iterations.svg", by_iter, f"{dataset} / {loss}", "iteration", "loss")
            write_chart(runs_dir / f"{stem}_circuits.svg", by_circ, f"{dataset} / {loss}", "circuits executed", "loss")
    report = {"runs": rows}
    (runs_dir / "compare.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def format_report(report: dict) -> str:
    head = f"{'run':<28}{'optimizer':<16}{'dataset':<12}{'loss':<6}{'final loss':>14}{'circuits':>12}{'ratio vs GD':>13}"
    lines = [head, "-" * len(head)]
    for r in report["runs"]:
        ratio = "-" if r["circuit_ratio_vs_gd"] is None else f"{r['circuit_ratio_vs_gd']:.4f}"
        lines.append(f"{r['run']:<28}{r['optimizer']:<16}{r['dataset']:<12}{r['loss']:<6}"
                     f"{r['final_loss_mean']:>14.6g}{r['total_circuits']:>12d}{ratio:>13}")
    lines.append("")
    lines.append("total cost (USD) per pricing profile:")
    for r in report["runs"]:
        costs = ", ".join(f"{name}: {v:,.2f}" for name, v in r["cost"].items())
        lines.append(f"  {r['run']}: {costs}")
    return "\n".join(lines)
