"""Command-line entry point ``mfabc``.

Subcommands::

    mfabc benchmark --config cfg.yaml   # complete coupled pairs -> benchmark.csv
    mfabc run       --config cfg.yaml   # one campaign -> samples.csv, summary.json
    mfabc study     --config cfg.yaml   # replay studies on a benchmark table
    mfabc tune      --config cfg.yaml   # continuation probabilities from a table

Every subcommand writes ``manifest.json`` in the output directory listing
the emitted files with SHA-256 hashes.  Exit status is 0 on success, 2 for
an invalid config and 3 for file-system errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pydantic

from . import __version__
from .config import (ConfigError, ExperimentConfig, build_campaign, build_problem, load_config,
                     resolve_function, scaled)
from .experiments import (BenchmarkTable, burn_in_study, efficiency_study, generate_benchmark,
                          variance_study, write_plot_data)
from .mf_tuning import optimal_eta, optimal_eta_constrained, tuning_report, write_tuning_report
from .samplers import run_campaign
from .streams import BENCHMARK

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

log = logging.getLogger("mfabc")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    if isinstance(v, Path):
        return str(v)
    return v


def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(data), fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _manifest(out: Path, command: str, cfg: ExperimentConfig, files, extra=None):
    data = {"command": command, "version": __version__, "seed": cfg.seed, "scale": cfg.scale,
            "config": cfg.model_dump(mode="json"),
            "streams": {"benchmark": f"{BENCHMARK}/row-<i>", "campaign": "campaign/index-<i>"},
            "files": {Path(p).name: {"sha256": _sha256(p), "bytes": os.path.getsize(p)}
                      for p in files}}
    if extra:
        data.update(extra)
    _write_json(out / "manifest.json", data)


def _load_table(cfg: ExperimentConfig, path, workers):
    if path:
        return BenchmarkTable.from_csv(path)
    n = scaled(cfg, "benchmark_n", cfg.benchmark.n)
    return generate_benchmark(build_problem(cfg), n, cfg.seed, workers)


# ---------------------------------------------------------------------------
# subcommands


def cmd_benchmark(cfg: ExperimentConfig, out: Path, workers: int, dry_run: bool) -> int:
    n = scaled(cfg, "benchmark_n", cfg.benchmark.n)
    if dry_run:
        print(f"benchmark: model={cfg.model.name} rows={n} seed={cfg.seed} -> {out}")
        return EXIT_OK
    start = time.perf_counter()
    table = generate_benchmark(build_problem(cfg), n, cfg.seed, workers)
    path = out / "benchmark.csv"
    table.to_csv(path)
    est = table.estimates()
    _manifest(out, "benchmark", cfg, [path],
              {"rows": len(table), "failed_rows": n - len(table), "estimates": est.to_dict(),
               "cost_ratio": float(np.mean(table.cost_lo) / np.mean(table.cost_hi)),
               "wall_seconds": time.perf_counter() - start})
    print(f"wrote {len(table)} rows to {path}")
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig, out: Path, workers: int, dry_run: bool) -> int:
    e, s = cfg.campaign.eta, cfg.campaign.stop
    if dry_run:
        stop = f"n={s.n}" if s.n is not None else f"budget={s.budget}s"
        print(f"run: model={cfg.model.name} eta={e.kind} {stop} coupling={cfg.campaign.coupling}"
              f" seed={cfg.seed} -> {out}")
        return EXIT_OK
    problem = build_problem(cfg)
    spec = build_campaign(cfg, problem, workers)
    result = run_campaign(spec)
    samples = out / "samples.csv"
    summary = out / "summary.json"
    result.sample.to_csv(samples)
    functions = {name: resolve_function(name, problem.param_names)
                 for name in cfg.study.functions} if cfg.model.name == "repressilator" else {}
    functions.update({f"param:{p}": resolve_function(f"param:{p}", problem.param_names)
                      for p in problem.param_names})
    result.sample.write_summary(summary, functions)
    _manifest(out, "run", cfg, [samples, summary], {"campaign": result.manifest(spec)})
    print(f"{len(result.sample)} records, ESS {result.sample.ess:.1f}, "
          f"T_tot {result.sample.total_cost:.3f}s -> {out}")
    return EXIT_OK


def cmd_study(cfg: ExperimentConfig, out: Path, workers: int, dry_run: bool) -> int:
    st = cfg.study
    if dry_run:
        print(f"study: kinds={st.kinds} table={st.table or 'generate'} scale={cfg.scale} -> {out}")
        return EXIT_OK
    table = _load_table(cfg, st.table, workers)
    files, extra = [], {"rows": len(table)}
    eff = var = burn = None
    if "efficiency" in st.kinds:
        eff = efficiency_study(table, subsample=scaled(cfg, "subsample", st.subsample),
                               repeats=scaled(cfg, "repeats", st.repeats), floors=st.floors)
        extra["efficiency_medians"] = {k: eff.median(k) for k in eff.labels}
    if "variance" in st.kinds:
        functions = {name: resolve_function(name, table.param_names) for name in st.functions}
        var = variance_study(table, functions, budget=st.budget,
                             repeats=scaled(cfg, "variance_repeats", st.variance_repeats),
                             seed=cfg.seed, floors=st.floors)
        extra["variance_budget"] = var.budget
        extra["spearman_pooled"] = var.spearman()
    if "burn_in" in st.kinds:
        burn = burn_in_study(table, scaled(cfg, "burn_in", st.burn_in),
                             scaled(cfg, "phase", st.phase),
                             scaled(cfg, "burn_in_repeats", st.burn_in_repeats), st.floors)
    written = write_plot_data(out, table if st.table is None else None, eff, var, burn)
    files.extend(written.files.values())
    if st.table is None:
        path = out / "benchmark.csv"
        table.to_csv(path)
        files.append(path)
    _manifest(out, "study", cfg, files, extra)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_tune(cfg: ExperimentConfig, out: Path, workers: int, dry_run: bool) -> int:
    t = cfg.tune
    if dry_run:
        print(f"tune: table={t.table or 'generate'} mode={t.mode} function={t.function} -> {out}")
        return EXIT_OK
    table = _load_table(cfg, t.table, workers)
    if t.function is None:
        est = table.estimates()
    else:
        est = table.f_estimates(resolve_function(t.function, table.param_names))
    if t.mode == "early_accept_reject":
        cp = optimal_eta(est, t.floors, "optimized")
    else:
        cp = optimal_eta_constrained(est, t.mode, t.floors, "optimized")
    path = out / "tuning_report.json"
    write_tuning_report(path, tuning_report(est, cp, rows=len(table), function=t.function))
    _manifest(out, "tune", cfg, [path])
    print(f"eta = ({cp.eta1:.4f}, {cp.eta2:.4f}) flags={list(cp.flags)} -> {path}")
    return EXIT_OK


COMMANDS = {"benchmark": cmd_benchmark, "run": cmd_run, "study": cmd_study, "tune": cmd_tune}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfabc", description="Multifidelity ABC experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="YAML or JSON config file")
        p.add_argument("--out", help="output directory (overrides config 'out')")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
        p.add_argument("--scale", choices=["desk", "paper"], help="size presets")
        p.add_argument("--dry-run", action="store_true", help="validate and print the plan")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _format_validation(exc: pydantic.ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "invalid config:\n" + "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {k: v for k, v in (("seed", args.seed), ("scale", args.scale),
                                       ("workers", args.workers), ("out", args.out))
                     if v is not None}
        if overrides:
            cfg = ExperimentConfig.model_validate({**cfg.model_dump(), **overrides})
    except pydantic.ValidationError as exc:
        print(_format_validation(exc), file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    workers = cfg.workers or os.cpu_count() or 1
    out = Path(cfg.out)
    try:
        if not args.dry_run:
            out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, workers, args.dry_run)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
