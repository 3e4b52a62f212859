"""Command-line entry point: validate and run experiment configs.

`run` executes the sweep described by a YAML config, writing a CSV of result
rows, a JSON sidecar with the fully resolved config, and a rendered summary
figure, all atomically (write to a temp file, then rename).  `validate`
reports every schema problem without executing anything.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .plots import render_results
from .runner import ResultRow, run_experiment

CSV_HEADER = ("experiment,scheme,axis,axis_value,crb_linear,crb_db,"
              "mse_linear,mse_db,mse_stderr,iterations,wall_ms,seed,config_hash")

log = logging.getLogger("irs_sensing")


def _fmt(value: float | None, db: bool = False) -> str:
    if value is None:
        return ""
    if not np.isfinite(value):
        return "inf"
    if db:
        return "inf" if value <= 0.0 else f"{10.0 * np.log10(value):.6f}"
    return f"{value:.12g}"


def format_rows(rows: list[ResultRow], config_hash: str) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.experiment, r.scheme, r.axis, f"{r.axis_value:.12g}",
            _fmt(r.crb), _fmt(r.crb, db=True),
            _fmt(r.mse), _fmt(r.mse, db=True), _fmt(r.mse_stderr),
            "" if r.iterations is None else str(r.iterations),
            f"{r.wall_ms:.3f}", str(r.seed), config_hash,
        ]))
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, data: str | bytes) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.out is not None:
        cfg = replace(cfg, output=args.out)
    return cfg


def _cmd_validate(args) -> int:
    _, diagnostics = load_config(args.config)
    for line in diagnostics:
        print(line, file=sys.stderr)
    if diagnostics:
        return 1
    print(f"{args.config}: ok")
    return 0


def _cmd_run(args) -> int:
    cfg, diagnostics = load_config(args.config)
    if cfg is None:
        for line in diagnostics:
            print(line, file=sys.stderr)
        return 2
    cfg = _apply_overrides(cfg, args)
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    log.info("running %s (%d sweep points, %d schemes)", cfg.experiment,
             len(cfg.sweep.values), len(cfg.schemes))
    rows = run_experiment(cfg, threads=args.threads)
    config_hash = cfg.config_hash()
    csv_path = out_dir / f"{stem}.csv"
    _atomic_write(csv_path, format_rows(rows, config_hash))
    sidecar = {"config": cfg.resolved(), "config_hash": config_hash,
               "library_version": __version__, "rows": len(rows)}
    _atomic_write(out_dir / f"{stem}.json",
                  json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    fig_tmp = out_dir / f".{stem}.tmp.png"
    render_results(rows, fig_tmp)
    os.replace(fig_tmp, out_dir / f"{stem}.png")
    log.info("wrote %s", csv_path)
    print(csv_path)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("IRS_SENSING_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="irs-sensing",
        description="CRB-optimal beamforming experiments for IRS sensing")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", type=str, default=None)
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
