"""Command line entry point.

    aml5g run <config> [--seed S] [--seeds N] [--out DIR] [--format csv|md]
    aml5g validate <config>
    aml5g tables [--seed S] [--seeds N] [--out DIR] [--format csv|md]

Exit codes: 0 success, 1 configuration (parse or validation) error,
2 runtime error.  The output directory defaults to ``$AML5G_OUT_DIR`` when
set, else ``./results``; ``--out`` wins over both.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .harness import ConfigError, emit_report, format_config, parse_config, run_experiment

OUT_ENV = "AML5G_OUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("aml5g")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aml5g", description="Adversarial ML experiments on 5G spectrum sharing and authentication.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, help="first seed (overrides the config)")
        sp.add_argument("--seeds", type=int, metavar="N", help="number of seeds (overrides the config)")
        sp.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./results)")
        sp.add_argument("--format", choices=("csv", "md"), default="csv")

    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config", type=Path)
    common(r)
    v = sub.add_parser("validate", help="parse and validate a config file, echo it with defaults")
    v.add_argument("config", type=Path)
    t = sub.add_parser("tables", help="reproduce the standard result tables with default settings")
    common(t)
    return p


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV, "results"))


def _overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.seeds is not None:
        changes["n_seeds"] = args.seeds
    return cfg.replace(**changes) if changes else cfg


def _write(report, out: Path, fmt: str, stem: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.{fmt}"
    path.write_bytes(emit_report(report, fmt))
    return path


def _progress(seed):
    log.info("seed %d done", seed)


def _cmd_run(args) -> int:
    cfg = _overrides(parse_config(args.config.read_text()), args)
    report = run_experiment(cfg, _progress)
    path = _write(report, _out_dir(args), args.format, f"{cfg.scenario}_s{cfg.seed}_n{cfg.n_seeds}")
    print(path)
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = parse_config(args.config.read_text())
    sys.stdout.write(format_config(cfg))
    return EXIT_OK


TABLES = (
    ("spoofing_attack_performance", "scenario = Spoof2\n"),
    ("defense_against_spoofing", "scenario = Defense2\n"),
    ("spectrum_sharing_baseline", "scenario = Baseline1\n"),
    ("surrogate_jamming", "scenario = Attack1\n"),
)


def _cmd_tables(args) -> int:
    out = _out_dir(args)
    for stem, text in TABLES:
        cfg = parse_config(text).replace(n_seeds=10)
        cfg = _overrides(cfg, args)
        log.info("table %s: %s over %d seeds", stem, cfg.scenario, cfg.n_seeds)
        report = run_experiment(cfg, _progress)
        print(_write(report, out, args.format, stem))
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "tables": _cmd_tables}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # anything raised by the pipelines
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
