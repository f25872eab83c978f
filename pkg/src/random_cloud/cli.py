"""Command-line entry point: ``random-cloud {run,time,sweep,fetch-data}``."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

from .data import DATASETS
from .fetch import fetch_data
from .report import FORMATS, emit_report, emit_study
from .runner import ExperimentConfig, run_experiment, sweep_hyperparams, time_methods

log = logging.getLogger("random_cloud")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _seeds(text: str) -> list[int]:
    """``10`` means seeds 0..9; ``3,7,11`` lists them."""
    text = str(text).strip()
    return list(range(int(text))) if "," not in text else _int_list(text)


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _bool(text: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# option name -> (ExperimentConfig field, parser for config-file strings)
OPTIONS = {
    "dataset": (None, _names),
    "data-dir": ("data_dir", str),
    "seeds": ("seeds", _seeds),
    "hidden": ("hidden", _int_list),
    "cloud-size": ("cloud_size", int),
    "theta": ("threshold", float),
    "n-elim": ("n_elim", int),
    "epochs": ("epochs", int),
    "lr": ("learning_rate", float),
    "batch-size": ("batch_size", int),
    "loss": ("loss", str),
    "threads": ("threads", int),
    "budget-split": ("budget_split", _bool),
    "repeats": ("timing_repeats", int),
    "split-seed": ("split_seed", int),
    "out": (None, str),
    "format": (None, _names),
    "thetas": (None, _float_list),
    "cloud-sizes": (None, _int_list),
    "n-elims": (None, _int_list),
}


def read_config(path: str | Path) -> dict:
    """Read ``key = value`` lines (``#`` comments) into option values.

    Keys are the long flag names without dashes, e.g. ``cloud-size = 50``;
    underscores are accepted in place of hyphens.
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.read_string("[config]\n" + Path(path).read_text(encoding="utf-8"))
    out = {}
    for key, raw in parser["config"].items():
        key = key.replace("_", "-")
        if key not in OPTIONS:
            raise ValueError(f"{path}: unknown key {key!r}")
        out[key] = OPTIONS[key][1](raw)
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags given on the command line win")
    p.add_argument("--dataset", type=_names, help=f"comma list of {', '.join(DATASETS)}")
    p.add_argument("--data-dir", help="directory with the raw dataset files (default: data)")
    p.add_argument("--seeds", type=_seeds, help="count (10 = seeds 0..9) or comma list")
    p.add_argument("--hidden", type=_int_list, help="hidden widths, e.g. 120,60")
    p.add_argument("--cloud-size", type=int)
    p.add_argument("--theta", type=float, help="accuracy threshold for candidates")
    p.add_argument("--n-elim", type=int, help="neurons removed per reduction step")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--loss", choices=("squared_error", "cross_entropy"))
    p.add_argument("--threads", type=int)
    p.add_argument("--budget-split", action="store_const", const=True, help="E/2 + E/2 for the pruning pipelines")
    p.add_argument("--split-seed", type=int)
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--format", type=_names, help=f"comma list of {', '.join(FORMATS)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="random-cloud", description="Training-free topology search for sigmoid MLPs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("run", help="all methods over seeds; writes report.{json,csv,md}"))
    p = sub.add_parser("time", help="wall-clock cost of each method relative to full training")
    _add_common(p)
    p.add_argument("--repeats", type=int, help="timing repeats; the median is reported (default 3)")
    p = sub.add_parser("sweep", help="selection across a theta / cloud size / n_elim grid")
    _add_common(p)
    p.add_argument("--thetas", type=_float_list, help="default 0.3,0.4,0.5,0.6")
    p.add_argument("--cloud-sizes", type=_int_list, help="default: --cloud-size")
    p.add_argument("--n-elims", type=_int_list, help="default: --n-elim")

    p = sub.add_parser("fetch-data", help="download the raw dataset files")
    p.add_argument("--dest", default="data")
    p.add_argument("--dataset", type=_names, help="default: all")
    p.add_argument("--source", choices=("auto", "uci", "mirror"), default="auto")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Config-file values overridden by every flag that was given."""
    opts = read_config(args.config) if getattr(args, "config", None) else {}
    for key in OPTIONS:
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            opts[key] = v
    return opts


def experiment_configs(opts: dict) -> list[ExperimentConfig]:
    names = opts.get("dataset")
    if not names:
        raise ValueError("--dataset is required")
    kwargs = {OPTIONS[k][0]: v for k, v in opts.items() if OPTIONS[k][0] is not None}
    if "out" in opts:
        kwargs["out"] = opts["out"]
    for n in names:
        if n not in DATASETS:
            raise ValueError(f"unknown dataset {n!r}; choose from {', '.join(DATASETS)}")
    return [ExperimentConfig(n, **kwargs) for n in names]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "fetch-data":
            path = fetch_data(args.dest, args.dataset, args.source)
            print(f"data ready in {path}")
            return 0
        opts = resolve_options(args)
        configs = experiment_configs(opts)
        out = Path(opts.get("out", "results"))
        formats = opts.get("format", list(FORMATS))

        if args.command == "run":
            reports = [run_experiment(c) for c in configs]
            for p in emit_report(reports, out, formats):
                print(p)
            failed = [(r.dataset["name"], e) for r in reports for e in r.errors]
            for name, e in failed:
                print(f"error: {name} seed {e['seed']} aborted: {e['error']}", file=sys.stderr)
            return 1 if failed else 0
        if args.command == "time":
            studies = [time_methods(c) for c in configs]
            paths = emit_study("timing", studies, out, formats)
        else:
            studies = [
                sweep_hyperparams(
                    c,
                    opts.get("thetas", [0.3, 0.4, 0.5, 0.6]),
                    opts.get("cloud-sizes", [c.cloud_size]),
                    opts.get("n-elims", [c.n_elim]),
                )
                for c in configs
            ]
            paths = emit_study("sweep", studies, out, formats)
        for p in paths:
            print(p)
        return 0
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
