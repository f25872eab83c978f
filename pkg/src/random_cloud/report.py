"""Report writers: canonical JSON, per-seed CSV and markdown tables."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from .runner import METHODS, ExperimentReport

FORMATS = ("json", "csv", "md")
CSV_COLUMNS = (
    "dataset",
    "method",
    "seed",
    "repeat",
    "topology",
    "n_params",
    "accuracy",
    "macro_f1",
    "auc_roc",
    "reduction_percent",
    "untrained_train_accuracy",
    "selected",
)
METHOD_NAMES = {"full": "Full training", "magnitude": "Magnitude prune", "random": "Random prune", "cloud": "Random Cloud"}


def dumps_json(obj) -> str:
    """Sorted keys and fixed indentation, so equal content gives equal bytes."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def reports_to_json(reports: Sequence[ExperimentReport], include_timings: bool = True) -> str:
    return dumps_json({"reports": [r.to_dict(include_timings) for r in reports]})


def reports_from_json(text: str) -> list[ExperimentReport]:
    return [ExperimentReport.from_dict(d) for d in json.loads(text)["reports"]]


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, list):
        return "-".join(str(x) for x in v)
    return v


def reports_to_csv(reports: Sequence[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rep in reports:
        for row in rep.rows:
            w.writerow({k: _csv_value(row.get(k)) for k in CSV_COLUMNS[1:]} | {"dataset": rep.dataset["name"]})
    return buf.getvalue()


def _table(header: Sequence[str], rows: Iterable[Sequence]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return lines


def _pct(x: float) -> str:
    return f"{100 * x:.1f}"


def _mean_std(agg: dict, metric: str, scale: float = 100.0) -> str:
    return f"{scale * agg[metric]['mean']:.1f} ± {scale * agg[metric]['std']:.1f}"


def reports_to_markdown(reports: Sequence[ExperimentReport]) -> str:
    out = ["# Results", "", "## Test metrics (mean over seeds)", ""]
    rows = []
    for rep in reports:
        for m in METHODS:
            agg = rep.aggregates.get(m)
            if agg is None:
                continue
            rows.append(
                [
                    rep.dataset["name"],
                    METHOD_NAMES[m],
                    _pct(agg["accuracy"]["mean"]),
                    _pct(agg["macro_f1"]["mean"]),
                    _pct(agg["auc_roc"]["mean"]),
                    f"{agg['reduction_percent']['mean']:.1f}",
                ]
            )
    out += _table(["Dataset", "Method", "Acc. (%)", "F1 (%)", "AUC (%)", "Reduction (%)"], rows)

    out += ["", "## Paired comparison (Wilcoxon signed-rank, Random Cloud vs baseline)", ""]
    rows = []
    for rep in reports:
        agg = rep.aggregates
        if "cloud" not in agg:
            continue
        for base in ("magnitude", "random"):
            if base not in agg:
                continue
            acc_t = rep.tests.get(f"cloud_vs_{base}/accuracy")
            f1_t = rep.tests.get(f"cloud_vs_{base}/macro_f1")
            rows.append(
                [
                    rep.dataset["name"],
                    METHOD_NAMES[base],
                    _mean_std(agg["cloud"], "accuracy"),
                    _mean_std(agg[base], "accuracy"),
                    "-" if acc_t is None else f"{acc_t['p_value']:.3f}",
                    "-" if f1_t is None else f"{f1_t['p_value']:.3f}",
                ]
            )
    out += _table(["Dataset", "Baseline", "Cloud acc.", "Baseline acc.", "p (acc.)", "p (F1)"], rows)

    out += ["", "## Per-seed accuracy (%)", ""]
    for rep in reports:
        seeds = sorted({r["seed"] for r in rep.rows})
        by = {(r["method"], r["seed"]): r for r in rep.rows if r["repeat"] is None}
        methods = [m for m in METHODS if m in rep.aggregates]
        out += [f"### {rep.dataset['name']}", ""]
        out += _table(
            ["Seed", *(METHOD_NAMES[m] for m in methods), "Cloud topology"],
            [
                [
                    s,
                    *(_pct(by[m, s]["accuracy"]) if (m, s) in by else "-" for m in methods),
                    "-".join(map(str, by["cloud", s]["topology"])) if ("cloud", s) in by else "-",
                ]
                for s in seeds
            ],
        )
        for e in rep.errors:
            out.append(f"\nSeed {e['seed']} aborted: {e['error']}")
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def timing_to_markdown(studies: Sequence[dict]) -> str:
    out = ["# Wall-clock cost relative to full training", ""]
    rows = []
    for t in studies:
        r = t["ratio_vs_full"]
        rows.append(
            [
                f"{t['dataset']} ({t['n_train']} train)",
                f"{r['magnitude']:.2f}x",
                f"{r['random']:.2f}x",
                f"{r['cloud']:.2f}x",
                f"{100 * t['exploration_share']:.0f}",
                "-".join(map(str, t["target_topology"])),
            ]
        )
    out += _table(["Dataset", "Magnitude", "Random", "Cloud", "Exploration share (%)", "Target"], rows)
    if studies:
        out += ["", f"Median of {studies[0]['repeats']} runs, {studies[0]['threads']} threads."]
    return "\n".join(out) + "\n"


def sweep_to_markdown(sweeps: Sequence[dict]) -> str:
    out = ["# Hyperparameter sweep", ""]
    for s in sweeps:
        out += [f"## {s['dataset']}", ""]
        out += _table(
            ["θ", "N", "n_elim", "Selected (member, step)", "Topology", "Train acc. (%)", "Changed"],
            [
                [
                    c["threshold"],
                    c["cloud_size"],
                    c["n_elim"],
                    "-" if c["selected"] is None else tuple(c["selected"]),
                    "-" if c["topology"] is None else "-".join(map(str, c["topology"])),
                    "-" if c["train_accuracy"] is None else _pct(c["train_accuracy"]),
                    "yes" if c["changed"] else "no",
                ]
                for c in s["cells"]
            ],
        )
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def _check_formats(formats: Iterable[str]) -> list[str]:
    formats = list(formats)
    unknown = sorted(set(formats) - set(FORMATS))
    if unknown:
        raise ValueError(f"unknown formats {unknown}; expected a subset of {FORMATS}")
    return formats


def emit_report(reports: Sequence[ExperimentReport], out_dir: str | Path, formats: Iterable[str] = FORMATS) -> list[Path]:
    """Write ``report.json``/``report.csv``/``report.md`` into ``out_dir``."""
    formats = _check_formats(formats)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writers = {"json": reports_to_json, "csv": reports_to_csv, "md": reports_to_markdown}
    paths = []
    for f in formats:
        p = out_dir / f"report.{f}"
        p.write_text(writers[f](reports), encoding="utf-8")
        paths.append(p)
    return paths


def emit_study(kind: str, studies: Sequence[dict], out_dir: str | Path, formats: Iterable[str] = ("json", "md")) -> list[Path]:
    """Write a timing or sweep study as ``<kind>.json`` and ``<kind>.md``."""
    formats = [f for f in _check_formats(formats) if f != "csv"]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    md = {"timing": timing_to_markdown, "sweep": sweep_to_markdown}[kind]
    paths = []
    for f in formats:
        p = out_dir / f"{kind}.{f}"
        p.write_text(dumps_json({kind: list(studies)}) if f == "json" else md(studies), encoding="utf-8")
        paths.append(p)
    return paths
