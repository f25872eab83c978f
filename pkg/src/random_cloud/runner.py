"""Experiment orchestration: the four-method comparison, timing study and sweeps."""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng as rngs
from .baselines import PruneSpec, full_training, magnitude_prune, prune_pipeline, random_prune, split_budget
from .cloud import CloudConfig, explore_cloud, run_cloud, selection_rule
from .data import Dataset, load_dataset, make_split, split_views
from .metrics import evaluate, wilcoxon_signed_rank
from .nn import Network, Topology, TrainConfig, forward, train
from .topology import parameter_count, reduction_percent

log = logging.getLogger(__name__)

METHODS = ("full", "magnitude", "random", "cloud")
METRICS = ("accuracy", "macro_f1", "auc_roc", "reduction_percent")


@dataclass(frozen=True)
class DatasetDefaults:
    hidden: tuple[int, ...]
    epochs: int
    learning_rate: float = 0.1
    threshold: float = 0.5


# Initial topologies are not published; these are this package's choices.
DATASET_DEFAULTS = {
    # hidden widths follow [2 * n_features, n_features]
    "iris": DatasetDefaults((8, 4), 1000),
    "wine": DatasetDefaults((26, 13), 1000),
    "breast_cancer": DatasetDefaults((60, 30), 1000),
    "sonar": DatasetDefaults((120, 60), 1000),
    "ionosphere": DatasetDefaults((68, 34), 1000),
    # random 10-class networks stay near 0.2 training accuracy
    "optdigits": DatasetDefaults((128, 64), 1000, threshold=0.15),
    "adult": DatasetDefaults((208, 104), 20),
}


@dataclass
class ExperimentConfig:
    dataset: str
    data_dir: str = "data"
    hidden: tuple[int, ...] | None = None
    cloud_size: int = 50
    threshold: float | None = None
    n_elim: int = 1
    epochs: int | None = None
    learning_rate: float | None = None
    batch_size: int | None = 32
    loss: str = "squared_error"
    methods: tuple[str, ...] = METHODS
    seeds: tuple[int, ...] = tuple(range(10))
    timing_repeats: int = 3
    threads: int = 8
    budget_split: bool = False
    random_repeats: int = 5
    split_mode: str = "auto"
    split_seed: int = 42
    test_fraction: float = 0.2
    out: str = "results"

    def __post_init__(self):
        defaults = DATASET_DEFAULTS.get(self.dataset)
        if defaults is None:
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.hidden is None:
            self.hidden = defaults.hidden
        if self.threshold is None:
            self.threshold = defaults.threshold
        if self.epochs is None:
            self.epochs = defaults.epochs
        if self.learning_rate is None:
            self.learning_rate = defaults.learning_rate
        self.hidden = tuple(int(h) for h in self.hidden)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.methods = tuple(self.methods)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")

    @property
    def train(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.learning_rate, self.batch_size, self.loss)

    def cloud(self, seed: int) -> CloudConfig:
        return CloudConfig(self.cloud_size, self.threshold, self.n_elim, self.train, seed)

    def topology(self, ds: Dataset) -> Topology:
        return Topology([ds.n_features, *self.hidden, ds.n_classes])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["seeds"] = list(self.seeds)
        d["methods"] = list(self.methods)
        return d


@dataclass
class ExperimentReport:
    """Everything a run produced, as plain JSON-ready values.

    ``timings`` is kept apart: it is the only part that differs between two
    runs of the same configuration.
    """

    config: dict
    dataset: dict
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    tests: dict = field(default_factory=dict)
    errors: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        d = asdict(self)
        if not include_timings:
            del d["timings"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def prepare(cfg: ExperimentConfig):
    ds = load_dataset(cfg.dataset, Path(cfg.data_dir))
    split = make_split(ds, cfg.split_mode, cfg.test_fraction, cfg.split_seed)
    return ds, split, split_views(ds, split)


def _row(method, seed, net: Network, t0, views, n_classes, duration, repeat=None) -> dict:
    red = 0.0 if method == "full" else reduction_percent(t0, net.topology)
    m = evaluate(forward(net, views.x_test), views.y_test, n_classes, red)
    return {
        "method": method,
        "seed": seed,
        "repeat": repeat,
        "topology": list(net.topology),
        "n_params": parameter_count(net.topology),
        **m.to_dict(),
        "_duration": duration,
    }


def _mean_row(method, seed, sub: list[dict]) -> dict:
    row = {"method": method, "seed": seed, "repeat": None, "topology": sub[0]["topology"], "n_params": sub[0]["n_params"]}
    for k in METRICS:
        row[k] = float(np.mean([r[k] for r in sub]))
    row["_duration"] = sum(r["_duration"] for r in sub)
    return row


def run_seed(cfg: ExperimentConfig, ds: Dataset, views, seed: int) -> list[dict]:
    """All methods for one seed; the Cloud's topology is the pruning target."""
    t0 = cfg.topology(ds)
    x, y = views.x_train, views.y_train
    rows = []
    start = time.perf_counter()
    cloud = run_cloud(t0, cfg.cloud(seed), x, y, workers=cfg.threads)
    cloud_time = time.perf_counter() - start
    if not cloud.found:
        raise RuntimeError(f"no cloud member exceeded threshold {cfg.threshold}")
    if "cloud" in cfg.methods:
        rows.append(_row("cloud", seed, cloud.refined_network, t0, views, ds.n_classes, cloud_time))
        rows[-1]["untrained_train_accuracy"] = cloud.best_accuracy_untrained
        rows[-1]["selected"] = [cloud.best_record.network_index, cloud.best_record.step_number]
    spec = PruneSpec(t0, cloud.best_topology)

    first, second = split_budget(cfg.train, cfg.budget_split)
    full = None
    if {"full", "magnitude", "random"} & set(cfg.methods):
        start = time.perf_counter()
        full = full_training(t0, x, y, cfg.train, rngs.substream(seed, rngs.FULL_TRAIN))
        full_time = time.perf_counter() - start
    if "full" in cfg.methods:
        rows.append(_row("full", seed, full, t0, views, ds.n_classes, full_time))

    trained, trained_time = full, full_time if full is not None else 0.0
    if cfg.budget_split and {"magnitude", "random"} & set(cfg.methods):
        start = time.perf_counter()
        trained = full_training(t0, x, y, first, rngs.substream(seed, rngs.FULL_TRAIN))
        trained_time = time.perf_counter() - start
    for method in ("magnitude", "random"):
        if method not in cfg.methods:
            continue
        start = time.perf_counter()
        nets = prune_pipeline(
            method, t0, spec, x, y, cfg.train, seed, cfg.budget_split, trained, cfg.random_repeats
        )
        each = (time.perf_counter() - start) / len(nets) + trained_time
        if method == "magnitude":
            rows.append(_row(method, seed, nets[0], t0, views, ds.n_classes, each))
        else:
            sub = [_row(method, seed, n, t0, views, ds.n_classes, each, repeat=r) for r, n in enumerate(nets)]
            rows.append(_mean_row(method, seed, sub))
            rows.extend(sub)
    return rows


def aggregate(rows: list[dict], methods) -> dict:
    out = {}
    for m in methods:
        per_seed = [r for r in rows if r["method"] == m and r["repeat"] is None]
        if not per_seed:
            continue
        out[m] = {"n_seeds": len(per_seed)}
        for k in METRICS:
            vals = [r[k] for r in per_seed]
            out[m][k] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
    return out


def paired_tests(rows: list[dict]) -> dict:
    """Wilcoxon tests of the Cloud against each pruning baseline, paired by seed."""
    by = {(r["method"], r["seed"]): r for r in rows if r["repeat"] is None}
    tests = {}
    for base in ("magnitude", "random"):
        seeds = sorted(s for (m, s) in by if m == "cloud" and (base, s) in by)
        if len(seeds) < 2:
            continue
        for metric in ("accuracy", "macro_f1"):
            res = wilcoxon_signed_rank(
                [by["cloud", s][metric] for s in seeds], [by[base, s][metric] for s in seeds]
            )
            tests[f"cloud_vs_{base}/{metric}"] = {**res.to_dict(), "seeds": seeds}
    return tests


def _ratios(seconds: list[dict]) -> dict:
    """Per method, the median over seeds of its duration over full training's."""
    full = {t["seed"]: t["seconds"] for t in seconds if t["method"] == "full"}
    out = {}
    for m in METHODS:
        r = [t["seconds"] / full[t["seed"]] for t in seconds
             if t["method"] == m and t["repeat"] is None and full.get(t["seed"])]
        if r:
            out[m] = statistics.median(r)
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    ds, split, views = prepare(cfg)
    report = ExperimentReport(
        config=cfg.to_dict(),
        dataset={
            "name": ds.name,
            "n_samples": ds.n_samples,
            "n_features": ds.n_features,
            "n_classes": ds.n_classes,
            "n_train": int(split.train.size),
            "n_test": int(split.test.size),
            "split_seed": split.seed,
            "initial_topology": list(cfg.topology(ds)),
            "initial_params": parameter_count(cfg.topology(ds)),
        },
    )
    rows = []
    for seed in cfg.seeds:
        try:
            seed_rows = run_seed(cfg, ds, views, seed)
        except Exception as e:  # noqa: BLE001 - any failure aborts only this seed
            log.error("%s seed %d aborted: %s", cfg.dataset, seed, e)
            report.errors.append({"seed": seed, "error": f"{type(e).__name__}: {e}"})
            continue
        for r in seed_rows:
            d = r.pop("_duration")
            report.timings.setdefault("seconds", []).append(
                {"method": r["method"], "seed": seed, "repeat": r["repeat"], "seconds": d}
            )
        rows.extend(seed_rows)
    report.rows = rows
    report.timings["median_ratio_vs_full"] = _ratios(report.timings.get("seconds", []))
    report.aggregates = aggregate(rows, cfg.methods)
    report.tests = paired_tests(rows)
    return report


# --- timing study -------------------------------------------------------------


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return time.perf_counter() - start, out


def time_methods(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    """Median wall-clock time of each method end to end, relative to full training.

    The pruning pipelines are timed as one complete run (train, prune,
    fine-tune); the Cloud as exploration plus refinement. Methods are
    interleaved within each repeat.
    """
    ds, split, views = prepare(cfg)
    seed = cfg.seeds[0] if seed is None else seed
    t0 = cfg.topology(ds)
    x, y = views.x_train, views.y_train
    first, second = split_budget(cfg.train, cfg.budget_split)
    samples = {m: [] for m in METHODS}
    exploration = []
    target = None
    for _ in range(cfg.timing_repeats):
        dt, cloud = _timed(lambda: run_cloud(t0, cfg.cloud(seed), x, y, workers=cfg.threads))
        if not cloud.found:
            raise RuntimeError(f"no cloud member exceeded threshold {cfg.threshold}")
        samples["cloud"].append(dt)
        exploration.append(cloud.timings["exploration"])
        target = PruneSpec(t0, cloud.best_topology)
        dt, _ = _timed(lambda: full_training(t0, x, y, cfg.train, rngs.substream(seed, rngs.FULL_TRAIN)))
        samples["full"].append(dt)

        def pipeline(prune):
            def run():
                stream = rngs.substream(seed, rngs.FULL_TRAIN)
                trained = full_training(t0, x, y, first, stream)
                return train(prune(trained, stream), x, y, second, stream)

            return run

        dt, _ = _timed(pipeline(lambda n, s: magnitude_prune(n, target, s)))
        samples["magnitude"].append(dt)
        dt, _ = _timed(pipeline(lambda n, s: random_prune(n, target, s)))
        samples["random"].append(dt)

    medians = {m: statistics.median(v) for m, v in samples.items()}
    cloud_median = medians["cloud"]
    return {
        "dataset": cfg.dataset,
        "n_train": int(split.train.size),
        "seed": seed,
        "threads": cfg.threads,
        "repeats": cfg.timing_repeats,
        "target_topology": list(target.effective_target),
        "seconds": samples,
        "median_seconds": medians,
        "ratio_vs_full": {m: medians[m] / medians["full"] for m in METHODS},
        "exploration_share": statistics.median(exploration) / cloud_median,
    }


# --- hyperparameter sweep -----------------------------------------------------


def sweep_hyperparams(
    cfg: ExperimentConfig,
    thresholds=(),
    cloud_sizes=(),
    n_elims=(),
    seed: int | None = None,
) -> dict:
    """Selected topology and untrained accuracy for every grid cell.

    The threshold only filters candidates and member ``i`` of a cloud does not
    depend on the cloud size, so each ``n_elim`` is explored once with the
    largest cloud and threshold 0, and the cells are read off that. A cell is
    flagged ``changed`` when its selection differs from the first cell's.
    """
    cells = [(th, n, k) for th in thresholds for n in cloud_sizes for k in n_elims]
    if not cells:
        return {"dataset": cfg.dataset, "cells": []}
    ds, _, views = prepare(cfg)
    seed = cfg.seeds[0] if seed is None else seed
    t0 = cfg.topology(ds)
    max_n = max(cloud_sizes)
    explored = {}
    for k in sorted(set(n_elims)):
        base = CloudConfig(max_n, 0.0, k, cfg.train, seed)
        by_index = explore_cloud(t0, base, views.x_train, views.y_train, cfg.threads)
        explored[k] = [by_index[i] for i in range(max_n)]
    out = []
    for th, n, k in cells:
        cands = (c for ex in explored[k][:n] for c in ex.candidates if c.record.train_accuracy > th)
        best = selection_rule(cands)
        cell = {"threshold": th, "cloud_size": n, "n_elim": k}
        if best is None:
            cell.update(selected=None, topology=None, n_params=None, train_accuracy=None)
        else:
            r = best.record
            cell.update(
                selected=[r.network_index, r.step_number],
                topology=list(r.topology),
                n_params=r.n_params,
                train_accuracy=r.train_accuracy,
            )
        out.append(cell)
    ref = out[0]["selected"]
    for cell in out:
        cell["changed"] = cell["selected"] != ref
    return {"dataset": cfg.dataset, "seed": seed, "initial_topology": list(t0), "cells": out}
