"""Benchmark datasets: parsing the UCI file layouts, splitting, standardization.

Each dataset is read from a directory holding its original UCI files (see
``DATASETS`` for the file names and ``random_cloud.fetch`` for where they come
from).  Nothing here touches the network.

Features are kept raw on the :class:`Dataset`; z-scoring happens in
:func:`split_views` with statistics from the training rows only.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .rng import substream

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: list[str]
    class_names: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    # Row indices of the distributor's own train/test files, when there are any.
    standard_split: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DatasetError("features must be a (rows, columns) matrix matching labels")
        if self.features.shape[1] != len(self.feature_names):
            raise DatasetError("feature_names does not match the feature count")
        if not np.all(np.isfinite(self.features)):
            raise DatasetError(f"{self.name}: missing or non-finite feature values")
        if self.n_classes < 2 or self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise DatasetError(f"{self.name}: labels must lie in [0, {self.n_classes})")
        counts = np.bincount(self.labels, minlength=self.n_classes)
        if counts.min() < 2:
            raise DatasetError(f"{self.name}: every class needs at least 2 samples, got {counts.tolist()}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitPair:
    train: np.ndarray
    test: np.ndarray
    seed: int | None  # None for a distributor-provided split


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        scale = x.std(axis=0)
        # constant columns pass through centred
        scale = np.where(scale > 0, scale, 1.0)
        return cls(x.mean(axis=0), scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


@dataclass
class SplitViews:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    scaler: Standardizer


def stratified_split(labels: np.ndarray | Dataset, test_fraction: float = 0.2, seed: int = 42) -> SplitPair:
    """Shuffle every class separately and send ``round(n_c * test_fraction)`` of it to test.

    Each class keeps at least one sample on each side.
    """
    if isinstance(labels, Dataset):
        labels = labels.labels
    labels = np.asarray(labels)
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = substream(seed)
    test = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            raise DatasetError(f"class {c} has {idx.size} sample(s); need at least 2 to stratify")
        n_test = min(max(math.floor(idx.size * test_fraction + 0.5), 1), idx.size - 1)
        test.append(rng.permutation(idx)[:n_test])
    test_idx = np.sort(np.concatenate(test))
    train_idx = np.setdiff1d(np.arange(labels.size), test_idx)
    return SplitPair(train_idx, test_idx, seed)


def make_split(ds: Dataset, mode: str = "auto", test_fraction: float = 0.2, seed: int = 42) -> SplitPair:
    """``standard`` uses the distributor's files, ``stratified`` the 80/20 split, ``auto`` prefers standard."""
    if mode not in ("auto", "standard", "stratified"):
        raise ValueError(f"unknown split mode {mode!r}")
    if mode == "standard" or (mode == "auto" and ds.standard_split is not None):
        if ds.standard_split is None:
            raise DatasetError(f"{ds.name} has no standard train/test files")
        tr, te = ds.standard_split
        return SplitPair(np.asarray(tr), np.asarray(te), None)
    return stratified_split(ds.labels, test_fraction, seed)


def split_views(ds: Dataset, split: SplitPair) -> SplitViews:
    scaler = Standardizer.fit(ds.features[split.train])
    return SplitViews(
        scaler.transform(ds.features[split.train]),
        ds.labels[split.train],
        scaler.transform(ds.features[split.test]),
        ds.labels[split.test],
        scaler,
    )


# --- UCI file layouts -------------------------------------------------------


def _read_rows(path: Path, delimiter: str = ",") -> list[list[str]]:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `random-cloud fetch-data` first")
    with open(path, newline="", encoding="utf-8") as f:
        rows = [[v.strip() for v in row] for row in csv.reader(f, delimiter=delimiter)]
    return [r for r in rows if r and any(r)]


def _floats(values: list[str], where: str) -> list[float]:
    try:
        return [float(v) for v in values]
    except ValueError as e:
        raise DatasetError(f"{where}: non-numeric value ({e})") from None


def _label_last(path: Path, n_features: int, classes: list[str], strip: str = ""):
    x, y = [], []
    for i, row in enumerate(_read_rows(path)):
        if len(row) != n_features + 1:
            raise DatasetError(f"{path}:{i + 1}: expected {n_features} features + label, got {len(row) - 1}")
        label = row[-1].rstrip(strip)
        if label not in classes:
            raise DatasetError(f"{path}:{i + 1}: unknown class {label!r}")
        x.append(_floats(row[:-1], f"{path}:{i + 1}"))
        y.append(classes.index(label))
    return x, y


def _finish(name, x, y, classes, feature_names, files, **extra) -> Dataset:
    return Dataset(
        name=name,
        features=np.array(x, dtype=np.float64).reshape(len(x), len(feature_names)),
        labels=np.array(y, dtype=np.int64),
        n_classes=len(classes),
        feature_names=feature_names,
        class_names=list(classes),
        provenance={"files": [str(f) for f in files], "rows": len(x), **extra},
    )


def _load_iris(d: Path) -> Dataset:
    classes = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]
    f = d / "iris.data"
    x, y = _label_last(f, 4, classes)
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    return _finish("iris", x, y, classes, names, [f])


def _load_wine(d: Path) -> Dataset:
    f = d / "wine.data"
    x, y = [], []
    for i, row in enumerate(_read_rows(f)):
        if len(row) != 14:
            raise DatasetError(f"{f}:{i + 1}: expected label + 13 features, got {len(row)} fields")
        if row[0] not in ("1", "2", "3"):
            raise DatasetError(f"{f}:{i + 1}: unknown class {row[0]!r}")
        y.append(int(row[0]) - 1)
        x.append(_floats(row[1:], f"{f}:{i + 1}"))
    return _finish("wine", x, y, ["1", "2", "3"], [f"f{j}" for j in range(13)], [f])


def _load_breast_cancer(d: Path) -> Dataset:
    f = d / "wdbc.data"
    classes = ["B", "M"]
    x, y = [], []
    for i, row in enumerate(_read_rows(f)):
        if len(row) != 32:
            raise DatasetError(f"{f}:{i + 1}: expected id, diagnosis + 30 features, got {len(row)} fields")
        if row[1] not in classes:
            raise DatasetError(f"{f}:{i + 1}: unknown diagnosis {row[1]!r}")
        y.append(classes.index(row[1]))
        x.append(_floats(row[2:], f"{f}:{i + 1}"))
    return _finish("breast_cancer", x, y, classes, [f"f{j}" for j in range(30)], [f])


def _load_sonar(d: Path) -> Dataset:
    f = d / "sonar.all-data"
    classes = ["R", "M"]
    x, y = _label_last(f, 60, classes)
    return _finish("sonar", x, y, classes, [f"band{j}" for j in range(60)], [f])


def _load_ionosphere(d: Path) -> Dataset:
    f = d / "ionosphere.data"
    classes = ["b", "g"]
    x, y = _label_last(f, 34, classes)
    return _finish("ionosphere", x, y, classes, [f"pulse{j}" for j in range(34)], [f])


def _load_optdigits(d: Path) -> Dataset:
    classes = [str(k) for k in range(10)]
    parts = []
    for name in ("optdigits.tra", "optdigits.tes"):
        f = d / name
        parts.append((f, *_label_last(f, 64, classes)))
    x = parts[0][1] + parts[1][1]
    y = parts[0][2] + parts[1][2]
    n_tr = len(parts[0][1])
    ds = _finish("optdigits", x, y, classes, [f"px{j}" for j in range(64)], [p[0] for p in parts])
    ds.standard_split = (np.arange(n_tr), np.arange(n_tr, len(x)))
    return ds


ADULT_COLUMNS = [
    ("age", None),
    ("workclass", "cat"),
    ("fnlwgt", None),
    ("education", "cat"),
    ("education_num", None),
    ("marital_status", "cat"),
    ("occupation", "cat"),
    ("relationship", "cat"),
    ("race", "cat"),
    ("sex", "cat"),
    ("capital_gain", None),
    ("capital_loss", None),
    ("hours_per_week", None),
    ("native_country", "cat"),
]
ADULT_FEATURES = 104


def _adult_rows(f: Path):
    rows, dropped = [], 0
    for i, row in enumerate(_read_rows(f)):
        if len(row) == 1 and row[0].startswith("|"):
            continue  # adult.test opens with a comment line
        if len(row) != 15:
            raise DatasetError(f"{f}:{i + 1}: expected 15 fields, got {len(row)}")
        if "?" in row:
            dropped += 1
            continue
        rows.append(row)
    return rows, dropped


def _load_adult(d: Path) -> Dataset:
    files = [d / "adult.data", d / "adult.test"]
    parts = [_adult_rows(f) for f in files]
    rows = parts[0][0] + parts[1][0]
    dropped = parts[0][1] + parts[1][1]
    log.info("adult: dropped %d rows with missing values", dropped)
    categories = {
        j: sorted({r[j] for r in rows}) for j, (_, kind) in enumerate(ADULT_COLUMNS) if kind == "cat"
    }
    names = []
    for j, (col, kind) in enumerate(ADULT_COLUMNS):
        names.extend([col] if kind is None else [f"{col}={c}" for c in categories[j]])
    if len(names) != ADULT_FEATURES:
        raise DatasetError(f"adult: one-hot encoding produced {len(names)} features, expected {ADULT_FEATURES}")
    classes = ["<=50K", ">50K"]
    x = np.zeros((len(rows), len(names)))
    y = np.zeros(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        col = 0
        for j, (_, kind) in enumerate(ADULT_COLUMNS):
            if kind is None:
                x[i, col] = _floats([row[j]], f"adult row {i}")[0]
                col += 1
            else:
                x[i, col + categories[j].index(row[j])] = 1.0
                col += len(categories[j])
        label = row[14].rstrip(".")
        if label not in classes:
            raise DatasetError(f"adult row {i}: unknown income class {row[14]!r}")
        y[i] = classes.index(label)
    ds = _finish("adult", x, y, classes, names, files, dropped_missing=dropped)
    n_tr = len(parts[0][0])
    ds.standard_split = (np.arange(n_tr), np.arange(n_tr, len(rows)))
    return ds


@dataclass(frozen=True)
class DatasetInfo:
    loader: Callable[[Path], Dataset]
    files: tuple[str, ...]
    n_features: int
    n_classes: int


DATASETS: dict[str, DatasetInfo] = {
    "iris": DatasetInfo(_load_iris, ("iris.data",), 4, 3),
    "wine": DatasetInfo(_load_wine, ("wine.data",), 13, 3),
    "breast_cancer": DatasetInfo(_load_breast_cancer, ("wdbc.data",), 30, 2),
    "sonar": DatasetInfo(_load_sonar, ("sonar.all-data",), 60, 2),
    "ionosphere": DatasetInfo(_load_ionosphere, ("ionosphere.data",), 34, 2),
    "optdigits": DatasetInfo(_load_optdigits, ("optdigits.tra", "optdigits.tes"), 64, 10),
    "adult": DatasetInfo(_load_adult, ("adult.data", "adult.test"), 104, 2),
}


def load_dataset(name: str, source_path: str | Path) -> Dataset:
    """Load ``name`` from a directory of UCI files, or from a canonical CSV file."""
    if name not in DATASETS:
        raise DatasetError(f"unknown dataset {name!r}; known: {sorted(DATASETS)}")
    source_path = Path(source_path)
    if source_path.is_file():
        ds = load_canonical(source_path, name=name)
    else:
        ds = DATASETS[name].loader(source_path)
    info = DATASETS[name]
    if ds.n_features != info.n_features or ds.n_classes != info.n_classes:
        raise DatasetError(
            f"{name}: got {ds.n_features} features / {ds.n_classes} classes, "
            f"schema says {info.n_features} / {info.n_classes}"
        )
    return ds


# --- canonical cache: header row, numeric columns, integer label last --------


def save_canonical(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([*ds.feature_names, "label"])
        for row, label in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def load_canonical(path: str | Path, name: str | None = None, n_classes: int | None = None) -> Dataset:
    path = Path(path)
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    if header[-1] != "label":
        raise DatasetError(f"{path}: last column must be 'label'")
    x = np.array([_floats(r[:-1], str(path)) for r in body]).reshape(len(body), len(header) - 1)
    y = np.array([int(r[-1]) for r in body], dtype=np.int64)
    if name in DATASETS and n_classes is None:
        n_classes = DATASETS[name].n_classes
    return Dataset(
        name=name or path.stem,
        features=x,
        labels=y,
        n_classes=n_classes or int(y.max()) + 1,
        feature_names=header[:-1],
        provenance={"files": [str(path)], "rows": len(body)},
    )
