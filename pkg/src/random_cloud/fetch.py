"""Download the benchmark files into a local cache directory.

This is the only module that touches the network; the loaders in
``random_cloud.data`` read the cached files.

Two sources are supported:

``uci``
    The original files from the UCI Machine Learning Repository (``UCI_URLS``).

``mirror``
    For machines that can only reach a Python package index.  Iris, Wine and
    WDBC are rewritten from the copies bundled with scikit-learn; Sonar,
    Ionosphere and Optical Digits from the ``keel-ds`` wheel; Adult from the
    verbatim UCI files shipped in the ``responsibly`` wheel.  Known
    differences from UCI: KEEL rounds Sonar/Ionosphere to 3 decimals and drops
    Ionosphere's constant second column (re-inserted here as zeros);
    scikit-learn's Iris carries the two corrected rows.
"""

from __future__ import annotations

import csv
import io
import logging
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

from .data import DATASETS

log = logging.getLogger(__name__)

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
UCI_URLS = {
    "iris.data": f"{UCI}/iris/iris.data",
    "wine.data": f"{UCI}/wine/wine.data",
    "wdbc.data": f"{UCI}/breast-cancer-wisconsin/wdbc.data",
    "sonar.all-data": f"{UCI}/undocumented/connectionist-bench/sonar/sonar.all-data",
    "ionosphere.data": f"{UCI}/ionosphere/ionosphere.data",
    "optdigits.tra": f"{UCI}/optdigits/optdigits.tra",
    "optdigits.tes": f"{UCI}/optdigits/optdigits.tes",
    "adult.data": f"{UCI}/adult/adult.data",
    "adult.test": f"{UCI}/adult/adult.test",
}

KEEL_WHEEL = "keel-ds==0.2.5"
ADULT_WHEEL = "responsibly==0.1.2"
OPTDIGITS_TRAIN_ROWS = 3823


def fetch_uci(dest: Path, files: list[str], timeout: float = 30.0) -> None:
    for name in files:
        log.info("downloading %s", UCI_URLS[name])
        with urllib.request.urlopen(UCI_URLS[name], timeout=timeout) as r:
            (dest / name).write_bytes(r.read())


def _pip_wheel(spec: str, tmp: Path) -> zipfile.ZipFile:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", str(tmp), spec],
        check=True,
    )
    name = spec.split("==")[0].replace("-", "_").lower()
    wheel = next(p for p in tmp.glob("*.whl") if p.name.lower().startswith(name))
    return zipfile.ZipFile(wheel)


def _keel_rows(z: zipfile.ZipFile, name: str) -> list[list[str]]:
    text = z.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    return [
        [v.strip() for v in line.split(",")]
        for line in text.splitlines()
        if line.strip() and not line.startswith("@")
    ]


def _write_rows(path: Path, rows) -> None:
    with open(path, "w", newline="") as f:
        csv.writer(f, lineterminator="\n").writerows(rows)


def _sklearn_csv(name: str) -> list[list[str]]:
    from importlib import resources

    text = resources.files("sklearn.datasets").joinpath("data", name).read_text()
    return list(csv.reader(io.StringIO(text)))[1:]


def fetch_mirror(dest: Path, files: list[str]) -> None:
    wanted = set(files)
    if "iris.data" in wanted:
        classes = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]
        _write_rows(dest / "iris.data", [r[:4] + [classes[int(r[4])]] for r in _sklearn_csv("iris.csv")])
    if "wine.data" in wanted:
        _write_rows(dest / "wine.data", [[str(int(r[13]) + 1)] + r[:13] for r in _sklearn_csv("wine_data.csv")])
    if "wdbc.data" in wanted:
        # scikit-learn codes malignant as 0
        rows = _sklearn_csv("breast_cancer.csv")
        _write_rows(dest / "wdbc.data", [[str(i), "M" if r[30] == "0" else "B"] + r[:30] for i, r in enumerate(rows)])
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        if wanted & {"sonar.all-data", "ionosphere.data", "optdigits.tra", "optdigits.tes"}:
            z = _pip_wheel(KEEL_WHEEL, tmp)
            if "sonar.all-data" in wanted:
                _write_rows(dest / "sonar.all-data", _keel_rows(z, "sonar"))
            if "ionosphere.data" in wanted:
                _write_rows(dest / "ionosphere.data", [[r[0], "0"] + r[1:] for r in _keel_rows(z, "ionosphere")])
            if wanted & {"optdigits.tra", "optdigits.tes"}:
                # KEEL concatenates optdigits.tra and optdigits.tes in that order
                rows = _keel_rows(z, "optdigits")
                _write_rows(dest / "optdigits.tra", rows[:OPTDIGITS_TRAIN_ROWS])
                _write_rows(dest / "optdigits.tes", rows[OPTDIGITS_TRAIN_ROWS:])
        if wanted & {"adult.data", "adult.test"}:
            z = _pip_wheel(ADULT_WHEEL, tmp)
            for name in ("adult.data", "adult.test"):
                (dest / name).write_bytes(z.read(f"responsibly/dataset/adult/{name}"))


def fetch_data(dest: str | Path, datasets: list[str] | None = None, source: str = "auto") -> Path:
    """Populate ``dest`` with the raw files for ``datasets`` (default: all).

    ``auto`` tries UCI first and falls back to the package mirror.
    """
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    names = datasets or list(DATASETS)
    files = [f for n in names for f in DATASETS[n].files]
    missing = [f for f in files if not (dest / f).exists()]
    if not missing:
        return dest
    if source in ("auto", "uci"):
        try:
            fetch_uci(dest, missing)
            return dest
        except OSError as e:
            if source == "uci":
                raise
            log.warning("UCI download failed (%s); using the package mirror", e)
    fetch_mirror(dest, [f for f in missing if not (dest / f).exists()])
    return dest
