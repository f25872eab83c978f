import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA_DIR = Path(os.environ.get("RANDOM_CLOUD_DATA", Path(__file__).resolve().parents[1] / "data"))


def have_data(*names: str) -> bool:
    from random_cloud.data import DATASETS

    return all((DATA_DIR / f).exists() for n in names for f in DATASETS[n].files)


def needs_data(*names):
    return pytest.mark.skipif(not have_data(*names), reason=f"raw files for {names} not in {DATA_DIR}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def blobs():
    """Three well separated Gaussian classes in 4-d, standardized."""
    g = np.random.default_rng(7)
    centers = np.array([[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0]], dtype=float)
    y = np.repeat(np.arange(3), 20)
    x = centers[y] + 0.4 * g.standard_normal((60, 4))
    x = (x - x.mean(0)) / x.std(0)
    return x, y


def write_iris_like(path: Path, n_per_class: int = 20, seed: int = 0) -> Path:
    """Canonical CSV with the iris schema (4 features, 3 classes), easily separable."""
    from random_cloud.data import Dataset, save_canonical

    g = np.random.default_rng(seed)
    y = np.repeat(np.arange(3), n_per_class)
    centers = np.array([[3, 0, 0, 0], [0, 3, 0, 0], [0, 0, 3, 0]], dtype=float)
    x = centers[y] + 0.3 * g.standard_normal((y.size, 4))
    save_canonical(Dataset("iris", x, y, 3, ["a", "b", "c", "d"]), path)
    return path


# acceptance criterion number -> (name, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {name}: {detail}")
