import json

import pytest

from conftest import write_iris_like
from random_cloud.cli import build_parser, main, read_config, resolve_options


@pytest.fixture(scope="module")
def iris_csv(tmp_path_factory):
    return write_iris_like(tmp_path_factory.mktemp("d") / "iris.csv")


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ndataset = iris\ncloud_size = 7\ntheta = 0.4  # inline\nseeds = 3\nbudget-split = yes\n")
    assert read_config(cfg) == {"dataset": ["iris"], "cloud-size": 7, "theta": 0.4, "seeds": [0, 1, 2], "budget-split": True}
    args = build_parser().parse_args(["run", "--config", str(cfg), "--cloud-size", "9", "--seeds", "4,8"])
    opts = resolve_options(args)
    assert opts["cloud-size"] == 9 and opts["seeds"] == [4, 8] and opts["theta"] == 0.4


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        read_config(cfg)


def test_run_writes_reports(iris_csv, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--dataset", "iris", "--data-dir", str(iris_csv), "--seeds", "2", "--epochs", "5",
                 "--cloud-size", "4", "--threads", "1", "--out", str(out)])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"report.json", "report.csv", "report.md"}
    rep = json.loads((out / "report.json").read_text())["reports"][0]
    assert rep["config"]["cloud_size"] == 4 and rep["config"]["seeds"] == [0, 1]


def test_aborted_seed_gives_nonzero_exit(iris_csv, tmp_path, capsys):
    code = main(["run", "--dataset", "iris", "--data-dir", str(iris_csv), "--seeds", "1", "--epochs", "2",
                 "--cloud-size", "2", "--theta", "0.999", "--out", str(tmp_path)])
    assert code == 1
    assert "aborted" in capsys.readouterr().err


def test_missing_data_is_a_diagnostic(tmp_path, capsys):
    code = main(["run", "--dataset", "iris", "--data-dir", str(tmp_path), "--seeds", "1"])
    assert code == 2 and "fetch-data" in capsys.readouterr().err


def test_dataset_required(capsys):
    assert main(["run"]) == 2


def test_time_and_sweep(iris_csv, tmp_path):
    common = ["--dataset", "iris", "--data-dir", str(iris_csv), "--epochs", "3", "--cloud-size", "3", "--out", str(tmp_path)]
    assert main(["time", *common, "--repeats", "1"]) == 0
    assert main(["sweep", *common, "--thetas", "0.3,0.5", "--n-elims", "1,2"]) == 0
    sweep = json.loads((tmp_path / "sweep.json").read_text())["sweep"][0]
    assert len(sweep["cells"]) == 4
    assert (tmp_path / "timing.md").exists()
