import pytest

from random_cloud import fetch


def test_present_files_are_not_fetched(tmp_path, monkeypatch):
    (tmp_path / "iris.data").write_text("x\n")
    monkeypatch.setattr(fetch, "fetch_uci", lambda *a, **k: pytest.fail("network used"))
    monkeypatch.setattr(fetch, "fetch_mirror", lambda *a, **k: pytest.fail("mirror used"))
    assert fetch.fetch_data(tmp_path, ["iris"]) == tmp_path


def test_falls_back_to_mirror_for_what_is_still_missing(tmp_path, monkeypatch):
    def partial_uci(dest, files, timeout=30.0):
        (dest / files[0]).write_text("x\n")
        raise OSError("offline")

    got = []
    monkeypatch.setattr(fetch, "fetch_uci", partial_uci)
    monkeypatch.setattr(fetch, "fetch_mirror", lambda dest, files: got.extend(files))
    fetch.fetch_data(tmp_path, ["optdigits"])
    assert got == ["optdigits.tes"]


def test_uci_only_propagates(tmp_path, monkeypatch):
    def offline(*a, **k):
        raise OSError("offline")

    monkeypatch.setattr(fetch, "fetch_uci", offline)
    with pytest.raises(OSError):
        fetch.fetch_data(tmp_path, ["iris"], source="uci")


def test_every_file_has_a_url():
    from random_cloud.data import DATASETS

    assert {f for d in DATASETS.values() for f in d.files} <= set(fetch.UCI_URLS)
