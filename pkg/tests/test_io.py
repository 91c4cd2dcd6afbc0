import numpy as np
import pytest

from first_crossing.io import csv_text, fmt, manifest_path, read_config, write_csv, write_manifest


def test_fmt():
    assert fmt(None) == "n/a"
    assert fmt(True) == "1" and fmt(False) == "0"
    assert fmt(3) == "3"
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(np.float64(1 / 3))) == 1 / 3
    assert fmt(float("inf")) == "inf" and fmt(-np.inf) == "-inf" and fmt(np.nan) == "nan"


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "sub" / "t.csv", ("a", "b"), [(1.5, None), (2, "x")])
    assert path.read_bytes() == b"a,b\n1.5,n/a\n2,x\n"
    assert csv_text(("a",), []) == "a\n"


def test_manifest_and_config(tmp_path):
    out = tmp_path / "run.csv"
    m = write_manifest(out, {"S": 2.0, "dt": 1e-3, "paths": 10, "flag": True})
    assert m == manifest_path(out) == tmp_path / "run.manifest"
    assert read_config(m) == {"S": "2.0", "dt": "0.001", "paths": "10", "flag": "1"}


def test_config_parsing(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("\n# full comment\nout-dir = res  # trailing\nseed=3\n", encoding="utf-8")
    assert read_config(cfg) == {"out_dir": "res", "seed": "3"}
    cfg.write_text("no equals sign\n", encoding="utf-8")
    with pytest.raises(ValueError, match="key = value"):
        read_config(cfg)
