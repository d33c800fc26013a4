import json
import xml.etree.ElementTree as ET

import pytest

from mzlab.regression import (CHECKS, EXIT_FAIL, EXIT_MISSING, EXIT_PASS, EXIT_USAGE, GOLDENS_PATH,
                              RegressionConfig, compare, full_regression, generate_goldens, load_goldens,
                              select_checks)

FAST = "sphere,kernels,tail_sums"


def quiet(*_):
    pass


def test_packaged_goldens_cover_every_check():
    store = load_goldens()
    assert store is not None, f"missing {GOLDENS_PATH}"
    assert store["config"] == RegressionConfig().to_dict()
    assert {c.name for c in CHECKS} <= set(store["values"])


def test_select_checks():
    assert [c.name for c in select_checks("sphere")] == ["lq_norms"]
    assert len(select_checks(None)) == len(CHECKS)
    with pytest.raises(KeyError):
        select_checks("sphere,nope")


def test_compare():
    assert compare({"a": 1.0}, {"a": 1.0 + 1e-12}, 1e-9, 0.0) == []
    assert compare({"a": 1.1}, {"a": 1.0}, 1e-3, 0.0)
    assert compare({}, {"a": 1.0}, 1e-3, 0.0) == ["a: not produced"]


def test_pass_against_packaged_goldens(tmp_path):
    assert full_regression(filter_text=FAST, out_dir=tmp_path, log=quiet) == EXIT_PASS
    summary = json.loads((tmp_path / "regression.json").read_text())
    assert summary["failed"] == 0 and summary["passed"] == 3
    root = ET.parse(tmp_path / "regression.xml").getroot()
    assert root.tag == "testsuites" and len(root.findall(".//testcase")) == 3


def test_tampered_golden_fails(tmp_path):
    store = load_goldens()
    store["values"]["lq_norms"]["cos_l2"] *= 1.01
    path = tmp_path / "g.json"
    path.write_text(json.dumps(store))
    assert full_regression(filter_text="sphere", goldens=path, out_dir=tmp_path, log=quiet) == EXIT_FAIL
    root = ET.parse(tmp_path / "regression.xml").getroot()
    assert root.find(".//failure") is not None


def test_missing_goldens(tmp_path):
    assert full_regression(filter_text="sphere", goldens=tmp_path / "none.json", log=quiet) == EXIT_MISSING
    other = RegressionConfig(resolution=128)
    assert full_regression(other, filter_text="sphere", log=quiet) == EXIT_MISSING
    partial = tmp_path / "partial.json"
    generate_goldens(path=partial, filter_text="sphere")
    assert full_regression(filter_text="sphere,tail_sums", goldens=partial, log=quiet) == EXIT_MISSING


def test_bad_filter_is_usage_error():
    assert full_regression(filter_text="bogus", log=quiet) == EXIT_USAGE


def test_generate_then_pass(tmp_path):
    path = tmp_path / "g.json"
    assert full_regression(filter_text=FAST, goldens=path, generate=True, log=quiet) == EXIT_PASS
    assert set(load_goldens(path)["values"]) == {"lq_norms", "mass_law", "tail_sums"}
    assert full_regression(filter_text=FAST, goldens=path, log=quiet) == EXIT_PASS


def test_reports_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    full_regression(filter_text=FAST, out_dir=a, log=quiet)
    full_regression(filter_text=FAST, out_dir=b, log=quiet)
    for name in ("regression.json", "regression.xml"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
