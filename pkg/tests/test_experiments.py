import json

import numpy as np
import pytest

from mzlab.experiments import (REPORT_HEADER, ExperimentConfig, buckley_sweep, fit_exponent,
                               operator_norm_estimate, parse_range, theorem11_sweep, theorem12_sweep)
from mzlab.grid import GridSpec, SampledField
from mzlab.operators import hl_maximal
from mzlab.weights import power_weight

SMALL = dict(resolution=64, scenes=("disk", "gaussian", "focused-2"), n_random_cubes=200)


def test_parse_range():
    assert parse_range("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_range("2..4") == [2.0, 3.0, 4.0]
    assert parse_range("1, 2.5") == [1.0, 2.5]
    with pytest.raises(ValueError):
        parse_range("0:1:0")


def test_fit_exponent_exact_power():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = fit_exponent(x, 3 * x ** 0.7)
    assert fit.beta == pytest.approx(0.7)
    assert fit.r2 == pytest.approx(1.0) and not fit.flagged
    assert fit.ci_low == pytest.approx(0.7) and fit.ci_high == pytest.approx(0.7)


def test_fit_exponent_degenerate():
    fit = fit_exponent([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    assert np.isnan(fit.beta) and fit.flagged


def test_config_validation():
    with pytest.raises(ValueError, match="q'"):
        ExperimentConfig(omega="sing-q2", p=1.5).validate()
    with pytest.raises(ValueError, match="operator"):
        ExperimentConfig(op="nope").validate()
    with pytest.raises(ValueError, match="l >= 1"):
        ExperimentConfig(op="marc-l").validate()
    with pytest.raises(KeyError):
        ExperimentConfig(scenes=("nope",), resolution=64).validate()
    assert ExperimentConfig(omega="sing-q4").q == 4.0
    assert ExperimentConfig().q_prime == 1.0


def test_config_from_mapping():
    cfg = ExperimentConfig.from_mapping({"p": "3", "a_grid": "0:1:0.5", "scenes": "disk, gaussian",
                                         "resolution": "128"})
    assert cfg.p == 3.0 and cfg.a_grid == (0.0, 0.5, 1.0)
    assert cfg.scenes == ("disk", "gaussian") and cfg.resolution == 128
    with pytest.raises(KeyError):
        ExperimentConfig.from_mapping({"bogus": "1"})


def test_operator_norm_identity_like():
    g = GridSpec(2, 8.0, 64)
    one = power_weight(0.0, g)
    est = operator_norm_estimate(hl_maximal, one, 2.0, ["disk", "gaussian"])
    assert est >= 1.0


def test_operator_norm_skips_zero_scene():
    g = GridSpec(2, 8.0, 64)
    bank = {"zero": SampledField.zeros(g), "disk": hl_maximal(SampledField.zeros(g))}
    with pytest.warns(UserWarning, match="zero weighted norm"):
        assert operator_norm_estimate(hl_maximal, power_weight(0.0, g), 2.0, bank) == 0.0


def test_operator_norm_rejects_outer_support():
    g = GridSpec(2, 8.0, 64)
    with pytest.raises(ValueError, match="half-box"):
        operator_norm_estimate(hl_maximal, power_weight(0.0, g), 2.0, {"ones": SampledField(g, np.ones(g.shape))})


def test_buckley_sweep_small(tmp_path):
    rep = buckley_sweep(ExperimentConfig(a_grid=(0.0, 0.4, 0.8), **SMALL))
    assert rep.passes["rows_complete"]
    assert rep.fit is not None and rep.fit.n == 3
    rep.to_json(tmp_path / "b.json")
    d = json.loads((tmp_path / "b.json").read_text())
    assert d["header"] == REPORT_HEADER and "wall_time" not in json.dumps(d)
    assert (tmp_path / "b.timing.json").exists()
    rep.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().startswith("a,ap,ainf")


def test_sweep_window_check():
    with pytest.raises(ValueError, match="window"):
        buckley_sweep(ExperimentConfig(a_grid=(0.0, 2.5), **SMALL))


def test_theorem12_small_rows_bounded():
    cfg = dict(SMALL, resolution=128)
    rep = theorem12_sweep(ExperimentConfig(a_grid=(0.0, 0.5, 1.0), **cfg))
    assert rep.passes["rows_complete"] and rep.passes["rows_bounded"]
    assert rep.config["op"] == "marc"


def test_theorem11_rejects_unbounded():
    with pytest.raises(ValueError, match="bounded"):
        theorem11_sweep(ExperimentConfig(omega="sing-q2", **SMALL))


def test_sweep_threads_deterministic():
    a = buckley_sweep(ExperimentConfig(a_grid=(0.0, 0.5, 1.0), threads=1, **SMALL))
    b = buckley_sweep(ExperimentConfig(a_grid=(0.0, 0.5, 1.0), threads=3, **SMALL))
    assert [r["norm"] for r in a.rows] == [r["norm"] for r in b.rows]
    assert [r["ap"] for r in a.rows] == [r["ap"] for r in b.rows]
