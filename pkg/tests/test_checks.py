import json

import numpy as np
import pytest

from delaybsde.checks import CHECKS, CheckReport, default_config, residual_study, run_all, run_check
from delaybsde.errors import DomainError
from delaybsde.kernel import ModelParams
from delaybsde.montecarlo import SimConfig
from delaybsde.payoffs import ExpIntegral


def test_report_json_is_sorted_and_plain():
    rep = CheckReport("x", "pass", {"b": np.float64(1.5), "a": np.arange(2)}, {"b": 2.0}, {}, 0.1)
    text = rep.to_json()
    assert json.loads(text)["observed"] == {"a": [0, 1], "b": 1.5}
    assert text.index('"check_id"') < text.index('"observed"') < text.index('"status"')
    assert "runtime_seconds" not in text and "runtime_seconds" in rep.to_json(timings=True)


def test_unknown_check():
    with pytest.raises(DomainError, match="available"):
        run_check("nope")
    with pytest.raises(DomainError):
        default_config("nope")


def test_default_config_overrides():
    cfg = default_config("y.residual", seed=3)
    assert cfg.n_paths == 20_000 and cfg.seed == 3
    assert default_config("y.residual", n_paths=10, grid_steps=8).grid_steps == 8


def test_run_all_order_and_parallel_equality():
    ids = ["ex4.1.table", "prop3.2.bounds", "bessel.wronskian"]
    cfgs = {c: default_config(c) for c in ids}
    seq = run_all(cfgs, jobs=1)
    par = run_all(cfgs, jobs=2)
    assert [r.check_id for r in seq] == ids
    assert [r.to_json() for r in seq] == [r.to_json() for r in par]


def test_every_registered_check_has_description():
    assert all(e.description for e in CHECKS.values())


def test_residual_study_shapes():
    out = residual_study("z", ExpIntegral(), ModelParams(1.0, 1.0), SimConfig(n_paths=100, grid_steps=16), levels=2)
    assert out["steps"] == [16, 32] and np.shape(out["mse"]) == (2, 3)
    with pytest.raises(DomainError):
        residual_study("w", ExpIntegral(), ModelParams(1.0, 1.0), SimConfig(n_paths=10, grid_steps=4))
