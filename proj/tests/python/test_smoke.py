import math

import pytest

import intent_graph as ig

TINY = {"D": 4, "D_e": 4, "hidden": 4, "T": 2, "K": 2, "normalize_spatial": True}


def test_version():
    assert ig.__version__ == "0.1.0"


def test_spatial_relation_example():
    assert ig.spatial_relation([10, 20, 30, 60], [40, 25, 70, 55]) == [30, 5, 40, -5, 35, 0, 60, 40]


def test_parameter_count_shared_layers():
    assert ig.parameter_count({"num_layers": 2}) == ig.parameter_count({"num_layers": 3})


def test_defaults_round_trip():
    model = ig.default_config("model")
    assert model["D"] == 32
    assert ig.parameter_count(model) == ig.parameter_count()


def test_train_evaluate_predict():
    data = ig.generate_synthetic({"n_scenarios": 6, "D": 4, "frames_per_scenario": 4})
    assert len(data.splitlines()) == 6
    result = ig.train(data, TINY, {"epochs": 5})
    assert len(result["history"]) == 5
    report = ig.evaluate(result["checkpoint"], data)
    assert report["scenarios"] == 6
    assert 0.0 <= report["avg_acc"] <= 1.0
    probs = ig.predict(result["checkpoint"], data)
    assert len(probs) == 6
    assert all(0.0 < p < 1.0 and math.isfinite(p) for row in probs for p in row)


def test_gradcheck():
    report = ig.gradcheck()
    assert report["passed"]
    assert report["worst_relative_error"] <= 1e-4


def test_errors():
    with pytest.raises(ig.ConfigError):
        ig.parameter_count({"depth": 2})
    with pytest.raises(ig.DataError):
        ig.evaluate(ig.train(ig.generate_synthetic({"n_scenarios": 1, "D": 4}), TINY, {"epochs": 1})["checkpoint"], "")


def test_cli_in_process():
    code, out, _ = ig.run_cli("gradcheck")
    assert code == 0
    assert '"passed":true' in out
    code, _, _ = ig.run_cli("nonsense")
    assert code == 2
