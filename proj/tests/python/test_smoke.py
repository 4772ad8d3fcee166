import json
import math

import numpy as np
import pytest

import poolal

SMALL = {"n-per-class": 40, "rounds": 2, "epochs": 20, "seed": 5}


def test_run_experiment_curve():
    curve = poolal.run_experiment({**SMALL, "strategy": "entropy"})
    assert [r["n_labeled"] for r in curve] == [10, 15, 20]
    assert curve[0]["selected_indices"] == []
    assert all(0.0 <= r["accuracy"] <= 1.0 for r in curve)
    again = poolal.run_experiment({**SMALL, "strategy": "entropy"})
    assert [r["accuracy"] for r in again] == [r["accuracy"] for r in curve]
    text = poolal.format_curve(curve)
    assert text.splitlines()[0] == "round,n_labeled,accuracy,selected_indices"


def test_config_errors_are_typed():
    with pytest.raises(poolal.ConfigError):
        poolal.run_experiment({"strategy": "kmedians"})
    with pytest.raises(poolal.ConfigError):
        poolal.run_experiment({"n-query": 0})
    assert issubclass(poolal.ConfigError, poolal.Error)
    assert "hidden" in poolal.config_keys()
    assert len(poolal.strategy_names()) == 12


def test_scorers_accept_numpy():
    probs = np.array([[0.5, 0.25, 0.25], [1.0, 0.0, 0.0]])
    scores, direction = poolal.entropy_scores(probs)
    assert direction == "max"
    assert scores[0] == pytest.approx(1.5 * math.log(2))
    assert scores[1] == 0.0
    assert poolal.margin_scores(probs)[1] == "min"
    p = poolal.softmax(np.array([[1.0, 2.0, 3.0]]))
    assert p.sum() == pytest.approx(1.0)
    bald, _ = poolal.bald_scores([np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])])
    assert bald[0] == pytest.approx(math.log(2))


def test_kcenter_greedy():
    emb = np.array([[0.0], [1.0], [10.0], [5.0]])
    assert poolal.kcenter_greedy(emb, [True, False, False, False], 2) == [2, 3]


def test_active_learner_steps():
    learner = poolal.ActiveLearner({**SMALL, "strategy": "margin"})
    first = learner.query()
    assert len(first) == 5
    record = learner.complete_round(first)
    assert record["round"] == 1
    learner.step()
    assert learner.done()
    x, y = poolal.make_two_gaussians(10, 3.0, 1.0, 1)
    assert x.shape == (20, 2) and len(y) == 20


def test_session_api():
    sessions = poolal.SessionManager()
    status, body = sessions.request("POST", "/sessions", json.dumps({"mode": "human", "config": SMALL}))
    assert status == 201
    sid = json.loads(body)["id"]
    status, body = sessions.request("POST", f"/sessions/{sid}/advance")
    items = json.loads(body)["pending"]["items"]
    assert len(items) == 5
    assert all("label" not in item for item in items)
    labels = [{"index": item["index"], "label": 0} for item in items]
    status, body = sessions.request("POST", f"/sessions/{sid}/labels", json.dumps({"labels": labels}))
    assert json.loads(body)["remaining"] == 0
    status, body = sessions.request("GET", "/sessions/nope/curve")
    assert status == 404
    assert json.loads(body)["error"]["code"] == "not_found"
