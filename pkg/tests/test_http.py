from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from main import create_app

CHAIN = {
    "buses": 3,
    "lines": [
        {"child": 1, "parent": 0, "r": 0.01, "x": 0.02},
        {"child": 2, "parent": 1, "r": 0.02, "x": 0.01},
        {"child": 3, "parent": 2, "r": 0.03, "x": 0.03},
    ],
}


@pytest.fixture
def client():
    return TestClient(create_app())


def _voltages(T, N, seed=0):
    rng = np.random.default_rng(seed)
    return (1.0 + 0.01 * rng.standard_normal((T, N))).tolist()


def test_schema(client):
    res = client.get("/api/schema")
    assert res.status_code == 200
    body = res.json()
    assert body["ok"] is True
    assert "grid_json" in body["data"]["formats"]


def test_identify(client):
    res = client.post("/api/identify", json={"V": _voltages(60, 3), "solver": {"lambda": 1e-6, "mu": 1e-6}})
    assert res.status_code == 200
    data = res.json()["data"]
    assert data["buses"] == 3
    assert [k["n"] for k in data["kernels"]] == [1, 2, 3]
    assert all(k["rho1"][k["n"] - 1] == 0.0 for k in data["kernels"])
    assert len(data["diagnostics"]) == 3


def test_identify_rejects_negative_weight(client):
    res = client.post("/api/identify", json={"V": _voltages(10, 2), "solver": {"lambda": -1.0}})
    assert res.status_code == 422


def test_identify_rejects_nonpositive_voltage(client):
    V = _voltages(10, 2)
    V[3][1] = 0.0
    res = client.post("/api/identify", json={"V": V})
    assert res.status_code == 400


def test_evaluate(client):
    res = client.post("/api/evaluate", json={"grid": CHAIN, "V": _voltages(80, 3), "methods": ["pc", "concentration"]})
    assert res.status_code == 200
    data = res.json()["data"]
    assert set(data["auc"]) == {"pc", "concentration"}
    assert data["rocs"]["pc"]["fpr"][0] == 0.0


def test_evaluate_bus_mismatch(client):
    res = client.post("/api/evaluate", json={"grid": CHAIN, "V": _voltages(30, 2), "methods": ["pc"]})
    assert res.status_code == 400
    assert res.json()["detail"]["error"] == "DimensionMismatch"


def test_evaluate_unknown_method(client):
    res = client.post("/api/evaluate", json={"grid": CHAIN, "V": _voltages(30, 3), "methods": ["mkpc"]})
    assert res.status_code == 400
    assert res.json()["detail"]["error"] == "ConfigError"
