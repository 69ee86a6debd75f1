import pytest
from fastapi.testclient import TestClient

from lineopt.catalog import default_catalog, dumps_catalog
from lineopt.service import models
from lineopt.service.app import app
from lineopt.service.handlers import ServiceError, space_from_doc, space_to_doc


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def space_doc(client):
    resp = client.post("/reduce", json={"margin": 0.015, "dev_mode": "no"})
    assert resp.status_code == 200
    return resp.json()["space"]


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_catalog_dump_default(client):
    body = client.post("/catalog/dump", json={}).json()
    assert body["summary"]["shifts"] == 15
    assert body["summary"]["rates"] == 5
    assert body["summary"]["annual_target"] == 360000.0
    assert body["catalog_text"] == dumps_catalog(default_catalog())


def test_catalog_dump_round_trip(client):
    text = dumps_catalog(default_catalog())
    body = client.post("/catalog/dump", json={"catalog_text": text}).json()
    assert body["catalog_text"] == text


def test_catalog_rejects_malformed(client):
    resp = client.post("/catalog/dump", json={"catalog_text": "[shifts]\n1 0101\n"})
    assert resp.status_code == 422
    assert "pattern" in resp.json()["detail"]


def test_reduce_endpoint(client, space_doc):
    assert space_doc["total_size"] == 729
    assert [len(s) for s in space_doc["stages"]] == [9, 9, 9]
    assert space_doc["dev_mode"] == "noDev"


def test_reduce_infeasible_margin(client):
    resp = client.post("/reduce", json={"margin": 1e-7, "dev_mode": "no"})
    assert resp.status_code == 409


def test_space_doc_round_trip(space_doc):
    catalog = default_catalog()
    doc = models.SpaceDoc.model_validate(space_doc)
    space = space_from_doc(doc, catalog)
    assert space.total_size == 729
    assert space_to_doc(space).model_dump() == doc.model_dump()


def test_space_doc_rejects_bad_order(space_doc):
    catalog = default_catalog()
    doc = models.SpaceDoc.model_validate(space_doc)
    stages = [list(s) for s in doc.stages]
    stages[0] = stages[0][::-1]
    bad = doc.model_copy(update={"stages": stages})
    with pytest.raises(ServiceError, match="order"):
        space_from_doc(bad, catalog)


def test_space_doc_rejects_wrong_total(space_doc):
    catalog = default_catalog()
    doc = models.SpaceDoc.model_validate(space_doc).model_copy(update={"total_size": 1})
    with pytest.raises(ServiceError, match="total_size"):
        space_from_doc(doc, catalog)


def test_simulate_endpoint(client):
    body = client.post(
        "/simulate", json={"config": [11, 3, 11, 3, 11, 3, 11, 3, 11, 3, 11, 3]}
    ).json()
    assert body["cost"]["total"] == body["cost"]["production_term"] + body["cost"]["idle_term"]
    assert len(body["monthly_production"]) == 12
    assert len(body["idle_hours"]) == 6
    assert body["trace"] is None


def test_simulate_trace(client):
    body = client.post(
        "/simulate",
        json={"config": [11, 3, 11, 3, 11, 3, 11, 3, 11, 3, 11, 3], "include_trace": True},
    ).json()
    assert len(body["trace"]) == 365 * 48
    first = body["trace"][0]
    assert set(first) == {"step", "hour", "produced", "idle_flags", "buffer1", "buffer2"}


def test_simulate_rejects_bad_config(client):
    assert client.post("/simulate", json={"config": [1] * 11}).status_code == 422
    assert client.post(
        "/simulate", json={"config": [99, 3, 11, 3, 11, 3, 11, 3, 11, 3, 11, 3]}
    ).status_code == 422


def test_encode_decode_round_trip(client, space_doc):
    for scheme in ("basic", "gray", "pggray"):
        enc = client.post(
            "/encode", json={"scheme": scheme, "space": space_doc, "triple": [1, 2, 3]}
        ).json()
        dec = client.post(
            "/decode", json={"scheme": scheme, "space": space_doc, "bits": enc["bits"]}
        ).json()
        assert dec["valid"] and tuple(dec["triple"]) == (1, 2, 3)


def test_decode_invalid_code(client, space_doc):
    # gray fields of width 4 holding rank 15 decode outside the 9-state lists
    resp = client.post(
        "/decode", json={"scheme": "gray", "space": space_doc, "bits": "100010001000"}
    ).json()
    assert resp["valid"] is False


def test_encode_twelvebody(client):
    enc = client.post(
        "/encode",
        json={"scheme": "twelvebody-gray", "config": [3, 1, 14, 2, 7, 5, 1, 5, 2, 4, 3, 2]},
    ).json()
    assert len(enc["bits"]) == 42
    dec = client.post(
        "/decode", json={"scheme": "twelvebody-gray", "bits": enc["bits"]}
    ).json()
    assert dec["valid"] and dec["config"] == [3, 1, 14, 2, 7, 5, 1, 5, 2, 4, 3, 2]


def test_encode_requires_space(client):
    resp = client.post("/encode", json={"scheme": "gray", "triple": [0, 0, 0]})
    assert resp.status_code == 422


def test_solve_endpoint(client, space_doc):
    body = client.post(
        "/solve", json={"solver": "pt", "budget": 30, "seed": 1, "space": space_doc}
    ).json()
    assert len(body["trace"]) == 30
    assert body["parameterization"] == "3body"
    bests = [row["best_so_far"] for row in body["trace"]]
    assert bests == sorted(bests, reverse=True) or all(
        a >= b for a, b in zip(bests, bests[1:])
    )


def test_solve_twelve_body(client):
    body = client.post(
        "/solve", json={"solver": "sa", "budget": 20, "seed": 2, "twelve_body": True}
    ).json()
    assert body["parameterization"] == "12body"
    assert len(body["trace"]) == 20


def test_solve_validation(client, space_doc):
    assert client.post(
        "/solve", json={"solver": "nope", "budget": 10, "space": space_doc}
    ).status_code == 422
    assert client.post(
        "/solve", json={"solver": "ga1", "budget": 5, "space": space_doc}
    ).status_code == 422


def test_boost_endpoint(client, space_doc):
    body = client.post(
        "/boost",
        json={
            "solver": "sa", "scheme": "pggray", "space": space_doc,
            "budget": 60, "seed_evals": 40, "seed": 3, "chi": 4, "train_sweeps": 3,
        },
    ).json()
    assert len(body["trace"]) == 60
    assert body["best_cost"] <= body["prefix_best_cost"]


def test_pgco_endpoint(client):
    body = client.post("/pgco", json={"n_roots": 2, "n_branches": 2, "dev_mode": "no"}).json()
    assert body["explored"] == 8
    assert body["cost"]["total"] >= 0
