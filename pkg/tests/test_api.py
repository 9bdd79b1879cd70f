import pytest
from fastapi.testclient import TestClient

from app import __version__
from app.main import app


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["ok"] is True
    assert body["version"] == __version__
    assert body["presets"] >= 10
    assert body["report_cache"] is False


def test_presets(client):
    r = client.get("/api/v1/presets")
    assert r.status_code == 200
    presets = r.json()["presets"]
    assert presets["square"]["spec"]["type"] == "polytope"
    assert presets["disc"]["spec"]["type"] == "ball"


def test_ht_area_route(client):
    r = client.post("/api/v1/ht-area", json={"k": "square", "b": "square"})
    assert r.status_code == 200
    body = r.json()
    assert body["ok"] is True
    assert body["cached"] is False
    assert body["exit_code"] == 0
    assert body["data"]["values"]["area"] == pytest.approx(8.0, abs=1e-9)


def test_inline_body_specs(client):
    payload = {"k": {"type": "ball"}, "b": {"type": "polytope", "vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]]}}
    r = client.post("/api/v1/isoperimetric-check", json=payload)
    assert r.status_code == 200
    assert r.json()["data"]["values"]["ratio"] >= r.json()["data"]["values"]["bound"]


@pytest.mark.parametrize(
    "payload",
    [
        {"k": "no-such-body", "b": "square"},
        {"k": {"type": "polytope"}, "b": "square"},
        {"k": "square", "b": "square", "tolerances": {"bogus": 1.0}},
        {"k": "square"},
    ],
)
def test_bad_input_is_400(client, payload):
    r = client.post("/api/v1/ht-area", json=payload)
    assert r.status_code == 400


def test_unknown_command_is_404(client):
    r = client.post("/api/v1/area-of-everything", json={})
    assert r.status_code == 404


def test_cache_clear_needs_the_cache(client):
    r = client.post("/api/v1/cache/clear", json={"all": True})
    assert r.status_code == 503
