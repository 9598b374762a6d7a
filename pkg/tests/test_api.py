import logging

import pytest
from fastapi.testclient import TestClient

from grasp_service.app import create_app
from grasp_service.utils.log_collector import ApplicationLogHandler, stage_of

SMALL = {"hang.sample_count": 1500}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def torus_path(client, tmp_path_factory):
    out = tmp_path_factory.mktemp("api_shapes")
    response = client.post("/api/synth", json={"kind": "torus", "out_dir": str(out)})
    assert response.status_code == 200, response.text
    return response.json()["data"]["mesh_path"]


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_synth_returns_ground_truth(client, tmp_path):
    response = client.post("/api/synth", json={"kind": "arc_torus", "params": {"sweep_deg": 180}, "out_dir": str(tmp_path), "format": "ply"})

    body = response.json()
    assert response.status_code == 200, response.text
    assert body["status"] == "ok"
    assert body["data"]["mesh_path"].endswith("arc_torus.ply")
    assert body["data"]["groundtruth"]["expected_m"] == [0.5]


def test_synth_invalid_params(client, tmp_path):
    response = client.post("/api/synth", json={"kind": "torus", "params": {"bogus": 1}, "out_dir": str(tmp_path)})
    assert response.status_code == 400
    assert "bogus" in response.json()["detail"]


def test_hang_endpoint(client, torus_path):
    response = client.post("/api/hang", json={"mesh_path": torus_path, "config": SMALL})

    assert response.status_code == 200, response.text
    document = response.json()
    assert document["mesh"] == "torus.obj"
    assert len(document["hangs"]) == 1
    assert document["hangs"][0]["m"] == 1.0


def test_detect_endpoint(client, torus_path):
    response = client.post("/api/detect", json={"mesh_path": torus_path, "config": SMALL, "top_k": 2})

    assert response.status_code == 200, response.text
    grasps = response.json()["grasps"]
    assert len(grasps) == 2
    assert [g["rank"] for g in grasps] == [1, 2]


def test_missing_mesh_is_404(client, tmp_path):
    response = client.post("/api/detect", json={"mesh_path": str(tmp_path / "none.obj")})
    assert response.status_code == 404


def test_bad_config_is_422(client, torus_path):
    response = client.post("/api/hang", json={"mesh_path": torus_path, "config": {"hang": {"sample_count": 1}}})
    assert response.status_code == 422
    assert "hang.sample_count" in response.json()["detail"]


def test_logs_collected_by_stage(client, torus_path):
    client.post("/api/logs/clear")
    client.post("/api/hang", json={"mesh_path": torus_path, "config": SMALL})

    response = client.get("/api/logs", params={"stage": "hangability"})
    body = response.json()
    assert body["status"] == "ok"
    assert body["data"]["count"] >= 1
    assert all(log["stage"] == "hangability" for log in body["data"]["logs"])

    stats = client.get("/api/logs/stats").json()["data"]
    assert stats["by_stage"].get("hangability", 0) >= 1


def test_log_collector_filters():
    handler = ApplicationLogHandler(max_size=3)
    logger = logging.getLogger("grasp_service.services.scoring.test")
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    try:
        for i in range(4):
            logger.info(f"ranked {i}")
        logger.warning("no grasp")
    finally:
        logger.removeHandler(handler)

    assert len(handler.logs) == 3
    assert [log["message"] for log in handler.get_logs(level="warning")] == ["no grasp"]
    assert [log["message"] for log in handler.get_logs(limit=1)] == ["no grasp"]
    assert handler.get_logs(search="RANKED 3")[0]["stage"] == "test"
    assert handler.get_logs(limit=0) == []
    assert handler.get_stats()["by_level"] == {"INFO": 2, "WARNING": 1}
    handler.clear()
    assert handler.get_stats()["total_logs"] == 0


def test_stage_of():
    assert stage_of("grasp_service.services.hangability") == "hangability"
    assert stage_of("") == "unknown"
