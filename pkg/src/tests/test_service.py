"""
tests/test_service.py

Tests for the shift-monitor HTTP service, through FastAPI's TestClient.
"""

import pytest
from fastapi.testclient import TestClient

from main import app

TRAIN = [210, 1150, 180, 420, 230, 1080, 270, 438]
EVENING = [245, 1380, 175, 340, 205, 855, 245, 410]


@pytest.fixture
def client():
    return TestClient(app)


# ============================================================================
# DISTRIBUTION ENDPOINT
# ============================================================================

class TestDistributionEndpoint:
    """POST /api/distribution"""

    def test_counts_to_pmf(self, client):
        """Counts normalize to a pmf and its CDF."""
        response = client.post("/api/distribution", json={"counts": [1, 1, 2, 0, 0, 0, 0, 0]})
        assert response.status_code == 200
        body = response.json()
        assert body["total"] == 4
        assert body["pmf"] == [0.25, 0.25, 0.5, 0, 0, 0, 0, 0]
        assert body["cdf"][-1] == pytest.approx(1.0)

    def test_zero_total(self, client):
        """All-zero counts are unprocessable."""
        response = client.post("/api/distribution", json={"counts": [0] * 8})
        assert response.status_code == 422

    def test_wrong_length(self, client):
        """Seven counts are unprocessable."""
        response = client.post("/api/distribution", json={"counts": [1] * 7})
        assert response.status_code == 422


# ============================================================================
# KS ENDPOINT
# ============================================================================

class TestKsEndpoint:
    """POST /api/ks"""

    def test_counts_vs_counts(self, client):
        """The evening hour differs significantly from the training hour."""
        response = client.post("/api/ks", json={"reference": {"counts": TRAIN}, "observed": {"counts": EVENING}})
        assert response.status_code == 200
        body = response.json()
        assert body["distance"] == pytest.approx(0.0689, abs=1e-4)
        assert body["n_effective"] == sum(EVENING)
        assert body["reject_null"] is (body["distance"] > body["critical_value"])
        assert body["alpha"] == 0.05

    def test_pmf_needs_n(self, client):
        """A pmf has no sample size of its own."""
        pmf = [0.125] * 8
        response = client.post("/api/ks", json={"reference": {"pmf": pmf}, "observed": {"pmf": pmf}})
        assert response.status_code == 422
        response = client.post("/api/ks", json={"reference": {"pmf": pmf}, "observed": {"pmf": pmf}, "n": 100})
        assert response.status_code == 200
        assert response.json()["distance"] == 0.0

    def test_both_forms_rejected(self, client):
        """Give counts or a pmf, not both."""
        response = client.post(
            "/api/ks",
            json={"reference": {"counts": TRAIN, "pmf": [0.125] * 8}, "observed": {"counts": EVENING}},
        )
        assert response.status_code == 422

    def test_bad_alpha(self, client):
        """alpha outside (0, 1) is unprocessable."""
        response = client.post(
            "/api/ks", json={"reference": {"counts": TRAIN}, "observed": {"counts": EVENING}, "alpha": 1.5},
        )
        assert response.status_code == 422


# ============================================================================
# ALARM ENDPOINT
# ============================================================================

class TestAlarmEndpoint:
    """POST /api/alarm"""

    def test_alarm(self, client):
        """The evening hour raises the alarm at the default threshold."""
        response = client.post("/api/alarm", json={"reference": {"counts": TRAIN}, "observed": {"counts": EVENING}})
        assert response.status_code == 200
        assert response.json()["status"] == "alarm"
        assert response.json()["threshold"] == 0.04

    def test_ok_with_higher_threshold(self, client):
        """A looser threshold keeps the same hour ok."""
        response = client.post(
            "/api/alarm",
            json={"reference": {"counts": TRAIN}, "observed": {"counts": EVENING}, "threshold": 0.1},
        )
        assert response.json()["status"] == "ok"

    def test_bad_threshold(self, client):
        """Thresholds above 1 are unprocessable."""
        response = client.post(
            "/api/alarm",
            json={"reference": {"counts": TRAIN}, "observed": {"counts": EVENING}, "threshold": 2.0},
        )
        assert response.status_code == 422


# ============================================================================
# SERVICE ENDPOINTS
# ============================================================================

class TestServiceEndpoints:
    """GET /health and /info"""

    def test_health(self, client):
        """The service reports healthy."""
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_info(self, client):
        """Info lists the API routes and defaults."""
        body = client.get("/info").json()
        assert body["service"] == "shiftbench"
        assert body["num_phases"] == 8
        assert "/api/ks" in body["endpoints"]
