#!/usr/bin/env python3
"""
Shiftbench FastAPI HTTP Service

Shift monitor: compare an observed hour of traffic against the distribution a
signal controller was trained on, and raise an alarm once the phase KS
distance passes the operating threshold.

Endpoints:
  POST   /api/distribution     - Phase counts -> pmf and CDF
  POST   /api/ks               - Phase KS distance, critical value and p-value
  POST   /api/alarm            - ok / alarm against a KS threshold
  GET    /health               - Service health check
  GET    /info                 - Service information & defaults

Usage:
  uvicorn main:app --host 0.0.0.0 --port 8001
  or
  python main.py (runs on the configured host/port)
"""

import sys
import time
import logging
from pathlib import Path
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, model_validator

# --- Path setup: src/ packages are imported top-level ---
SRC_DIR = Path(__file__).resolve().parent / "src"

if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from config import get_config, setup_logging  # noqa: E402
from errors import ShiftbenchError  # noqa: E402
from expcli.analysis import shift_alarm  # noqa: E402
from shiftcore import (  # noqa: E402
    NUM_PHASES,
    PhaseCounts,
    TrafficDistribution,
    cdf_ks_distance,
    cumulative_difference,
    ks_test,
    normalize,
)

# --- Logging setup ---
_config = get_config()
setup_logging(_config)
logger = logging.getLogger(__name__)

# --- Request/Response models for FastAPI ---


class DistributionInput(BaseModel):
    """A traffic distribution given either as phase counts or as a pmf."""
    counts: Optional[List[int]] = Field(default=None, description="Vehicles per phase 1..8")
    pmf: Optional[List[float]] = Field(default=None, description="Probability per phase 1..8")

    @model_validator(mode='after')
    def validate_one_form(self):
        if (self.counts is None) == (self.pmf is None):
            raise ValueError("Provide exactly one of 'counts' or 'pmf'")
        values = self.counts if self.counts is not None else self.pmf
        if len(values) != NUM_PHASES:
            raise ValueError(f"Expected {NUM_PHASES} values, got {len(values)}")
        return self

    def total(self) -> Optional[int]:
        return sum(self.counts) if self.counts is not None else None

    def resolve(self) -> TrafficDistribution:
        if self.counts is not None:
            return normalize(PhaseCounts(tuple(self.counts)))
        return TrafficDistribution(tuple(self.pmf))


class CountsRequest(BaseModel):
    counts: List[int] = Field(..., description="Vehicles per phase 1..8")


class DistributionResponse(BaseModel):
    total: int
    pmf: List[float]
    cdf: List[float]


class KsRequest(BaseModel):
    reference: DistributionInput
    observed: DistributionInput
    alpha: float = Field(default=_config.experiment.alpha, description="Significance level")
    n: Optional[int] = Field(default=None, description="Sample size; observed total when omitted")


class KsResponse(BaseModel):
    distance: float
    critical_value: float
    reject_null: bool
    alpha: float
    n_effective: int
    p_value: float
    cdf_distance: float
    cumulative_difference: float


class AlarmRequest(BaseModel):
    reference: DistributionInput
    observed: DistributionInput
    threshold: float = Field(default=_config.experiment.alarm_threshold, description="KS threshold")


class AlarmResponse(BaseModel):
    status: str
    distance: float
    threshold: float


class HealthResponse(BaseModel):
    status: str
    uptime_seconds: float


class InfoResponse(BaseModel):
    service: str
    version: str
    num_phases: int
    default_alpha: float
    default_alarm_threshold: float
    endpoints: List[str]


_startup_time: float = time.time()

# --- FastAPI app ---
app = FastAPI(
    title="Shiftbench Shift Monitor API",
    description="Phase KS distance checks between training and observed traffic",
    version="0.1.0",
)


def _unprocessable(e: Exception) -> HTTPException:
    logger.warning(f"Rejected request: {e}")
    return HTTPException(status_code=422, detail=str(e))


# --- Endpoints ---

@app.post("/api/distribution", response_model=DistributionResponse)
async def api_distribution(request: CountsRequest) -> DistributionResponse:
    """Normalize phase counts into a traffic distribution."""
    try:
        counts = PhaseCounts(tuple(request.counts))
        p = normalize(counts)
        return DistributionResponse(total=counts.total, pmf=list(p.p), cdf=p.cdf().tolist())
    except (ShiftbenchError, ValueError) as e:
        raise _unprocessable(e)
    except Exception as e:
        logger.error(f"Distribution request failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Distribution request failed: {str(e)}")


@app.post("/api/ks", response_model=KsResponse)
async def api_ks(request: KsRequest) -> KsResponse:
    """
    KS test between reference and observed distributions.

    The sample size defaults to the observed vehicle total, so `n` is
    required when the observed side is given as a pmf.
    """
    n = request.n if request.n is not None else request.observed.total()
    if n is None:
        raise HTTPException(status_code=422, detail="'n' is required when observed is given as a pmf")

    try:
        p_ref = request.reference.resolve()
        p_obs = request.observed.resolve()
        report = ks_test(p_ref, p_obs, request.alpha, n)
        logger.info(f"KS request: D={report.distance:.4f}, K={report.critical_value:.4f}, n={n}")
        return KsResponse(
            distance=report.distance,
            critical_value=report.critical_value,
            reject_null=report.reject_null,
            alpha=report.alpha,
            n_effective=report.n_effective,
            p_value=report.p_value,
            cdf_distance=cdf_ks_distance(p_ref, p_obs),
            cumulative_difference=cumulative_difference(p_ref, p_obs),
        )
    except (ShiftbenchError, ValueError) as e:
        raise _unprocessable(e)
    except Exception as e:
        logger.error(f"KS request failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"KS request failed: {str(e)}")


@app.post("/api/alarm", response_model=AlarmResponse)
async def api_alarm(request: AlarmRequest) -> AlarmResponse:
    """Alarm when the observed distribution drifted past the threshold."""
    try:
        result = shift_alarm(request.reference.resolve(), request.observed.resolve(), request.threshold)
        return AlarmResponse(status=result.status, distance=result.distance, threshold=result.threshold)
    except (ShiftbenchError, ValueError) as e:
        raise _unprocessable(e)
    except Exception as e:
        logger.error(f"Alarm request failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Alarm request failed: {str(e)}")


@app.get("/health", response_model=HealthResponse)
async def health() -> HealthResponse:
    """Check service health."""
    return HealthResponse(status="healthy", uptime_seconds=time.time() - _startup_time)


@app.get("/info", response_model=InfoResponse)
async def info() -> InfoResponse:
    """Get service information and defaults."""
    return InfoResponse(
        service="shiftbench",
        version=app.version,
        num_phases=NUM_PHASES,
        default_alpha=_config.experiment.alpha,
        default_alarm_threshold=_config.experiment.alarm_threshold,
        endpoints=[route.path for route in app.routes if route.path.startswith(("/api", "/health", "/info"))],
    )


if __name__ == "__main__":
    import uvicorn

    logger.info("Starting Shiftbench FastAPI server...")
    uvicorn.run(
        app,
        host=_config.service.host,
        port=_config.service.port,
        log_level=_config.logging.log_level.lower(),
    )
