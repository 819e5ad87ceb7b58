import time
from functools import lru_cache

import structlog
from fastapi import APIRouter

from app.core.config import settings
from app.core.errors import VerificationError
from app.core.exactnum import LogNumber
from app.models.orbital import wtilde_tr_zero
from app.models.schemas import HealthCheck

logger = structlog.get_logger()
router = APIRouter()

# Track service start time
_start_time = time.time()


@lru_cache(maxsize=1)
def engine_ready() -> bool:
    """The exact engine reproduces w~Tr at 2"""
    try:
        return wtilde_tr_zero(2) == LogNumber.log(2, "4/3")
    except VerificationError as e:
        logger.error("Engine self-check failed", error=str(e))
        return False


@router.get("/health", response_model=HealthCheck)
async def health_check() -> HealthCheck:
    """Health check endpoint"""
    uptime = time.time() - _start_time
    ready = engine_ready()

    return HealthCheck(
        status="healthy" if ready else "degraded",
        version=settings.app_version,
        engine_ready=ready,
        uptime_seconds=uptime,
    )
