import time

import structlog
from fastapi import APIRouter, HTTPException, Request

from app.core.errors import VerificationError
from app.models.orbital import orb_split, worb, worb_hat, worb_tilde
from app.models.schemas import OrbitalRequest, OrbitalResponse

logger = structlog.get_logger()
router = APIRouter()


@router.post("/evaluate", response_model=OrbitalResponse)
async def evaluate(body: OrbitalRequest, request: Request) -> OrbitalResponse:
    """Exact orb, worb, worb_hat and worb_tilde at diag(a, b)"""
    start_time = time.time()
    request_id = getattr(request.state, "request_id", None)
    args = (body.p, body.m, body.a, body.b, body.scaled)

    try:
        response = OrbitalResponse(
            p=body.p,
            m=body.m,
            orb=str(orb_split(*args)),
            worb=str(worb(*args)),
            worb_hat=str(worb_hat(*args)),
            worb_tilde=str(worb_tilde(*args)),
            processing_time_ms=(time.time() - start_time) * 1000,
        )
    except VerificationError as e:
        logger.warning("Orbital evaluation rejected", request_id=request_id, error=str(e))
        raise HTTPException(status_code=422, detail=str(e)) from None

    logger.info("Orbital integrals evaluated", request_id=request_id, p=body.p, m=body.m)
    return response
