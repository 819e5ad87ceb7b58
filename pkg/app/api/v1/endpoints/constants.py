import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import structlog
from fastapi import APIRouter, HTTPException, Query
from sympy import isprime

from app.core.config import settings
from app.core.errors import VerificationError
from app.core.exactnum import LogNumber
from app.models.schemas import LimitFormResponse, LogNumberPayload, VerificationReport
from app.models.spectral import limit_form_check, limit_form_terms, verify_constants

logger = structlog.get_logger()
router = APIRouter()

executor = ThreadPoolExecutor(max_workers=settings.workers)

MAX_PRIMES = 16


def _check_prime(p: int) -> int:
    if not isprime(p):
        raise HTTPException(status_code=422, detail=f"{p} is not prime")
    if p > settings.max_prime:
        raise HTTPException(status_code=422, detail=f"primes above {settings.max_prime} are not served")
    return p


def _parse_primes(raw: str) -> list[int]:
    try:
        primes = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise HTTPException(status_code=422, detail=f"expected comma-separated integers, got {raw!r}") from None
    if not primes or len(primes) > MAX_PRIMES:
        raise HTTPException(status_code=422, detail=f"between 1 and {MAX_PRIMES} primes per request")
    return [_check_prime(p) for p in primes]


async def _run(func: Any, *args: Any) -> Any:
    loop = asyncio.get_event_loop()
    return await asyncio.wait_for(loop.run_in_executor(executor, func, *args), timeout=settings.verify_timeout)


def _limit_form(p: int) -> tuple[dict[str, LogNumber], LogNumber]:
    return limit_form_terms(p), limit_form_check(p)


@router.get("/verify", response_model=VerificationReport)
async def verify(primes: str = Query("2,3,5,7", description="Comma-separated primes")) -> VerificationReport:
    """Run every exact local check at the given primes"""
    prime_list = _parse_primes(primes)
    try:
        report = await _run(verify_constants, prime_list)
    except VerificationError as e:
        logger.error("Constant verification failed", primes=prime_list, error=str(e))
        raise HTTPException(status_code=422, detail=str(e)) from None
    except asyncio.TimeoutError:
        logger.error("Constant verification timed out", primes=prime_list, timeout=settings.verify_timeout)
        raise HTTPException(status_code=504, detail="verification timed out") from None

    logger.info("Constants verified over HTTP", primes=prime_list, passed=report["passed"])
    return VerificationReport(**report)


@router.get("/limit-form/{p}", response_model=LimitFormResponse)
async def limit_form(p: int) -> LimitFormResponse:
    """The local limit form at p; `zero` is true when the identity holds"""
    _check_prime(p)
    try:
        terms, total = await _run(_limit_form, p)
    except VerificationError as e:
        logger.error("Limit form failed", p=p, error=str(e))
        raise HTTPException(status_code=422, detail=str(e)) from None
    except asyncio.TimeoutError:
        logger.error("Limit form timed out", p=p, timeout=settings.verify_timeout)
        raise HTTPException(status_code=504, detail="limit form timed out") from None

    data = total.to_json()
    return LimitFormResponse(
        p=p,
        terms={name: str(value) for name, value in terms.items()},
        total=LogNumberPayload(const=data["const"], log=data["log"], text=str(total), value=total.to_float()),
        zero=total.is_zero(),
    )
