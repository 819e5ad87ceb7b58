from datetime import datetime
from fractions import Fraction
from typing import Any

from pydantic import BaseModel, Field, validator


class LogNumberPayload(BaseModel):
    """Exact value constant + sum_p c_p log p, rationals as strings"""

    const: str = Field(..., description="Rational constant term, e.g. '13/36'")
    log: dict[str, str] = Field(default_factory=dict, description="Coefficient of log p per prime p")
    text: str = Field(..., description="Human-readable form")
    value: float = Field(..., description="Floating-point value")


class OrbitalRequest(BaseModel):
    """Split element diag(a, b) and the Hecke ball 1_{X_p^m}"""

    p: int = Field(..., ge=2, description="Prime")
    m: int = Field(0, ge=0, description="Hecke-ball exponent")
    a: str = Field(..., description="Eigenvalue a as a rational, e.g. '3/2'")
    b: str = Field(..., description="Eigenvalue b as a rational")
    scaled: bool = Field(False, description="Use p^(-m/2) 1_{X_p^m}")

    @validator("a", "b")
    def validate_rational(cls, v: str) -> str:
        try:
            Fraction(v)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational number: {v!r}") from e
        return v


class OrbitalResponse(BaseModel):
    p: int
    m: int
    orb: str = Field(..., description="orb(f_p; diag(a, b))")
    worb: str = Field(..., description="Weighted orbital integral")
    worb_hat: str = Field(..., description="Modified weighted orbital integral")
    worb_tilde: str = Field(..., description="Modified weighted orbital integral of the second kind")
    processing_time_ms: float


class VerificationReport(BaseModel):
    """Same document as the verify-constants JSON report"""

    schema_version: int = Field(..., alias="schema")
    primes: list[int]
    passed: bool
    checks: list[dict[str, Any]]

    class Config:
        populate_by_name = True


class LimitFormResponse(BaseModel):
    p: int
    terms: dict[str, str]
    total: LogNumberPayload
    zero: bool


class HealthCheck(BaseModel):
    """Health check response"""

    status: str = Field(..., description="Service status")
    timestamp: datetime = Field(default_factory=datetime.utcnow)
    version: str = Field(..., description="API version")
    engine_ready: bool = Field(..., description="Whether the exact engine answered its self-check")
    uptime_seconds: float = Field(..., description="Service uptime in seconds")
