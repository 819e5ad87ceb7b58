from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, validator
from pydantic_settings import BaseSettings

from app.core.constants import (
    DEFAULT_PRECISION,
    DEFAULT_PROFILE,
    DEFAULT_X_GRID,
    MAX_PRIME,
    QUADRATURE_TOLERANCE,
    SIEVE_HARD_LIMIT,
    SIEVE_MEMORY_FRACTION,
    SWEEP_WORKERS,
    VERIFY_TIMEOUT,
)
from app.core.errors import ConfigError


class Settings(BaseSettings):
    app_name: str = "Trace Limit Verifier"
    app_version: str = "0.1.0"
    env: str = "prod"

    @property
    def debug(self) -> bool:
        return self.env.lower() == "debug"

    # Server settings
    host: str = "0.0.0.0"  # nosec B104 # Intentional for containerized deployment
    port: int = 8000
    workers: int = 2

    # Numeric settings
    default_precision: int = DEFAULT_PRECISION
    quadrature_tolerance: float = QUADRATURE_TOLERANCE
    sieve_memory_fraction: float = SIEVE_MEMORY_FRACTION
    sieve_hard_limit: int = SIEVE_HARD_LIMIT

    # Performance settings
    sweep_workers: int = SWEEP_WORKERS
    verify_timeout: float = VERIFY_TIMEOUT
    max_prime: int = MAX_PRIME

    # Output
    output_dir: str = "reports"
    log_level: str | None = None

    allowed_origins: list[str] = ["*"]

    class Config:
        env_file = ".env"
        case_sensitive = False


settings = Settings()


class RunConfig(BaseModel):
    """Parameters of one CLI run"""

    s_primes: list[int] = Field(default_factory=lambda: [2], description="S-primes")
    hecke_m: dict[int, int] = Field(
        default_factory=dict, description="Hecke-ball exponent per S-prime"
    )
    profile: str = Field(DEFAULT_PROFILE, description="Archimedean profile name")
    x_grid: list[int] = Field(
        default_factory=lambda: list(DEFAULT_X_GRID), description="Sweep grid"
    )
    precision: int = Field(
        default_factory=lambda: settings.default_precision, ge=1, le=1000
    )
    out_dir: Path = Field(default_factory=lambda: Path(settings.output_dir))
    workers: int = Field(default_factory=lambda: settings.sweep_workers, ge=1)

    @validator("s_primes")
    def validate_s_primes(cls, v: list[int]) -> list[int]:
        if 2 not in v:
            raise ValueError("S must contain 2")
        if len(set(v)) != len(v):
            raise ValueError("S-primes must be distinct")
        return sorted(v)

    @validator("x_grid")
    def validate_x_grid(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("X grid is empty")
        if any(x < 2 for x in v):
            raise ValueError("X grid entries must be at least 2")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("X grid must be strictly increasing")
        return v

    @validator("hecke_m")
    def validate_hecke_m(cls, v: dict[int, int]) -> dict[int, int]:
        if any(m < 0 for m in v.values()):
            raise ValueError("Hecke exponents must be non-negative")
        return v


_LIST_KEYS = {"s_primes", "x_grid"}
_SCALAR_KEYS = {"profile", "precision", "out_dir", "workers"}


def _parse_int_list(key: str, raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.replace(" ", "").split(",") if part]
    except ValueError as e:
        raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}") from e


def parse_run_config(text: str, **overrides: Any) -> RunConfig:
    """
    Parse the flat key=value run configuration.

    Recognized keys: s_primes, hecke_m.<p>, profile, x_grid, precision,
    out_dir, workers. Lines starting with '#' are comments.
    """
    values: dict[str, Any] = {}
    hecke: dict[int, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in _LIST_KEYS:
            values[key] = _parse_int_list(key, raw)
        elif key.startswith("hecke_m."):
            try:
                hecke[int(key.split(".", 1)[1])] = int(raw)
            except ValueError as e:
                raise ConfigError(f"line {lineno}: bad Hecke entry {line!r}") from e
        elif key in _SCALAR_KEYS:
            values[key] = raw
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    if hecke:
        values["hecke_m"] = hecke
    values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(str(e)) from e

    unknown = set(config.hecke_m) - set(config.s_primes)
    if unknown:
        raise ConfigError(f"hecke_m given for primes outside S: {sorted(unknown)}")
    return config


def load_run_config(path: Path | None, **overrides: Any) -> RunConfig:
    """Load a run configuration file; a missing path yields the defaults"""
    if path is None:
        return parse_run_config("", **overrides)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_run_config(text, **overrides)
