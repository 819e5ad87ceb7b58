"""
Archimedean test-function profiles.

A profile supplies theta^+ and theta^- (the normalized archimedean orbital
integrals on the two sheets det = +1/4 and det = -1/4) as real callables that
vanish off |x| <= support_radius. Callables may accept numpy arrays; scalar-only
plug-ins are vectorized on demand.
"""

from __future__ import annotations

import importlib
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
import structlog

from app.core.constants import (
    DEFAULT_PROFILE_RADIUS,
    NARROW_PROFILE_RADIUS,
    PROFILE_TRANSITION_WIDTH,
)
from app.core.errors import ConfigError, ContractError

logger = structlog.get_logger()

RealFunction = Callable[[Any], Any]


@dataclass(frozen=True)
class ArchProfile:
    name: str
    theta_plus: RealFunction
    theta_minus: RealFunction
    support_radius: float
    smoothness: str = "C^inf"

    def __post_init__(self) -> None:
        if not self.support_radius >= 0:
            raise ContractError("support radius must be non-negative")

    @property
    def is_zero(self) -> bool:
        return self.support_radius == 0

    def plus(self, x: float) -> float:
        return float(self.theta_plus(x)) if abs(x) <= self.support_radius else 0.0

    def minus(self, x: float) -> float:
        return float(self.theta_minus(x)) if abs(x) <= self.support_radius else 0.0

    def _on_array(self, func: RealFunction, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.support_radius
        out = np.zeros_like(x)
        if not inside.any():
            return out
        values = np.asarray(func(x[inside]), dtype=float)
        if values.shape != x[inside].shape:
            values = np.vectorize(lambda t: float(func(t)), otypes=[float])(x[inside])
        out[inside] = values
        return out

    def plus_array(self, x: np.ndarray) -> np.ndarray:
        return self._on_array(self.theta_plus, x)

    def minus_array(self, x: np.ndarray) -> np.ndarray:
        return self._on_array(self.theta_minus, x)


def _phi(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def smooth_step(t: float | np.ndarray) -> np.ndarray:
    """C^inf step: 0 for t <= 0, 1 for t >= 1"""
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    a, b = _phi(arr), _phi(1.0 - arr)
    out = a / (a + b)
    return out if np.ndim(t) else out.reshape(())


def plateau(radius: float, width: float = PROFILE_TRANSITION_WIDTH) -> RealFunction:
    """1 on |x| <= radius - width, 0 on |x| >= radius, smooth in between"""
    if width <= 0 or width > radius:
        raise ContractError("transition width must lie in (0, radius]")

    def bump(x: Any) -> Any:
        values = smooth_step((radius - np.abs(x)) / width)
        return values if np.ndim(x) else float(values)

    return bump


def plateau_profile(name: str, radius: float, minus_ratio: float = 0.5) -> ArchProfile:
    bump = plateau(radius)
    return ArchProfile(
        name=name,
        theta_plus=bump,
        theta_minus=lambda x: minus_ratio * bump(x),
        support_radius=radius,
    )


def _zero(x: Any) -> Any:
    return np.zeros_like(x, dtype=float) if np.ndim(x) else 0.0


def zero_profile() -> ArchProfile:
    return ArchProfile("zero", _zero, _zero, 0.0)


BUILTIN_PROFILES: dict[str, Callable[[], ArchProfile]] = {
    "default": lambda: plateau_profile("default", DEFAULT_PROFILE_RADIUS),
    "narrow": lambda: plateau_profile("narrow", NARROW_PROFILE_RADIUS),
    "zero": zero_profile,
}


def load_profile(spec: str) -> ArchProfile:
    """
    Resolve a built-in profile name or a "package.module:factory" plug-in.

    The factory is called without arguments and must return an ArchProfile.
    """
    if spec in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[spec]()
    if ":" not in spec:
        raise ConfigError(f"unknown profile {spec!r}; built-ins are {sorted(BUILTIN_PROFILES)}")

    module_name, _, attr = spec.partition(":")
    try:
        factory = getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as e:
        raise ConfigError(f"cannot load profile plug-in {spec!r}") from e

    profile = factory()
    if not isinstance(profile, ArchProfile):
        raise ConfigError(f"plug-in {spec!r} did not return an ArchProfile")
    logger.info("Loaded profile plug-in", profile=spec, radius=profile.support_radius)
    return profile
