"""Correlation-lag bookkeeping for the noises of a dynamic system.

A profile holds four nonnegative lags:

* ``l1`` -- measurement noise auto-correlation,
* ``l2`` -- process noise auto-correlation,
* ``l3`` -- backward cross-correlation (measurement noise vs. past process noise),
* ``l4`` -- forward cross-correlation (measurement noise vs. future process noise).

The effective lags ``max(l2, 1)`` and ``max(l3, 1)`` control how many past
states the transition and measurement conditionals reach back to, and their
relation selects one of three recursion layouts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError

# Block-grid sizes grow as (lag * state_dim)^2; larger lags are almost
# certainly a configuration mistake.
MAX_LAG = 8


class CaseTag(Enum):
    """Which recursion layout a profile selects (relation of l3' to l2'+1)."""

    GREATER = "greater"  # l3' > l2' + 1
    LESS = "less"        # l3' < l2' + 1
    EQUAL = "equal"      # l3' = l2' + 1


@dataclass(frozen=True)
class CorrelationProfile:
    l1: int = 0
    l2: int = 0
    l3: int = 0
    l4: int = 0

    def __post_init__(self):
        for name in ("l1", "l2", "l3", "l4"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"lag {name} must be an integer, got {value!r}")
            if value < 0:
                raise ConfigError(f"lag {name} must be nonnegative, got {value}")
            if value > MAX_LAG:
                raise ConfigError(
                    f"lag {name}={value} exceeds the supported maximum {MAX_LAG}"
                )

    @property
    def l2_eff(self) -> int:
        return max(self.l2, 1)

    @property
    def l3_eff(self) -> int:
        return max(self.l3, 1)

    @property
    def lag_max(self) -> int:
        return max(self.l1, self.l2, self.l3, self.l4)

    @property
    def case(self) -> CaseTag:
        return select_case(self)

    @property
    def window(self) -> int:
        """Number of past states the recursion carries (grid size of the carry matrix)."""
        return max(self.l2_eff, self.l3_eff - 1)

    @property
    def uncorrelated(self) -> bool:
        return self.l1 == 0 and self.l2 == 0 and self.l3 == 0 and self.l4 == 0

    def as_dict(self) -> dict[str, int]:
        return {"l1": self.l1, "l2": self.l2, "l3": self.l3, "l4": self.l4}


def effective_lags(profile: CorrelationProfile) -> tuple[int, int]:
    """Return ``(max(l2, 1), max(l3, 1))``."""
    return profile.l2_eff, profile.l3_eff


def select_case(profile: CorrelationProfile) -> CaseTag:
    l2e, l3e = effective_lags(profile)
    if l3e > l2e + 1:
        return CaseTag.GREATER
    if l3e < l2e + 1:
        return CaseTag.LESS
    return CaseTag.EQUAL


def required_prior_window(profile: CorrelationProfile) -> int:
    """Number of leading states whose joint prior the recursion needs.

    Large enough that every conditioning lag of the first transition and
    measurement factors stays inside the window, and that the carried matrix
    fits.
    """
    return max(profile.lag_max + 1, profile.window)


@dataclass(frozen=True)
class FactorizationSignature:
    """Which conditioning arguments the two conditional densities take.

    Lags are relative to the newest conditioning index: the transition factor
    for ``x[k+1]`` conditions on states ``x[k - d]`` for each ``d`` in
    ``transition_state_lags`` (and measurements ``z[k - d]`` likewise); the
    measurement factor for ``z[k+1]`` conditions on states ``x[k+1 - d]``.
    """

    transition_state_lags: tuple[int, ...]
    transition_meas_lags: tuple[int, ...]
    measurement_state_lags: tuple[int, ...]
    measurement_meas_lags: tuple[int, ...]


def factorization_signature(profile: CorrelationProfile) -> FactorizationSignature:
    l2e, l3e = effective_lags(profile)
    return FactorizationSignature(
        transition_state_lags=tuple(range(l2e)),
        transition_meas_lags=tuple(range(profile.l4)),
        measurement_state_lags=tuple(range(l3e)),
        measurement_meas_lags=tuple(range(profile.l1)),
    )
