"""Sensor-count sweeps over the averaged position bound.

A model family maps a sensor count to a model; by default a count of ``m``
means ``m`` independent replicas of the single-sensor measurement, each with
its own noise process, so measurement information scales linearly in ``m``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .blocks import ExpectationEstimator
from .errors import InvariantViolationError
from .models import SystemModel, replicate_sensors
from .recursion import run

DEFAULT_AVERAGE_WINDOW = 40


@dataclass(frozen=True)
class SweepPoint:
    sensors: int
    avg_bound: float
    final_bound: float


@dataclass(frozen=True)
class SensorSweepResult:
    points: tuple[SweepPoint, ...]
    component: int
    horizon: int

    def avg_bounds(self) -> np.ndarray:
        return np.array([p.avg_bound for p in self.points])

    def counts(self) -> np.ndarray:
        return np.array([p.sensors for p in self.points])


def replicated_family(model: SystemModel) -> Callable[[int], SystemModel]:
    return lambda m: replicate_sensors(model, m)


def sweep(model_family: Callable[[int], SystemModel], m_max: int,
          horizon: int = DEFAULT_AVERAGE_WINDOW, component: int = 0,
          est: ExpectationEstimator | None = None) -> SensorSweepResult:
    """Average root bound of one state component versus sensor count.

    The average runs over all recursion steps of the horizon.  The averaged
    bound must decrease strictly with the sensor count (information adds
    across independent sensors); a violation indicates a broken family.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    est = est or ExpectationEstimator()

    def one(m: int) -> SweepPoint:
        model = model_family(m)
        if component >= model.state_dim:
            raise ValueError(
                f"component {component} out of range for state dim {model.state_dim}"
            )
        trace = run(model, est, horizon)
        series = trace.component_bound_sqrt(component)
        return SweepPoint(sensors=m, avg_bound=float(series.mean()),
                          final_bound=float(series[-1]))

    counts = list(range(1, m_max + 1))
    if est.workers > 1 and len(counts) > 1:
        with ThreadPoolExecutor(max_workers=est.workers) as pool:
            points = list(pool.map(one, counts))
    else:
        points = [one(m) for m in counts]

    for prev, nxt in zip(points, points[1:]):
        if not nxt.avg_bound < prev.avg_bound:
            raise InvariantViolationError(
                f"average bound failed to decrease from {prev.sensors} to "
                f"{nxt.sensors} sensors ({prev.avg_bound!r} -> {nxt.avg_bound!r})"
            )
    return SensorSweepResult(points=tuple(points), component=component, horizon=horizon)


def min_sensors(result: SensorSweepResult, target: float) -> int | None:
    """Smallest sensor count whose average bound meets ``target``; None if none does."""
    for point in result.points:
        if point.avg_bound <= target:
            return point.sensors
    return None
