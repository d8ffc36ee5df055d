"""Traffic models and packet-arrival generation.

Times are plain floats in seconds from the simulation origin. Periodic
(predictable) flows send packets on a fixed grid inside each active burst;
random (unpredictable) flows draw inter-arrival gaps from Uniform(0, horizon).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

TimePoint = float
Duration = float

DEFAULT_PACKET_RATE = 1.0


class TrafficModelError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodicModel:
    period: Duration
    active_duration: Duration
    phase: Duration = 0.0
    packet_rate: float = DEFAULT_PACKET_RATE

    def __post_init__(self):
        if not 0 < self.active_duration <= self.period:
            raise TrafficModelError(
                f'active_duration must be in (0, period]: {self.active_duration} vs period {self.period}'
            )
        if not 0 <= self.phase < self.period:
            raise TrafficModelError(f'phase must be in [0, period): {self.phase}')
        if self.packet_rate <= 0:
            raise TrafficModelError(f'packet_rate must be positive: {self.packet_rate}')

    @property
    def packets_per_burst(self) -> int:
        # packets at k / rate for every k with k / rate < t_d
        return math.ceil(self.active_duration * self.packet_rate)

    def burst_start(self, n: int) -> TimePoint:
        return self.phase + n * self.period

    def burst_index(self, t: TimePoint) -> int:
        """Index of the cycle containing t (-1 before the first burst)."""
        if t < self.phase:
            return -1
        n = math.floor((t - self.phase) / self.period)
        # division can land one cycle off right at a burst boundary
        if self.burst_start(n + 1) <= t:
            n += 1
        elif n > 0 and self.burst_start(n) > t:
            n -= 1
        return n


@dataclass(frozen=True)
class RandomModel:
    seed: int
    horizon: Duration

    def __post_init__(self):
        if self.horizon <= 0:
            raise TrafficModelError(f'horizon must be positive: {self.horizon}')


TrafficModel = Union[PeriodicModel, RandomModel]


def _periodic_arrivals(model: PeriodicModel, start: TimePoint, until: TimePoint) -> np.ndarray:
    if until <= start:
        return np.empty(0)
    first = max(model.burst_index(start), 0)
    last = model.burst_index(until)
    if last < first:
        return np.empty(0)
    starts = model.phase + np.arange(first, last + 1) * model.period
    offsets = np.arange(model.packets_per_burst) / model.packet_rate
    times = (starts[:, None] + offsets[None, :]).ravel()
    return times[(times >= start) & (times < until)]


def _random_arrivals(model: RandomModel, start: TimePoint, until: TimePoint) -> np.ndarray:
    # Always replay from the origin so any window of the same model agrees
    rng = np.random.default_rng(model.seed)
    times = []
    now = 0.0
    while True:
        gap = rng.uniform(0.0, model.horizon)
        if gap <= 0.0:
            continue
        now += gap
        if now >= until:
            break
        if now >= start:
            times.append(now)
    return np.asarray(times, dtype=float)


def arrivals(model: TrafficModel, start: TimePoint, until: TimePoint) -> np.ndarray:
    """Strictly increasing packet times of ``model`` in [start, until)."""
    if start > until:
        raise TrafficModelError(f'window start {start} is after its end {until}')
    if isinstance(model, PeriodicModel):
        return _periodic_arrivals(model, start, until)
    if isinstance(model, RandomModel):
        return _random_arrivals(model, start, until)
    raise TrafficModelError(f'unknown traffic model {model!r}')


def next_arrival(model: PeriodicModel, t: TimePoint) -> TimePoint:
    """Smallest scheduled packet time strictly greater than t."""
    if not isinstance(model, PeriodicModel):
        raise TrafficModelError('next_arrival is only defined for periodic models')
    n = model.burst_index(t)
    if n < 0:
        return model.phase
    start = model.burst_start(n)
    k = math.floor((t - start) * model.packet_rate) + 1
    candidate = start + k / model.packet_rate
    if candidate <= t:
        k += 1
        candidate = start + k / model.packet_rate
    if k < model.packets_per_burst:
        return candidate
    return model.burst_start(n + 1)


def burst_starts(model: PeriodicModel, start: TimePoint, until: TimePoint) -> np.ndarray:
    """Burst start instants in [start, until)."""
    first = max(model.burst_index(start), 0)
    last = model.burst_index(until)
    if last < first:
        return np.empty(0)
    starts = model.phase + np.arange(first, last + 1) * model.period
    return starts[(starts >= start) & (starts < until)]
