"""Domain types shared by the simulator: flows, switches, rules and the
per-switch caches that together form the flow x switch caching matrix.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, NewType, Optional

import numpy as np

from .traffic import PeriodicModel, RandomModel, TrafficModel

FlowId = NewType('FlowId', int)
SwitchId = NewType('SwitchId', int)


class RuleCacheError(Exception):
    """Base class for every error raised by the simulator."""


class PreconditionError(RuleCacheError):
    pass


class CapacityError(RuleCacheError):
    pass


@dataclass(frozen=True)
class Rule:
    # One exact-match rule per flow; the rule is identified by its flow
    flow: FlowId


@dataclass(frozen=True)
class Switch:
    id: SwitchId
    capacity: int

    def __post_init__(self):
        if self.capacity < 1:
            raise PreconditionError(f'switch {self.id}: capacity must be >= 1, got {self.capacity}')


@dataclass(frozen=True)
class Path:
    switches: tuple[SwitchId, ...]

    def __post_init__(self):
        if not self.switches:
            raise PreconditionError('path must contain at least one switch')
        if len(set(self.switches)) != len(self.switches):
            raise PreconditionError(f'path has duplicate switches: {list(self.switches)}')

    def __len__(self):
        return len(self.switches)

    def __iter__(self) -> Iterator[SwitchId]:
        return iter(self.switches)


@dataclass(frozen=True)
class Flow:
    id: FlowId
    path: Path
    traffic: TrafficModel
    predictable: bool = field(default=False)

    def __post_init__(self):
        if self.predictable != isinstance(self.traffic, PeriodicModel):
            raise PreconditionError(
                f'flow {self.id}: predictable={self.predictable} does not match '
                f'{type(self.traffic).__name__}'
            )
        if not isinstance(self.traffic, (PeriodicModel, RandomModel)):
            raise PreconditionError(f'flow {self.id}: unknown traffic model {self.traffic!r}')

    @property
    def rule(self) -> Rule:
        return Rule(self.id)

    @classmethod
    def periodic(cls, id: int, path, model: PeriodicModel) -> 'Flow':
        return cls(FlowId(id), Path(tuple(SwitchId(s) for s in path)), model, True)

    @classmethod
    def random(cls, id: int, path, model: RandomModel) -> 'Flow':
        return cls(FlowId(id), Path(tuple(SwitchId(s) for s in path)), model, False)


class SwitchCache:
    """Bounded rule store of one switch.

    Entries keep installation order, which is also the order FIFO evicts in.
    LRU moves an entry to the back on every hit via ``touch``.
    """

    def __init__(self, switch: Switch):
        self.switch = switch
        self._entries: OrderedDict[FlowId, float] = OrderedDict()  # flow -> install time

    @property
    def capacity(self) -> int:
        return self.switch.capacity

    def __contains__(self, flow) -> bool:
        return flow in self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[FlowId]:
        return iter(self._entries)

    @property
    def is_full(self) -> bool:
        return len(self._entries) >= self.switch.capacity

    def installed_at(self, flow: FlowId) -> float:
        return self._entries[flow]

    def items(self) -> Iterator[tuple[FlowId, float]]:
        """(flow, install time) pairs from the oldest install or least recent touch."""
        return iter(self._entries.items())

    def install(self, flow: FlowId, t: float):
        if flow in self._entries:
            raise PreconditionError(f'rule {flow} already cached at switch {self.switch.id}')
        if self.is_full:
            raise CapacityError(
                f'switch {self.switch.id} is full ({self.switch.capacity} rules); evict before installing {flow}'
            )
        self._entries[flow] = t

    def evict(self, flow: FlowId):
        try:
            del self._entries[flow]
        except KeyError:
            raise PreconditionError(f'rule {flow} is not cached at switch {self.switch.id}') from None

    def touch(self, flow: FlowId):
        self._entries.move_to_end(flow)

    def oldest(self) -> Optional[FlowId]:
        return next(iter(self._entries), None)


class CacheAssignment:
    """Which flow rules sit in which switch cache, kept per switch."""

    def __init__(self, switches: list[Switch], n_flows: int):
        self.n_flows = n_flows
        self.caches = [SwitchCache(s) for s in switches]
        for idx, s in enumerate(switches):
            if s.id != idx:
                raise PreconditionError(f'switch ids must be dense: position {idx} holds switch {s.id}')

    def _check_flow(self, flow):
        if not 0 <= flow < self.n_flows:
            raise PreconditionError(f'unknown flow id {flow} (scenario has {self.n_flows} flows)')

    def cache(self, switch) -> SwitchCache:
        if not 0 <= switch < len(self.caches):
            raise PreconditionError(f'unknown switch id {switch} (scenario has {len(self.caches)} switches)')
        return self.caches[switch]

    def is_cached(self, flow, switch) -> bool:
        self._check_flow(flow)
        return flow in self.cache(switch)

    def cached_count(self, switch) -> int:
        return len(self.cache(switch))

    def install(self, flow, switch, t: float = 0.0):
        self._check_flow(flow)
        self.cache(switch).install(FlowId(flow), t)

    def evict(self, flow, switch):
        self._check_flow(flow)
        self.cache(switch).evict(FlowId(flow))

    def check_capacity(self):
        for c in self.caches:
            if len(c) > c.capacity:
                raise CapacityError(f'switch {c.switch.id} holds {len(c)} rules, capacity {c.capacity}')

    def as_matrix(self) -> np.ndarray:
        """Dense boolean view X[i, j] (flows x switches)."""
        x = np.zeros((self.n_flows, len(self.caches)), dtype=bool)
        for j, c in enumerate(self.caches):
            for i in c:
                x[i, j] = True
        return x

    def snapshot(self) -> list[frozenset]:
        return [frozenset(c) for c in self.caches]
