"""Replacement-policy abstraction and the packet-driven FIFO / LRU baselines."""
from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .models import CacheAssignment, FlowId, PreconditionError, RuleCacheError, SwitchCache, SwitchId


class OrderingError(RuleCacheError):
    pass


class PolicyKind(enum.Enum):
    FIFO = 'fifo'
    LRU = 'lru'
    FDRC = 'fdrc'

    @classmethod
    def from_name(cls, name: str) -> 'PolicyKind':
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            choices = ', '.join(k.value for k in cls)
            raise ValueError(f'Unknown replacement policy: {name!r} (choose from {choices})') from None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PolicyDecision:
    evicted: Optional[FlowId] = None
    installed: bool = False

    def __post_init__(self):
        if self.evicted is not None and not self.installed:
            raise PreconditionError('an eviction is only recorded alongside an installation')


NO_CHANGE = PolicyDecision()


class SwitchOutcome(NamedTuple):
    switch: SwitchId
    hit: bool
    decision: PolicyDecision


class CachePolicy(ABC):
    """Owns the caches of every switch for one simulation run."""

    kind: PolicyKind

    def __init__(self, scenario):
        self.scenario = scenario
        self.flows = scenario.flows
        self.assignment = CacheAssignment(scenario.switches, scenario.n_flows)
        self.clock = 0.0

    def _advance(self, t: float):
        if t < self.clock:
            raise OrderingError(f'{self.kind}: event at t={t} arrived after t={self.clock}')
        self.clock = t

    @abstractmethod
    def on_packet(self, flow: FlowId, t: float) -> list[SwitchOutcome]:
        """Deliver one packet of ``flow`` to every switch on its path."""

    def prefetch(self, flow: FlowId, t: float) -> list[tuple[SwitchId, PolicyDecision]]:
        return []


class PacketDrivenPolicy(CachePolicy):
    """Each switch decides on its own: a miss installs the rule at that switch only."""

    @abstractmethod
    def _victim(self, cache: SwitchCache) -> FlowId:
        ...

    def _on_hit(self, cache: SwitchCache, flow: FlowId):
        pass

    def _access(self, cache: SwitchCache, flow: FlowId, t: float) -> tuple[bool, PolicyDecision]:
        if flow in cache:
            self._on_hit(cache, flow)
            return True, NO_CHANGE
        evicted = None
        if cache.is_full:
            evicted = self._victim(cache)
            cache.evict(evicted)
        cache.install(flow, t)
        return False, PolicyDecision(evicted, True)

    def on_packet_at_switch(self, switch: SwitchId, flow: FlowId, t: float) -> tuple[bool, PolicyDecision]:
        if switch not in self.flows[flow].path.switches:
            raise PreconditionError(f'switch {switch} is not on the path of flow {flow}')
        self._advance(t)
        return self._access(self.assignment.cache(switch), flow, t)

    def on_packet(self, flow: FlowId, t: float) -> list[SwitchOutcome]:
        self._advance(t)
        caches = self.assignment.caches
        outcomes = []
        for s in self.flows[flow].path.switches:
            hit, decision = self._access(caches[s], flow, t)
            outcomes.append(SwitchOutcome(s, hit, decision))
        return outcomes


class FifoPolicy(PacketDrivenPolicy):
    kind = PolicyKind.FIFO

    def _victim(self, cache: SwitchCache) -> FlowId:
        return cache.oldest()


class LruPolicy(PacketDrivenPolicy):
    kind = PolicyKind.LRU

    def _on_hit(self, cache: SwitchCache, flow: FlowId):
        cache.touch(flow)

    def _victim(self, cache: SwitchCache) -> FlowId:
        # least recently used sits at the front
        return cache.oldest()


def create_policy(kind, scenario, fdrc_config=None) -> CachePolicy:
    """Factory for a policy instance bound to ``scenario``.

    Raises:
        ValueError: If ``kind`` names no known policy
    """
    if not isinstance(kind, PolicyKind):
        kind = PolicyKind.from_name(kind)
    if kind is PolicyKind.FIFO:
        return FifoPolicy(scenario)
    if kind is PolicyKind.LRU:
        return LruPolicy(scenario)
    from .fdrc import FdrcConfig, FdrcPolicy
    return FdrcPolicy(scenario, fdrc_config or FdrcConfig())
