"""Flow-driven rule caching.

Every flow owns one timer estimating the time to its next packet. A miss
installs the rule on the whole forwarding path at once, and a full switch
makes room by evicting the cached rule whose timer is largest.

Predictable (periodic) flows read their timer straight off the known
schedule. Unpredictable flows use an interval estimator: a packet restarts
the timer with the last observed inter-arrival gap; an expiry restarts it
with twice the gap (capped at ``t_max``); expiring at ``t_max`` freezes the
timer at ``t_max``, marking the flow as dormant.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

from .models import Flow, FlowId, RuleCacheError, SwitchCache, SwitchId
from .policies import CachePolicy, NO_CHANGE, PolicyDecision, PolicyKind, SwitchOutcome
from .traffic import PeriodicModel, next_arrival

logger = logging.getLogger(__name__)

DEFAULT_T_MAX = 100.0


class TimerStateError(RuleCacheError):
    pass


class TimerKind(enum.Enum):
    PREDICTABLE = 'predictable'
    UNPREDICTABLE = 'unpredictable'


class PrefetchMode(enum.Enum):
    RETENTION_ONLY = 'retention-only'
    ACTIVE_PREFETCH = 'active-prefetch'


@dataclass(frozen=True)
class FdrcConfig:
    t_max: float = DEFAULT_T_MAX
    prefetch_mode: PrefetchMode = PrefetchMode.RETENTION_ONLY

    def __post_init__(self):
        if self.t_max <= 0:
            raise TimerStateError(f't_max must be positive, got {self.t_max}')

    @property
    def prefetch(self) -> bool:
        return self.prefetch_mode is PrefetchMode.ACTIVE_PREFETCH


@dataclass(frozen=True)
class TimerState:
    flow: FlowId
    kind: TimerKind
    t_max: float
    last_arrival: Optional[float] = None
    delta_t: float = 0.0
    deadline: float = math.inf
    frozen: bool = False
    schedule: Optional[PeriodicModel] = None

    @classmethod
    def initial(cls, flow: Flow, t_max: float) -> 'TimerState':
        if flow.predictable:
            return cls(flow.id, TimerKind.PREDICTABLE, t_max, schedule=flow.traffic)
        # never seen a packet: presumed dormant until the first one arrives
        return cls(flow.id, TimerKind.UNPREDICTABLE, t_max, delta_t=t_max, frozen=True)


def on_packet(state: TimerState, t: float) -> TimerState:
    if state.last_arrival is not None and t < state.last_arrival:
        raise TimerStateError(f'flow {state.flow}: packet at {t} precedes last arrival {state.last_arrival}')
    if state.kind is TimerKind.PREDICTABLE:
        return replace(state, last_arrival=t)
    state = settle(state, t)
    if state.last_arrival is None:
        delta = state.t_max
    else:
        interval = t - state.last_arrival
        # a same-instant packet carries no interval information
        delta = min(interval, state.t_max) if interval > 0 else state.delta_t
    return replace(state, last_arrival=t, delta_t=delta, deadline=t + delta, frozen=False)


def on_expiry(state: TimerState, expiry: float) -> TimerState:
    if state.kind is TimerKind.PREDICTABLE:
        raise TimerStateError(f'flow {state.flow}: predictable timers never expire')
    if state.frozen:
        raise TimerStateError(f'flow {state.flow}: timer is frozen')
    if expiry != state.deadline:
        raise TimerStateError(f'flow {state.flow}: expiry at {expiry} but deadline is {state.deadline}')
    if state.delta_t >= state.t_max:
        return replace(state, frozen=True, delta_t=state.t_max)
    delta = min(2 * state.delta_t, state.t_max)
    return replace(state, delta_t=delta, deadline=expiry + delta)


def settle(state: TimerState, t: float) -> TimerState:
    """Apply every expiry due at or before ``t``."""
    if state.kind is TimerKind.PREDICTABLE:
        return state
    while not state.frozen and state.deadline <= t:
        state = on_expiry(state, state.deadline)
    return state


def in_burst(state: TimerState, t: float) -> bool:
    """True while a predictable flow still has packets due in its current burst."""
    if state.kind is not TimerKind.PREDICTABLE:
        return False
    model = state.schedule
    n = model.burst_index(t)
    return n >= 0 and next_arrival(model, t) < model.burst_start(n) + model.active_duration


def timer_value(state: TimerState, t: float) -> float:
    """Estimated time from ``t`` to the flow's next packet, within [0, t_max]."""
    if state.kind is TimerKind.PREDICTABLE:
        return min(next_arrival(state.schedule, t) - t, state.t_max)
    state = settle(state, t)
    if state.frozen:
        return state.t_max
    return min(max(state.deadline - t, 0.0), state.t_max)


class FdrcPolicy(CachePolicy):
    kind = PolicyKind.FDRC

    def __init__(self, scenario, config: FdrcConfig | None = None):
        super().__init__(scenario)
        self.config = config or FdrcConfig()
        self.timers = [TimerState.initial(f, self.config.t_max) for f in scenario.flows]
        # absolute time each timer next reaches zero; valid while it lies ahead of the clock
        self._due = [-math.inf] * len(self.timers)

    # ------------------------------------------------------------------
    # Timers
    # ------------------------------------------------------------------
    def _refresh_due(self, flow: FlowId, t: float) -> float:
        state = settle(self.timers[flow], t)
        self.timers[flow] = state
        if state.kind is TimerKind.PREDICTABLE:
            due = next_arrival(state.schedule, t)
        elif state.frozen:
            due = math.inf
        else:
            due = state.deadline
        self._due[flow] = due
        return due

    def timer(self, flow: FlowId, t: float) -> float:
        due = self._due[flow]
        if due <= t:
            due = self._refresh_due(flow, t)
        return min(due - t, self.config.t_max)

    def _update_timer(self, flow: FlowId, t: float):
        self.timers[flow] = on_packet(self.timers[flow], t)
        self._due[flow] = -math.inf

    # ------------------------------------------------------------------
    # Replacement
    # ------------------------------------------------------------------
    def prefetch_value(self, flow: FlowId, t: float) -> float:
        # a flow in the middle of its burst counts as due now
        if in_burst(self.timers[flow], t):
            return 0.0
        return self.timer(flow, t)

    def victim(self, cache: SwitchCache, t: float, value=None) -> tuple[FlowId, float]:
        """Cached rule with the largest timer; ties go to the older install, then the lower flow id."""
        value = value or self.timer
        best, best_key = None, None
        for k, installed in cache.items():
            key = (value(k, t), -installed, -k)
            if best_key is None or key > best_key:
                best, best_key = k, key
        return best, best_key[0]

    def on_packet(self, flow: FlowId, t: float) -> list[SwitchOutcome]:
        self._advance(t)
        caches = self.assignment.caches
        outcomes = []
        for s in self.flows[flow].path.switches:
            cache = caches[s]
            if flow in cache:
                outcomes.append(SwitchOutcome(s, True, NO_CHANGE))
                continue
            evicted = None
            if cache.is_full:
                evicted, _ = self.victim(cache, t)
                cache.evict(evicted)
            cache.install(flow, t)
            outcomes.append(SwitchOutcome(s, False, PolicyDecision(evicted, True)))
        self._update_timer(flow, t)
        return outcomes

    # ------------------------------------------------------------------
    # Prefetching of predictable flows
    # ------------------------------------------------------------------
    def prefetch(self, flow: FlowId, t: float) -> list[tuple[SwitchId, PolicyDecision]]:
        """Install a predictable flow's rule along its path ahead of a burst starting at ``t``."""
        if not self.config.prefetch or not self.flows[flow].predictable:
            return []
        self._advance(t)
        decisions = []
        # the incoming flow has a packet due right now
        incoming = 0.0
        for s in self.flows[flow].path.switches:
            cache = self.assignment.caches[s]
            if flow in cache:
                continue
            evicted = None
            if cache.is_full:
                evicted, value = self.victim(cache, t, self.prefetch_value)
                if value <= incoming:
                    logger.debug(f'prefetch of flow {flow} at t={t}: switch {s} busy with flow {evicted}')
                    continue
                cache.evict(evicted)
            cache.install(flow, t)
            decisions.append((s, PolicyDecision(evicted, True)))
        return decisions
