"""Discrete-event simulation loop and replication across seeds."""
from __future__ import annotations

import enum
import heapq
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from config import settings

from .fdrc import FdrcConfig, PrefetchMode
from .metrics import MetricsLedger
from .policies import PolicyKind, create_policy
from .scenario import Scenario, ScenarioConfig, generate
from .traffic import arrivals, burst_starts

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 10.0
HOUR = 3600.0
DAY = 86400.0


class EventKind(enum.IntEnum):
    # value doubles as the tie rank: prefetch runs before packets at the same instant
    PREFETCH_TICK = 0
    PACKET_ARRIVAL = 1


class Event(NamedTuple):
    time: float
    kind: EventKind
    flow: int


class EventQueue:
    """Min-heap of events ordered by (time, kind, flow)."""

    def __init__(self, events=()):
        self._heap = list(events)
        heapq.heapify(self._heap)

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)


def build_events(scenario: Scenario, sim_end: float, prefetch: bool = False) -> EventQueue:
    events = []
    for flow in scenario.flows:
        fid = int(flow.id)
        for t in arrivals(flow.traffic, 0.0, sim_end).tolist():
            events.append(Event(t, EventKind.PACKET_ARRIVAL, fid))
        if prefetch and flow.predictable:
            for t in burst_starts(flow.traffic, 0.0, sim_end).tolist():
                events.append(Event(t, EventKind.PREFETCH_TICK, fid))
    return EventQueue(events)


def run(
    scenario: Scenario,
    policy_kind,
    fdrc_config: FdrcConfig | None = None,
    sim_end: float = HOUR,
    window: float = DEFAULT_WINDOW,
    run_seed: int = 0,
    check_invariants: bool | None = None,
) -> MetricsLedger:
    """Simulate ``scenario`` under one policy and return its hit ledger."""
    if not isinstance(policy_kind, PolicyKind):
        policy_kind = PolicyKind.from_name(policy_kind)
    if check_invariants is None:
        check_invariants = settings.DEBUG_INVARIANTS
    fdrc_config = fdrc_config or FdrcConfig()
    prefetch = policy_kind is PolicyKind.FDRC and fdrc_config.prefetch

    policy = create_policy(policy_kind, scenario, fdrc_config)
    ledger = MetricsLedger(
        [len(f.path) for f in scenario.flows], sim_end, window, policy=policy_kind.value, run_seed=run_seed,
    )
    queue = build_events(scenario, sim_end, prefetch=prefetch)
    logger.debug(f'{policy_kind}: {len(queue)} events over {sim_end}s')

    while queue:
        ev = queue.pop()
        if ev.kind is EventKind.PREFETCH_TICK:
            policy.prefetch(ev.flow, ev.time)
        else:
            outcomes = policy.on_packet(ev.flow, ev.time)
            ledger.record(ev.flow, ev.time, sum(1 for o in outcomes if o.hit))
        if check_invariants:
            policy.assignment.check_capacity()
    return ledger


# ----------------------------------------------------------------------
# Replication
# ----------------------------------------------------------------------
@dataclass
class ReplicationSummary:
    policy: PolicyKind
    seeds: list[int]
    ratios: np.ndarray
    window_starts: np.ndarray
    series: np.ndarray  # runs x windows, cumulative ratio
    ledgers: list[MetricsLedger] = field(default_factory=list, repr=False)

    @property
    def replications(self) -> int:
        return len(self.seeds)

    @property
    def mean(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def sd(self) -> float:
        return float(np.std(self.ratios))

    @property
    def ci95(self) -> float:
        """Half-width of the 95% Student-t interval of the mean."""
        k = len(self.ratios)
        if k < 2:
            return 0.0
        return float(stats.t.ppf(0.975, k - 1) * stats.sem(self.ratios))

    @property
    def series_mean(self) -> np.ndarray:
        return self.series.mean(axis=0)

    @property
    def series_sd(self) -> np.ndarray:
        return self.series.std(axis=0)


def _run_seed(config: ScenarioConfig, policies, fdrc_config, window, literal, check_invariants):
    scenario = generate(config)
    results = {}
    for kind in policies:
        started = time.perf_counter()
        ledger = run(scenario, kind, fdrc_config, config.sim_end, window, config.seed, check_invariants)
        logger.info(
            f'seed={config.seed} {kind}: ratio={ledger.total_ratio_or_nan(literal):.4f} '
            f'({time.perf_counter() - started:.1f}s)'
        )
        results[kind] = ledger
    return results


def replicate(
    config: ScenarioConfig,
    policies,
    k: int = 20,
    prefetch: bool = False,
    window: float = DEFAULT_WINDOW,
    workers: int = 1,
    literal: bool = False,
    check_invariants: bool | None = None,
) -> dict[PolicyKind, ReplicationSummary]:
    """Run ``k`` scenarios seeded ``config.seed + 0 .. k-1`` under every policy.

    Each seed's scenario is shared by all policies. Results are merged in
    seed order, so a process pool gives the same output as a serial run.
    """
    if k < 1:
        raise ValueError(f'replications must be >= 1, got {k}')
    if isinstance(policies, (PolicyKind, str)):
        policies = [policies]
    policies = [p if isinstance(p, PolicyKind) else PolicyKind.from_name(p) for p in policies]
    config.validate()
    fdrc_config = FdrcConfig(
        config.t_max, PrefetchMode.ACTIVE_PREFETCH if prefetch else PrefetchMode.RETENTION_ONLY,
    )
    configs = [config.with_seed(config.seed + r) for r in range(k)]
    args = (policies, fdrc_config, window, literal, check_invariants)

    if workers > 1 and k > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_seed, c, *args) for c in configs]
            per_seed = [f.result() for f in futures]
    else:
        per_seed = [_run_seed(c, *args) for c in configs]

    summaries = {}
    for kind in policies:
        ledgers = [r[kind] for r in per_seed]
        summaries[kind] = ReplicationSummary(
            policy=kind,
            seeds=[c.seed for c in configs],
            ratios=np.array([lg.total_ratio_or_nan(literal) for lg in ledgers]),
            window_starts=ledgers[0].window_starts(),
            series=np.vstack([lg.cumulative_series() for lg in ledgers]),
            ledgers=ledgers,
        )
    return summaries
