"""Hit accounting.

Hits are counted per (packet, path switch) pair, so a flow's opportunities
are its packets times its path length. Ratios divide by opportunities to
stay in [0, 1]; ``literal=True`` divides by packets instead, which is the
unnormalized form where a flow can score up to its path length.
"""
from __future__ import annotations

import math

import numpy as np
import pandas as pd

from .models import RuleCacheError

LEDGER_COLUMNS = [
    'run_seed', 'policy', 'window_start_s', 'window_hits', 'window_opportunities', 'cumulative_ratio',
]


class UndefinedRatioError(RuleCacheError):
    pass


class MetricsLedger:
    def __init__(self, path_lengths, sim_end: float, window: float, policy: str = '', run_seed: int = 0):
        if window <= 0:
            raise ValueError(f'window must be positive, got {window}')
        self.path_lengths = np.asarray(path_lengths, dtype=np.int64)
        n = len(self.path_lengths)
        self.hits = np.zeros(n, dtype=np.int64)
        self.opportunities = np.zeros(n, dtype=np.int64)
        self.packets = np.zeros(n, dtype=np.int64)
        self.sim_end = sim_end
        self.window = window
        self.policy = policy
        self.run_seed = run_seed
        n_windows = max(math.ceil(sim_end / window), 1)
        self.window_hits = np.zeros(n_windows, dtype=np.int64)
        self.window_opportunities = np.zeros(n_windows, dtype=np.int64)

    @property
    def n_flows(self) -> int:
        return len(self.path_lengths)

    def record(self, flow: int, t: float, hits: int):
        """Book one packet of ``flow`` at ``t`` that hit at ``hits`` of its path switches."""
        opportunities = int(self.path_lengths[flow])
        if not 0 <= hits <= opportunities:
            raise ValueError(f'flow {flow}: {hits} hits on a path of {opportunities} switches')
        self.packets[flow] += 1
        self.opportunities[flow] += opportunities
        self.hits[flow] += hits
        w = min(int(t // self.window), len(self.window_hits) - 1)
        self.window_hits[w] += hits
        self.window_opportunities[w] += opportunities

    # ------------------------------------------------------------------
    # Totals
    # ------------------------------------------------------------------
    @property
    def total_hits(self) -> int:
        return int(self.hits.sum())

    @property
    def total_opportunities(self) -> int:
        return int(self.opportunities.sum())

    @property
    def total_packets(self) -> int:
        return int(self.packets.sum())

    @property
    def total_misses(self) -> int:
        return self.total_opportunities - self.total_hits

    def total_ratio_or_nan(self, literal: bool = False) -> float:
        try:
            return hit_ratio_total(self, literal=literal)
        except UndefinedRatioError:
            return math.nan

    # ------------------------------------------------------------------
    # Series
    # ------------------------------------------------------------------
    def window_starts(self) -> np.ndarray:
        return np.arange(len(self.window_hits)) * self.window

    def cumulative_series(self) -> np.ndarray:
        """Cumulative hit ratio at the end of every window; NaN until the first opportunity."""
        hits = np.cumsum(self.window_hits)
        opps = np.cumsum(self.window_opportunities)
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(opps > 0, hits / np.maximum(opps, 1), np.nan)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'run_seed': self.run_seed,
            'policy': self.policy,
            'window_start_s': self.window_starts(),
            'window_hits': self.window_hits,
            'window_opportunities': self.window_opportunities,
            'cumulative_ratio': self.cumulative_series(),
        }, columns=LEDGER_COLUMNS)

    def same_counts(self, other: 'MetricsLedger') -> bool:
        return (
            np.array_equal(self.hits, other.hits)
            and np.array_equal(self.opportunities, other.opportunities)
            and np.array_equal(self.packets, other.packets)
            and np.array_equal(self.window_hits, other.window_hits)
            and np.array_equal(self.window_opportunities, other.window_opportunities)
        )


def hit_ratio_flow(ledger: MetricsLedger, flow: int, literal: bool = False) -> float:
    denominator = ledger.packets[flow] if literal else ledger.opportunities[flow]
    if denominator == 0:
        raise UndefinedRatioError(f'flow {flow} has no traffic yet')
    return float(ledger.hits[flow] / denominator)


def hit_ratio_total(ledger: MetricsLedger, literal: bool = False) -> float:
    denominator = ledger.total_packets if literal else ledger.total_opportunities
    if denominator == 0:
        raise UndefinedRatioError('no traffic was recorded')
    return ledger.total_hits / denominator
