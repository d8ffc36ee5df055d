"""Random generation of simulation instances.

Every draw comes from one ``numpy.random.Generator`` seeded from the config,
so ``generate`` is a pure function of its ``ScenarioConfig``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy import stats

from .models import Flow, FlowId, Path, Switch, SwitchId
from .traffic import PeriodicModel, RandomModel
from .utils import ConfigError, parse_float, parse_int, parse_range

logger = logging.getLogger(__name__)

# Lower bound of a burst's active duration, in seconds
MIN_ACTIVE_DURATION = 1.0

# Intra-burst packet rate of each periodic flow is drawn from this range (packets/s)
DEFAULT_PACKET_RATE_RANGE = (0.05, 0.5)
# Random flows draw their gaps from Uniform(0, random_horizon)
DEFAULT_RANDOM_HORIZON = 20.0
# Config value that ties the random-flow horizon to sim_end
HORIZON_SIM_END = 'sim_end'

RANGE_FIELDS = ('cache_size_range', 'path_len_range', 'period_range', 'packet_rate_range')
INT_RANGE_FIELDS = ('cache_size_range', 'path_len_range')
INT_FIELDS = ('n_flows', 'n_switches', 'seed')
# Keys accepted by from_mapping that expand into a field: packet_rate = R means packet_rate_range = R, R
SHORTHAND_KEYS = ('packet_rate',)


@dataclass(frozen=True)
class ScenarioConfig:
    n_flows: int = 1000
    n_switches: int = 50
    predictable_fraction: float = 0.4
    cache_size_range: tuple[int, int] = (15, 25)
    path_len_range: tuple[int, int] = (1, 10)
    period_range: tuple[float, float] = (2.0, 100.0)
    sim_end: float = 3600.0
    packet_rate_range: tuple[float, float] = DEFAULT_PACKET_RATE_RANGE
    # None ties the horizon to sim_end
    random_horizon: float | None = DEFAULT_RANDOM_HORIZON
    t_max: float = 100.0
    seed: int = 0

    def validate(self) -> 'ScenarioConfig':
        if self.n_flows < 0:
            raise ConfigError('n_flows', f'must be >= 0, got {self.n_flows}')
        if self.n_switches < 1:
            raise ConfigError('n_switches', f'must be >= 1, got {self.n_switches}')
        if not 0.0 <= self.predictable_fraction <= 1.0:
            raise ConfigError('predictable_fraction', f'must be in [0, 1], got {self.predictable_fraction}')
        for name in RANGE_FIELDS:
            low, high = getattr(self, name)
            if low > high:
                raise ConfigError(name, f'low {low} is greater than high {high}')
        if self.cache_size_range[0] < 1:
            raise ConfigError('cache_size_range', 'cache sizes must be >= 1')
        if self.path_len_range[0] < 1:
            raise ConfigError('path_len_range', 'paths need at least one switch')
        if self.path_len_range[1] > self.n_switches:
            raise ConfigError(
                'path_len_range',
                f'longest path {self.path_len_range[1]} exceeds n_switches {self.n_switches}',
            )
        if self.period_range[0] < MIN_ACTIVE_DURATION:
            raise ConfigError('period_range', f'periods must be >= {MIN_ACTIVE_DURATION}s')
        if self.sim_end <= 0:
            raise ConfigError('sim_end', f'must be positive, got {self.sim_end}')
        if self.packet_rate_range[0] <= 0:
            raise ConfigError('packet_rate_range', f'rates must be positive, got {self.packet_rate_range[0]}')
        if self.random_horizon is not None and self.random_horizon <= 0:
            raise ConfigError('random_horizon', f'must be positive, got {self.random_horizon}')
        if self.t_max <= 0:
            raise ConfigError('t_max', f'must be positive, got {self.t_max}')
        return self

    @property
    def horizon(self) -> float:
        """Upper bound of a random flow's inter-arrival gap."""
        return self.sim_end if self.random_horizon is None else self.random_horizon

    @classmethod
    def from_mapping(cls, values: dict, base: 'ScenarioConfig | None' = None) -> 'ScenarioConfig':
        """Apply string or typed overrides for known fields on top of ``base``."""
        base = base or cls()
        known = {f.name for f in fields(cls)}
        updates = {}
        if 'packet_rate' in values and 'packet_rate_range' not in values:
            rate = parse_float('packet_rate', values['packet_rate'])
            updates['packet_rate_range'] = (rate, rate)
        for key, val in values.items():
            if key not in known:
                continue
            if key in RANGE_FIELDS:
                cast = int if key in INT_RANGE_FIELDS else float
                updates[key] = parse_range(key, val, cast=cast)
            elif key in INT_FIELDS:
                updates[key] = parse_int(key, val)
            elif key == 'random_horizon':
                updates[key] = parse_horizon(key, val)
            else:
                updates[key] = parse_float(key, val)
        return replace(base, **updates)

    def with_seed(self, seed: int) -> 'ScenarioConfig':
        return replace(self, seed=seed)

    def as_dict(self) -> dict:
        return asdict(self)

    def config_items(self) -> list[tuple[str, str]]:
        """Every field as a (key, value) pair in config-file syntax."""
        items = []
        for key, val in self.as_dict().items():
            if isinstance(val, tuple):
                val = f'{val[0]}, {val[1]}'
            elif key == 'random_horizon' and val is None:
                val = HORIZON_SIM_END
            items.append((key, str(val)))
        return items


def parse_horizon(field: str, value) -> float | None:
    if value is None or str(value).strip().lower() == HORIZON_SIM_END:
        return None
    return parse_float(field, value)


@dataclass
class Scenario:
    switches: list[Switch]
    flows: list[Flow]

    @property
    def n_flows(self) -> int:
        return len(self.flows)

    @property
    def n_switches(self) -> int:
        return len(self.switches)

    def predictable_count(self) -> int:
        return sum(1 for f in self.flows if f.predictable)

    def validate(self) -> 'Scenario':
        for idx, switch in enumerate(self.switches):
            if switch.id != idx:
                raise ConfigError('switches', f'switch ids must be dense: position {idx} holds switch {switch.id}')
        for idx, flow in enumerate(self.flows):
            if flow.id != idx:
                raise ConfigError('flows', f'flow ids must be dense: position {idx} holds flow {flow.id}')
            for s in flow.path:
                if not 0 <= s < len(self.switches):
                    raise ConfigError('flows', f'flow {flow.id} references unknown switch {s}')
        return self


def truncated_normal_int(low: int, high: int, rng: np.random.Generator, size: int | None = None):
    """Integer draw(s) from Normal((low+high)/2, (high-low)/6) truncated to [low, high].

    Returns an ``int`` when ``size`` is None, else an integer array of that length.
    """
    if low > high:
        raise ConfigError('range', f'low {low} is greater than high {high}')
    if low == high or size == 0:
        return int(low) if size is None else np.full(size, int(low), dtype=np.int64)
    mean = (low + high) / 2
    sd = (high - low) / 6
    x = stats.truncnorm.rvs(
        (low - mean) / sd, (high - mean) / sd, loc=mean, scale=sd, size=size, random_state=rng,
    )
    values = np.clip(np.rint(x), low, high).astype(np.int64)
    return int(values) if size is None else values


def generate(config: ScenarioConfig) -> Scenario:
    config.validate()
    rng = np.random.default_rng(config.seed)

    capacities = truncated_normal_int(*config.cache_size_range, rng, size=config.n_switches)
    switches = [Switch(SwitchId(j), int(c)) for j, c in enumerate(capacities)]

    n_predictable = round(config.n_flows * config.predictable_fraction)
    predictable = np.zeros(config.n_flows, dtype=bool)
    if config.n_flows:
        predictable[rng.permutation(config.n_flows)[:n_predictable]] = True

    lengths = truncated_normal_int(*config.path_len_range, rng, size=config.n_flows)
    period_low, period_high = config.period_range
    rate_low, rate_high = config.packet_rate_range
    flows = []
    for i in range(config.n_flows):
        path = Path(tuple(SwitchId(int(s)) for s in rng.choice(config.n_switches, size=lengths[i], replace=False)))
        if predictable[i]:
            period = float(rng.uniform(period_low, period_high))
            active = float(rng.uniform(MIN_ACTIVE_DURATION, period))
            phase = float(rng.uniform(0.0, period))
            rate = float(rng.uniform(rate_low, rate_high))
            model = PeriodicModel(period, active, phase, rate)
        else:
            model = RandomModel(int(rng.integers(0, 2**63 - 1)), config.horizon)
        flows.append(Flow(FlowId(i), path, model, bool(predictable[i])))

    logger.debug(
        f'Generated scenario seed={config.seed}: {config.n_switches} switches, '
        f'{config.n_flows} flows ({n_predictable} predictable)'
    )
    return Scenario(switches, flows)
