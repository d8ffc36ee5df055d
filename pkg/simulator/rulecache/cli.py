"""Command-line front end: config resolution, experiment recipes and CSV output."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from config import settings

from .engine import DAY, DEFAULT_WINDOW, HOUR, ReplicationSummary, replicate, run
from .fdrc import FdrcConfig, PrefetchMode
from .metrics import LEDGER_COLUMNS
from .models import RuleCacheError
from .pdf import build_report
from .policies import PolicyKind
from .scenario import SHORTHAND_KEYS, ScenarioConfig, generate
from .serializers import ScenarioFormatError, dump_scenario, load_scenario
from .utils import (
    ConfigError,
    parse_bool,
    parse_float,
    parse_int,
    parse_list,
    parse_range,
    read_config_file,
    write_table,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

EXPERIMENTS = ('hour', 'day', 'cache-size-sweep', 'predictable-sweep', 'custom')
DEFAULT_POLICIES = (PolicyKind.FDRC, PolicyKind.LRU, PolicyKind.FIFO)
CACHE_SIZE_RANGES = [(5, 15), (15, 25), (25, 35), (35, 45), (45, 55)]
DEFAULT_FRACTIONS = [0.0, 0.2, 0.4, 0.6, 0.8]

SUMMARY_COLUMNS = ['policy', 'replications', 'mean_ratio', 'sd_ratio', 'ci95']
SERIES_COLUMNS = ['window_start_s', 'policy', 'mean_cumulative_ratio', 'sd_cumulative_ratio']
CACHE_SWEEP_COLUMNS = ['range', 'policy', 'mean_ratio', 'sd_ratio']
PREDICTABLE_SWEEP_COLUMNS = ['fraction', 'policy', 'mean_ratio', 'sd_ratio']

# Config-file keys that belong to the experiment rather than the scenario
EXPERIMENT_KEYS = ('prefetch', 'window', 'replications', 'per_packet_ratio', 'policies', 'workers')

# Alternate spellings accepted in config files
KEY_ALIASES = {'literal_eq6': 'per_packet_ratio'}


@dataclass
class ExperimentSpec:
    name: str
    base_config: ScenarioConfig
    policies: list[PolicyKind] = field(default_factory=lambda: list(DEFAULT_POLICIES))
    sweep: list = field(default_factory=list)
    window: float = DEFAULT_WINDOW
    replications: int = settings.REPLICATIONS
    workers: int = settings.WORKERS
    prefetch: bool = False
    per_packet_ratio: bool = False

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError('experiment', f'unknown experiment {self.name!r}')
        if self.name.endswith('-sweep') and not self.sweep:
            raise ConfigError('sweep', f'{self.name} needs at least one sweep value')
        if self.window <= 0:
            raise ConfigError('window', f'must be positive, got {self.window}')
        if self.replications < 1:
            raise ConfigError('replications', f'must be >= 1, got {self.replications}')
        if not self.policies:
            raise ConfigError('policies', 'at least one policy is required')

    @property
    def fdrc(self) -> FdrcConfig:
        mode = PrefetchMode.ACTIVE_PREFETCH if self.prefetch else PrefetchMode.RETENTION_ONLY
        return FdrcConfig(self.base_config.t_max, mode)

    def resolved_lines(self) -> list[str]:
        """The fully-resolved settings in config-file syntax."""
        cfg = self.base_config
        lines = [f'# experiment = {self.name}']
        lines += [f'{key} = {val}' for key, val in cfg.config_items()]
        lines += [
            f'policies = {", ".join(p.value for p in self.policies)}',
            f'prefetch = {"on" if self.prefetch else "off"}',
            f'window = {self.window}',
            f'replications = {self.replications}',
            f'workers = {self.workers}',
            f'per_packet_ratio = {"on" if self.per_packet_ratio else "off"}',
        ]
        if self.sweep:
            lines.append(f'# sweep = {self.sweep}')
        return lines


# ----------------------------------------------------------------------
# Argument parsing
# ----------------------------------------------------------------------
def _add_common(p: argparse.ArgumentParser):
    p.add_argument('--config', help='flat key = value experiment file')
    p.add_argument('--policy', action='append', help='fifo | lru | fdrc (repeatable)')
    p.add_argument('--seed', type=int)
    p.add_argument('--replications', type=int)
    p.add_argument('--sim-end', type=float)
    p.add_argument('--flows', type=int)
    p.add_argument('--switches', type=int)
    p.add_argument('--t-max', type=float)
    p.add_argument('--packet-rate', type=float, help='one intra-burst rate for every periodic flow')
    p.add_argument('--packet-rate-range', help='low,high intra-burst rates of periodic flows')
    p.add_argument('--random-horizon', help='upper bound of random-flow gaps in seconds, or sim_end')
    p.add_argument('--predictable-fraction', type=float)
    p.add_argument('--prefetch', choices=('on', 'off'))
    p.add_argument('--window', type=float)
    p.add_argument('--workers', type=int)
    p.add_argument('--out-dir', type=Path)
    p.add_argument('--per-packet-ratio', '--literal-eq6', dest='per_packet_ratio', action='store_true', default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='simulate', description='TCAM rule caching simulator')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help='replicated run of every requested policy')
    _add_common(p)
    p.add_argument('--experiment', choices=('hour', 'day', 'custom'), default='custom')

    p = sub.add_parser('sweep-cache-size', help='hit ratio per switch cache-size range')
    _add_common(p)
    p.add_argument('--range', dest='ranges', action='append', help='low,high (repeatable)')

    p = sub.add_parser('sweep-predictable', help='hit ratio per predictable-flow fraction')
    _add_common(p)
    p.add_argument('--fraction', dest='fractions', action='append', type=float)

    p = sub.add_parser('fixture', help='replay a dumped scenario file')
    _add_common(p)
    p.add_argument('scenario', type=Path)

    p = sub.add_parser('generate', help='write a generated scenario file')
    _add_common(p)
    p.add_argument('--output', type=Path)

    p = sub.add_parser('report', help='render the CSVs of an output directory into report.pdf')
    p.add_argument('--out-dir', type=Path)
    return parser


def _experiment_name(args) -> str:
    if args.command == 'run':
        return args.experiment
    if args.command == 'sweep-cache-size':
        return 'cache-size-sweep'
    if args.command == 'sweep-predictable':
        return 'predictable-sweep'
    return 'custom'


def resolve_experiment(args) -> ExperimentSpec:
    """Defaults, then the config file, then command-line flags."""
    name = _experiment_name(args)
    file_values = read_config_file(args.config) if getattr(args, 'config', None) else {}
    file_values = {KEY_ALIASES.get(k, k): v for k, v in file_values.items()}
    known = set(ScenarioConfig.__dataclass_fields__) | set(SHORTHAND_KEYS) | set(EXPERIMENT_KEYS)
    for key in file_values:
        if key not in known:
            raise ConfigError(key, 'unknown config key')

    base = ScenarioConfig()
    if name == 'hour':
        base = replace(base, sim_end=HOUR)
    elif name == 'day':
        base = replace(base, sim_end=DAY)
    base = ScenarioConfig.from_mapping(file_values, base)

    flag_overrides = {
        'seed': args.seed,
        'sim_end': args.sim_end,
        'n_flows': args.flows,
        'n_switches': args.switches,
        't_max': args.t_max,
        'packet_rate': args.packet_rate,
        'packet_rate_range': args.packet_rate_range,
        'random_horizon': args.random_horizon,
        'predictable_fraction': args.predictable_fraction,
    }
    base = ScenarioConfig.from_mapping({k: v for k, v in flag_overrides.items() if v is not None}, base)

    policy_names = args.policy or (parse_list(file_values['policies']) if 'policies' in file_values else None)
    try:
        policies = [PolicyKind.from_name(p) for p in policy_names] if policy_names else list(DEFAULT_POLICIES)
    except ValueError as exc:
        raise ConfigError('policy', str(exc)) from None

    def pick(flag, key, parse, default):
        if flag is not None:
            return flag
        if key in file_values:
            return parse(key, file_values[key])
        return default

    sweep = []
    if name == 'cache-size-sweep':
        sweep = [parse_range('range', r, cast=int) for r in args.ranges] if args.ranges else list(CACHE_SIZE_RANGES)
    elif name == 'predictable-sweep':
        sweep = list(args.fractions) if args.fractions else list(DEFAULT_FRACTIONS)
        for f in sweep:
            if not 0.0 <= f <= 1.0:
                raise ConfigError('fraction', f'must be in [0, 1], got {f}')

    spec = ExperimentSpec(
        name=name,
        base_config=base,
        policies=policies,
        sweep=sweep,
        window=pick(args.window, 'window', parse_float, DEFAULT_WINDOW),
        replications=pick(args.replications, 'replications', parse_int, settings.REPLICATIONS),
        workers=pick(args.workers, 'workers', parse_int, settings.WORKERS),
        prefetch=pick(
            None if args.prefetch is None else args.prefetch == 'on', 'prefetch', parse_bool, False,
        ),
        per_packet_ratio=pick(args.per_packet_ratio, 'per_packet_ratio', parse_bool, False),
    )
    base.validate()
    return spec


# ----------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------
def _fmt_ratio(value: float) -> str:
    return 'undefined' if math.isnan(value) else f'{value:.4f}'


def _summary_rows(summaries: dict[PolicyKind, ReplicationSummary]) -> pd.DataFrame:
    rows = [{
        'policy': kind.value,
        'replications': s.replications,
        'mean_ratio': s.mean,
        'sd_ratio': s.sd,
        'ci95': s.ci95,
    } for kind, s in summaries.items()]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def _series_rows(summaries: dict[PolicyKind, ReplicationSummary]) -> pd.DataFrame:
    frames = [pd.DataFrame({
        'window_start_s': s.window_starts,
        'policy': kind.value,
        'mean_cumulative_ratio': s.series_mean,
        'sd_cumulative_ratio': s.series_sd,
    }, columns=SERIES_COLUMNS) for kind, s in summaries.items()]
    return pd.concat(frames, ignore_index=True)


def write_run_outputs(summaries: dict[PolicyKind, ReplicationSummary], out_dir: Path) -> list[Path]:
    written = []
    for kind, s in summaries.items():
        frame = pd.concat([lg.to_frame() for lg in s.ledgers], ignore_index=True)[LEDGER_COLUMNS]
        written.append(write_table(frame, out_dir / f'timeseries_{kind.value}.csv'))
    written.append(write_table(_series_rows(summaries), out_dir / 'series_summary.csv'))
    written.append(write_table(_summary_rows(summaries), out_dir / 'summary.csv'))
    return written


def _announce(spec: ExperimentSpec, out_dir: Path):
    lines = spec.resolved_lines()
    print('\n'.join(lines))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / 'resolved.conf').write_text('\n'.join(lines) + '\n')
    logger.info(f'Experiment {spec.name}: output in {out_dir}')


def _print_finals(summaries: dict[PolicyKind, ReplicationSummary]):
    for kind, s in summaries.items():
        print(f'{kind.value}: final cumulative ratio {_fmt_ratio(s.mean)} (sd {_fmt_ratio(s.sd)}, n={s.replications})')


def _replicate(spec: ExperimentSpec, config: ScenarioConfig):
    return replicate(
        config,
        spec.policies,
        spec.replications,
        prefetch=spec.prefetch,
        window=spec.window,
        workers=spec.workers,
        literal=spec.per_packet_ratio,
    )


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------
def cmd_run(spec: ExperimentSpec, out_dir: Path) -> int:
    _announce(spec, out_dir)
    summaries = _replicate(spec, spec.base_config)
    write_run_outputs(summaries, out_dir)
    _print_finals(summaries)
    return EXIT_OK


def _check_trend(frame: pd.DataFrame, key: str):
    for policy, group in frame.groupby('policy', sort=False):
        means = group['mean_ratio'].to_numpy()
        if len(means) > 1 and (means[1:] < means[:-1]).any():
            logger.warning(f'{policy}: mean ratio is not monotone across {key}: {means.round(4).tolist()}')


def cmd_sweep_cache_size(spec: ExperimentSpec, out_dir: Path) -> int:
    _announce(spec, out_dir)
    rows = []
    for low, high in spec.sweep:
        config = replace(spec.base_config, cache_size_range=(low, high)).validate()
        for kind, s in _replicate(spec, config).items():
            rows.append({'range': f'{low}-{high}', 'policy': kind.value, 'mean_ratio': s.mean, 'sd_ratio': s.sd})
    frame = pd.DataFrame(rows, columns=CACHE_SWEEP_COLUMNS)
    _check_trend(frame, 'cache size')
    write_table(frame, out_dir / 'sweep_cache_size.csv')
    print(frame.to_string(index=False))
    return EXIT_OK


def cmd_sweep_predictable(spec: ExperimentSpec, out_dir: Path) -> int:
    _announce(spec, out_dir)
    rows = []
    for fraction in spec.sweep:
        config = replace(spec.base_config, predictable_fraction=fraction).validate()
        for kind, s in _replicate(spec, config).items():
            rows.append({'fraction': fraction, 'policy': kind.value, 'mean_ratio': s.mean, 'sd_ratio': s.sd})
    frame = pd.DataFrame(rows, columns=PREDICTABLE_SWEEP_COLUMNS)
    _check_trend(frame, 'predictable fraction')
    write_table(frame, out_dir / 'sweep_predictable.csv')
    print(frame.to_string(index=False))
    return EXIT_OK


def cmd_fixture(spec: ExperimentSpec, out_dir: Path, scenario_path: Path) -> int:
    scenario = load_scenario(scenario_path)
    logger.info(f'Loaded {scenario.n_flows} flows, {scenario.n_switches} switches from {scenario_path}')
    _announce(spec, out_dir)
    cfg = spec.base_config
    summaries = {}
    for kind in spec.policies:
        ledger = run(scenario, kind, spec.fdrc, cfg.sim_end, spec.window, run_seed=cfg.seed)
        summaries[kind] = ReplicationSummary(
            policy=kind,
            seeds=[cfg.seed],
            ratios=np.array([ledger.total_ratio_or_nan(spec.per_packet_ratio)]),
            window_starts=ledger.window_starts(),
            series=ledger.cumulative_series()[None, :],
            ledgers=[ledger],
        )
    write_run_outputs(summaries, out_dir)
    _print_finals(summaries)
    return EXIT_OK


def cmd_generate(spec: ExperimentSpec, out_dir: Path, output: Path | None) -> int:
    print('\n'.join(spec.resolved_lines()))
    scenario = generate(spec.base_config)
    path = dump_scenario(scenario, output or out_dir / f'scenario_seed{spec.base_config.seed}.txt')
    print(f'wrote {scenario.n_flows} flows / {scenario.n_switches} switches to {path}')
    return EXIT_OK


def cmd_report(out_dir: Path) -> int:
    pdf_bytes = build_report(out_dir)
    path = out_dir / 'report.pdf'
    path.write_bytes(pdf_bytes)
    print(f'wrote {path}')
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, format=settings.LOG_FORMAT)
    args = build_parser().parse_args(argv)
    out_dir = args.out_dir or settings.OUT_DIR
    try:
        if args.command == 'report':
            return cmd_report(out_dir)
        spec = resolve_experiment(args)
        if args.command == 'run':
            return cmd_run(spec, out_dir)
        if args.command == 'sweep-cache-size':
            return cmd_sweep_cache_size(spec, out_dir)
        if args.command == 'sweep-predictable':
            return cmd_sweep_predictable(spec, out_dir)
        if args.command == 'fixture':
            return cmd_fixture(spec, out_dir, args.scenario)
        return cmd_generate(spec, out_dir, args.output)
    except (ConfigError, ScenarioFormatError) as exc:
        print(f'config error: {exc}', file=sys.stderr)
        return EXIT_CONFIG
    except RuleCacheError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f'config error: {exc}', file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f'I/O error: {exc}', file=sys.stderr)
        return EXIT_IO
