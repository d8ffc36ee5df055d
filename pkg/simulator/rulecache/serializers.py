"""Plain-text scenario files.

    # comment
    switch <id> <capacity>
    flow <id> periodic <period> <active_duration> <phase> <packet_rate> : <switch ids...>
    flow <id> random <seed> <horizon> : <switch ids...>

Floats are written with ``repr`` so a dump/load round trip is exact.
"""
from pathlib import Path

from .models import Flow, FlowId, Path as FlowPath, RuleCacheError, Switch, SwitchId
from .scenario import Scenario
from .traffic import PeriodicModel, RandomModel, TrafficModelError

HEADER = '# rulecache scenario v1'


class ScenarioFormatError(RuleCacheError):
    pass


def format_scenario(scenario: Scenario) -> str:
    lines = [HEADER, f'# {scenario.n_switches} switches, {scenario.n_flows} flows']
    for s in scenario.switches:
        lines.append(f'switch {s.id} {s.capacity}')
    for f in scenario.flows:
        m = f.traffic
        if isinstance(m, PeriodicModel):
            params = f'periodic {m.period!r} {m.active_duration!r} {m.phase!r} {m.packet_rate!r}'
        else:
            params = f'random {m.seed} {m.horizon!r}'
        path = ' '.join(str(s) for s in f.path)
        lines.append(f'flow {f.id} {params} : {path}')
    return '\n'.join(lines) + '\n'


def _parse_flow(tokens: list[str], lineno: int) -> Flow:
    if ':' not in tokens:
        raise ScenarioFormatError(f'line {lineno}: flow needs ": <switch ids>"')
    sep = tokens.index(':')
    head, path_tokens = tokens[1:sep], tokens[sep + 1:]
    if len(head) < 2:
        raise ScenarioFormatError(f'line {lineno}: flow needs an id and a kind')
    flow_id, kind, params = int(head[0]), head[1], head[2:]
    path = FlowPath(tuple(SwitchId(int(s)) for s in path_tokens))
    if kind == 'periodic':
        if len(params) != 4:
            raise ScenarioFormatError(f'line {lineno}: periodic flow needs period, active, phase, rate')
        model = PeriodicModel(*(float(p) for p in params))
        return Flow(FlowId(flow_id), path, model, True)
    if kind == 'random':
        if len(params) != 2:
            raise ScenarioFormatError(f'line {lineno}: random flow needs seed and horizon')
        model = RandomModel(int(params[0]), float(params[1]))
        return Flow(FlowId(flow_id), path, model, False)
    raise ScenarioFormatError(f'line {lineno}: unknown flow kind {kind!r}')


def parse_scenario(text: str) -> Scenario:
    switches, flows = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == 'switch':
                if len(tokens) != 3:
                    raise ScenarioFormatError(f'line {lineno}: expected "switch <id> <capacity>"')
                switches.append(Switch(SwitchId(int(tokens[1])), int(tokens[2])))
            elif tokens[0] == 'flow':
                flows.append(_parse_flow(tokens, lineno))
            else:
                raise ScenarioFormatError(f'line {lineno}: unknown record {tokens[0]!r}')
        except (ValueError, TrafficModelError) as exc:
            raise ScenarioFormatError(f'line {lineno}: {exc}') from exc
        except RuleCacheError as exc:
            if isinstance(exc, ScenarioFormatError):
                raise
            raise ScenarioFormatError(f'line {lineno}: {exc}') from exc
    switches.sort(key=lambda s: s.id)
    flows.sort(key=lambda f: f.id)
    scenario = Scenario(switches, flows)
    try:
        scenario.validate()
    except RuleCacheError as exc:
        raise ScenarioFormatError(str(exc)) from exc
    return scenario


def dump_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_scenario(scenario))
    return path


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())
