from pathlib import Path

import pytest

from rulecache.models import Flow, Switch, SwitchId
from rulecache.scenario import Scenario, ScenarioConfig
from rulecache.serializers import load_scenario
from rulecache.traffic import PeriodicModel, RandomModel

FIXTURES = Path(__file__).parent / 'fixtures'


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def rotation():
    return load_scenario(FIXTURES / 'rotation.scenario')


@pytest.fixture
def small_config():
    return ScenarioConfig(
        n_flows=30,
        n_switches=8,
        cache_size_range=(3, 5),
        path_len_range=(1, 4),
        period_range=(2.0, 20.0),
        sim_end=120.0,
        t_max=20.0,
        seed=7,
    )


def build_scenario(capacities, flows):
    """Scenario from a list of capacities and (model, path) pairs."""
    switches = [Switch(SwitchId(j), c) for j, c in enumerate(capacities)]
    built = []
    for i, (model, path) in enumerate(flows):
        if isinstance(model, PeriodicModel):
            built.append(Flow.periodic(i, path, model))
        else:
            built.append(Flow.random(i, path, model))
    return Scenario(switches, built).validate()


@pytest.fixture
def scenario_factory():
    return build_scenario


@pytest.fixture
def dormant_model():
    # a random flow whose first packet lies far beyond any test horizon
    return RandomModel(seed=1, horizon=1e9)
