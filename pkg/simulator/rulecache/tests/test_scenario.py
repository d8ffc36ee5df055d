from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rulecache.scenario import MIN_ACTIVE_DURATION, ScenarioConfig, generate, truncated_normal_int
from rulecache.traffic import PeriodicModel, RandomModel
from rulecache.utils import ConfigError


def test_no_flows_gives_empty_scenario():
    scenario = generate(ScenarioConfig(n_flows=0))
    assert scenario.flows == []
    assert scenario.n_switches == 50


def test_generation_is_deterministic():
    assert generate(ScenarioConfig(seed=42)) == generate(ScenarioConfig(seed=42))
    assert generate(ScenarioConfig(seed=42)) != generate(ScenarioConfig(seed=43))


def test_default_config_has_400_predictable_flows():
    scenario = generate(ScenarioConfig())
    assert scenario.n_flows == 1000
    assert scenario.predictable_count() == 400


def test_generated_scenario_respects_ranges(small_config):
    scenario = generate(small_config).validate()
    low, high = small_config.cache_size_range
    assert all(low <= s.capacity <= high for s in scenario.switches)
    for flow in scenario.flows:
        assert small_config.path_len_range[0] <= len(flow.path) <= small_config.path_len_range[1]
        assert all(0 <= s < small_config.n_switches for s in flow.path)
        model = flow.traffic
        if flow.predictable:
            assert isinstance(model, PeriodicModel)
            assert small_config.period_range[0] <= model.period <= small_config.period_range[1]
            assert MIN_ACTIVE_DURATION <= model.active_duration <= model.period
            assert 0 <= model.phase < model.period
            assert small_config.packet_rate_range[0] <= model.packet_rate <= small_config.packet_rate_range[1]
        else:
            assert isinstance(model, RandomModel)
            assert model.horizon == small_config.random_horizon


def test_degenerate_cache_range_fixes_every_capacity(small_config):
    scenario = generate(replace(small_config, cache_size_range=(4, 4)))
    assert {s.capacity for s in scenario.switches} == {4}


def test_fraction_bounds(small_config):
    assert generate(replace(small_config, predictable_fraction=0.0)).predictable_count() == 0
    assert generate(replace(small_config, predictable_fraction=1.0)).predictable_count() == small_config.n_flows


def test_truncated_normal_degenerate_range():
    rng = np.random.default_rng(0)
    assert all(truncated_normal_int(7, 7, rng) == 7 for _ in range(50))


def test_truncated_normal_is_centred():
    rng = np.random.default_rng(1)
    draws = truncated_normal_int(15, 25, rng, size=100_000)
    assert draws.shape == (100_000,)
    assert abs(draws.mean() - 20) < 0.2
    assert draws.min() >= 15 and draws.max() <= 25


def test_truncated_normal_rejects_reversed_range():
    with pytest.raises(ConfigError):
        truncated_normal_int(5, 1, np.random.default_rng(0))


@given(low=st.integers(1, 60), width=st.integers(0, 40), seed=st.integers(0, 2**32 - 1))
def test_truncated_normal_stays_in_range(low, width, seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        assert low <= truncated_normal_int(low, low + width, rng) <= low + width


@pytest.mark.parametrize('overrides, field', [
    (dict(n_flows=-1), 'n_flows'),
    (dict(n_switches=0), 'n_switches'),
    (dict(predictable_fraction=1.5), 'predictable_fraction'),
    (dict(cache_size_range=(9, 3)), 'cache_size_range'),
    (dict(cache_size_range=(0, 3)), 'cache_size_range'),
    (dict(path_len_range=(1, 60)), 'path_len_range'),
    (dict(period_range=(0.5, 10.0)), 'period_range'),
    (dict(sim_end=0.0), 'sim_end'),
    (dict(t_max=-1.0), 't_max'),
    (dict(packet_rate_range=(0.0, 1.0)), 'packet_rate_range'),
    (dict(packet_rate_range=(2.0, 1.0)), 'packet_rate_range'),
    (dict(random_horizon=0.0), 'random_horizon'),
])
def test_invalid_config_names_the_field(overrides, field):
    with pytest.raises(ConfigError) as info:
        generate(ScenarioConfig(**overrides))
    assert info.value.field == field


def test_config_from_mapping_parses_strings():
    config = ScenarioConfig.from_mapping({
        'n_flows': '12',
        'cache_size_range': '3, 5',
        'period_range': '2-20',
        't_max': '40',
        'window': '5',
    })
    assert config.n_flows == 12
    assert config.cache_size_range == (3, 5)
    assert config.period_range == (2.0, 20.0)
    assert config.t_max == 40.0
    assert config.n_switches == ScenarioConfig().n_switches


def test_config_from_mapping_reports_bad_values():
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_mapping({'n_flows': 'many'})
    assert info.value.field == 'n_flows'


def test_seed_override():
    assert ScenarioConfig(seed=3).with_seed(9).seed == 9
    assert ScenarioConfig().as_dict()['cache_size_range'] == (15, 25)


def test_periodic_flows_draw_their_own_rates(small_config):
    scenario = generate(replace(small_config, n_flows=200, predictable_fraction=1.0))
    rates = {f.traffic.packet_rate for f in scenario.flows}
    assert len(rates) > 1
    fixed = generate(replace(small_config, packet_rate_range=(2.0, 2.0)))
    assert {f.traffic.packet_rate for f in fixed.flows if f.predictable} == {2.0}


def test_random_horizon_can_follow_sim_end(small_config):
    config = replace(small_config, predictable_fraction=0.0, random_horizon=None)
    assert config.horizon == small_config.sim_end
    assert {f.traffic.horizon for f in generate(config).flows} == {small_config.sim_end}


def test_packet_rate_shorthand_and_horizon_keyword():
    config = ScenarioConfig.from_mapping({'packet_rate': '1.5', 'random_horizon': 'sim_end'})
    assert config.packet_rate_range == (1.5, 1.5)
    assert config.random_horizon is None
    both = ScenarioConfig.from_mapping({'packet_rate': '1.5', 'packet_rate_range': '0.1, 0.3'})
    assert both.packet_rate_range == (0.1, 0.3)
    assert dict(config.config_items())['random_horizon'] == 'sim_end'
    assert dict(ScenarioConfig().config_items())['packet_rate_range'] == '0.05, 0.5'
