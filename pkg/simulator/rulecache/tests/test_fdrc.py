import math

import numpy as np
import pytest

from rulecache.engine import EventKind, build_events
from rulecache.fdrc import (
    FdrcConfig,
    FdrcPolicy,
    PrefetchMode,
    TimerKind,
    TimerState,
    TimerStateError,
    in_burst,
    on_expiry,
    on_packet,
    settle,
    timer_value,
)
from rulecache.models import Flow
from rulecache.policies import NO_CHANGE, PolicyDecision
from rulecache.scenario import ScenarioConfig, generate
from rulecache.traffic import PeriodicModel, RandomModel

T_MAX = 100.0
PREFETCH = FdrcConfig(T_MAX, PrefetchMode.ACTIVE_PREFETCH)


def unpredictable(flow_id=0):
    flow = Flow.random(flow_id, [0], RandomModel(1, 1e9))
    return TimerState.initial(flow, T_MAX)


def predictable(model, flow_id=0):
    return TimerState.initial(Flow.periodic(flow_id, [0], model), T_MAX)


def feed(state, *times):
    for t in times:
        state = on_packet(state, t)
    return state


# ----------------------------------------------------------------------
# Unpredictable timers
# ----------------------------------------------------------------------
def test_silent_flow_reads_t_max():
    state = unpredictable()
    assert state.kind is TimerKind.UNPREDICTABLE
    assert timer_value(state, 0.0) == T_MAX
    assert timer_value(state, 5000.0) == T_MAX


def test_first_packet_starts_at_t_max():
    state = feed(unpredictable(), 7.0)
    assert state.delta_t == T_MAX
    assert state.deadline == 107.0
    assert not state.frozen


def test_second_packet_uses_interval():
    state = feed(unpredictable(), 10.0, 14.0)
    assert state.delta_t == 4.0
    assert state.deadline == 18.0
    assert timer_value(state, 14.0) == 4.0


def test_single_packet_counts_down_then_freezes():
    state = feed(unpredictable(), 10.0)
    assert timer_value(state, 60.0) == 50.0
    assert timer_value(state, 109.5) == 0.5
    assert timer_value(state, 110.0) == T_MAX
    assert timer_value(state, 10_000.0) == T_MAX
    assert settle(state, 110.0).frozen


def test_expiries_double_the_interval_up_to_t_max():
    state = feed(unpredictable(), 10.0, 13.0)
    deadlines = [state.deadline]
    while not state.frozen:
        state = on_expiry(state, state.deadline)
        deadlines.append(state.deadline)
    assert deadlines == [16.0, 22.0, 34.0, 58.0, 106.0, 202.0, 302.0, 302.0]
    assert state.delta_t == T_MAX


def test_one_doubling_can_cross_the_cap():
    state = feed(unpredictable(), 0.0, 60.0)
    assert state.delta_t == 60.0
    state = on_expiry(state, 120.0)
    assert state.delta_t == T_MAX
    assert state.deadline == 220.0
    state = on_expiry(state, 220.0)
    assert state.frozen


def test_packet_after_freeze_restarts_with_capped_interval():
    state = settle(feed(unpredictable(), 10.0), 500.0)
    assert state.frozen
    state = on_packet(state, 500.0)
    assert not state.frozen
    assert state.delta_t == T_MAX
    state = on_packet(state, 530.0)
    assert state.delta_t == 30.0


def test_repeated_instant_keeps_previous_interval():
    state = feed(unpredictable(), 10.0, 14.0, 14.0)
    assert state.delta_t == 4.0
    assert state.deadline == 18.0


def test_timer_lookups_do_not_mutate():
    state = feed(unpredictable(), 10.0, 14.0)
    timer_value(state, 500.0)
    assert state.deadline == 18.0


def test_invalid_timer_transitions():
    state = feed(unpredictable(), 10.0, 14.0)
    with pytest.raises(TimerStateError):
        on_expiry(state, 17.0)
    with pytest.raises(TimerStateError):
        on_packet(state, 13.0)
    with pytest.raises(TimerStateError):
        on_expiry(unpredictable(), T_MAX)
    with pytest.raises(TimerStateError):
        on_expiry(predictable(PeriodicModel(10.0, 2.0)), 10.0)
    with pytest.raises(TimerStateError):
        FdrcConfig(t_max=0.0)


def eager_timer(packets, query, t_max):
    """Reference timer that fires every expiry as its own event."""
    last, delta, deadline, frozen = None, t_max, math.inf, True

    def fire_until(t):
        nonlocal delta, deadline, frozen
        while not frozen and deadline <= t:
            if delta >= t_max:
                frozen = True
            else:
                delta = min(2 * delta, t_max)
                deadline = deadline + delta

    for p in packets:
        fire_until(p)
        if last is not None and p > last:
            delta = min(p - last, t_max)
        elif last is None:
            delta = t_max
        last, deadline, frozen = p, p + delta, False
    fire_until(query)
    return t_max if frozen else min(max(deadline - query, 0.0), t_max)


def test_lazy_expiry_matches_eager_reference():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        n = int(rng.integers(0, 8))
        packets = np.sort(rng.integers(0, 400, size=n)).astype(float).tolist()
        query = float(rng.integers(int(packets[-1]) if packets else 0, 800))
        state = feed(unpredictable(), *packets)
        assert timer_value(state, query) == eager_timer(packets, query, T_MAX), (packets, query)


# ----------------------------------------------------------------------
# Predictable timers
# ----------------------------------------------------------------------
def test_predictable_timer_follows_schedule():
    state = predictable(PeriodicModel(10.0, 2.0, packet_rate=8.0))
    assert state.kind is TimerKind.PREDICTABLE
    active = 2.0 - 1 / 8
    for i in range(1000):
        q = i / 16
        n = math.floor(q / 10)
        value = timer_value(state, q)
        offset = q - 10 * n
        if offset < active:
            assert value == (math.floor(offset * 8) + 1) / 8 - offset
        else:
            assert value == (n + 1) * 10.0 - q


def test_predictable_timer_capped_at_t_max():
    state = predictable(PeriodicModel(500.0, 1.0))
    assert timer_value(state, 10.0) == T_MAX
    assert timer_value(state, 450.0) == 50.0


def test_predictable_packets_only_record_arrival():
    state = predictable(PeriodicModel(10.0, 2.0))
    after = on_packet(state, 10.0)
    assert after.last_arrival == 10.0
    assert timer_value(after, 10.0) == timer_value(state, 10.0) == 1.0


def test_in_burst():
    state = predictable(PeriodicModel(50.0, 10.0, phase=5.0))
    assert not in_burst(state, 1.0)
    assert in_burst(state, 10.0)
    assert not in_burst(state, 14.0)
    assert not in_burst(state, 30.0)
    assert not in_burst(unpredictable(), 10.0)


# ----------------------------------------------------------------------
# Policy
# ----------------------------------------------------------------------
def test_miss_installs_rule_on_whole_path(scenario_factory, dormant_model):
    scenario = scenario_factory([1] * 6, [(dormant_model, [1, 2, 5])])
    policy = FdrcPolicy(scenario)
    outcomes = policy.on_packet(0, 0.0)
    assert [(o.switch, o.hit) for o in outcomes] == [(1, False), (2, False), (5, False)]
    assert all(policy.assignment.is_cached(0, s) for s in (1, 2, 5))


def test_frozen_entry_is_evicted_first(scenario_factory, dormant_model):
    scenario = scenario_factory([3], [
        (PeriodicModel(200.0, 1.0, phase=100.5), [0]),
        (PeriodicModel(200.0, 1.0, phase=137.0), [0]),
        (dormant_model, [0]),
        (dormant_model, [0]),
    ])
    policy = FdrcPolicy(scenario, FdrcConfig(T_MAX))
    for flow in (0, 1, 2):
        policy.assignment.install(flow, 0, t=0.0)
    assert [policy.timer(f, 100.0) for f in (0, 1, 2)] == [0.5, 37.0, T_MAX]
    (outcome,) = policy.on_packet(3, 100.0)
    assert outcome.decision == PolicyDecision(evicted=2, installed=True)


def test_ties_go_to_older_install_then_lower_id(scenario_factory, dormant_model):
    scenario = scenario_factory([2, 2], [(dormant_model, [0, 1])] * 3)
    policy = FdrcPolicy(scenario)
    policy.assignment.install(1, 0, t=1.0)
    policy.assignment.install(0, 0, t=2.0)
    policy.assignment.install(0, 1, t=3.0)
    policy.assignment.install(1, 1, t=3.0)
    outcomes = policy.on_packet(2, 5.0)
    assert [o.decision.evicted for o in outcomes] == [1, 0]


def test_cached_flow_hits_and_refreshes_timer(scenario_factory, dormant_model):
    scenario = scenario_factory([2, 2], [(dormant_model, [0, 1])])
    policy = FdrcPolicy(scenario)
    policy.on_packet(0, 5.0)
    outcomes = policy.on_packet(0, 8.0)
    assert all(o.hit and o.decision is NO_CHANGE for o in outcomes)
    assert policy.timers[0].delta_t == 3.0
    assert policy.timer(0, 8.0) == 3.0


def test_cached_due_times_match_timer_state(small_config):
    scenario = generate(small_config)
    policy = FdrcPolicy(scenario, FdrcConfig(small_config.t_max))
    queue = build_events(scenario, small_config.sim_end)
    while queue:
        ev = queue.pop()
        policy.on_packet(ev.flow, ev.time)
        for flow in range(scenario.n_flows):
            assert policy.timer(flow, ev.time) == timer_value(policy.timers[flow], ev.time)


def test_rotation_retention_and_prefetch(rotation):
    def hits(config):
        policy = FdrcPolicy(rotation, config)
        total = 0
        queue = build_events(rotation, 6.0, prefetch=config.prefetch)
        while queue:
            ev = queue.pop()
            if ev.kind is EventKind.PREFETCH_TICK:
                policy.prefetch(ev.flow, ev.time)
            else:
                total += sum(o.hit for o in policy.on_packet(ev.flow, ev.time))
        return total

    assert hits(FdrcConfig(T_MAX)) == 2
    assert hits(PREFETCH) == 6


def test_evicted_entry_had_the_largest_timer():
    scenario = generate(ScenarioConfig(
        n_flows=60, n_switches=6, cache_size_range=(2, 4), path_len_range=(1, 3),
        period_range=(2.0, 30.0), sim_end=200.0, t_max=30.0, seed=5,
    ))
    policy = FdrcPolicy(scenario, FdrcConfig(30.0))
    queue = build_events(scenario, 200.0)
    evictions = 0
    while queue:
        ev = queue.pop()
        values = {
            s: {k: timer_value(policy.timers[k], ev.time) for k in policy.assignment.cache(s)}
            for s in scenario.flows[ev.flow].path
        }
        for outcome in policy.on_packet(ev.flow, ev.time):
            evicted = outcome.decision.evicted
            if evicted is not None:
                evictions += 1
                assert values[outcome.switch][evicted] == max(values[outcome.switch].values())
    assert evictions > 0


# ----------------------------------------------------------------------
# Prefetching
# ----------------------------------------------------------------------
def prefetch_scenario(scenario_factory, competitor):
    return scenario_factory([1, 1], [
        (PeriodicModel(50.0, 1.0, phase=10.0), [0, 1]),
        (competitor, [0]),
        (competitor, [1]),
    ])


def test_prefetch_displaces_dormant_rules(scenario_factory, dormant_model):
    scenario = prefetch_scenario(scenario_factory, dormant_model)
    policy = FdrcPolicy(scenario, PREFETCH)
    policy.assignment.install(1, 0)
    policy.assignment.install(2, 1)
    decisions = policy.prefetch(0, 10.0)
    assert decisions == [(0, PolicyDecision(1, True)), (1, PolicyDecision(2, True))]
    assert policy.assignment.is_cached(0, 0) and policy.assignment.is_cached(0, 1)


def test_prefetch_skips_switch_held_by_active_flow(scenario_factory):
    busy = PeriodicModel(50.0, 10.0, phase=5.0)
    scenario = prefetch_scenario(scenario_factory, busy)
    policy = FdrcPolicy(scenario, PREFETCH)
    policy.assignment.install(1, 0)
    policy.assignment.install(2, 1)
    assert policy.prefetch(0, 10.0) == []
    assert policy.assignment.is_cached(1, 0)


def test_prefetch_leaves_installed_rules_alone(scenario_factory, dormant_model):
    scenario = prefetch_scenario(scenario_factory, dormant_model)
    policy = FdrcPolicy(scenario, PREFETCH)
    policy.assignment.install(0, 0)
    policy.assignment.install(0, 1)
    assert policy.prefetch(0, 10.0) == []


def test_prefetch_needs_active_mode_and_predictable_flow(scenario_factory, dormant_model):
    scenario = prefetch_scenario(scenario_factory, dormant_model)
    assert FdrcPolicy(scenario).prefetch(0, 10.0) == []
    assert FdrcPolicy(scenario, PREFETCH).prefetch(1, 10.0) == []
