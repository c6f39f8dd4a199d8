"""Unit tests for the AIMD partitioning simulation."""

import math

import numpy as np
import pytest

from surgeshare import (
    AimdConfig,
    AimdState,
    ScenarioParams,
    aimd_step_equalize,
    aimd_step_maximize,
    auto_config,
    binom_cdf,
    run_partition,
    scan_oracle,
)

CAR_1000 = ScenarioParams(1000, 0.1, 0.3, 0.01)


def make_config(**overrides):
    base = dict(alpha=1.0, beta=0.85, z_init=50.0, q_init=5.0,
                gamma=1.0, seed=0)
    base.update(overrides)
    return AimdConfig(**base)


def test_additive_phase_grows_both_agents():
    config = make_config()
    state = AimdState(z=50.0, q=5.0, t=215, gamma=config.gamma)
    rng = np.random.Generator(np.random.Philox(0))
    aimd_step_maximize(state, config, 120, CAR_1000, rng)
    assert state.z == 51.0 and state.q == 6.0
    assert not state.capacity_event
    assert state.k == 0


def test_forced_backoff_scales_both_agents():
    # A huge gain clamps both backoff probabilities at 1, so a capacity
    # event deterministically multiplies both claims by beta.
    config = make_config(gamma=1e12)
    state = AimdState(z=110.0, q=10.0, t=215, gamma=config.gamma)
    rng = np.random.Generator(np.random.Philox(0))
    aimd_step_maximize(state, config, 120, CAR_1000, rng)
    assert state.capacity_event
    assert state.z == pytest.approx(0.85 * 110.0)
    assert state.q == pytest.approx(0.85 * 10.0)
    assert state.k == 1


def test_vanishing_gain_rarely_backs_off():
    # With gamma ~ 0 the backoff probability sits at its floor, so the
    # claims oscillate right at the capacity boundary.
    config = make_config(gamma=1e-300)
    state = AimdState(z=110.0, q=10.0, t=215, gamma=config.gamma)
    rng = np.random.Generator(np.random.Philox(0))
    for _ in range(500):
        aimd_step_equalize(state, config, 120, CAR_1000, rng)
    # Backoffs happen with probability lam_min = 1e-4 per event, so the
    # claims shrink by at most a couple of beta factors in 500 events.
    assert state.k >= 450
    assert state.z >= 110.0 * config.beta ** 3


class _CommonDraw:
    """Returns each uniform draw twice so both agents see the same value."""

    def __init__(self, seed):
        self._rng = np.random.Generator(np.random.Philox(seed))
        self._pending = None

    def random(self):
        if self._pending is None:
            self._pending = self._rng.random()
            return self._pending
        value, self._pending = self._pending, None
        return value


def test_symmetric_agents_stay_equal_under_common_draw():
    # Equal initial claims, a shared random draw and equal (clamped)
    # backoff probabilities keep the two agents identical forever.
    config = make_config(gamma=1e12, z_init=55.0, q_init=55.0)
    state = AimdState(z=55.0, q=55.0, t=215, gamma=config.gamma)
    rng = _CommonDraw(3)
    for _ in range(2000):
        aimd_step_equalize(state, config, 120, CAR_1000, rng)
        assert state.z == pytest.approx(state.q, abs=1e-12)
        assert state.z_avg == pytest.approx(state.q_avg, abs=1e-12)


def test_trace_capacity_bound_and_positivity():
    config = auto_config("maximize", 120, 215, CAR_1000, seed=5)
    trace, _, _ = run_partition("maximize", CAR_1000, 120, 215, config)
    first_event = next(l for l in range(len(trace.z)) if trace.capacity_event[l])
    for l in range(first_event, len(trace.z)):
        assert trace.z[l] + trace.q[l] < 120 + 2 * config.alpha
    assert all(z > 0 for z in trace.z)
    assert all(q > 0 for q in trace.q)


def test_trace_average_recursions():
    config = auto_config("maximize", 120, 215, CAR_1000, seed=2)
    trace, _, _ = run_partition("maximize", CAR_1000, 120, 215, config)
    events = [l for l in range(len(trace.z)) if trace.capacity_event[l]]
    assert len(events) == trace.capacity_count
    z_bar = q_bar = 0.0
    for k, l in enumerate(events, start=1):
        z_bar += (trace.z[l] - z_bar) / k
        q_bar += (trace.q[l] - q_bar) / k
        assert trace.z_avg_series[l] == pytest.approx(z_bar, abs=1e-9)
        assert trace.q_avg_series[l] == pytest.approx(q_bar, abs=1e-9)
    # The recursion equals the arithmetic mean of the event states.
    assert trace.z_avg == pytest.approx(
        math.fsum(trace.z[l] for l in events) / len(events), abs=1e-9)
    assert trace.q_avg == pytest.approx(
        math.fsum(trace.q[l] for l in events) / len(events), abs=1e-9)


def test_seeded_runs_are_bit_identical():
    config = auto_config("maximize", 120, 215, CAR_1000, seed=11)
    t1, q1, _ = run_partition("maximize", CAR_1000, 120, 215, config)
    t2, q2, _ = run_partition("maximize", CAR_1000, 120, 215, config)
    assert q1 == q2
    assert t1.z == t2.z and t1.q == t2.q
    assert t1.converged_at == t2.converged_at
    other = auto_config("maximize", 120, 215, CAR_1000, seed=12)
    t3, _, _ = run_partition("maximize", CAR_1000, 120, 215, other)
    assert t3.z != t1.z


def test_unconverged_run_is_flagged_not_raised():
    config = auto_config("maximize", 120, 215, CAR_1000)
    short = AimdConfig(
        alpha=config.alpha, beta=config.beta, z_init=config.z_init,
        q_init=config.q_init, gamma=config.gamma,
        gamma_target=config.gamma_target, seed=0, max_iterations=500,
        convergence_window=config.convergence_window,
        convergence_tol=config.convergence_tol,
    )
    trace, q_star, _ = run_partition("maximize", CAR_1000, 120, 215, short)
    assert trace.converged_at is None
    assert isinstance(q_star, int)


def test_run_partition_validates_inputs():
    with pytest.raises(ValueError):
        run_partition("optimize", CAR_1000, 120, 215)
    with pytest.raises(ValueError):
        run_partition("maximize", CAR_1000, 120, 0)
    with pytest.raises(ValueError):
        run_partition("maximize", CAR_1000, 2000, 215)
    with pytest.raises(ValueError):
        run_partition("maximize", CAR_1000, 120, 215,
                      make_config(z_init=100.0, q_init=30.0))


def test_scan_oracle_maximize_car_1000():
    q_opt, value = scan_oracle("maximize", CAR_1000, 120, 215)
    assert abs(q_opt - 7) <= 1
    assert value == pytest.approx(
        binom_cdf(120 - q_opt + 215, 1000, 0.3) + binom_cdf(q_opt, 215, 0.01))


def test_scan_oracle_equalize_car_5000():
    params = ScenarioParams(5000, 0.1, 0.3, 0.01)
    q_opt, gap = scan_oracle("equalize", params, 545, 1040)
    assert abs(q_opt - 17) <= 1
    assert gap >= 0.0


def test_scan_oracle_zero_reserve_endpoint():
    qos_b_at_zero = binom_cdf(0, 215, 0.01)
    assert qos_b_at_zero == pytest.approx(0.99 ** 215, rel=1e-9)


def test_run_partition_matches_oracle_car_1000():
    q_oracle, _ = scan_oracle("maximize", CAR_1000, 120, 215)
    _, q_star, rep = run_partition("maximize", CAR_1000, 120, 215,
                                   auto_config("maximize", 120, 215, CAR_1000, seed=0),
                                   record=False)
    assert abs(q_star - q_oracle) <= 1
    assert 0.0 <= rep.qos_s <= 1.0 and 0.0 <= rep.qos_b <= 1.0
