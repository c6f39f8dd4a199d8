"""Problem 2: AIMD partitioning of a fixed shared pool.

Two logical agents -- the consumer population holding Z = M - Q items
and the prosumer population holding the reserve Q -- grow their claims
additively until the pool is saturated (a *capacity event*), at which
point each independently backs off multiplicatively with a probability
tied to the objective: the QoS-sum gradient for the maximization
problem, or the QoS level itself for the equalization problem.  The
only shared information is the single-bit capacity signal.

A centralized ``scan_oracle`` provides ground truth for both problems.
"""

from __future__ import annotations

import csv
import math
from array import array
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .qos import (
    QosReport,
    ScenarioParams,
    binom_cdf,
    binom_cdf_cont,
    binom_pmf_cont,
    qos_all,
)

__all__ = [
    "AimdConfig",
    "AimdState",
    "AimdTrace",
    "auto_config",
    "aimd_step_maximize",
    "aimd_step_equalize",
    "run_partition",
    "scan_oracle",
    "write_trace_csv",
    "TRACE_CSV_COLUMNS",
    "PROBLEMS",
]

PROBLEMS = ("maximize", "equalize")
TRACE_CSV_COLUMNS = ("iter", "z", "q", "capacity_event", "z_avg", "q_avg")


@dataclass(frozen=True)
class AimdConfig:
    """AIMD algorithm parameters.

    ``gamma`` is the backoff gain (Gamma); when None it is calibrated at
    the first capacity event so that the larger of the two raw backoff
    rates lands at ``gamma_target``, which keeps the probabilities valid
    across scenario scales without per-scenario hand tuning.
    """

    alpha: float
    beta: float
    z_init: float
    q_init: float
    gamma: Optional[float] = None
    gamma_target: float = 0.15
    lam_min: float = 1e-4
    max_iterations: int = 2_000_000
    seed: int = 0
    convergence_window: int = 2000
    convergence_tol: float = 5e-4

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        if self.z_init < 0 or self.q_init < 0:
            raise ValueError("initial states must be non-negative")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive when given")
        if self.convergence_window < 1 or self.convergence_tol <= 0:
            raise ValueError("invalid convergence settings")


class AimdState:
    """Mutable per-run state: agent claims, event count, running averages."""

    __slots__ = ("z", "q", "t", "k", "z_avg", "q_avg", "gamma", "capacity_event")

    def __init__(self, z: float, q: float, t: int, gamma: Optional[float] = None):
        self.z = z
        self.q = q
        self.t = t
        self.k = 0
        self.z_avg = 0.0
        self.q_avg = 0.0
        self.gamma = gamma
        self.capacity_event = False


@dataclass
class AimdTrace:
    """Recorded run history; per-iteration arrays are empty when the run
    was executed without recording."""

    z: array
    q: array
    capacity_event: array
    z_avg_series: array
    q_avg_series: array
    capacity_count: int
    z_avg: float
    q_avg: float
    converged_at: Optional[int]
    total_iterations: int

    def iterations(self) -> Iterator[Tuple[int, float, float, bool]]:
        for l in range(len(self.z)):
            yield (l, self.z[l], self.q[l], bool(self.capacity_event[l]))


def auto_config(problem: str, m: int, t: int, params: ScenarioParams,
                seed: int = 0) -> AimdConfig:
    """Problem-specific defaults that behave well from N=1e3 to N=5e4.

    Both problems warm-start near the expected operating point (reserve
    at the normal-approximation estimate, consumers taking the rest).
    The maximization run uses a classic coarse AIMD regime; the
    equalization run needs a quasi-fluid regime (beta close to 1, small
    steps) because its backoff law saturates when the reserve average
    overshoots, leaving only a weak restoring force.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"problem must be one of {PROBLEMS}")
    p_b = params.p_bad
    q_hat = t * p_b + 2.33 * math.sqrt(t * p_b * (1.0 - p_b))
    q_hat = min(q_hat, 0.4 * m)
    q_hat = max(q_hat, 0.5)
    if problem == "maximize":
        alpha, beta = 1.0, 0.85
        gamma_target = 0.15
        window, tol = 2000, 5e-4
    else:
        beta = 0.999
        alpha = max(0.001, 0.25 * (1.0 - beta) * q_hat)
        gamma_target = 0.9
        window, tol = 20000, 2e-4
    z_init = max(m - q_hat - 2.0 * alpha, 1.0)
    return AimdConfig(
        alpha=alpha, beta=beta, z_init=z_init, q_init=q_hat,
        gamma=None, gamma_target=gamma_target, seed=seed,
        convergence_window=window, convergence_tol=tol,
    )


def _rates_maximize(state: AimdState, params: ScenarioParams) -> Tuple[float, float]:
    # Gradient of the QoS sum: the pmf of each agent's population at its
    # average claim (surge cdf argument shifted by T per the QoS_s form).
    dc = state.z_avg * binom_pmf_cont(state.z_avg + state.t,
                                      params.n_consumers, params.p_surge)
    dp = state.q_avg * binom_pmf_cont(state.q_avg, state.t, params.p_bad)
    rc = 1.0 / dc if dc > 1e-300 else math.inf
    rp = 1.0 / dp if dp > 1e-300 else math.inf
    return rc, rp


def _rates_equalize(state: AimdState, params: ScenarioParams) -> Tuple[float, float]:
    # QoS level over average claim: the better-served agent backs off
    # more often, pushing the two QoS values together.
    rc = (binom_cdf_cont(state.z_avg + state.t, params.n_consumers, params.p_surge)
          / max(state.z_avg, 1e-12))
    rp = (binom_cdf_cont(state.q_avg, max(state.t, 1), params.p_bad)
          / max(state.q_avg, 1e-12))
    return rc, rp


def _clamp(lam: float, lam_min: float) -> float:
    if not math.isfinite(lam):
        return 1.0
    return min(max(lam, lam_min), 1.0)


def _step(state: AimdState, config: AimdConfig, m: int, params: ScenarioParams,
          rng, rates) -> AimdState:
    if state.z + state.q < m:
        # Additive-increase phase: both agents grow by alpha.
        state.z += config.alpha
        state.q += config.alpha
        state.capacity_event = False
        return state
    # Capacity event: update the incremental running averages,
    # then apply the probabilistic multiplicative backoff.  The agent
    # that does not back off holds its claim, which keeps the pool
    # occupancy below M + 2*alpha at all times.
    state.capacity_event = True
    state.k += 1
    state.z_avg += (state.z - state.z_avg) / state.k
    state.q_avg += (state.q - state.q_avg) / state.k
    rc, rp = rates(state, params)
    if state.gamma is None:
        target = config.gamma_target
        worst = max(rc, rp)
        state.gamma = target / worst if math.isfinite(worst) and worst > 0 else target
    lam_c = _clamp(state.gamma * rc, config.lam_min)
    lam_p = _clamp(state.gamma * rp, config.lam_min)
    if rng.random() < lam_c:
        state.z *= config.beta
    if rng.random() < lam_p:
        state.q *= config.beta
    return state


def aimd_step_maximize(state: AimdState, config: AimdConfig, m: int,
                       params: ScenarioParams, rng) -> AimdState:
    """One iteration of the QoS-sum maximization algorithm."""
    return _step(state, config, m, params, rng, _rates_maximize)


def aimd_step_equalize(state: AimdState, config: AimdConfig, m: int,
                       params: ScenarioParams, rng) -> AimdState:
    """One iteration of the QoS equalization algorithm."""
    return _step(state, config, m, params, rng, _rates_equalize)


def _objective(problem: str, params: ScenarioParams, m: int, t: int, q: int) -> float:
    qos_s = binom_cdf(m - q + t, params.n_consumers, params.p_surge)
    qos_b = binom_cdf(q, t, params.p_bad)
    if problem == "maximize":
        return qos_s + qos_b
    return -abs(qos_s - qos_b)


def run_partition(problem: str, params: ScenarioParams, m: int, t: int,
                  config: Optional[AimdConfig] = None,
                  record: bool = True) -> Tuple[AimdTrace, int, QosReport]:
    """Simulate the chosen AIMD rule and extract the integer reserve.

    Returns the trace, the reserve estimate q_star (the better of
    floor/ceil of the converged average under the problem objective,
    evaluated with the exact cdf), and the resulting QoS report.
    Non-convergence is reported through ``trace.converged_at is None``,
    not as an exception.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"problem must be one of {PROBLEMS}")
    if t < 1:
        raise ValueError("t must be at least 1")
    if m > params.n_consumers:
        raise ValueError("m cannot exceed the consumer population")
    if config is None:
        config = auto_config(problem, m, t, params)
    if config.z_init + config.q_init >= m:
        raise ValueError("initial states must satisfy z_init + q_init < M")

    step = aimd_step_maximize if problem == "maximize" else aimd_step_equalize
    rng = np.random.Generator(np.random.Philox(config.seed))
    state = AimdState(config.z_init, config.q_init, t, gamma=config.gamma)

    z_hist = array("d")
    q_hist = array("d")
    ev_hist = array("b")
    za_hist = array("d")
    qa_hist = array("d")

    # Per-event average history for the windowed convergence test.
    za_events = array("d")
    qa_events = array("d")
    window = config.convergence_window
    min_events = 5 * window
    tol = config.convergence_tol
    converged_at = None
    total = 0

    for l in range(config.max_iterations):
        z_before = state.z
        q_before = state.q
        step(state, config, m, params, rng)
        total = l + 1
        if record:
            # Event iterations record the saturated claims that triggered
            # the event (the values entering the running averages); the
            # backoff outcome is visible from the next iteration on.
            if state.capacity_event:
                z_hist.append(z_before)
                q_hist.append(q_before)
            else:
                z_hist.append(state.z)
                q_hist.append(state.q)
            ev_hist.append(1 if state.capacity_event else 0)
            za_hist.append(state.z_avg)
            qa_hist.append(state.q_avg)
        if state.capacity_event:
            za_events.append(state.z_avg)
            qa_events.append(state.q_avg)
            k = state.k
            if k >= min_events:
                dz = abs(za_events[k - 1] - za_events[k - 1 - window])
                dq = abs(qa_events[k - 1] - qa_events[k - 1 - window])
                if (dz <= tol * max(abs(state.z_avg), 1.0)
                        and dq <= tol * max(abs(state.q_avg), 1.0)):
                    converged_at = l
                    break

    trace = AimdTrace(
        z=z_hist, q=q_hist, capacity_event=ev_hist,
        z_avg_series=za_hist, q_avg_series=qa_hist,
        capacity_count=state.k, z_avg=state.z_avg, q_avg=state.q_avg,
        converged_at=converged_at, total_iterations=total,
    )
    q_limit = min(m, t)
    lo = min(max(math.floor(state.q_avg), 0), q_limit)
    hi = min(max(math.ceil(state.q_avg), 0), q_limit)
    q_star = lo
    if hi != lo and _objective(problem, params, m, t, hi) > _objective(
            problem, params, m, t, lo):
        q_star = hi
    return trace, q_star, qos_all(params, m, t, q_star)


def scan_oracle(problem: str, params: ScenarioParams, m: int,
                t: int) -> Tuple[int, float]:
    """Centralized ground truth: scan all integer reserves Q in [0, min(M, T)].

    Maximization returns the argmax of QoS_s + QoS_b; equalization the
    argmin of |QoS_s - QoS_b|.  Ties break toward the smaller reserve.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"problem must be one of {PROBLEMS}")
    best_q, best_val = 0, -math.inf
    for q in range(0, min(m, t) + 1):
        val = _objective(problem, params, m, t, q)
        if val > best_val:
            best_q, best_val = q, val
    if problem == "equalize":
        return best_q, -best_val
    return best_q, best_val


def write_trace_csv(path, trace: AimdTrace) -> None:
    """Export the per-iteration history for downstream plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_CSV_COLUMNS)
        for l in range(len(trace.z)):
            writer.writerow([
                l,
                f"{trace.z[l]:.6f}",
                f"{trace.q[l]:.6f}",
                int(trace.capacity_event[l]),
                f"{trace.z_avg_series[l]:.6f}",
                f"{trace.q_avg_series[l]:.6f}",
            ])
