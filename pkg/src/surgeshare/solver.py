"""Problem 1: minimum-cost dimensioning of the (M, T, Q) design.

``solve_min_cost`` uses a two-stage pipeline -- a continuous
relaxation (smooth cdf, concave approximated cost) solved with SLSQP
from several deterministic starts, followed by integer rounding and a
local search validated against the exact integer constraints.
``brute_force_design`` is an independent exact oracle used to verify
the solver output.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import statistics
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from .cost import CostModel, cost_eval, discount_real
from .qos import QosReport, ScenarioParams, min_items_for_qos, normal_approx_reserve, qos_all

__all__ = [
    "Design",
    "DesignReport",
    "SolverOpts",
    "CurvePoint",
    "InfeasibleDesignError",
    "feasible",
    "solve_min_cost",
    "brute_force_design",
    "compare_approaches",
    "sweep_cost_vs_qos",
    "sweep_cost_vs_n",
    "write_design_csv",
    "DESIGN_CSV_COLUMNS",
]

DESIGN_CSV_COLUMNS = (
    "N", "qos_target", "M", "T", "Q",
    "cost_total", "cost_per_consumer",
    "qos_ns", "qos_s", "qos_b", "oracle_verified",
)


class InfeasibleDesignError(ValueError):
    """Raised when no design can satisfy the QoS/structural constraints."""

    def __init__(self, message: str, constraint: str = ""):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class Design:
    """A candidate (M, T, Q): pool size, prosumer pool, reserve."""

    m: int
    t: int
    q: int


@dataclass(frozen=True)
class DesignReport:
    design: Design
    cost_real: float
    cost_per_consumer: float
    qos: QosReport
    solver_iterations: int = 0
    oracle_verified: bool = False


@dataclass(frozen=True)
class SolverOpts:
    """Tunables for solve_min_cost."""

    optimality_gap: float = 0.01
    multistarts: int = 5
    local_search_radius: int = 2
    max_local_rounds: int = 60


@dataclass(frozen=True)
class CurvePoint:
    """One sweep sample; costs are None when the point is infeasible."""

    x: float
    cost_total: Optional[float]
    cost_per_consumer: Optional[float]
    design: Optional[Design] = None


def feasible(params: ScenarioParams, d: Design) -> bool:
    """Check the three QoS constraints and the four structural ones."""
    n = params.n_consumers
    if not (n >= d.m >= d.q >= 0 and d.t >= d.q and n >= d.m - d.q + d.t):
        return False
    rep = qos_all(params, d.m, d.t, d.q)
    return (
        rep.qos_ns >= params.qos_target_ns
        and rep.qos_s >= params.qos_target_s
        and rep.qos_b >= params.qos_target_b
    )


def _min_items(n: int, p: float, target: float) -> int:
    # min_items_for_qos requires target < 1; the cdf reaches 1 exactly at n.
    if target >= 1.0:
        return n
    return min_items_for_qos(n, p, target)


def _report(params: ScenarioParams, model: CostModel, d: Design,
            iterations: int = 0, verified: bool = False) -> DesignReport:
    cost = cost_eval(d.m, d.t, d.q, model, "real")
    return DesignReport(
        design=d,
        cost_real=cost,
        cost_per_consumer=model.cost_per_consumer(cost, params.n_consumers),
        qos=qos_all(params, d.m, d.t, d.q),
        solver_iterations=iterations,
        oracle_verified=verified,
    )


# ---------------------------------------------------------------------------
# Exact oracle
# ---------------------------------------------------------------------------

def _scan_applicable(model: CostModel) -> bool:
    # The structured scan needs the cost to be independent of Q given M,
    # strictly increasing in T, and piecewise-linear increasing in M
    # within each discount band.  These hold for every CostModel the
    # type invariants admit (positive unit costs, discounts below 100%);
    # the guard stays so exotic future model kinds fall back safely.
    return (
        model.per_item_main > 0
        and model.per_item_prosumer > 0
        and all(0.0 <= d < 1.0 for _, d in model.discount.breakpoints)
    )


def _m_candidates(model: CostModel, m_min: int, m_max: int):
    # The discounted pool term can drop where a discount band begins, so
    # the cheapest pool of size >= m_min is either m_min itself or the
    # first item count of a higher band.
    yield m_min
    for min_qty, _ in model.discount.breakpoints:
        if m_min < min_qty <= m_max:
            yield min_qty


def brute_force_design(params: ScenarioParams, model: CostModel) -> DesignReport:
    """Exact integer optimum of Problem 1 by structured scan over T.

    For each T, the minimum reserve Q follows from the bad-behaviour
    constraint, and the minimum M from the non-surge and surge
    constraints; since cost rises with M inside a discount band but can
    drop where a band starts, the candidates per T are that corner plus
    every band start above it.  A guard verifies the cost-shape
    assumptions and falls back to a full 3-D scan otherwise.
    """
    n = params.n_consumers
    if not _scan_applicable(model):
        return _brute_force_full(params, model)

    m_ns = _min_items(n, params.p_nonsurge, params.qos_target_ns)
    a_s = _min_items(n, params.p_surge, params.qos_target_s)
    best: Optional[Tuple[float, int, int, int]] = None
    q = 0
    for t in range(0, n + 1):
        # Minimum reserve for this prosumer pool; monotone in t, so a
        # moving pointer suffices.
        while q < t and float(special.bdtr(q, t, params.p_bad)) < params.qos_target_b:
            q += 1
        m_min = max(m_ns, a_s - t + q, q)
        if m_min > n or q > t or m_min - q + t > n:
            continue
        # Larger M only tightens the N >= M - Q + T constraint; cap there.
        m_cap = min(n, n + q - t)
        for m in _m_candidates(model, m_min, m_cap):
            cost = cost_eval(m, t, q, model, "real")
            key = (cost, m, t, q)
            if best is None or key < best:
                best = key
    if best is None:
        raise InfeasibleDesignError(
            "no (M, T, Q) satisfies all constraints for these parameters",
            constraint="qos",
        )
    _, m, t, q = best
    return _report(params, model, Design(m, t, q), verified=True)


def _brute_force_full(params: ScenarioParams, model: CostModel) -> DesignReport:
    n = params.n_consumers
    if n > 300:
        raise InfeasibleDesignError(
            "full 3-D scan fallback is limited to N <= 300", constraint="scale"
        )
    m_ns = _min_items(n, params.p_nonsurge, params.qos_target_ns)
    a_s = _min_items(n, params.p_surge, params.qos_target_s)
    best: Optional[Tuple[float, int, int, int]] = None
    for t in range(0, n + 1):
        q_min = _min_items(t, params.p_bad, params.qos_target_b) if t > 0 else 0
        for q in range(q_min, t + 1):
            m_lo = max(m_ns, a_s - t + q, q)
            if m_lo > n or m_lo - q + t > n:
                continue
            for m in range(m_lo, min(n, n + q - t) + 1):
                cost = cost_eval(m, t, q, model, "real")
                key = (cost, m, t, q)
                if best is None or key < best:
                    best = key
    if best is None:
        raise InfeasibleDesignError(
            "no (M, T, Q) satisfies all constraints for these parameters",
            constraint="qos",
        )
    _, m, t, q = best
    return _report(params, model, Design(m, t, q), verified=True)


# ---------------------------------------------------------------------------
# SLSQP relaxation + integer polish
# ---------------------------------------------------------------------------

def _cdf_cont_real_n(x: float, n: float, p: float) -> float:
    # Continuous in both the threshold and the population size, used only
    # inside the relaxation where T is a real decision variable.
    if x >= n:
        return 1.0
    if x <= -1.0 or n <= 0.0:
        return 0.0
    return float(special.betainc(n - x, x + 1.0, 1.0 - p))


def _starting_points(params: ScenarioParams) -> List[np.ndarray]:
    n = params.n_consumers
    z_ns = statistics.NormalDist().inv_cdf(min(params.qos_target_ns, 1 - 1e-12))
    z_s = statistics.NormalDist().inv_cdf(min(params.qos_target_s, 1 - 1e-12))
    m0 = n * params.p_nonsurge + z_ns * math.sqrt(
        n * params.p_nonsurge * (1 - params.p_nonsurge))
    a_s0 = n * params.p_surge + z_s * math.sqrt(
        n * params.p_surge * (1 - params.p_surge))
    gap = max(a_s0 - m0, 1.0)
    starts = []
    for mult in (0.25, 0.5, 1.0, 1.5, 2.0):
        t0 = max(mult * gap, 1.0)
        q0 = max(normal_approx_reserve(max(int(t0), 1), params.p_bad,
                                       min(params.qos_target_b, 1 - 1e-12)), 0.0)
        m_start = max(m0, a_s0 - t0 + q0, q0 + 1.0)
        starts.append(np.array([m_start, t0, q0]))
    return starts


def _relaxed_solve(params: ScenarioParams, model: CostModel,
                   x0: np.ndarray) -> Tuple[np.ndarray, int]:
    n = params.n_consumers

    def objective(x):
        m, t, _ = x
        pool = model.per_item_main * (1.0 - model.smooth.value(m)) * m
        return (pool + model.per_item_prosumer * t) / model.per_item_main

    constraints = [
        {"type": "ineq", "fun": lambda x: _cdf_cont_real_n(x[0], n, params.p_nonsurge)
            - params.qos_target_ns},
        {"type": "ineq", "fun": lambda x: _cdf_cont_real_n(x[0] - x[2] + x[1], n,
            params.p_surge) - params.qos_target_s},
        {"type": "ineq", "fun": lambda x: _cdf_cont_real_n(x[2], max(x[1], 1e-6),
            params.p_bad) - params.qos_target_b},
        {"type": "ineq", "fun": lambda x: n - x[0]},
        {"type": "ineq", "fun": lambda x: x[0] - x[2]},
        {"type": "ineq", "fun": lambda x: x[1] - x[2]},
        {"type": "ineq", "fun": lambda x: n - (x[0] - x[2] + x[1])},
    ]
    bounds = [(0.0, float(n)), (0.0, float(n)), (0.0, float(n))]
    res = optimize.minimize(
        objective, x0, method="SLSQP", bounds=bounds, constraints=constraints,
        options={"maxiter": 300, "ftol": 1e-10},
    )
    return res.x, int(res.nit)


def _polish(params: ScenarioParams, model: CostModel, x: np.ndarray,
            opts: SolverOpts) -> Optional[Tuple[float, int, int, int]]:
    n = params.n_consumers
    best: Optional[Tuple[float, int, int, int]] = None

    def consider(m: int, t: int, q: int):
        nonlocal best
        if not (0 <= q <= min(m, t) and m <= n):
            return
        d = Design(m, t, q)
        if not feasible(params, d):
            return
        key = (cost_eval(m, t, q, model, "real"), m, t, q)
        if best is None or key < best:
            best = key

    # 3^3 rounding neighborhood of the relaxed solution.
    for dm in (math.floor(x[0]), round(x[0]), math.ceil(x[0])):
        for dt in (math.floor(x[1]), round(x[1]), math.ceil(x[1])):
            for dq in (math.floor(x[2]), round(x[2]), math.ceil(x[2])):
                consider(int(dm), int(dt), int(dq))
    if best is None:
        # Rounded point infeasible: repair by pushing up to the exact
        # integer requirements before searching locally.
        t0 = max(int(round(x[1])), 0)
        q0 = _min_items(t0, params.p_bad, params.qos_target_b) if t0 > 0 else 0
        m0 = max(
            _min_items(n, params.p_nonsurge, params.qos_target_ns),
            _min_items(n, params.p_surge, params.qos_target_s) - t0 + q0,
            q0,
        )
        consider(m0, t0, q0)
    if best is None:
        return None

    # Iterated +/- radius local search on the exact integer problem.
    r = opts.local_search_radius
    for _ in range(opts.max_local_rounds):
        _, m, t, q = best
        before = best
        for dm in range(-r, r + 1):
            for dt in range(-r, r + 1):
                for dq in range(-r, r + 1):
                    consider(m + dm, t + dt, q + dq)
        if best == before:
            break
    return best


def solve_min_cost(params: ScenarioParams, model: CostModel,
                   opts: Optional[SolverOpts] = None) -> DesignReport:
    """Minimum-cost design via SLSQP relaxation plus integer polish.

    The continuous stage works with the concave approximated cost and
    the smooth cdf; final feasibility and the reported cost always use
    the exact integer cdf and the real (stepped-discount) cost.
    """
    opts = opts or SolverOpts()
    n = params.n_consumers
    m_ns = _min_items(n, params.p_nonsurge, params.qos_target_ns)
    if m_ns > n:
        raise InfeasibleDesignError(
            f"non-surge target needs M = {m_ns} > N = {n}", constraint="qos_ns"
        )

    starts = _starting_points(params)[: max(opts.multistarts, 1)]
    total_iters = 0
    best: Optional[Tuple[float, int, int, int]] = None
    for x0 in starts:
        x_rel, nit = _relaxed_solve(params, model, x0)
        total_iters += nit
        for x_cand in (x_rel, x0):
            cand = _polish(params, model, x_cand, opts)
            if cand is not None and (best is None or cand < best):
                best = cand
    if best is None:
        raise InfeasibleDesignError(
            "solver found no feasible integer design", constraint="qos"
        )
    _, m, t, q = best
    return _report(params, model, Design(m, t, q), iterations=total_iters)


# ---------------------------------------------------------------------------
# Comparisons and sweeps
# ---------------------------------------------------------------------------

def compare_approaches(params: ScenarioParams, model: CostModel) -> Dict[str, DesignReport]:
    """Hybrid optimum vs pure B2C (surge-sized, no prosumers) vs ownership."""
    n = params.n_consumers
    hybrid = solve_min_cost(params, model)
    m_b2c = _min_items(n, params.p_surge, params.qos_target_s)
    b2c = _report(params, model, Design(m_b2c, 0, 0))
    ownership = _report(params, model, Design(n, 0, 0))
    return {"hybrid": hybrid, "b2c": b2c, "ownership": ownership}


def sweep_cost_vs_qos(params: ScenarioParams, model: CostModel,
                      qos_grid: Sequence[float]) -> List[CurvePoint]:
    """Optimal cost as a function of a common QoS target."""
    if not qos_grid:
        raise ValueError("qos_grid must be non-empty")
    points = []
    for target in qos_grid:
        p = dataclasses.replace(
            params, qos_target_ns=target, qos_target_s=target, qos_target_b=target)
        try:
            rep = solve_min_cost(p, model)
        except InfeasibleDesignError:
            points.append(CurvePoint(x=target, cost_total=None, cost_per_consumer=None))
            continue
        points.append(CurvePoint(x=target, cost_total=rep.cost_real,
                                 cost_per_consumer=rep.cost_per_consumer,
                                 design=rep.design))
    return points


def sweep_cost_vs_n(params: ScenarioParams, model: CostModel,
                    n_grid: Sequence[int]) -> List[CurvePoint]:
    """Optimal cost as a function of the consumer population size."""
    if not n_grid:
        raise ValueError("n_grid must be non-empty")
    points = []
    for n in n_grid:
        p = dataclasses.replace(params, n_consumers=int(n))
        try:
            rep = solve_min_cost(p, model)
        except InfeasibleDesignError:
            points.append(CurvePoint(x=float(n), cost_total=None, cost_per_consumer=None))
            continue
        points.append(CurvePoint(x=float(n), cost_total=rep.cost_real,
                                 cost_per_consumer=rep.cost_per_consumer,
                                 design=rep.design))
    return points


def write_design_csv(path, rows: Sequence[Tuple[ScenarioParams, DesignReport]]) -> None:
    """Write (params, report) pairs using the documented column set."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DESIGN_CSV_COLUMNS)
        for params, rep in rows:
            d = rep.design
            writer.writerow([
                params.n_consumers,
                params.qos_target_s,
                d.m, d.t, d.q,
                f"{rep.cost_real:.2f}",
                f"{rep.cost_per_consumer:.2f}",
                f"{rep.qos.qos_ns:.6f}",
                f"{rep.qos.qos_s:.6f}",
                f"{rep.qos.qos_b:.6f}",
                str(rep.oracle_verified).lower(),
            ])
