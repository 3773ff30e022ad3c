"""Offline solvers: dual decomposition over units with subgradient prices.

The joint schedule problem (pick a window and payload per unit, FIFO order
between consecutive windows, long-term average energy budget) is relaxed by
pricing the two coupling constraint families:

* ``price`` multiplies the average-energy budget violation;
* ``handoff_prices[i]`` multiplies the overlap ``end_i - start_{i+1}``.

At fixed prices the relaxation splits into one small problem per unit, solved
in two layers: the payload search inside a fixed window is convex (closed
form for the default model, golden-section otherwise), and the remaining
window search is convex in the window length after observing that the start
time enters linearly and is therefore optimal at an interval endpoint.

Interdependent units couple through the dependency graph; there the per-unit
subproblems are swept in index order (block coordinate descent) with warm
starts across outer iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    CrossLayerDecision,
    DataUnit,
    Instance,
    IterationRow,
    SolveReport,
)
from .models import TransmissionModel
from .search import golden_section

__all__ = [
    "UnitSolution",
    "DecisionGrid",
    "lower_optimization",
    "upper_optimization",
    "price_update",
    "handoff_update",
    "dag_sensitivity",
    "solve_independent",
    "solve_interdependent",
    "recover_primal",
    "instance_distortion",
    "average_energy",
    "report_to_csv",
]

_TINY = 1e-12

# When the budget price touches 0 while handoff prices are positive, the
# relaxed subproblems collapse windows to zero length at full payload and the
# realized relaxed energy is essentially unbounded. The dual value stays
# finite (energy is unpriced right there), but feeding that usage into the
# price step would throw the price orders of magnitude off. The steps
# therefore see usage clipped to a small multiple of the budget, which keeps
# the ascent direction (the sign of usage - budget is preserved).
_USAGE_CLIP_FACTOR = 3.0


@dataclass(frozen=True)
class UnitSolution:
    """Per-unit relaxed solve: decision, its priced objective, window value."""

    decision: CrossLayerDecision
    objective: float
    best_response: float


@dataclass(frozen=True)
class DecisionGrid:
    """Uniform decision lattice: per-unit window endpoints on a time grid
    anchored at the unit's ready time, payloads on an evenly spaced action
    grid between 0 and the unit's size.

    Passing a grid to a solver restricts every per-unit subproblem to these
    points, so the reported primal is feasible for the lattice-restricted
    problem and directly comparable to exhaustive search over the same
    lattice.
    """

    time_step: float
    action_points: int

    def __post_init__(self) -> None:
        if self.time_step <= 0.0:
            raise ValueError(f"time_step must be positive, got {self.time_step}")
        if self.action_points < 2:
            raise ValueError(f"action_points must be at least 2, got {self.action_points}")

    def action_step(self, unit: DataUnit) -> float:
        return unit.size / (self.action_points - 1)

    def options(self, unit: DataUnit, model: TransmissionModel):
        """All finite-cost (start, end, payload) choices of one unit.

        Returns six parallel arrays: starts, ends, payloads, and the model's
        loss, error-propagation and energy values at each choice. Choices
        whose energy exceeds the model's per-transmission cap are removed.
        """
        span = unit.deadline - unit.ready
        n_steps = int(math.floor(span / self.time_step + 1e-9))
        times = unit.ready + self.time_step * np.arange(n_steps + 1)
        actions = np.linspace(0.0, unit.size, self.action_points)

        starts, ends, payloads = [], [], []
        for xi in range(len(times)):
            for yi in range(xi, len(times)):
                for a in actions:
                    starts.append(times[xi])
                    ends.append(times[yi])
                    payloads.append(a)
        starts = np.asarray(starts)
        ends = np.asarray(ends)
        payloads = np.asarray(payloads)

        loss = np.empty(len(starts))
        err = np.empty(len(starts))
        cost = np.empty(len(starts))
        for idx in range(len(starts)):
            loss[idx] = model.loss(unit, starts[idx], ends[idx], payloads[idx])
            err[idx] = model.errprop(unit, starts[idx], ends[idx], payloads[idx])
            cost[idx] = model.cost(unit, starts[idx], ends[idx], payloads[idx])

        keep = np.isfinite(cost)
        cap = getattr(getattr(model, "params", None), "energy_cap", None)
        if cap is not None:
            keep &= cost <= cap + 1e-12
        return (
            starts[keep],
            ends[keep],
            payloads[keep],
            loss[keep],
            err[keep],
            cost[keep],
        )


def _solve_unit_grid(
    opts,
    handoff_prev: float,
    handoff_next: float,
    loss_coeff: float,
    err_coeff: float,
    energy_coeff: float,
) -> UnitSolution:
    """Exact per-unit relaxed solve over precomputed grid options.

    Same objective as the continuous path:
    loss_coeff*p + err_coeff*e + energy_coeff*w - handoff_prev*start
    + handoff_next*end; argmin ties resolve to the earliest window.
    """
    starts, ends, payloads, loss, err, cost = opts
    vals = loss_coeff * loss + err_coeff * err + energy_coeff * cost
    obj = vals - handoff_prev * starts + handoff_next * ends
    j = int(np.argmin(obj))
    return UnitSolution(
        decision=CrossLayerDecision(float(starts[j]), float(ends[j]), float(payloads[j])),
        objective=float(obj[j]),
        best_response=float(vals[j]),
    )


def _payload_argmin(
    model: TransmissionModel,
    unit: DataUnit,
    tau: float,
    loss_coeff: float,
    err_coeff: float,
    energy_coeff: float,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Minimize loss_coeff*p + err_coeff*e + energy_coeff*w over the payload.

    Zero-length windows admit only an empty payload. Uses the model's closed
    form when it matches (identical loss and error curves), golden-section
    search otherwise.
    """
    x0 = unit.ready

    def value_at(a: float) -> float:
        v = 0.0
        if loss_coeff != 0.0:
            v += loss_coeff * model.loss(unit, x0, x0 + tau, a)
        if err_coeff != 0.0:
            v += err_coeff * model.errprop(unit, x0, x0 + tau, a)
        if energy_coeff != 0.0:
            v += energy_coeff * model.cost(unit, x0, x0 + tau, a)
        return v

    if tau <= 0.0:
        return 0.0, value_at(0.0)

    best = getattr(model, "best_payload", None)
    if best is not None:
        a_star = best(unit, tau, loss_coeff + err_coeff, energy_coeff)
        return a_star, value_at(a_star)

    upper = getattr(model, "payload_upper", lambda u, t: u.size)(unit, tau)
    a_star, v_star = golden_section(value_at, 0.0, upper, tol=tol)
    return a_star, v_star


def lower_optimization(
    unit: DataUnit,
    price: float,
    start: float,
    end: float,
    num_units: int,
    model: TransmissionModel,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Best payload for a fixed window; returns (payload, window value).

    The window value is the unit's share of the priced objective,
    ``(impact * loss + price * cost) / num_units``.
    """
    if end < start:
        raise ValueError(f"window end {end} precedes start {start}")
    if num_units <= 0:
        raise ValueError(f"num_units must be positive, got {num_units}")
    m = float(num_units)
    return _payload_argmin(
        model,
        unit,
        end - start,
        loss_coeff=unit.impact / m,
        err_coeff=0.0,
        energy_coeff=price / m,
        tol=tol,
    )


def _window_search(
    unit: DataUnit,
    window_value: Callable[[float], float],
    handoff_prev: float,
    handoff_next: float,
    start_floor: float,
    tol: float,
) -> tuple[float, float, float]:
    """Minimize window_value(tau) - handoff_prev*start + handoff_next*end.

    For fixed tau the start time enters linearly with coefficient
    (handoff_next - handoff_prev), so it sits at an endpoint of
    [start_floor, deadline - tau]; substituting the endpoint leaves a convex
    function of tau alone. Ties prefer the maximal window (start at the
    floor, end at the deadline).

    Returns (start, tau, objective).
    """
    cf = handoff_next - handoff_prev
    tau_max = unit.deadline - start_floor

    def g(tau: float) -> float:
        base = window_value(tau) + handoff_next * tau
        if cf >= 0.0:
            return base + cf * start_floor
        return base + cf * (unit.deadline - tau)

    tau_star, g_star = golden_section(g, 0.0, tau_max, tol=tol)
    x_star = start_floor if cf >= 0.0 else unit.deadline - tau_star
    return x_star, tau_star, g_star


def upper_optimization(
    unit: DataUnit,
    price: float,
    handoff_prev: float,
    handoff_next: float,
    num_units: int,
    model: TransmissionModel,
    tol: float = 1e-8,
) -> UnitSolution:
    """Full per-unit relaxed solve: window and payload against given prices.

    Exploits that the window value depends on (start, end) only through the
    window length, which the shape conditions on conforming models imply.
    """
    if num_units <= 0:
        raise ValueError(f"num_units must be positive, got {num_units}")
    m = float(num_units)
    cache: dict[float, tuple[float, float]] = {}

    def window_value(tau: float) -> float:
        hit = cache.get(tau)
        if hit is None:
            hit = _payload_argmin(
                model, unit, tau, unit.impact / m, 0.0, price / m, tol=tol
            )
            cache[tau] = hit
        return hit[1]

    x_star, tau_star, obj = _window_search(
        unit, window_value, handoff_prev, handoff_next, unit.ready, tol
    )
    payload, f_star = cache.get(tau_star) or _payload_argmin(
        model, unit, tau_star, unit.impact / m, 0.0, price / m, tol=tol
    )
    return UnitSolution(
        decision=CrossLayerDecision(start=x_star, end=x_star + tau_star, payload=payload),
        objective=obj,
        best_response=f_star,
    )


def price_update(price: float, avg_usage: float, budget: float, step: float) -> float:
    """Projected subgradient step on the budget multiplier."""
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if price < 0.0:
        raise ValueError(f"price must be nonnegative, got {price}")
    return max(price + step * (avg_usage - budget), 0.0)


def handoff_update(handoff: float, end_i: float, start_next: float, step: float) -> float:
    """Projected subgradient step on one FIFO-coupling multiplier."""
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if handoff < 0.0:
        raise ValueError(f"handoff price must be nonnegative, got {handoff}")
    return max(handoff + step * (end_i - start_next), 0.0)


# -- dependency-aware pieces -------------------------------------------------


def _dag_coeffs(
    index: int,
    units: Sequence[DataUnit],
    decisions: Sequence[CrossLayerDecision],
    graph,
    model: TransmissionModel,
) -> tuple[float, float]:
    """Coefficients (ancestor survival A, descendant weight S) for unit ``index``.

    With everyone else's decisions held fixed, the terms of the total
    distortion that vary with unit i's decision collapse to
    ``impact_i * p_i * A - (1 - e_i) * S``.
    """
    anc = graph.ancestors(index)
    a_surv = 1.0
    for k in anc:
        ku, kd = units[k - 1], decisions[k - 1]
        a_surv *= 1.0 - model.errprop(ku, kd.start, kd.end, kd.payload)
    s_weight = 0.0
    for j in graph.descendants(index):
        ju, jd = units[j - 1], decisions[j - 1]
        term = ju.impact * (1.0 - model.loss(ju, jd.start, jd.end, jd.payload))
        for k in graph.ancestors(j):
            if k == index:
                continue
            ku, kd = units[k - 1], decisions[k - 1]
            term *= 1.0 - model.errprop(ku, kd.start, kd.end, kd.payload)
        s_weight += term
    return a_surv, s_weight


def dag_sensitivity(
    index: int,
    units: Sequence[DataUnit],
    decisions: Sequence[CrossLayerDecision],
    graph,
    model: TransmissionModel,
) -> Callable[[float, float, float], float]:
    """Distortion terms of the joint objective that move with unit ``index``.

    Returns a callable of (start, end, payload) equal, up to an additive
    constant, to the total graph-aware distortion as a function of this
    unit's decision alone. Finite differences of the returned callable match
    finite differences of the full objective.
    """
    unit = units[index - 1]
    a_surv, s_weight = _dag_coeffs(index, units, decisions, graph, model)

    def piece(start: float, end: float, payload: float) -> float:
        p = model.loss(unit, start, end, payload)
        e = model.errprop(unit, start, end, payload)
        return unit.impact * p * a_surv - (1.0 - e) * s_weight

    return piece


def _solve_unit_dag(
    unit: DataUnit,
    price: float,
    handoff_prev: float,
    handoff_next: float,
    num_units: int,
    model: TransmissionModel,
    anc_survival: float,
    desc_weight: float,
    tol: float = 1e-8,
) -> UnitSolution:
    """Per-unit relaxed solve with dependency-adjusted distortion terms.

    Objective (up to the constant -desc_weight/num_units):
    (impact*A*p + S*e)/M + price*w/M - handoff_prev*start + handoff_next*end.
    """
    m = float(num_units)
    cache: dict[float, tuple[float, float]] = {}

    def window_value(tau: float) -> float:
        hit = cache.get(tau)
        if hit is None:
            hit = _payload_argmin(
                model,
                unit,
                tau,
                loss_coeff=unit.impact * anc_survival / m,
                err_coeff=desc_weight / m,
                energy_coeff=price / m,
                tol=tol,
            )
            cache[tau] = hit
        return hit[1]

    x_star, tau_star, obj = _window_search(
        unit, window_value, handoff_prev, handoff_next, unit.ready, tol
    )
    payload, f_star = cache.get(tau_star) or _payload_argmin(
        model,
        unit,
        tau_star,
        unit.impact * anc_survival / m,
        desc_weight / m,
        price / m,
        tol=tol,
    )
    return UnitSolution(
        decision=CrossLayerDecision(start=x_star, end=x_star + tau_star, payload=payload),
        objective=obj,
        best_response=f_star,
    )


# -- whole-instance evaluation ----------------------------------------------


def instance_distortion(
    inst: Instance,
    decisions: Sequence[CrossLayerDecision],
    model: TransmissionModel,
    respect_graph: bool = True,
) -> float:
    """Average expected distortion of a full schedule."""
    m = inst.num_units
    if m == 0:
        return 0.0
    total = 0.0
    graph = inst.graph if respect_graph else None
    for u, d in zip(inst.units, decisions):
        p = model.loss(u, d.start, d.end, d.payload)
        if graph is None or not graph.ancestors(u.index):
            total += u.impact * p
            continue
        survive = 1.0 - p
        for k in graph.ancestors(u.index):
            ku, kd = inst.units[k - 1], decisions[k - 1]
            survive *= 1.0 - model.errprop(ku, kd.start, kd.end, kd.payload)
        total += u.impact - u.impact * survive
    return total / m


def average_energy(
    inst: Instance,
    decisions: Sequence[CrossLayerDecision],
    model: TransmissionModel,
) -> float:
    m = inst.num_units
    if m == 0:
        return 0.0
    return sum(
        model.cost(u, d.start, d.end, d.payload) for u, d in zip(inst.units, decisions)
    ) / m


def _lagrangian_value(
    inst: Instance,
    decisions: Sequence[CrossLayerDecision],
    price: float,
    handoffs: Sequence[float],
    model: TransmissionModel,
    respect_graph: bool,
) -> float:
    val = instance_distortion(inst, decisions, model, respect_graph)
    val += price * (average_energy(inst, decisions, model) - inst.budget)
    for i, mu in enumerate(handoffs):
        val += mu * (decisions[i].end - decisions[i + 1].start)
    return val


# -- primal recovery ----------------------------------------------------------


def recover_primal(
    inst: Instance,
    decisions: Sequence[CrossLayerDecision],
    model: TransmissionModel,
    price: float = 0.0,
    handoff_prices: Optional[Sequence[float]] = None,
    respect_graph: Optional[bool] = None,
    enforce_budget: bool = True,
    grid: Optional[DecisionGrid] = None,
) -> tuple[tuple[CrossLayerDecision, ...], float]:
    """Turn relaxed decisions into a feasible schedule and value it.

    Forward sweep: each start is floored at the previous (final) end; units
    whose window was actually moved get their end/payload re-optimized inside
    the clipped window under the current prices, everyone else passes through
    bit-exact. If the budget still binds, payloads are scaled down uniformly
    by bisection until average energy is within 1e-4 (relative) of, and not
    above, the budget; callers that price energy elsewhere can switch the
    rescale off with ``enforce_budget=False``.

    With ``grid``, repairs pick from the unit's lattice options instead and
    the budget is restored by shaving whole action steps, so the result stays
    on the lattice.
    """
    m = inst.num_units
    if m == 0:
        return (), 0.0
    if respect_graph is None:
        respect_graph = inst.graph is not None
    handoffs = list(handoff_prices) if handoff_prices is not None else [0.0] * max(m - 1, 0)
    if grid is not None:
        opts = [grid.options(u, model) for u in inst.units]
        return _recover_primal_grid(
            inst, decisions, opts, grid, model, price, handoffs, respect_graph, enforce_budget
        )

    out: list[CrossLayerDecision] = []
    prev_end = -math.inf
    for pos, (unit, dec) in enumerate(zip(inst.units, decisions), start=1):
        floor = max(unit.ready, prev_end)
        if dec.start >= floor and dec.end >= dec.start:
            out.append(dec)
            prev_end = dec.end
            continue
        if floor >= unit.deadline:
            # no feasible window left: the unit is dropped
            drop = CrossLayerDecision(start=unit.deadline, end=unit.deadline, payload=0.0)
            out.append(drop)
            prev_end = unit.deadline
            continue
        hn = handoffs[pos - 1] if pos - 1 < len(handoffs) else 0.0
        if respect_graph and inst.graph is not None:
            work = list(out) + list(decisions[pos - 1 :])
            a_surv, s_weight = _dag_coeffs(pos, inst.units, work, inst.graph, model)
        else:
            a_surv, s_weight = 1.0, 0.0
        cache: dict[float, tuple[float, float]] = {}

        def window_value(tau: float) -> float:
            hit = cache.get(tau)
            if hit is None:
                hit = _payload_argmin(
                    model,
                    unit,
                    tau,
                    loss_coeff=unit.impact * a_surv / m,
                    err_coeff=s_weight / m,
                    energy_coeff=price / m,
                )
                cache[tau] = hit
            return hit[1]

        tau_star, _ = golden_section(
            lambda tau: window_value(tau) + hn * tau, 0.0, unit.deadline - floor, tol=1e-8
        )
        payload = (cache.get(tau_star) or _payload_argmin(
            model, unit, tau_star, unit.impact * a_surv / m, s_weight / m, price / m
        ))[0]
        fixed = CrossLayerDecision(start=floor, end=floor + tau_star, payload=payload)
        out.append(fixed)
        prev_end = fixed.end

    # budget enforcement: uniform payload scaling, monotone in the scale
    def usage(scale: float) -> float:
        return sum(
            model.cost(u, d.start, d.end, scale * d.payload)
            for u, d in zip(inst.units, out)
        ) / m

    if enforce_budget and usage(1.0) > inst.budget:
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if usage(mid) > inst.budget:
                hi = mid
            else:
                lo = mid
        out = [
            CrossLayerDecision(d.start, d.end, lo * d.payload) for d in out
        ]

    final = tuple(out)
    return final, instance_distortion(inst, final, model, respect_graph)


def _recover_primal_grid(
    inst: Instance,
    decisions: Sequence[CrossLayerDecision],
    opts,
    grid: DecisionGrid,
    model: TransmissionModel,
    price: float,
    handoffs: Sequence[float],
    respect_graph: bool,
    enforce_budget: bool,
) -> tuple[tuple[CrossLayerDecision, ...], float]:
    """Lattice counterpart of the recover_primal forward sweep."""
    m = inst.num_units
    out: list[CrossLayerDecision] = []
    prev_end = -math.inf
    for pos, (unit, dec) in enumerate(zip(inst.units, decisions), start=1):
        floor = max(unit.ready, prev_end)
        if dec.start >= floor - _TINY and dec.end >= dec.start:
            out.append(dec)
            prev_end = dec.end
            continue
        starts, ends, payloads, loss, err, cost = opts[pos - 1]
        feas = starts >= floor - _TINY
        if not feas.any():
            drop = CrossLayerDecision(start=unit.deadline, end=unit.deadline, payload=0.0)
            out.append(drop)
            prev_end = unit.deadline
            continue
        hn = handoffs[pos - 1] if pos - 1 < len(handoffs) else 0.0
        if respect_graph and inst.graph is not None:
            work = list(out) + list(decisions[pos - 1 :])
            a_surv, s_weight = _dag_coeffs(pos, inst.units, work, inst.graph, model)
        else:
            a_surv, s_weight = 1.0, 0.0
        vals = (unit.impact * a_surv * loss + s_weight * err + price * cost) / m + hn * ends
        vals = np.where(feas, vals, math.inf)
        j = int(np.argmin(vals))
        fixed = CrossLayerDecision(float(starts[j]), float(ends[j]), float(payloads[j]))
        out.append(fixed)
        prev_end = fixed.end

    # budget restoration in whole action steps, largest spender first
    if enforce_budget:
        for _ in range(m * grid.action_points):
            costs = [
                model.cost(u, d.start, d.end, d.payload) for u, d in zip(inst.units, out)
            ]
            if sum(costs) / m <= inst.budget + _TINY:
                break
            i = max(range(m), key=lambda k: costs[k])
            d = out[i]
            step = grid.action_step(inst.units[i])
            out[i] = CrossLayerDecision(d.start, d.end, max(d.payload - step, 0.0))

    # local descent on the true objective: each unit re-picks its lattice
    # option between the neighbors' boundaries while the budget allows; the
    # varying dual iterates feeding this sweep supply diverse starting points
    budget_total = inst.budget * m
    for _ in range(8 * m):
        improved = False
        for i in range(m):
            unit = inst.units[i]
            starts, ends, payloads, loss, err, cost = opts[i]
            lo = out[i - 1].end if i > 0 else -math.inf
            hi = out[i + 1].start if i + 1 < m else math.inf
            spent_elsewhere = sum(
                model.cost(u, d.start, d.end, d.payload)
                for k, (u, d) in enumerate(zip(inst.units, out))
                if k != i
            )
            if respect_graph and inst.graph is not None:
                a_surv, s_weight = _dag_coeffs(i + 1, inst.units, out, inst.graph, model)
            else:
                a_surv, s_weight = 1.0, 0.0
            score = unit.impact * a_surv * loss + s_weight * err
            feas = (
                (starts >= lo - _TINY)
                & (ends <= hi + _TINY)
                & (cost <= budget_total - spent_elsewhere + _TINY)
            )
            if not feas.any():
                continue
            j = int(np.argmin(np.where(feas, score, math.inf)))
            d = out[i]
            cur = (
                unit.impact * a_surv * model.loss(unit, d.start, d.end, d.payload)
                + s_weight * model.errprop(unit, d.start, d.end, d.payload)
            )
            if score[j] < cur - 1e-12:
                out[i] = CrossLayerDecision(float(starts[j]), float(ends[j]), float(payloads[j]))
                improved = True
        if not improved:
            break

    final = tuple(out)
    return final, instance_distortion(inst, final, model, respect_graph)


def _polish_grid_pairs(
    inst: Instance,
    decisions: Sequence[CrossLayerDecision],
    opts,
    grid: DecisionGrid,
    model: TransmissionModel,
    respect_graph: bool,
    rounds: int = 4,
    time_radius: int = 3,
    pay_radius: int = 5,
) -> tuple[tuple[CrossLayerDecision, ...], float]:
    """Pairwise lattice descent around an incumbent schedule.

    The coupling constraints are pairwise (FIFO between neighbors, one shared
    budget), so single-unit moves stall where a handoff boundary or a payload
    budget swap must move jointly. For adjacent pairs this re-picks
    (end_i, start_{i+1}, payload_i, payload_{i+1}) with the outer endpoints
    held fixed; distant pairs only swap payload at fixed windows. A candidate
    over budget may still buy its way in by shaving bystander payloads one
    action step at a time (largest spender first). Candidates stay within
    ``time_radius`` / ``pay_radius`` lattice steps of the incumbent, scored
    by the true objective.
    """
    m = inst.num_units
    out = list(decisions)
    budget_total = inst.budget * m + 1e-9
    best = instance_distortion(inst, tuple(out), model, respect_graph)

    def rows_near(idx: int, fix_start: bool, fix_end: bool):
        starts, ends, payloads = opts[idx][0], opts[idx][1], opts[idx][2]
        d = out[idx]
        t_rad = time_radius * grid.time_step + _TINY
        p_rad = pay_radius * grid.action_step(inst.units[idx]) + _TINY
        keep = np.abs(payloads - d.payload) <= p_rad
        keep &= np.abs(starts - d.start) <= (_TINY if fix_start else t_rad)
        keep &= np.abs(ends - d.end) <= (_TINY if fix_end else t_rad)
        return np.flatnonzero(keep)

    def cost_of(idx: int, d: CrossLayerDecision) -> float:
        return model.cost(inst.units[idx], d.start, d.end, d.payload)

    for _ in range(rounds):
        improved = False
        for i in range(m - 1):
            for k in range(i + 1, m):
                adjacent = k == i + 1
                ri = rows_near(i, fix_start=True, fix_end=not adjacent)
                rk = rows_near(k, fix_start=not adjacent, fix_end=True)
                if ri.size == 0 or rk.size == 0:
                    continue
                spent_elsewhere = sum(
                    cost_of(j, out[j]) for j in range(m) if j not in (i, k)
                )
                si, ei, pi, _, _, ci = opts[i]
                sk, ek, pk, _, _, ck = opts[k]
                right_bound = out[k + 1].start if k + 1 < m else math.inf
                for a in ri:
                    for b in rk:
                        if ek[b] > right_bound + _TINY:
                            continue
                        if adjacent and ei[a] > sk[b] + _TINY:
                            continue
                        if not adjacent and ei[a] > out[i + 1].start + _TINY:
                            continue
                        cand = list(out)
                        cand[i] = CrossLayerDecision(float(si[a]), float(ei[a]), float(pi[a]))
                        cand[k] = CrossLayerDecision(float(sk[b]), float(ek[b]), float(pk[b]))
                        feasible = spent_elsewhere + ci[a] + ck[b] <= budget_total
                        for _ in range(2 * len(opts[i][2])):
                            if feasible:
                                break
                            by = {
                                j: cost_of(j, cand[j])
                                for j in range(m)
                                if j not in (i, k) and cand[j].payload > 0.0
                            }
                            if not by:
                                break
                            j = max(by, key=by.get)
                            dj = cand[j]
                            step = grid.action_step(inst.units[j])
                            cand[j] = CrossLayerDecision(
                                dj.start, dj.end, max(dj.payload - step, 0.0)
                            )
                            feasible = (
                                sum(cost_of(q, cand[q]) for q in range(m)) <= budget_total
                            )
                        if not feasible:
                            continue
                        val = instance_distortion(inst, cand, model, respect_graph)
                        if val < best - 1e-12:
                            best = val
                            out = cand
                            improved = True
        if not improved:
            break
    return tuple(out), best


# -- full solvers -------------------------------------------------------------


def _finalize_report(
    best_decisions,
    best_dual,
    best_primal,
    outer,
    inner_total,
    converged,
    price,
    handoffs,
    rows,
) -> SolveReport:
    gap = (best_primal - best_dual) / max(abs(best_dual), _TINY)
    return SolveReport(
        decisions=tuple(best_decisions),
        dual_value=best_dual,
        primal_value=best_primal,
        gap=gap,
        outer_iterations=outer,
        inner_iterations=inner_total,
        converged=converged,
        price=price,
        handoff_prices=tuple(handoffs),
        trajectory=tuple(rows),
    )


def solve_independent(
    inst: Instance,
    model: TransmissionModel,
    *,
    epsilon: float = 1e-3,
    max_outer: int = 2000,
    alpha0: float = 0.5,
    beta0: float = 1000.0,
    gap_tol: Optional[float] = None,
    collect_trajectory: bool = True,
    grid: Optional[DecisionGrid] = None,
) -> SolveReport:
    """Dual solve for units with no dependencies (any graph is ignored).

    Outer loop: per-unit relaxed solves at the current prices, projected
    subgradient updates with steps alpha0/k and beta0/k, stopping when the
    multiplier movement drops below ``epsilon`` (or the best relative gap
    reaches ``gap_tol``, when given). Reports the best feasible schedule and
    best dual value seen. With ``grid`` every subproblem is an exact argmin
    over the unit's lattice options and the recovered primal stays on the
    lattice.
    """
    m = inst.num_units
    if m == 0:
        return _finalize_report((), 0.0, 0.0, 0, 0, True, 0.0, (), ())
    opts = None if grid is None else [grid.options(u, model) for u in inst.units]
    price = 0.0
    mu = np.zeros(max(m - 1, 0))
    best_dual = -math.inf
    best_primal = math.inf
    best_decisions: tuple[CrossLayerDecision, ...] = tuple(
        CrossLayerDecision(u.deadline, u.deadline, 0.0) for u in inst.units
    )
    rows: list[IterationRow] = []
    converged = False
    outer = 0

    for k in range(1, max_outer + 1):
        outer = k
        sols = []
        for i, unit in enumerate(inst.units, start=1):
            hp = mu[i - 2] if i >= 2 else 0.0
            hn = mu[i - 1] if i <= m - 1 else 0.0
            if opts is None:
                sols.append(upper_optimization(unit, price, hp, hn, m, model))
            else:
                sols.append(
                    _solve_unit_grid(opts[i - 1], hp, hn, unit.impact / m, 0.0, price / m)
                )
        decisions = [s.decision for s in sols]
        dual_value = sum(s.objective for s in sols) - price * inst.budget
        avg_usage = average_energy(inst, decisions, model)

        if opts is None:
            primal_decisions, primal_value = recover_primal(
                inst, decisions, model, price=price, handoff_prices=mu, respect_graph=False
            )
        else:
            primal_decisions, primal_value = _recover_primal_grid(
                inst, decisions, opts, grid, model, price, mu, False, True
            )
        if dual_value > best_dual:
            best_dual = dual_value
        if primal_value < best_primal:
            best_primal = primal_value
            best_decisions = primal_decisions
        gap = (best_primal - best_dual) / max(abs(best_dual), _TINY)
        if collect_trajectory:
            rows.append(
                IterationRow(k, dual_value, primal_value, gap, price, float(np.linalg.norm(mu)), 1)
            )

        new_price = price_update(
            price,
            min(avg_usage, _USAGE_CLIP_FACTOR * inst.budget),
            inst.budget,
            alpha0 / k,
        )
        new_mu = mu.copy()
        for i in range(m - 1):
            new_mu[i] = handoff_update(
                mu[i], decisions[i].end, decisions[i + 1].start, beta0 / k
            )
        delta = abs(new_price - price) + float(np.linalg.norm(new_mu - mu))
        price, mu = new_price, new_mu
        if gap_tol is not None and gap <= gap_tol:
            converged = True
            break
        if delta <= epsilon:
            converged = True
            break

    if opts is not None:
        polished, pval = _polish_grid_pairs(inst, best_decisions, opts, grid, model, False)
        if pval < best_primal:
            best_primal, best_decisions = pval, polished

    return _finalize_report(
        best_decisions, best_dual, best_primal, outer, outer, converged, price, mu, rows
    )


def solve_interdependent(
    inst: Instance,
    model: TransmissionModel,
    *,
    epsilon: float = 1e-3,
    max_outer: int = 2000,
    max_inner: int = 50,
    inner_epsilon: float = 1e-6,
    alpha0: float = 0.5,
    beta0: float = 1000.0,
    gap_tol: Optional[float] = None,
    collect_trajectory: bool = True,
    sweep_log: Optional[list] = None,
    grid: Optional[DecisionGrid] = None,
) -> SolveReport:
    """Dual solve for graph-coupled units via block coordinate descent.

    Within each outer iteration the per-unit subproblems are swept in index
    order against the current decisions of everyone else (warm-started from
    the previous outer iteration); a sweep's candidate is only accepted when
    it does not increase the unit's local objective, so the relaxed objective
    is non-increasing sweep over sweep. ``sweep_log``, when given, receives
    (outer_k, sweep_index, relaxed objective) tuples for inspection. With
    ``grid`` the subproblems are exact argmins over lattice options and the
    recovered primal stays on the lattice.
    """
    m = inst.num_units
    if m == 0:
        return _finalize_report((), 0.0, 0.0, 0, 0, True, 0.0, (), ())
    if inst.graph is None:
        raise ValueError("solve_interdependent requires an instance with a graph")
    graph = inst.graph
    opts = None if grid is None else [grid.options(u, model) for u in inst.units]
    price = 0.0
    mu = np.zeros(max(m - 1, 0))
    if opts is None:
        decisions: list[CrossLayerDecision] = [
            CrossLayerDecision(u.ready, u.deadline, u.size) for u in inst.units
        ]
    else:
        # warm start must live on the lattice or it can survive the sweeps
        decisions = [
            _solve_unit_grid(opts[i], 0.0, 0.0, u.impact / m, 0.0, 0.0).decision
            for i, u in enumerate(inst.units)
        ]
    best_dual = -math.inf
    best_primal = math.inf
    best_decisions = tuple(decisions)
    rows: list[IterationRow] = []
    converged = False
    outer = 0
    inner_total = 0

    def unit_local_value(i: int, dec: CrossLayerDecision, a_surv: float, s_weight: float, hp: float, hn: float) -> float:
        unit = inst.units[i - 1]
        p = model.loss(unit, dec.start, dec.end, dec.payload)
        e = model.errprop(unit, dec.start, dec.end, dec.payload)
        w = model.cost(unit, dec.start, dec.end, dec.payload)
        return (
            (unit.impact * a_surv * p + s_weight * e + price * w) / m
            - hp * dec.start
            + hn * dec.end
        )

    for k in range(1, max_outer + 1):
        outer = k
        g_prev = _lagrangian_value(inst, decisions, price, mu, model, True)
        sweeps = 0
        for sweep in range(max_inner):
            sweeps += 1
            for i in range(1, m + 1):
                hp = mu[i - 2] if i >= 2 else 0.0
                hn = mu[i - 1] if i <= m - 1 else 0.0
                a_surv, s_weight = _dag_coeffs(i, inst.units, decisions, graph, model)
                if opts is None:
                    cand = _solve_unit_dag(
                        inst.units[i - 1], price, hp, hn, m, model, a_surv, s_weight
                    )
                else:
                    unit = inst.units[i - 1]
                    cand = _solve_unit_grid(
                        opts[i - 1], hp, hn, unit.impact * a_surv / m, s_weight / m, price / m
                    )
                incumbent = unit_local_value(i, decisions[i - 1], a_surv, s_weight, hp, hn)
                challenger = unit_local_value(i, cand.decision, a_surv, s_weight, hp, hn)
                if challenger < incumbent:
                    decisions[i - 1] = cand.decision
            g_now = _lagrangian_value(inst, decisions, price, mu, model, True)
            if sweep_log is not None:
                sweep_log.append((k, sweep, g_now))
            if abs(g_prev - g_now) < inner_epsilon:
                g_prev = g_now
                break
            g_prev = g_now
        inner_total += sweeps

        dual_value = g_prev
        avg_usage = average_energy(inst, decisions, model)
        if opts is None:
            primal_decisions, primal_value = recover_primal(
                inst, decisions, model, price=price, handoff_prices=mu, respect_graph=True
            )
        else:
            primal_decisions, primal_value = _recover_primal_grid(
                inst, decisions, opts, grid, model, price, mu, True, True
            )
        if dual_value > best_dual:
            best_dual = dual_value
        if primal_value < best_primal:
            best_primal = primal_value
            best_decisions = primal_decisions
        gap = (best_primal - best_dual) / max(abs(best_dual), _TINY)
        if collect_trajectory:
            rows.append(
                IterationRow(
                    k, dual_value, primal_value, gap, price, float(np.linalg.norm(mu)), sweeps
                )
            )

        new_price = price_update(
            price,
            min(avg_usage, _USAGE_CLIP_FACTOR * inst.budget),
            inst.budget,
            alpha0 / k,
        )
        new_mu = mu.copy()
        for i in range(m - 1):
            new_mu[i] = handoff_update(
                mu[i], decisions[i].end, decisions[i + 1].start, beta0 / k
            )
        delta = abs(new_price - price) + float(np.linalg.norm(new_mu - mu))
        price, mu = new_price, new_mu
        if gap_tol is not None and gap <= gap_tol:
            converged = True
            break
        if delta <= epsilon:
            converged = True
            break

    if opts is not None:
        polished, pval = _polish_grid_pairs(inst, best_decisions, opts, grid, model, True)
        if pval < best_primal:
            best_primal, best_decisions = pval, polished

    return _finalize_report(
        best_decisions, best_dual, best_primal, outer, inner_total, converged, price, mu, rows
    )


def report_to_csv(report: SolveReport, path: Union[str, Path], note: str = "") -> None:
    """Write the outer-iteration trajectory as CSV (atomically)."""
    lines = []
    if note:
        lines.append(f"# {note}")
    lines.append("k,dual_value,primal_value,gap,price,handoff_norm,inner_iterations")
    for r in report.trajectory:
        lines.append(
            f"{r.k},{r.dual_value!r},{r.primal_value!r},{r.gap!r},{r.price!r},{r.handoff_norm!r},{r.inner_iterations}"
        )
    text = "\n".join(lines) + "\n"
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(target)
