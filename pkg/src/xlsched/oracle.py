"""Exhaustive grid search over schedules: the reference optimum for small cases.

Every unit's window endpoints are restricted to a uniform time grid anchored
at its ready time and its payload to a uniform action grid; all FIFO-ordered,
budget-feasible combinations are enumerated. Cost grows as (window pairs x
actions)^(M-1) times a vectorized final level, so the solver refuses
instances above ``max_units`` (default 4; with the default 10 ms / 21-point
grids, M = 3 takes a couple of seconds, M = 4 minutes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CrossLayerDecision, Instance
from .models import TransmissionModel
from .offline import DecisionGrid

__all__ = ["OracleResult", "brute_force"]

_MAX_TIES = 200


@dataclass(frozen=True)
class OracleResult:
    """Grid optimum: average distortion, one argmin, and all tied argmins."""

    value: float
    decisions: tuple[CrossLayerDecision, ...]
    ties: tuple[tuple[CrossLayerDecision, ...], ...]
    time_step: float
    action_step: float


def brute_force(
    inst: Instance,
    model: TransmissionModel,
    time_step: float = 0.01,
    action_points: int = 21,
    max_units: int = 4,
    tie_tol: float = 1e-9,
) -> OracleResult:
    """Exact optimum of the grid-restricted instance.

    Returns the minimizing assignment and value (average distortion, graph
    aware when the instance has one), plus every grid assignment whose value
    ties the optimum within ``tie_tol`` (relative), up to a cap.
    """
    m = inst.num_units
    if m > max_units:
        raise ValueError(
            f"brute force refuses {m} units (> {max_units}); cost is exponential in units"
        )
    if m == 0:
        return OracleResult(0.0, (), ((),), time_step, inst.units[0].size if inst.units else 0.0)

    grid = DecisionGrid(time_step, action_points)
    opts = [grid.options(u, model) for u in inst.units]
    graph = inst.graph
    budget_total = inst.budget * m + 1e-9

    best = {"value": math.inf}
    candidates: list[tuple[float, tuple[int, ...]]] = []

    def anc_survival(pos: int, chosen: list[int]) -> float:
        """Product of ancestor survival fractions for unit ``pos`` (1-based)."""
        if graph is None:
            return 1.0
        surv = 1.0
        for k in graph.ancestors(pos):
            surv *= 1.0 - opts[k - 1][4][chosen[k - 1]]
        return surv

    def assign(pos: int, prev_end: float, energy: float, dist: float, chosen: list[int]) -> None:
        starts, ends, payloads, loss, err, cost = opts[pos - 1]
        unit = inst.units[pos - 1]
        if pos == m:
            mask = (starts >= prev_end - 1e-12) & (energy + cost <= budget_total)
            if not mask.any():
                return
            surv = anc_survival(pos, chosen)
            totals = dist + unit.impact * (1.0 - (1.0 - loss) * surv)
            totals = np.where(mask, totals, math.inf)
            idx = int(np.argmin(totals))
            val = float(totals[idx])
            if val < best["value"]:
                best["value"] = val
            bar = best["value"] + tie_tol * max(1.0, abs(best["value"]))
            for j in np.flatnonzero(totals <= bar):
                candidates.append((float(totals[j]), tuple(chosen + [int(j)])))
            return
        surv = anc_survival(pos, chosen)
        bar = best["value"] + tie_tol * max(1.0, abs(best["value"]))
        for j in range(len(starts)):
            if starts[j] < prev_end - 1e-12:
                continue
            e2 = energy + cost[j]
            if e2 > budget_total:
                continue
            d2 = dist + unit.impact * (1.0 - (1.0 - loss[j]) * surv)
            if d2 > bar:  # distortion only grows downstream
                continue
            chosen.append(j)
            assign(pos + 1, ends[j], e2, d2, chosen)
            chosen.pop()
            bar = best["value"] + tie_tol * max(1.0, abs(best["value"]))

    assign(1, -math.inf, 0.0, 0.0, [])

    if not math.isfinite(best["value"]):
        raise RuntimeError("no feasible grid assignment found")

    bar = best["value"] + tie_tol * max(1.0, abs(best["value"]))
    tied: list[tuple[CrossLayerDecision, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for val, combo in candidates:
        if val <= bar and combo not in seen:
            seen.add(combo)
            tied.append(
                tuple(
                    CrossLayerDecision(
                        float(opts[p][0][j]), float(opts[p][1][j]), float(opts[p][2][j])
                    )
                    for p, j in enumerate(combo)
                )
            )
            if len(tied) >= _MAX_TIES:
                break

    action_step = inst.units[0].size / max(action_points - 1, 1)
    return OracleResult(
        value=best["value"] / m,
        decisions=tied[0],
        ties=tuple(tied),
        time_step=time_step,
        action_step=action_step,
    )
