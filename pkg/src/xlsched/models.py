"""Transmission models: loss fractions, error propagation, and energy cost.

The concrete model couples an exponential loss curve with a Shannon-style
energy cost:

* a unit carrying ``size`` payload units transmitted with payload ``a`` is
  lost by the application with probability ``2**(-decay * min(a, size))``;
* the same expression gives the fraction of descendant value destroyed when
  the unit is a reference for later units (error propagation);
* sending ``a`` payload units inside a window of length ``tau`` seconds over
  a channel with gain ``channel`` costs
  ``(noise / channel) * (2**(a * bit_unit / (tau * bandwidth_hz)) - 1) * tau``.

``bit_unit`` converts stored payload units into bits for the spectral
efficiency exponent. The defaults interpret payloads in kilobits over a
200 kHz channel, so a full 10-kilobit unit in a full 50 ms window has
exponent 1. Setting ``bandwidth_hz = 1`` and ``bit_unit = 1`` recovers the
plain textbook expression used by several unit tests.

Every solver in the package only relies on two structural facts, checked by
:func:`verify_shape` for any candidate model: the loss fractions are
non-increasing in window length and payload, and loss and cost are jointly
convex in (window length, payload).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Protocol, runtime_checkable

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .core import CrossLayerDecision, DataUnit, DependencyGraph

__all__ = [
    "ShannonEnergyParams",
    "ShannonExpModel",
    "TransmissionModel",
    "ShapeReport",
    "energy_cost",
    "loss_fraction",
    "error_propagation",
    "independent_distortion",
    "dag_distortion",
    "verify_shape",
    "EXP_CLAMP",
]

# |exponent| bound keeping 2**z finite in IEEE double precision
EXP_CLAMP = 1023.0


def _exp2(z: float) -> float:
    if z > EXP_CLAMP:
        z = EXP_CLAMP
    elif z < -EXP_CLAMP:
        z = -EXP_CLAMP
    return 2.0 ** z


@dataclass(frozen=True)
class ShannonEnergyParams:
    """Parameters of the Shannon-gap energy curve.

    ``energy_cap``, when set, bounds the energy any single transmission may
    spend; solvers treat it as a restriction of the feasible payload range
    (the sublevel set of a jointly convex function, so convexity of the
    per-unit problems is preserved).
    """

    noise: float = 200.0
    bandwidth_hz: float = 200_000.0
    bit_unit: float = 1000.0
    energy_cap: Optional[float] = None

    def __post_init__(self) -> None:
        if self.noise <= 0:
            raise ValueError(f"noise density must be positive, got {self.noise}")
        if self.bandwidth_hz <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_hz}")
        if self.bit_unit <= 0:
            raise ValueError(f"bit_unit must be positive, got {self.bit_unit}")
        if self.energy_cap is not None and self.energy_cap <= 0:
            raise ValueError(f"energy cap must be positive when set, got {self.energy_cap}")


def energy_cost(params: ShannonEnergyParams, channel: float, start: float, end: float, payload: float) -> float:
    """Energy spent transmitting ``payload`` units in the window [start, end].

    A zero-length window is free for an empty payload and has infinite cost
    otherwise; the infinity is the sentinel all optimizers treat as "never
    selectable".
    """
    if payload < 0:
        raise ValueError(f"payload must be nonnegative, got {payload}")
    if end < start:
        raise ValueError(f"window end {end} precedes start {start}")
    if channel <= 0:
        raise ValueError(f"channel gain must be positive, got {channel}")
    tau = end - start
    if tau == 0.0:
        return 0.0 if payload == 0.0 else math.inf
    z = payload * params.bit_unit / (tau * params.bandwidth_hz)
    # multiply the small factors first; a clamped exponential times noise/channel
    # can overflow even though the full product is representable
    val = (params.noise / channel) * tau * (_exp2(z) - 1.0)
    if math.isinf(val):
        val = 2.0 ** EXP_CLAMP
    return val


def loss_fraction(decay: float, size: float, payload: float) -> float:
    """Fraction of a unit's value lost when ``payload`` of ``size`` is sent.

    Exponential in the transmitted payload, saturating at the full size:
    sending more than ``size`` buys nothing.
    """
    if payload < 0:
        raise ValueError(f"payload must be nonnegative, got {payload}")
    if decay <= 0 or size <= 0:
        raise ValueError(f"decay and size must be positive, got {decay}, {size}")
    p = _exp2(-decay * min(payload, size))
    return min(max(p, 0.0), 1.0)


def error_propagation(decay: float, size: float, payload: float) -> float:
    """Fraction of dependent units' value destroyed by this unit's losses.

    The default model reuses the loss curve: a partially received reference
    unit corrupts its descendants in the same proportion.
    """
    return loss_fraction(decay, size, payload)


def independent_distortion(impact: float, decay: float, size: float, payload: float) -> float:
    """Expected distortion of a unit with no dependencies."""
    if impact < 0:
        raise ValueError(f"impact must be nonnegative, got {impact}")
    return impact * loss_fraction(decay, size, payload)


def dag_distortion(
    index: int,
    units: tuple,
    decisions: tuple,
    graph: "DependencyGraph",
    model: "TransmissionModel",
) -> float:
    """Expected distortion of unit ``index`` (1-based) given everyone's decisions.

    A unit is useful only if it survives its own loss and every ancestor
    survived error propagation; otherwise its full impact is lost.
    """
    unit = units[index - 1]
    dec = decisions[index - 1]
    p = model.loss(unit, dec.start, dec.end, dec.payload)
    anc = graph.ancestors(index)
    if not anc:
        # bitwise-identical to the independent path
        return unit.impact * p
    survive = 1.0 - p
    for k in anc:
        ku = units[k - 1]
        kd = decisions[k - 1]
        survive *= 1.0 - model.errprop(ku, kd.start, kd.end, kd.payload)
    return unit.impact - unit.impact * survive


@runtime_checkable
class TransmissionModel(Protocol):
    """What the solvers need from a physical-layer model."""

    def loss(self, unit: "DataUnit", start: float, end: float, payload: float) -> float: ...

    def errprop(self, unit: "DataUnit", start: float, end: float, payload: float) -> float: ...

    def cost(self, unit: "DataUnit", start: float, end: float, payload: float) -> float: ...


@dataclass(frozen=True)
class ShannonExpModel:
    """Default model: exponential loss/error curves + Shannon-gap energy.

    Besides the generic three-function surface it exposes a closed-form
    payload minimizer (``best_payload``): the weighted objective
    ``L * 2**(-decay*a) + E * cost(tau, a)`` is convex with a stationary
    point solvable in the log domain, which the solvers use as a fast path.
    Generic models without such a method fall back to golden-section search.
    """

    params: ShannonEnergyParams = field(default_factory=ShannonEnergyParams)

    def loss(self, unit, start, end, payload) -> float:
        return loss_fraction(unit.decay, unit.size, payload)

    def errprop(self, unit, start, end, payload) -> float:
        return error_propagation(unit.decay, unit.size, payload)

    def cost(self, unit, start, end, payload) -> float:
        return energy_cost(self.params, unit.channel, start, end, payload)

    # -- fast paths used by the solvers ------------------------------------

    def payload_upper(self, unit, tau: float) -> float:
        """Largest feasible payload in a window of length ``tau``."""
        if tau <= 0.0:
            return 0.0
        upper = unit.size
        cap = self.params.energy_cap
        if cap is not None:
            # invert cost(tau, a) = cap; cost is increasing in a
            a_cap = (
                tau
                * self.params.bandwidth_hz
                / self.params.bit_unit
                * math.log2(1.0 + cap * unit.channel / (self.params.noise * tau))
            )
            upper = min(upper, max(a_cap, 0.0))
        return upper

    def best_payload(self, unit, tau: float, loss_weight: float, energy_weight: float) -> float:
        """argmin over payload of loss_weight*loss + energy_weight*cost."""
        if tau <= 0.0:
            return 0.0
        upper = self.payload_upper(unit, tau)
        if upper <= 0.0:
            return 0.0
        if loss_weight <= 0.0:
            return 0.0
        if energy_weight <= 0.0:
            return upper
        p = self.params
        ratio = (
            loss_weight * unit.decay * unit.channel * p.bandwidth_hz
            / (energy_weight * p.noise * p.bit_unit)
        )
        if ratio <= 0.0:
            return 0.0
        k = p.bit_unit / (tau * p.bandwidth_hz)
        a = math.log2(ratio) / (unit.decay + k)
        return min(max(a, 0.0), upper)

    # -- vectorized variants for the online hot path -----------------------

    def best_payload_vec(self, unit, taus: np.ndarray, loss_weight: float, energy_weight: float) -> np.ndarray:
        p = self.params
        taus = np.asarray(taus, dtype=float)
        out = np.zeros_like(taus)
        pos = taus > 0.0
        if not np.any(pos):
            return out
        if loss_weight <= 0.0:
            return out
        uppers = np.full_like(taus, float(unit.size))
        if p.energy_cap is not None:
            with np.errstate(divide="ignore"):
                a_cap = (
                    taus * p.bandwidth_hz / p.bit_unit
                    * np.log2(1.0 + p.energy_cap * unit.channel / (p.noise * np.where(pos, taus, 1.0)))
                )
            uppers = np.minimum(uppers, np.maximum(a_cap, 0.0))
        if energy_weight <= 0.0:
            out[pos] = uppers[pos]
            return out
        ratio = loss_weight * unit.decay * unit.channel * p.bandwidth_hz / (energy_weight * p.noise * p.bit_unit)
        if ratio <= 0.0:
            return out
        k = np.where(pos, p.bit_unit / (np.where(pos, taus, 1.0) * p.bandwidth_hz), np.inf)
        a = math.log2(ratio) / (unit.decay + k)
        out[pos] = np.clip(a[pos], 0.0, uppers[pos])
        return out

    def loss_vec(self, unit, payloads: np.ndarray) -> np.ndarray:
        z = np.clip(-unit.decay * np.minimum(payloads, unit.size), -EXP_CLAMP, EXP_CLAMP)
        return np.clip(np.exp2(z), 0.0, 1.0)

    def cost_vec(self, unit, taus: np.ndarray, payloads: np.ndarray) -> np.ndarray:
        p = self.params
        taus = np.asarray(taus, dtype=float)
        payloads = np.asarray(payloads, dtype=float)
        out = np.zeros(np.broadcast_shapes(taus.shape, payloads.shape))
        taus_b, pl_b = np.broadcast_arrays(taus, payloads)
        pos = taus_b > 0.0
        z = np.clip(
            pl_b[pos] * p.bit_unit / (taus_b[pos] * p.bandwidth_hz),
            -EXP_CLAMP,
            EXP_CLAMP,
        )
        vals = (p.noise / unit.channel) * taus_b[pos] * (np.exp2(z) - 1.0)
        out[pos] = np.where(np.isinf(vals), 2.0 ** EXP_CLAMP, vals)
        out[~pos & (pl_b > 0.0)] = math.inf
        return out


@dataclass(frozen=True)
class ShapeReport:
    """Outcome of the sampled structural checks on a model."""

    samples: int
    monotonicity_violations: int
    convexity_violations: int
    range_violations: int
    details: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return (
            self.monotonicity_violations == 0
            and self.convexity_violations == 0
            and self.range_violations == 0
        )


def verify_shape(
    model: TransmissionModel,
    unit: "DataUnit",
    sample_count: int,
    seed: int,
    tol: float = 1e-9,
) -> ShapeReport:
    """Sampled check of the structural conditions the solvers rely on.

    Draws windows/payloads in the unit's feasible ranges and tests, pairwise,
    that loss and error fractions are non-increasing in window length and
    payload, that loss and cost are midpoint-convex jointly in (window,
    payload), and that ranges hold (fractions in [0,1], cost nonnegative).
    Zero samples are vacuously fine.
    """
    rng = np.random.default_rng(seed)
    tau_max = unit.deadline - unit.ready
    if tau_max <= 0:
        raise ValueError("unit has an empty feasible window")
    mono = 0
    conv = 0
    rng_viol = 0
    details: list[str] = []

    def note(msg: str) -> None:
        if len(details) < 10:
            details.append(msg)

    t0 = unit.ready
    for _ in range(sample_count):
        tau1, tau2 = sorted(rng.uniform(1e-9 * tau_max, tau_max, size=2))
        a1, a2 = sorted(rng.uniform(0.0, unit.size, size=2))

        for fn, name in ((model.loss, "loss"), (model.errprop, "errprop")):
            v11 = fn(unit, t0, t0 + tau1, a1)
            v21 = fn(unit, t0, t0 + tau2, a1)
            v12 = fn(unit, t0, t0 + tau1, a2)
            if v21 > v11 + tol or v12 > v11 + tol:
                mono += 1
                note(f"{name} not non-increasing near tau={tau1:.6g}, a={a1:.6g}")
            if not (-tol <= v11 <= 1.0 + tol):
                rng_viol += 1
                note(f"{name} out of [0,1]: {v11!r}")

        w11 = model.cost(unit, t0, t0 + tau1, a1)
        if w11 < -tol:
            rng_viol += 1
            note(f"cost negative: {w11!r}")

        tm = 0.5 * (tau1 + tau2)
        am = 0.5 * (a1 + a2)
        for fn, name in ((model.loss, "loss"), (model.cost, "cost")):
            f1 = fn(unit, t0, t0 + tau1, a1)
            f2 = fn(unit, t0, t0 + tau2, a2)
            fm = fn(unit, t0, t0 + tm, am)
            if fm > 0.5 * (f1 + f2) + tol:
                conv += 1
                note(
                    f"{name} not midpoint-convex at tau=({tau1:.6g},{tau2:.6g}), a=({a1:.6g},{a2:.6g})"
                )

    return ShapeReport(
        samples=sample_count,
        monotonicity_violations=mono,
        convexity_violations=conv,
        range_violations=rng_viol,
        details=tuple(details),
    )
