"""Loss/error/energy curves: frozen point values and structural checks."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from xlsched import (
    DataUnit,
    ShannonEnergyParams,
    ShannonExpModel,
    dag_distortion,
    energy_cost,
    error_propagation,
    independent_distortion,
    loss_fraction,
    verify_shape,
)
from xlsched.core import CrossLayerDecision, DependencyGraph

# flattens the curve to tau * (2**(a/tau) - 1) at unit channel gain
TEXTBOOK = ShannonEnergyParams(noise=1.0, bandwidth_hz=1.0, bit_unit=1.0)


def _unit(**kw):
    base = dict(index=1, impact=100.0, size=10.0, ready=0.0, deadline=0.05,
                decay=0.5, channel=1.0)
    base.update(kw)
    return DataUnit(**base)


class TestEnergyCost:
    def test_zero_payload_is_free(self):
        assert energy_cost(TEXTBOOK, 1.0, 0.0, 1.0, 0.0) == 0.0

    def test_one_bit_one_second(self):
        assert energy_cost(TEXTBOOK, 1.0, 0.0, 1.0, 1.0) == pytest.approx(1.0)

    def test_two_bits_two_seconds(self):
        # same spectral efficiency as above, double the airtime
        assert energy_cost(TEXTBOOK, 1.0, 0.0, 2.0, 2.0) == pytest.approx(2.0)

    def test_empty_window(self):
        assert energy_cost(TEXTBOOK, 1.0, 3.0, 3.0, 0.0) == 0.0
        assert math.isinf(energy_cost(TEXTBOOK, 1.0, 3.0, 3.0, 1.0))

    def test_channel_gain_divides(self):
        base = energy_cost(TEXTBOOK, 1.0, 0.0, 1.0, 1.0)
        assert energy_cost(TEXTBOOK, 2.0, 0.0, 1.0, 1.0) == pytest.approx(base / 2.0)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            energy_cost(TEXTBOOK, 1.0, 0.0, 1.0, -1.0)
        with pytest.raises(ValueError):
            energy_cost(TEXTBOOK, 1.0, 1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            energy_cost(TEXTBOOK, 0.0, 0.0, 1.0, 1.0)

    def test_huge_exponent_stays_finite(self):
        # clamped exponential: absurd payload/window ratios must not overflow
        v = energy_cost(TEXTBOOK, 1.0, 0.0, 1e-12, 1e6)
        assert math.isfinite(v) and v > 0


class TestLossFraction:
    def test_nothing_sent(self):
        assert loss_fraction(0.5, 10.0, 0.0) == 1.0

    def test_partial_payload(self):
        assert loss_fraction(0.5, 10.0, 2.0) == pytest.approx(0.5)

    def test_saturates_at_size(self):
        assert loss_fraction(0.5, 10.0, 20.0) == pytest.approx(0.03125)
        assert loss_fraction(0.5, 10.0, 20.0) == loss_fraction(0.5, 10.0, 10.0)

    def test_error_propagation_shares_the_curve(self):
        for a in (0.0, 2.0, 20.0):
            assert error_propagation(0.5, 10.0, a) == loss_fraction(0.5, 10.0, a)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            loss_fraction(0.5, 10.0, -1.0)
        with pytest.raises(ValueError):
            loss_fraction(0.0, 10.0, 1.0)
        with pytest.raises(ValueError):
            loss_fraction(0.5, 0.0, 1.0)


class TestIndependentDistortion:
    def test_full_loss(self):
        assert independent_distortion(100.0, 0.5, 10.0, 0.0) == 100.0

    def test_half_loss(self):
        assert independent_distortion(100.0, 0.5, 10.0, 2.0) == pytest.approx(50.0)

    def test_saturated(self):
        assert independent_distortion(50.0, 0.5, 10.0, 20.0) == pytest.approx(1.5625)


class _TableModel:
    """Model with per-index loss/error tables; energy is irrelevant here."""

    def __init__(self, loss_by_index, err_by_index):
        self._loss = loss_by_index
        self._err = err_by_index

    def loss(self, unit, start, end, payload):
        return self._loss[unit.index]

    def errprop(self, unit, start, end, payload):
        return self._err[unit.index]

    def cost(self, unit, start, end, payload):
        return 0.0


class TestDagDistortion:
    def _fixture(self, loss2, err1):
        units = (_unit(index=1), _unit(index=2, impact=100.0))
        decisions = (CrossLayerDecision(0.0, 0.01, 5.0),) * 2
        graph = DependencyGraph(num_nodes=2, edges=((2, 1),))
        model = _TableModel({1: 0.0, 2: loss2}, {1: err1, 2: 0.0})
        return units, decisions, graph, model

    def test_perfect_reception_everywhere(self):
        units, decisions, graph, model = self._fixture(loss2=0.0, err1=0.0)
        assert dag_distortion(2, units, decisions, graph, model) == 0.0

    def test_dead_ancestor_forfeits_everything(self):
        units, decisions, graph, model = self._fixture(loss2=0.0, err1=1.0)
        assert dag_distortion(2, units, decisions, graph, model) == units[1].impact

    def test_partial_survival(self):
        units, decisions, graph, model = self._fixture(loss2=0.25, err1=0.5)
        # 100 * (1 - 0.75 * 0.5)
        assert dag_distortion(2, units, decisions, graph, model) == pytest.approx(62.5)

    def test_no_ancestors_matches_independent(self):
        units, decisions, graph, model = self._fixture(loss2=0.25, err1=0.5)
        assert dag_distortion(1, units, decisions, graph, model) == 0.0


class TestVerifyShape:
    def test_default_model_is_clean(self):
        report = verify_shape(ShannonExpModel(), _unit(), 1000, seed=7)
        assert report.ok
        assert report.samples == 1000
        assert report.monotonicity_violations == 0
        assert report.convexity_violations == 0
        assert report.range_violations == 0

    def test_concave_cost_stub_is_flagged(self):
        class SqrtCost(ShannonExpModel):
            def cost(self, unit, start, end, payload):
                return math.sqrt(payload)

        report = verify_shape(SqrtCost(), _unit(), 500, seed=7)
        assert not report.ok
        assert report.convexity_violations > 0
        assert report.details  # a human-readable hint comes along

    def test_increasing_loss_stub_is_flagged(self):
        class BadLoss(ShannonExpModel):
            def loss(self, unit, start, end, payload):
                return min(payload / unit.size, 1.0)

        report = verify_shape(BadLoss(), _unit(), 500, seed=7)
        assert report.monotonicity_violations > 0

    def test_zero_samples_is_vacuous(self):
        report = verify_shape(ShannonExpModel(), _unit(), 0, seed=0)
        assert report.ok
        assert report.samples == 0


class TestBestPayload:
    def _reference(self, model, unit, tau, lw, ew):
        # independent 1-D search over the same objective
        upper = model.payload_upper(unit, tau)

        def f(a):
            return lw * model.loss(unit, 0.0, tau, a) + ew * model.cost(unit, 0.0, tau, a)

        res = minimize_scalar(f, bounds=(0.0, upper), method="bounded",
                              options={"xatol": 1e-12})
        cands = [(f(0.0), 0.0), (f(upper), upper), (res.fun, float(res.x))]
        return min(cands)

    @pytest.mark.parametrize("tau,lw,ew", [
        (0.05, 100.0, 1.0),
        (0.05, 100.0, 0.2),
        (0.01, 60.0, 1.0),
        (0.03, 150.0, 5.0),
    ])
    def test_matches_bounded_search(self, tau, lw, ew):
        model = ShannonExpModel()
        unit = _unit()
        a = model.best_payload(unit, tau, lw, ew)
        f_ref, a_ref = self._reference(model, unit, tau, lw, ew)
        f_a = lw * model.loss(unit, 0.0, tau, a) + ew * model.cost(unit, 0.0, tau, a)
        assert f_a <= f_ref + 1e-9
        assert a == pytest.approx(a_ref, abs=1e-6)

    def test_corners(self):
        model = ShannonExpModel()
        unit = _unit()
        assert model.best_payload(unit, 0.0, 100.0, 1.0) == 0.0
        assert model.best_payload(unit, 0.05, 0.0, 1.0) == 0.0
        # free energy: send everything
        assert model.best_payload(unit, 0.05, 100.0, 0.0) == unit.size

    def test_energy_cap_restricts_payload(self):
        capped = ShannonExpModel(params=ShannonEnergyParams(energy_cap=0.5))
        unit = _unit()
        a = capped.best_payload(unit, 0.05, 1e9, 1e-9)
        assert capped.cost(unit, 0.0, 0.05, a) <= 0.5 + 1e-9

    def test_vectorized_paths_agree_with_scalar(self):
        model = ShannonExpModel(params=ShannonEnergyParams(energy_cap=50.0))
        unit = _unit(channel=1.3)
        taus = np.linspace(0.001, 0.05, 23)
        vec = model.best_payload_vec(unit, taus, 80.0, 1.5)
        for tau, av in zip(taus, vec):
            assert av == pytest.approx(model.best_payload(unit, tau, 80.0, 1.5), abs=1e-12)
        pls = np.linspace(0.0, 15.0, 16)
        for a, lv in zip(pls, model.loss_vec(unit, pls)):
            assert lv == pytest.approx(model.loss(unit, 0.0, 0.01, a), abs=1e-15)
        costs = model.cost_vec(unit, taus, vec)
        for tau, a, cv in zip(taus, vec, costs):
            assert cv == pytest.approx(model.cost(unit, 0.0, tau, a), rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        ShannonEnergyParams(noise=0.0)
    with pytest.raises(ValueError):
        ShannonEnergyParams(bandwidth_hz=-1.0)
    with pytest.raises(ValueError):
        ShannonEnergyParams(energy_cap=0.0)
