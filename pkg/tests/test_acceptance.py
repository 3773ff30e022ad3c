"""Acceptance gate: one test per shipped criterion.

Run `pytest -v tests/test_acceptance.py` for one pass/fail line per
criterion; add -s for the measured numbers. Heavy artifacts (solver runs,
the oracle comparison grid, the online sweeps) are module-scoped fixtures
shared by the criteria that consume them.
"""

import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from xlsched import (
    CausalStream,
    DecisionGrid,
    DependencyGraph,
    Instance,
    TraceParams,
    ValueModel,
    brute_force,
    default_config,
    generate_trace,
    run_online,
    solve_independent,
    solve_interdependent,
    verify_shape,
)
from xlsched.experiments import (
    build_instance,
    build_model,
    run_experiment,
    run_online_cell,
    steady_mean,
)
from xlsched.offline import average_energy

CFG = default_config()
MODEL = build_model(CFG)
W_SWEEP = (5.0, 10.0, 15.0, 20.0)
SEEDS = (1, 2, 3, 4, 5)


def _plan_cfg(**kw):
    return replace(CFG, plan=replace(CFG.plan, **kw))


@pytest.fixture(scope="module")
def indep_run():
    inst = generate_trace(TraceParams(seed=1, num_dus=10))
    t0 = time.perf_counter()
    report = solve_independent(inst, MODEL, epsilon=1e-3, max_outer=500,
                               alpha0=0.5, beta0=1000.0)
    return {"inst": inst, "report": report, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def dag_run():
    from xlsched import generate_dag

    base = generate_trace(TraceParams(seed=1, num_dus=10))
    graph = generate_dag("random", 10, 10, seed=1, edge_prob=0.5)
    inst = Instance(units=base.units, budget=base.budget, graph=graph)
    sweeps = []
    t0 = time.perf_counter()
    report = solve_interdependent(inst, MODEL, epsilon=1e-3, max_outer=1000,
                                  max_inner=50, inner_epsilon=1e-6,
                                  alpha0=0.5, beta0=1000.0, sweep_log=sweeps)
    return {"inst": inst, "report": report, "sweeps": sweeps,
            "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def grid_cells():
    """Both solvers against the exhaustive grid oracle on 20 small cells."""
    grid = DecisionGrid(0.01, 21)
    cells = []
    t0 = time.perf_counter()
    for m in (2, 3):
        for kind in ("independent", "chain"):
            for seed in SEEDS:
                inst = generate_trace(TraceParams(seed=seed, num_dus=m))
                if kind == "chain":
                    g = DependencyGraph(m, tuple((i, i - 1) for i in range(2, m + 1)))
                    inst = Instance(units=inst.units, budget=inst.budget, graph=g)
                    report = solve_interdependent(inst, MODEL, max_outer=600, grid=grid)
                else:
                    report = solve_independent(inst, MODEL, max_outer=600, grid=grid)
                oracle = brute_force(inst, MODEL, time_step=0.01, action_points=21)
                # decision deviation in grid steps, against the nearest tied optimum
                dev = min(
                    max(
                        max(abs(d.start - o.start) / oracle.time_step,
                            abs(d.end - o.end) / oracle.time_step,
                            abs(d.payload - o.payload) / oracle.action_step)
                        for d, o in zip(report.decisions, tie)
                    )
                    for tie in oracle.ties
                )
                rel = (report.primal_value - oracle.value) / max(abs(oracle.value), 1e-12)
                cells.append({"cell": (m, kind, seed), "report": report,
                              "dev": dev, "rel": rel})
    return {"cells": cells, "elapsed": time.perf_counter() - t0}


def _sweep_means(dag_kind, policies, seeds=SEEDS, budgets=W_SWEEP, cycles=100):
    cfg = _plan_cfg(cycles=cycles, steady_start=31)
    means = {}
    for w in budgets:
        for pol in policies:
            vals = [steady_mean(run_online_cell(cfg, pol, w, s, dag_kind), 31)
                    for s in seeds]
            means[(w, pol)] = float(np.mean(vals))
    return means


@pytest.fixture(scope="module")
def online_indep_sweep():
    t0 = time.perf_counter()
    means = _sweep_means("none", ("proposed", "myopic"))
    return {"means": means, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def online_dag_sweep():
    t0 = time.perf_counter()
    means = _sweep_means("random", ("proposed", "myopic"))
    return {"means": means, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def online_long_run():
    cfg = _plan_cfg(cycles=400, steady_start=31)
    return run_online_cell(cfg, "proposed", 10.0, 1, "none")


def test_criterion_01_independent_gap_convergence(indep_run):
    report = indep_run["report"]
    print(f"criterion 1: gap {report.gap:.4%} after {report.outer_iterations} "
          f"outer iterations in {indep_run['elapsed']:.1f}s")
    assert report.outer_iterations <= 500
    assert report.gap < 0.01, f"relative duality gap {report.gap:.4%}"
    assert indep_run["elapsed"] < 10.0


def test_criterion_02_recovered_decisions_match_oracle(grid_cells):
    worst = max(c["dev"] for c in grid_cells["cells"])
    print(f"criterion 2: worst decision deviation {worst:.3f} grid steps "
          f"across {len(grid_cells['cells'])} cells")
    for c in grid_cells["cells"]:
        assert c["dev"] <= 1.0 + 1e-9, f"cell {c['cell']}: {c['dev']:.3f} grid steps"


def test_criterion_03_interdependent_gap_convergence(dag_run):
    report = dag_run["report"]
    inner = [r.inner_iterations for r in report.trajectory]
    med = float(np.median(inner))
    print(f"criterion 3: gap {report.gap:.4%} after {report.outer_iterations} "
          f"outer iterations, median inner {med:g}, {dag_run['elapsed']:.1f}s")
    assert report.outer_iterations <= 1000
    assert report.gap < 0.02, f"relative duality gap {report.gap:.4%}"
    assert med <= 10.0
    assert dag_run["elapsed"] < 60.0


def test_criterion_04_oracle_value_equivalence(grid_cells):
    worst = max(c["rel"] for c in grid_cells["cells"])
    print(f"criterion 4: worst relative value excess {worst:.2e}, "
          f"{grid_cells['elapsed']:.1f}s for 20 cells")
    for c in grid_cells["cells"]:
        assert -1e-9 <= c["rel"] <= 0.02, f"cell {c['cell']}: {c['rel']:.4%}"
    assert grid_cells["elapsed"] < 120.0


def test_criterion_05_online_beats_myopic_independent(online_indep_sweep):
    means = online_indep_sweep["means"]
    for w in W_SWEEP:
        ratio = means[(w, "proposed")] / means[(w, "myopic")]
        print(f"criterion 5: W={w:g} proposed/myopic = {ratio:.4f}")
        assert ratio >= 1.02, f"W={w:g}: only {ratio:.4f}"
    assert online_indep_sweep["elapsed"] < 300.0


def test_criterion_06_online_beats_myopic_interdependent(online_dag_sweep):
    means = online_dag_sweep["means"]
    for w in W_SWEEP:
        ratio = means[(w, "proposed")] / means[(w, "myopic")]
        print(f"criterion 6: W={w:g} proposed/myopic = {ratio:.4f}")
        assert ratio >= 1.15, f"W={w:g}: only {ratio:.4f}"


def test_criterion_07_learned_policy_tracks_clairvoyant_baseline():
    cfg = _plan_cfg(cycles=100, steady_start=31)
    for seed in (1, 2, 3):
        p = steady_mean(run_online_cell(cfg, "proposed", 10.0, seed, "random"), 31)
        m = steady_mean(run_online_cell(cfg, "mdu", 10.0, seed, "random"), 31)
        print(f"criterion 7: seed {seed} proposed/mdu = {p / m:.4f}")
        assert p >= 0.90 * m, f"seed {seed}: proposed {p:.2f} vs mdu {m:.2f}"


def test_criterion_08_budget_compliance(indep_run, dag_run, online_long_run):
    for name, run in (("independent", indep_run), ("interdependent", dag_run)):
        used = average_energy(run["inst"], run["report"].decisions, MODEL)
        w = run["inst"].budget
        print(f"criterion 8: offline {name} avg energy {used:.4f} vs W={w:g}")
        assert used <= w + 1e-6

    state = online_long_run.state
    avg = state.cum_energy / state.step
    rel = abs(avg - 10.0) / 10.0
    binding = state.price > 1e-6
    print(f"criterion 8: online cumulative avg energy {avg:.4f} "
          f"({rel:+.3%} of W=10, final price {state.price:.3f})")
    assert binding, "W=10 should be binding on the default workload"
    assert rel <= 0.05


def test_criterion_09_property_suite(indep_run, dag_run, grid_cells,
                                     online_long_run, tmp_path):
    # sampled shape checks on the transmission model
    unit = generate_trace(TraceParams(seed=11, num_dus=1)).units[0]
    shape = verify_shape(MODEL, unit, sample_count=1000, seed=11)
    assert shape.ok, shape.details
    print("criterion 9: 1000 shape samples, 0 violations")

    # multipliers stay nonnegative along every recorded trajectory
    reports = [indep_run["report"], dag_run["report"]]
    reports += [c["report"] for c in grid_cells["cells"]]
    for report in reports:
        assert report.price >= 0.0
        for row in report.trajectory:
            assert row.price >= 0.0
            assert row.handoff_norm >= 0.0
    assert all(r.price >= 0.0 for r in online_long_run.rows)
    print(f"criterion 9: multipliers nonnegative in {len(reports)} reports")

    # coordinate sweeps never increase the inner objective
    by_outer = {}
    for k, sweep, value in dag_run["sweeps"]:
        by_outer.setdefault(k, []).append(value)
    assert by_outer
    for k, values in by_outer.items():
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-9, f"outer {k}: sweep value rose {a} -> {b}"
    print(f"criterion 9: inner sweeps non-increasing over {len(by_outer)} outer steps")

    # weak duality in every report
    for report in reports:
        assert report.gap >= -1e-9
    print("criterion 9: weak duality holds in every report")

    # the value model pins V(0) = 0 and stays monotone where visited
    vm = ValueModel(coeffs=online_long_run.state.coeffs)
    assert vm.value(0.0) == 0.0
    inst = build_instance(_plan_cfg(cycles=400), num_dus=4000, seed=1, budget=10.0)
    backlogs = [
        max(d.end - u.ready, 0.0)
        for d, u in zip(online_long_run.decisions, inst.units[1:])
    ]
    smax = max(backlogs)
    assert smax > 0.0
    vals = np.array([vm.value(s) for s in np.linspace(0.0, smax, 200)])
    worst_drop = float(np.max(np.maximum.accumulate(vals) - vals))
    tol = 0.01 * float(np.max(np.abs(vals)))
    print(f"criterion 9: V(0)=0, worst drop {worst_drop:.2e} over visited "
          f"range [0, {smax:.4f}] (band {tol:.2e})")
    assert worst_drop <= tol

    # identical configs produce byte-identical outputs
    cfg = _plan_cfg(policies=("proposed", "myopic"), w_sweep=(5.0,),
                    seeds=(1,), cycles=2, cycle_len=3, steady_start=1)
    cfg = replace(cfg, trace=replace(cfg.trace, num_dus=6))
    a = run_experiment("fig7", cfg, out_dir=tmp_path / "a")
    b = run_experiment("fig7", cfg, out_dir=tmp_path / "b")
    assert len(a) == len(b) > 0
    for pa, pb in zip(sorted(a), sorted(b)):
        assert pa.read_bytes() == pb.read_bytes()
    print(f"criterion 9: {len(a)} CSVs byte-identical across reruns")


def test_criterion_10_scope_and_docs():
    root = Path(__file__).resolve().parent.parent
    readme = (root / "README.md").read_text(encoding="utf-8").lower()
    # codec-dependent image-quality figures are documented as out of scope,
    # with the 8-frame dependency workload as the structural stand-in
    assert "out of scope" in readme
    assert "gop8" in readme
    pyproject = (root / "pyproject.toml").read_text(encoding="utf-8").lower()
    for banned in ("matplotlib", "plotly", "seaborn", "bokeh"):
        assert banned not in pyproject
    print("criterion 10: docs state the scope cut; no plotting dependencies")
