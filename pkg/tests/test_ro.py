"""Estimate-then-optimize baseline: cutting-plane linear minimization over the
cone-constrained safety set, and the full baseline run."""


import numpy as np
import pytest

from safefw import lp
from safefw.estimator import ConstraintEstimator
from safefw.oracle import ConstraintOracle, NoiseModel
from safefw.problem import (
    box_geometry_constants,
    box_polytope,
    box_quadratic_lipschitz,
    quadratic_objective,
)
from safefw.ro import RoConfig, ro_run, soc_linmin, soc_violation
from safefw.safety import make_safety_config
from safefw.sfw import ProblemSetup, run_fw_reference

from helpers import cross_fed_estimator, soc_linmin_reference


def setup_d2(sigma, seed=0, omega0=0.05, phi_override=None):
    p = box_polytope(2)
    xp = np.array([2.0, 0.5])
    obj = quadratic_objective(xp, box_quadratic_lipschitz(2, 1.0, xp))
    geo = box_geometry_constants(2, 1.0, obj, np.zeros(2))
    scfg = make_safety_config(
        delta=0.1, T=15, m=4, d=2, sigma=sigma, omega0=omega0,
        phi_delta_override=phi_override,
    )
    oracle = ConstraintOracle(p, NoiseModel("gaussian", sigma, seed), omega0)
    est = ConstraintEstimator(2, 4)
    return p, ProblemSetup(obj, np.zeros(2), geo, 2, 4), oracle, est, scfg


def estimated_state(sigma, seed, omega0=0.05):
    rng = np.random.default_rng(seed)
    p = box_polytope(2)
    centers = [np.zeros(2), rng.uniform(-0.4, 0.4, 2)]
    est, _ = cross_fed_estimator(p, sigma, seed, omega0, centers, [40, 40])
    return est


def test_zero_radius_reduces_to_lp():
    est = estimated_state(0.0, 1)
    scfg = make_safety_config(delta=0.1, T=15, m=4, d=2, sigma=0.0, omega0=0.05)
    c = np.array([-1.0, -0.3])
    res = soc_linmin(est, scfg, c, guard=14.0, anchor=np.zeros(2))
    eye = np.eye(2)
    ref = lp.solve(lp.LpProblem(c, np.vstack([est.a_hat().T, eye, -eye]),
                                np.concatenate([est.b_hat(), np.full(4, 14.0)])))
    assert not res.warning
    assert res.value == pytest.approx(ref.value, abs=1e-10)


def test_value_dominates_lp_relaxation():
    est = estimated_state(0.1, 2)
    scfg = make_safety_config(delta=0.1, T=15, m=4, d=2, sigma=0.1, omega0=0.05)
    c = np.array([-1.0, 0.4])
    res = soc_linmin(est, scfg, c, guard=14.0, anchor=np.zeros(2))
    eye = np.eye(2)
    ref = lp.solve(lp.LpProblem(c, np.vstack([est.a_hat().T, eye, -eye]),
                                np.concatenate([est.b_hat(), np.full(4, 14.0)])))
    assert res.value >= ref.value - 1e-9  # the cone set sits inside the estimated polytope


def test_outputs_pass_cone_test_and_cuts_monotone():
    rng = np.random.default_rng(3)
    scfg = make_safety_config(delta=0.1, T=15, m=4, d=2, sigma=0.1, omega0=0.05)
    for seed in range(5):
        est = estimated_state(0.1, 10 + seed)
        c = rng.normal(0, 1, 2)
        res = soc_linmin(est, scfg, c, guard=14.0, anchor=np.zeros(2))
        assert not res.warning
        assert soc_violation(est, scfg, res.point) <= 1e-7
        diffs = np.diff(res.lp_values)
        assert np.all(diffs >= -1e-9)


def test_agrees_with_independent_reference():
    rng = np.random.default_rng(4)
    scfg = make_safety_config(delta=0.1, T=15, m=4, d=2, sigma=0.1, omega0=0.05)
    for seed in range(4):
        est = estimated_state(0.1, 20 + seed)
        c = rng.normal(0, 1, 2)
        res = soc_linmin(est, scfg, c, guard=14.0, anchor=np.zeros(2))
        ref = soc_linmin_reference(est, scfg, c, np.zeros(2))
        assert abs(res.value - ref) <= 1e-4


def test_zero_noise_run_matches_classical_fw():
    p, setup, oracle, est, scfg = setup_d2(sigma=0.0)
    rec = ro_run(setup, oracle, est, scfg, RoConfig(total_measurements=40, T=15))
    ref = run_fw_reference(p, setup.objective, setup.x0, 15)
    assert rec.status == "completed"
    for a, b in zip(rec.xs, ref.xs):
        assert np.linalg.norm(a - b) <= 1e-8


def test_run_iterates_stay_in_safety_set():
    p, setup, oracle, est, scfg = setup_d2(sigma=0.1, seed=5, omega0=0.01)
    rec = ro_run(setup, oracle, est, scfg, RoConfig(total_measurements=4000, T=15))
    assert rec.status == "completed"
    for x in rec.xs:
        assert soc_violation(est, scfg, x) <= 1e-6
    assert all(p.max_violation(x) <= 1e-9 for x in rec.xs)
    assert rec.total_measurements >= 4000


def test_small_budget_hurts_final_value():
    finals = {}
    for budget in (6, 2000):
        gaps = []
        for seed in range(6):
            p, setup, oracle, est, scfg = setup_d2(sigma=0.1, seed=seed, omega0=0.01)
            rec = ro_run(setup, oracle, est, scfg, RoConfig(total_measurements=budget, T=15))
            gaps.append(rec.f_vals[-1] - 0.5)
        finals[budget] = float(np.mean(gaps))
    assert finals[6] >= finals[2000] - 1e-9


def test_empty_safety_set_is_reported():
    p, setup, oracle, est, scfg = setup_d2(sigma=0.1, seed=6, omega0=0.01, phi_override=1e6)
    rec = ro_run(setup, oracle, est, scfg, RoConfig(total_measurements=100, T=15))
    assert rec.status == "safety-set-empty"
    assert len(rec.xs) == 1


def test_budget_validation():
    p, setup, oracle, est, scfg = setup_d2(sigma=0.1)
    with pytest.raises(ValueError):
        ro_run(setup, oracle, est, scfg, RoConfig(total_measurements=4, T=15))
    with pytest.raises(ValueError):
        RoConfig(total_measurements=100, T=0)
