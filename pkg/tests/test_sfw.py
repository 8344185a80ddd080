"""Driver behavior: gap arithmetic, schedules, zero-noise equivalence with
classical Frank-Wolfe, margin decay, stopping, and the adaptive loop."""

import math

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
from safefw.safety import make_safety_config, nt_schedule
from safefw.sfw import (
    ProblemSetup,
    SfwConfig,
    et_bound,
    run,
    run_fw_reference,
    surrogate_gap,
)


def box_setup(d=2, x_prime=None, sigma=0.01, seed=0, omega0=0.01, T=15, cn=0.0,
              schedule="adaptive", phi_override=None):
    p = box_polytope(d)
    xp = np.array([2.0] + [0.5] * (d - 1)) if x_prime is None else np.asarray(x_prime, float)
    obj = quadratic_objective(xp, box_quadratic_lipschitz(d, 1.0, xp))
    x0 = np.zeros(d)
    geo = box_geometry_constants(d, 1.0, obj, x0)
    scfg = make_safety_config(
        delta=0.1, T=T, m=2 * d, d=d, sigma=sigma, omega0=omega0, cn=cn,
        schedule=schedule, phi_delta_override=phi_override,
    )
    oracle = ConstraintOracle(p, NoiseModel("gaussian", sigma, seed), omega0)
    est = ConstraintEstimator(d, 2 * d)
    return p, ProblemSetup(obj, x0, geo, d, 2 * d), oracle, est, scfg


def test_surrogate_gap_basics():
    assert surrogate_gap(np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([3.0, 4.0])) == 0.0
    # gradient at the origin for target [2, 0.5], direction vertex (1, 1)
    assert surrogate_gap(np.array([-2.0, -0.5]), np.zeros(2), np.array([1.0, 1.0])) == pytest.approx(2.5)


def test_gap_upper_bounds_suboptimality_zero_noise():
    p, setup, oracle, est, scfg = box_setup(sigma=0.0)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    f_star = 0.5
    for t in range(rec.steps()):
        grad = setup.objective.gradient(rec.xs[t])
        true_sol = lp.solve(lp.LpProblem(grad, p.A, p.b))
        true_gap = surrogate_gap(grad, rec.xs[t], true_sol.point)
        assert rec.f_vals[t] - f_star <= true_gap + 1e-9


def test_et_bound_scalings():
    _, setup, _, _, scfg = box_setup(sigma=0.01)
    geo = setup.geometry
    n0 = 10**6
    b1 = et_bound(scfg, geo, M=2.0, N=n0, d=2)
    b2 = et_bound(scfg, geo, M=2.0, N=4 * n0, d=2)
    assert b2 == pytest.approx(b1 / 2.0, rel=1e-12)
    # below the validity threshold the bound degenerates to +inf
    assert et_bound(scfg, geo, M=2.0, N=10, d=2) == math.inf


def test_et_bound_zero_uncertainty():
    _, setup, _, _, scfg = box_setup(sigma=0.0)
    assert scfg.phi_delta == 0.0
    assert et_bound(scfg, setup.geometry, M=2.0, N=5, d=2) == 0.0


def test_zero_noise_matches_classical_fw():
    # off-axis target so the direction LP has no ties
    for variant, cn in (("adaptive", 0.0), ("prescribed", 1.0)):
        p, setup, oracle, est, scfg = box_setup(sigma=0.0, x_prime=[2.0, 0.37], cn=cn, schedule=variant)
        rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant=variant))
        ref = run_fw_reference(p, setup.objective, setup.x0, 15)
        assert rec.status == "completed"
        assert len(rec.xs) == len(ref.xs)
        for a, b in zip(rec.xs, ref.xs):
            assert np.linalg.norm(a - b) <= 1e-9


def test_zero_noise_margin_decay():
    p, setup, oracle, est, scfg = box_setup(sigma=0.0)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    for t, x in enumerate(rec.xs):
        assert float(np.min(p.margins(x))) >= 1.0 / (t + 2) - 1e-9


def test_stop_immediately_with_infinite_target():
    for variant, cn in (("adaptive", 0.0), ("prescribed", 96.0)):
        _, setup, oracle, est, scfg = box_setup(sigma=0.01, cn=cn, schedule=variant)
        rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=math.inf, T=15, variant=variant))
        assert rec.status == "stopped-early"
        assert rec.stopped_at == 0
        assert len(rec.xs) == 1


def test_prescribed_total_matches_schedule_arithmetic():
    d = 2
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, cn=96.0, schedule="prescribed")
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="prescribed"))
    expected = sum(
        2 * d * math.ceil(max(nt_schedule(96.0, t), 2 * d) / (2 * d)) for t in range(15)
    )
    assert rec.total_measurements == expected
    assert rec.n_cum[-1] == expected
    assert rec.status == "completed"


def test_prescribed_requires_positive_cn():
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, cn=0.0, schedule="prescribed")
    with pytest.raises(ValueError):
        run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="prescribed"))


def test_step_recurrence_exact():
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, seed=5)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    for t in range(len(rec.xs) - 1):
        gamma = 1.0 / (t + 2)
        drift = rec.xs[t + 1] - rec.xs[t] - gamma * (rec.s_hats[t] - rec.xs[t])
        assert np.linalg.norm(drift) <= 1e-12


def test_adaptive_zero_noise_needs_no_extras():
    _, setup, oracle, est, scfg = box_setup(sigma=0.0)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    assert sum(rec.extra_batches) == 0


def test_adaptive_lhs_decays_across_extra_batches():
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, seed=7)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    assert rec.lhs_decay_pairs  # the run needed at least one extra batch
    for before, after in rec.lhs_decay_pairs:
        assert after < before + 1e-12


def test_adaptive_budget_exhaustion():
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, seed=2)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive", max_total_measurements=20))
    assert rec.status == "budget-exhausted"
    assert rec.stopped_at is not None
    assert rec.total_measurements <= 20 + 2 * 2  # at most one cross past the line


def test_measurement_counts_strictly_increase():
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, seed=9)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    steps = rec.steps()
    assert all(rec.n_cum[t] < rec.n_cum[t + 1] for t in range(steps - 1))
    assert all(rec.n_realized[t] > 0 for t in range(steps))


def test_safety_verdicts_recorded_per_iterate():
    _, setup, oracle, est, scfg = box_setup(sigma=0.01, seed=11)
    rec = run(setup, oracle, est, scfg, SfwConfig(epsilon=1e-9, T=15, variant="adaptive"))
    assert len(rec.safe) == len(rec.xs) == len(rec.lhs) == len(rec.min_margin)
    assert all(flag is True for flag in rec.safe)
    assert all(rec.lhs[t] <= rec.min_margin[t] for t in range(len(rec.xs)))


def test_config_validation():
    with pytest.raises(ValueError):
        SfwConfig(epsilon=0.0, T=15)
    with pytest.raises(ValueError):
        SfwConfig(epsilon=1.0, T=2)
    with pytest.raises(ValueError):
        SfwConfig(epsilon=1.0, T=15, variant="bogus")
