"""Estimate-then-optimize baseline: one measurement phase around a safe site,
then Frank-Wolfe over the frozen safety set.

The linear subproblem over the cone-constrained safety set is solved by
cutting planes: LP relaxations over the estimated polytope, tightened with
gradient linearizations of the most-violated cone constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .estimator import ConstraintEstimator
from .oracle import ConstraintOracle, cross_pattern
from .safety import SafetyConfig, fact2_check
from .sfw import ProblemSetup, TrajectoryRecord, _pad_final_row, surrogate_gap


@dataclass
class RoConfig:
    total_measurements: int
    T: int
    measurement_site: np.ndarray | None = None

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")


@dataclass
class SocLinminResult:
    point: np.ndarray
    value: float
    cuts: int
    warning: bool
    lp_values: list[float] = field(default_factory=list)


def _soc_terms(est: ConstraintEstimator, phi_delta: float, s: np.ndarray):
    z = np.append(s, -1.0)
    pz = est.P @ z
    norm = math.sqrt(max(float(z @ pz), 0.0))
    violations = (s @ est.a_hat() - est.b_hat()) + phi_delta * norm
    return pz, norm, violations


def soc_violation(est: ConstraintEstimator, cfg: SafetyConfig, s: np.ndarray) -> float:
    """Largest cone-constraint violation of s against the current safety set."""
    _, _, violations = _soc_terms(est, cfg.phi_delta, np.asarray(s, dtype=float))
    return float(np.max(violations))


def soc_linmin(
    est: ConstraintEstimator,
    cfg: SafetyConfig,
    c: np.ndarray,
    guard: float,
    anchor: np.ndarray,
    tol: float = 1e-7,
    max_cuts: int = 200,
) -> SocLinminResult:
    """Approximately minimize <c, s> over the safety set by cutting planes.

    Starts from the LP relaxation over the estimated polytope (inside a guard
    box); each round adds the linearization of the most-violated cone
    constraint at the current LP solution. Stops when the worst violation is
    at most tol. If the cut budget runs out, the final LP point is pulled back
    toward the safe anchor by bisection and flagged with warning=True.
    """
    if est.P is None:
        raise ValueError("design does not yet span R^(d+1)")
    c = np.asarray(c, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    d = est.d
    eye = np.eye(d)
    rows = [np.vstack([est.a_hat().T, eye, -eye])]
    rhs = [np.concatenate([est.b_hat(), np.full(2 * d, guard)])]
    lp_values: list[float] = []
    point = anchor.copy()
    for cut in range(max_cuts + 1):
        sol = lp.solve(lp.LpProblem(c, np.vstack(rows), np.concatenate(rhs)))
        if sol.status != "optimal":
            return SocLinminResult(anchor.copy(), float(c @ anchor), cut, True, lp_values)
        point = sol.point
        lp_values.append(sol.value)
        pz, norm, violations = _soc_terms(est, cfg.phi_delta, point)
        worst = int(np.argmax(violations))
        if violations[worst] <= tol:
            return SocLinminResult(point, float(c @ point), cut, False, lp_values)
        if cut == max_cuts:
            break
        if norm <= 0.0:
            break  # cone term vanished; nothing differentiable to cut on
        grad_norm = pz[:d] / norm
        a_cut = est.a_hat()[:, worst] + cfg.phi_delta * grad_norm
        b_cut = (
            est.b_hat()[worst]
            - cfg.phi_delta * norm
            + cfg.phi_delta * float(grad_norm @ point)
        )
        rows.append(a_cut[None, :])
        rhs.append(np.array([b_cut]))
    # cut budget exhausted: bisect back toward the known safe anchor
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        candidate = anchor + mid * (point - anchor)
        if soc_violation(est, cfg, candidate) <= tol:
            lo = mid
        else:
            hi = mid
    safe_point = anchor + lo * (point - anchor)
    return SocLinminResult(safe_point, float(c @ safe_point), max_cuts, True, lp_values)


def ro_run(
    setup: ProblemSetup,
    oracle: ConstraintOracle,
    est: ConstraintEstimator,
    scfg: SafetyConfig,
    rcfg: RoConfig,
) -> TrajectoryRecord:
    """One-shot estimation around the measurement site, then T Frank-Wolfe
    iterations over the frozen safety set."""
    obj = setup.objective
    site = setup.x0 if rcfg.measurement_site is None else np.asarray(rcfg.measurement_site, dtype=float)
    if rcfg.total_measurements < 2 * (setup.d + 1):
        raise ValueError(f"total_measurements must be at least 2(d+1) = {2 * (setup.d + 1)}")
    pattern = cross_pattern(site, scfg.omega0, rcfg.total_measurements)
    for probe in pattern.points:
        value_sum = oracle.measure_repeated(probe, pattern.multiplicity)
        est.absorb_repeated(probe, value_sum, pattern.multiplicity)

    rec = TrajectoryRecord()
    x = setup.x0.copy()
    rec._append_iterate(x, obj.value(x), fact2_check(est, scfg, x), est)
    rec.total_measurements = est.N
    if not rec.safe[0]:
        rec.status = "safety-set-empty"
        _pad_final_row(rec, est.N)
        return rec
    for t in range(rcfg.T):
        grad = obj.gradient(x)
        res = soc_linmin(est, scfg, grad, setup.dfs_guard, site)
        rec.ghat.append(surrogate_gap(grad, x, res.point))
        rec.et.append(math.nan)
        rec.n_realized.append(pattern.total if t == 0 else 0)
        rec.n_cum.append(est.N)
        rec.s_hats.append(res.point.copy())
        rec.dfs_status.append("soc-warning" if res.warning else "soc-optimal")
        rec.extra_batches.append(0)
        x = x + (res.point - x) / (t + 2)
        rec._append_iterate(x, obj.value(x), fact2_check(est, scfg, x), est)
    _pad_final_row(rec, est.N)
    return rec
