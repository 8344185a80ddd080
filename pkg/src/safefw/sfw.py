"""Feasible Frank-Wolfe driver over a polytope learned from noisy measurements.

Each iteration measures around the current point, refreshes the least-squares
constraint estimates, solves the estimated direction-finding LP, and steps
with gamma_t = 1/(t+2). The prescribed variant takes the scheduled counts and
asserts safety; the adaptive variant keeps measuring until the stepped
candidate passes the scalar safety test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .estimator import ConstraintEstimator
from .oracle import ConstraintOracle, cross_pattern
from .problem import GeometryConstants, Objective, Polytope
from .safety import SafetyConfig, SafetyVerdict, c_delta_constant, fact2_check, nt_schedule

VARIANTS = ("prescribed", "adaptive")


@dataclass
class SfwConfig:
    epsilon: float
    T: int
    variant: str = "prescribed"
    max_total_measurements: int = 10_000_000

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.T < 3:
            raise ValueError("T must be at least 3")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass
class ProblemSetup:
    """What the driver is allowed to see: objective, start, and geometry.

    The true constraint matrix stays behind the oracle.
    """

    objective: Objective
    x0: np.ndarray
    geometry: GeometryConstants
    d: int
    m: int

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.shape != (self.d,):
            raise ValueError(f"x0 must have length {self.d}")

    @property
    def dfs_guard(self) -> float:
        return 10.0 * self.geometry.gamma0


@dataclass
class TrajectoryRecord:
    """Per-iterate history of a run. Lists indexed by iterate; iteration-only
    fields (directions, DFS statuses, extra batches) have one entry per step.

    feasible is filled by the harness against ground truth; the driver never
    sees the true constraints.
    """

    xs: list[np.ndarray] = field(default_factory=list)
    f_vals: list[float] = field(default_factory=list)
    ghat: list[float] = field(default_factory=list)
    et: list[float] = field(default_factory=list)
    n_realized: list[int] = field(default_factory=list)
    n_cum: list[int] = field(default_factory=list)
    lhs: list[float] = field(default_factory=list)
    min_margin: list[float] = field(default_factory=list)
    safe: list[bool | None] = field(default_factory=list)
    s_hats: list[np.ndarray] = field(default_factory=list)
    dfs_status: list[str] = field(default_factory=list)
    extra_batches: list[int] = field(default_factory=list)
    lhs_decay_pairs: list[tuple[float, float]] = field(default_factory=list)
    snapshots: list[tuple[np.ndarray, np.ndarray] | None] = field(default_factory=list)
    status: str = "completed"
    stopped_at: int | None = None
    total_measurements: int = 0
    feasible: list[bool] | None = None

    @property
    def final_x(self) -> np.ndarray:
        return self.xs[-1]

    def steps(self) -> int:
        return len(self.s_hats)

    def _append_iterate(self, x, f, verdict: SafetyVerdict | None, est=None):
        self.xs.append(np.asarray(x, dtype=float).copy())
        self.f_vals.append(float(f))
        self.snapshots.append(None if est is None else (est.beta_hat.copy(), est.xtx()))
        if verdict is None:
            self.lhs.append(math.nan)
            self.min_margin.append(math.nan)
            self.safe.append(None)
        else:
            self.lhs.append(verdict.lhs)
            self.min_margin.append(verdict.min_margin)
            self.safe.append(verdict.safe)

    def _set_verdict(self, row: int, verdict: SafetyVerdict, est=None):
        self.lhs[row] = verdict.lhs
        self.min_margin[row] = verdict.min_margin
        self.safe[row] = verdict.safe
        if est is not None:
            self.snapshots[row] = (est.beta_hat.copy(), est.xtx())


def surrogate_gap(grad: np.ndarray, x: np.ndarray, s_hat: np.ndarray) -> float:
    """Frank-Wolfe optimality certificate <grad, x - s_hat>."""
    return float(np.asarray(grad) @ (np.asarray(x) - np.asarray(s_hat)))


def et_bound(cfg: SafetyConfig, geo: GeometryConstants, M: float, N: int, d: int) -> float:
    """High-probability bound M C / sqrt(N) on the gap-estimation error.

    Below the sample-count precondition N >= C^2 / (Gamma0+1)^2 the bound is
    not valid and +inf is returned, so the stopping rule never fires early.
    """
    c_delta = c_delta_constant(geo, cfg.phi_delta, cfg.omega0, d)
    if N < c_delta * c_delta / ((geo.gamma0 + 1.0) ** 2):
        return math.inf
    if N < 1:
        return math.inf
    return M * c_delta / math.sqrt(N)


def solve_dfs(est: ConstraintEstimator, guard: float, grad: np.ndarray) -> lp.LpSolution:
    """Linear minimization of <grad, s> over the estimated polytope.

    A box |s_i| <= guard keeps the LP bounded while estimates are rough; the
    guard rows are inactive once the estimates are accurate.
    """
    d = est.d
    eye = np.eye(d)
    A = np.vstack([est.a_hat().T, eye, -eye])
    b = np.concatenate([est.b_hat(), np.full(2 * d, guard)])
    return lp.solve(lp.LpProblem(np.asarray(grad, dtype=float), A, b))


def _absorb_cross(
    oracle: ConstraintOracle, est: ConstraintEstimator, center: np.ndarray, omega0: float, n: int
) -> int:
    pattern = cross_pattern(center, omega0, n)
    for point in pattern.points:
        value_sum = oracle.measure_repeated(point, pattern.multiplicity)
        est.absorb_repeated(point, value_sum, pattern.multiplicity)
    return pattern.total


def _dfs_direction(
    est: ConstraintEstimator,
    oracle: ConstraintOracle,
    setup: ProblemSetup,
    cfg: SafetyConfig,
    x: np.ndarray,
    grad: np.ndarray,
    remeasure: bool,
) -> tuple[np.ndarray, str, int]:
    """DFS solution with the empty-estimate fallback.

    An infeasible estimated polytope forces one extra cross batch and a
    re-solve (when remeasure is set); if it stays infeasible the step
    direction degenerates to the current point (a zero step is always safe).
    """
    extra = 0
    sol = solve_dfs(est, setup.dfs_guard, grad)
    if sol.status != "optimal" and remeasure:
        extra = _absorb_cross(oracle, est, x, cfg.omega0, 2 * setup.d)
        sol = solve_dfs(est, setup.dfs_guard, grad)
    if sol.status == "optimal":
        return sol.point, "optimal", extra
    return x.copy(), f"{sol.status}-fallback", extra


def run(
    setup: ProblemSetup,
    oracle: ConstraintOracle,
    est: ConstraintEstimator,
    safety_cfg: SafetyConfig,
    cfg: SfwConfig,
) -> TrajectoryRecord:
    """Execute the full driver loop, recording everything per iterate."""
    if cfg.variant == "prescribed" and safety_cfg.cn <= 0.0:
        raise ValueError("prescribed schedule needs a positive cn")
    if cfg.variant == "adaptive":
        return _run_adaptive(setup, oracle, est, safety_cfg, cfg)
    return _run_prescribed(setup, oracle, est, safety_cfg, cfg)


def _run_prescribed(setup, oracle, est, scfg, cfg) -> TrajectoryRecord:
    obj = setup.objective
    d = setup.d
    rec = TrajectoryRecord()
    x = setup.x0.copy()
    rec._append_iterate(x, obj.value(x), None)
    total = 0
    for t in range(cfg.T):
        n_req = max(nt_schedule(scfg.cn, t), 2 * d)
        total += _absorb_cross(oracle, est, x, scfg.omega0, n_req)
        rec._set_verdict(t, fact2_check(est, scfg, x), est)  # asserted, not enforced
        grad = obj.gradient(x)
        s_hat, status, extra = _dfs_direction(est, oracle, setup, scfg, x, grad, remeasure=True)
        total += extra
        gap = surrogate_gap(grad, x, s_hat)
        bound = et_bound(scfg, setup.geometry, obj.M, est.N, d)
        rec.ghat.append(gap)
        rec.et.append(bound)
        rec.n_realized.append(total - (rec.n_cum[-1] if rec.n_cum else 0))
        rec.n_cum.append(total)
        rec.s_hats.append(s_hat.copy())
        rec.dfs_status.append(status)
        rec.extra_batches.append(0)
        if gap + bound <= cfg.epsilon:
            rec.status = "stopped-early"
            rec.stopped_at = t
            break
        gamma = 1.0 / (t + 2)
        x = x + gamma * (s_hat - x)
        rec._append_iterate(x, obj.value(x), None)
    else:
        rec._set_verdict(len(rec.xs) - 1, fact2_check(est, scfg, x), est)
    _pad_final_row(rec, total)
    rec.total_measurements = total
    return rec


def adaptive_step(
    est: ConstraintEstimator,
    scfg: SafetyConfig,
    oracle: ConstraintOracle,
    setup: ProblemSetup,
    x: np.ndarray,
    t: int,
    budget_left: int,
    epsilon: float = -math.inf,
    rec: TrajectoryRecord | None = None,
) -> tuple[np.ndarray | None, SafetyVerdict | None, dict]:
    """One adaptive iteration at x = x_t.

    Takes the 2d*t warm-up batch (one full cross at t = 0), solves the DFS and
    checks the stopping rule, then keeps adding single cross batches at x_t,
    re-estimating and re-solving, until the stepped candidate passes the
    scalar safety test. The info dict flags early stopping and budget
    exhaustion; extra safety batches never precede the stop check.
    """
    d = setup.d
    obj = setup.objective
    gamma = 1.0 / (t + 2)
    taken = _absorb_cross(oracle, est, x, scfg.omega0, 2 * d * max(t, 1))
    grad = obj.gradient(x)
    extras = 0
    first = True
    while True:
        s_hat, status, extra = _dfs_direction(est, oracle, setup, scfg, x, grad, remeasure=False)
        candidate = x + gamma * (s_hat - x)
        verdict = fact2_check(est, scfg, candidate)
        info = {
            "taken": taken,
            "extras": extras,
            "s_hat": s_hat,
            "dfs_status": status,
            "ghat": surrogate_gap(grad, x, s_hat),
            "et": et_bound(scfg, setup.geometry, obj.M, est.N, d),
        }
        if first and info["ghat"] + info["et"] <= epsilon:
            info["stop"] = True
            return None, None, info
        first = False
        if verdict.safe:
            return candidate, verdict, info
        if taken + 2 * d > budget_left:
            info["budget_exhausted"] = True
            return None, None, info
        lhs_before = verdict.lhs
        taken += _absorb_cross(oracle, est, x, scfg.omega0, 2 * d)
        info["taken"] = taken
        extras += 1
        if rec is not None:
            rec.lhs_decay_pairs.append((lhs_before, fact2_check(est, scfg, candidate).lhs))


def _run_adaptive(setup, oracle, est, scfg, cfg) -> TrajectoryRecord:
    obj = setup.objective
    rec = TrajectoryRecord()
    x = setup.x0.copy()
    rec._append_iterate(x, obj.value(x), None)
    for t in range(cfg.T):
        warmup = 2 * setup.d * max(t, 1)
        if t > 0 and est.N + warmup > cfg.max_total_measurements:
            rec.status = "budget-exhausted"
            rec.stopped_at = t
            break
        candidate, verdict, info = adaptive_step(
            est,
            scfg,
            oracle,
            setup,
            x,
            t,
            cfg.max_total_measurements - est.N,
            epsilon=cfg.epsilon,
            rec=rec,
        )
        if t == 0:
            rec._set_verdict(0, fact2_check(est, scfg, x), est)
        rec.ghat.append(info["ghat"])
        rec.et.append(info["et"])
        rec.n_realized.append(info["taken"])
        rec.n_cum.append(est.N)
        rec.dfs_status.append(info["dfs_status"])
        rec.extra_batches.append(info["extras"])
        rec.s_hats.append(np.asarray(info["s_hat"], dtype=float).copy())
        if candidate is None:
            if info.get("stop"):
                rec.status = "stopped-early"
            else:
                rec.status = "budget-exhausted"
            rec.stopped_at = t
            break
        x = candidate
        rec._append_iterate(x, obj.value(x), verdict, est)
    _pad_final_row(rec, est.N)
    rec.total_measurements = est.N
    return rec


def _pad_final_row(rec: TrajectoryRecord, total: int) -> None:
    """Align iteration lists with the iterate list (final iterate has no batch)."""
    while len(rec.ghat) < len(rec.xs):
        rec.ghat.append(math.nan)
        rec.et.append(math.nan)
        rec.n_realized.append(0)
        rec.n_cum.append(total)


def run_fw_reference(
    polytope: Polytope,
    objective: Objective,
    x0: np.ndarray,
    T: int,
    epsilon: float | None = None,
) -> TrajectoryRecord:
    """Classical Frank-Wolfe on the true polytope, gamma_t = 1/(t+2).

    Zero-uncertainty reference used for comparisons and envelope checks.
    """
    rec = TrajectoryRecord()
    x = np.asarray(x0, dtype=float).copy()
    rec._append_iterate(x, objective.value(x), None)
    for t in range(T):
        grad = objective.gradient(x)
        sol = lp.solve(lp.LpProblem(grad, polytope.A, polytope.b))
        if sol.status != "optimal":
            raise ValueError(f"linear subproblem over the true polytope is {sol.status}")
        gap = surrogate_gap(grad, x, sol.point)
        rec.ghat.append(gap)
        rec.et.append(0.0)
        rec.n_realized.append(0)
        rec.n_cum.append(0)
        rec.s_hats.append(sol.point.copy())
        rec.dfs_status.append("optimal")
        rec.extra_batches.append(0)
        if epsilon is not None and gap <= epsilon:
            rec.status = "stopped-early"
            rec.stopped_at = t
            break
        x = x + (sol.point - x) / (t + 2)
        rec._append_iterate(x, objective.value(x), None)
    _pad_final_row(rec, 0)
    return rec
