"""Experiment orchestration: JSON-configured Monte-Carlo runs, ground-truth
violation accounting, CSV/JSON export, and the paired method comparison.

Ground truth (the actual constraint matrix) is consulted only here: the
drivers see it exclusively through the measurement oracle.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ro as ro_mod
from . import sfw as sfw_mod
from .estimator import ConstraintEstimator, confidence_membership_arrays
from .oracle import ConstraintOracle, NoiseModel
from .problem import (
    GeometryConstants,
    Objective,
    Polytope,
    box_geometry_constants,
    box_polytope,
    box_quadratic_lipschitz,
    geometry_constants,
    minimize_quadratic,
    quadratic_objective,
    validate,
)
from .safety import SafetyConfig, cn_lower_bound, make_safety_config
from .sfw import ProblemSetup, SfwConfig, TrajectoryRecord

FEAS_TOL = 1e-9
VARIANTS = ("prescribed", "adaptive", "ro", "fw-oracle")

CSV_COLUMNS = [
    "t",
    "f_gap",
    "normalized_gap",
    "ghat",
    "et_bound",
    "n_t",
    "N_t",
    "fact2_lhs",
    "min_margin",
    "safe_flag",
    "feasible_flag",
]


class ConfigError(ValueError):
    """Experiment configuration failed validation."""


@dataclass
class ExperimentConfig:
    problem: dict
    objective: dict = field(default_factory=dict)
    x0: list | None = None
    sigma: float = 0.01
    noise_kind: str = "gaussian"
    omega0: float = 0.01
    delta: float = 0.1
    T: int = 15
    epsilon: float = 1e-6
    cn: object = "auto"
    confidence_mode: str = "chisq"
    phi_delta_override: float | None = None
    variant: str = "adaptive"
    ro_total_measurements: int | None = None
    max_total_measurements: int = 10_000_000
    repetitions: int = 20
    base_seed: int = 0
    out_dir: str = "out"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "objective": self.objective,
            "x0": self.x0,
            "sigma": self.sigma,
            "noise_kind": self.noise_kind,
            "omega0": self.omega0,
            "delta": self.delta,
            "T": self.T,
            "epsilon": self.epsilon,
            "cn": self.cn,
            "confidence_mode": self.confidence_mode,
            "phi_delta_override": self.phi_delta_override,
            "variant": self.variant,
            "ro_total_measurements": self.ro_total_measurements,
            "max_total_measurements": self.max_total_measurements,
            "repetitions": self.repetitions,
            "base_seed": self.base_seed,
            "out_dir": self.out_dir,
        }


@dataclass
class ResolvedExperiment:
    cfg: ExperimentConfig
    polytope: Polytope
    objective: Objective
    x0: np.ndarray
    geometry: GeometryConstants
    setup: ProblemSetup
    safety: SafetyConfig
    x_star: np.ndarray
    f_star: float
    beta_true: np.ndarray  # (d+1) x m stack of [a_i; b_i], diagnostics only


@dataclass
class RepResult:
    seed: int
    status: str
    normalized: list[float] = field(default_factory=list)
    f_gaps: list[float] = field(default_factory=list)
    iterate_violations: int = 0
    probe_violations: int = 0
    fact1_violations: int = 0
    n_total: int = 0
    wall_time: float = 0.0
    error: str | None = None


@dataclass
class RunSummary:
    config: dict
    seeds: list[int]
    reps: list[RepResult]
    mean_curve: list[float]
    std_curve: list[float]
    violation_rate: float
    mean_n_total: float
    failed_fraction: float


def resolve(cfg: ExperimentConfig) -> ResolvedExperiment:
    """Validate every referenced field and build the immutable run inputs."""
    if cfg.repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if cfg.T < 3:
        raise ConfigError("T must be >= 3")
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon must be positive")
    if not 0 < cfg.delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    if cfg.sigma < 0 or cfg.omega0 <= 0:
        raise ConfigError("need sigma >= 0 and omega0 > 0")
    if cfg.variant not in VARIANTS:
        raise ConfigError(f"unknown variant {cfg.variant!r}; expected one of {VARIANTS}")

    ptype = cfg.problem.get("type")
    if ptype == "box":
        d = int(cfg.problem.get("d", 0))
        half_width = float(cfg.problem.get("half_width", 1.0))
        if d < 1:
            raise ConfigError("box problem needs d >= 1")
        polytope = box_polytope(d, half_width)
        is_box = True
    elif ptype == "polytope":
        try:
            polytope = Polytope(np.array(cfg.problem["A"], dtype=float), np.array(cfg.problem["b"], dtype=float))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad polytope description: {exc}") from exc
        d = polytope.d
        is_box = False
        report = validate(polytope)
        if not report.bounded:
            raise ConfigError("polytope is unbounded")
    else:
        raise ConfigError("problem.type must be 'box' or 'polytope'")

    x0 = np.zeros(d) if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    if x0.shape != (d,):
        raise ConfigError(f"x0 must have length {d}")
    if np.min(polytope.margins(x0)) <= 0:
        raise ConfigError("x0 must be strictly feasible")

    otype = cfg.objective.get("type", "quadratic")
    if otype != "quadratic":
        raise ConfigError("only the quadratic objective 0.5||x - x'||^2 ships with the harness")
    x_prime = cfg.objective.get("x_prime")
    if x_prime is None:
        x_prime = [2.0] + [0.5] * (d - 1)
    x_prime = np.asarray(x_prime, dtype=float)
    if x_prime.shape != (d,):
        raise ConfigError(f"x_prime must have length {d}")

    if is_box:
        hw = float(cfg.problem.get("half_width", 1.0))
        M = box_quadratic_lipschitz(d, hw, x_prime)
        objective = quadratic_objective(x_prime, M)
        geometry = box_geometry_constants(d, hw, objective, x0)
        x_star = np.clip(x_prime, -hw, hw)
        f_star = objective.value(x_star)
    else:
        from . import lp as lp_mod

        vertices = lp_mod.enumerate_vertices(lp_mod.LpProblem(np.zeros(d), polytope.A, polytope.b))
        M = max(float(np.linalg.norm(v - x_prime)) for v in vertices)
        objective = quadratic_objective(x_prime, M)
        geometry = geometry_constants(polytope, objective, x0)
        x_star, f_star = minimize_quadratic(polytope, x_prime)

    scfg = make_safety_config(
        delta=cfg.delta,
        T=cfg.T,
        m=polytope.m,
        d=d,
        sigma=cfg.sigma,
        omega0=cfg.omega0,
        cn=0.0,
        schedule="adaptive" if cfg.variant == "adaptive" else "prescribed",
        mode=cfg.confidence_mode,
        phi_delta_override=cfg.phi_delta_override,
        n_ref=max(2 * d, 1) if cfg.confidence_mode == "subgaussian" else None,
    )
    if cfg.cn == "auto" or cfg.cn is None:
        cn_value = cn_lower_bound(geometry, scfg, d, cfg.T)
    else:
        cn_value = float(cfg.cn)
        if cn_value < 0:
            raise ConfigError("cn must be non-negative")
    scfg = SafetyConfig(
        delta=scfg.delta,
        T=scfg.T,
        delta_bar=scfg.delta_bar,
        omega0=scfg.omega0,
        phi_delta=scfg.phi_delta,
        cn=cn_value,
        schedule=scfg.schedule,
    )
    if cfg.variant == "ro" and cfg.ro_total_measurements is None:
        raise ConfigError("variant 'ro' needs ro_total_measurements")

    setup = ProblemSetup(objective=objective, x0=x0, geometry=geometry, d=d, m=polytope.m)
    beta_true = np.vstack([polytope.A.T, polytope.b[None, :]])
    return ResolvedExperiment(
        cfg=cfg,
        polytope=polytope,
        objective=objective,
        x0=x0,
        geometry=geometry,
        setup=setup,
        safety=scfg,
        x_star=x_star,
        f_star=f_star,
        beta_true=beta_true,
    )


def _annotate_ground_truth(res: ResolvedExperiment, rec: TrajectoryRecord) -> tuple[int, int]:
    """Fill feasibility flags and count iterate and conservativeness violations."""
    rec.feasible = [res.polytope.max_violation(x) <= FEAS_TOL for x in rec.xs]
    iterate_violations = sum(1 for ok in rec.feasible if not ok)
    fact1_violations = 0
    phi = res.safety.phi_delta / res.cfg.sigma if res.cfg.sigma > 0 else 0.0
    for row, snap in enumerate(rec.snapshots):
        if snap is None or rec.safe[row] is not True or rec.feasible[row]:
            continue
        beta_hat, xtx = snap
        member = confidence_membership_arrays(beta_hat, xtx, res.cfg.sigma, phi, res.beta_true)
        if bool(np.all(member)):
            fact1_violations += 1
    return iterate_violations, fact1_violations


def run_single(
    res: ResolvedExperiment,
    seed: int,
    variant: str | None = None,
    ro_budget: int | None = None,
) -> tuple[TrajectoryRecord, RepResult]:
    """One seeded run of the configured variant, annotated against ground truth."""
    cfg = res.cfg
    variant = variant or cfg.variant
    noise = NoiseModel(kind=cfg.noise_kind, sigma=cfg.sigma, seed=seed)
    oracle = ConstraintOracle(res.polytope, noise, cfg.omega0)
    est = ConstraintEstimator(res.polytope.d, res.polytope.m)
    start = time.perf_counter()
    if variant in ("prescribed", "adaptive"):
        run_cfg = SfwConfig(
            epsilon=cfg.epsilon,
            T=cfg.T,
            variant=variant,
            max_total_measurements=cfg.max_total_measurements,
        )
        rec = sfw_mod.run(res.setup, oracle, est, res.safety, run_cfg)
    elif variant == "ro":
        budget = ro_budget if ro_budget is not None else cfg.ro_total_measurements
        rcfg = ro_mod.RoConfig(total_measurements=int(budget), T=cfg.T)
        rec = ro_mod.ro_run(res.setup, oracle, est, res.safety, rcfg)
    elif variant == "fw-oracle":
        rec = sfw_mod.run_fw_reference(res.polytope, res.objective, res.x0, cfg.T)
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    wall = time.perf_counter() - start

    iterate_violations, fact1_violations = _annotate_ground_truth(res, rec)
    h0 = res.objective.value(res.x0) - res.f_star
    if h0 <= 0:
        raise ConfigError("x0 is already optimal; normalized curves are undefined")
    f_gaps = [f - res.f_star for f in rec.f_vals]
    rep = RepResult(
        seed=seed,
        status=rec.status,
        normalized=[g / h0 for g in f_gaps],
        f_gaps=f_gaps,
        iterate_violations=iterate_violations,
        probe_violations=oracle.out_of_reach_events,
        fact1_violations=fact1_violations,
        n_total=rec.total_measurements,
        wall_time=wall,
    )
    return rec, rep


def _aggregate(reps: list[RepResult]) -> tuple[list[float], list[float]]:
    curves = [r.normalized for r in reps if r.normalized]
    if not curves:
        return [], []
    width = max(len(c) for c in curves)
    padded = np.full((len(curves), width), np.nan)
    for i, c in enumerate(curves):
        padded[i, : len(c)] = c
    mean = np.nanmean(padded, axis=0)
    std = np.nanstd(padded, axis=0)
    return [float(v) for v in mean], [float(v) for v in std]


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> RunSummary:
    """Execute `repetitions` seeded runs, write per-run CSVs and the summary JSON.

    A failing repetition is recorded and the experiment continues.
    """
    res = resolve(cfg)
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h0 = res.objective.value(res.x0) - res.f_star
    seeds = [cfg.base_seed + i for i in range(cfg.repetitions)]
    reps: list[RepResult] = []
    for i, seed in enumerate(seeds):
        try:
            rec, rep = run_single(res, seed)
            write_trajectory_csv(rec, res.f_star, h0, out / f"trajectory_rep{i:03d}.csv")
        except (ConfigError,) as exc:
            raise
        except Exception as exc:  # recorded per repetition, experiment continues
            rep = RepResult(seed=seed, status="failed", error=f"{type(exc).__name__}: {exc}")
        reps.append(rep)
    mean_curve, std_curve = _aggregate(reps)
    ok = [r for r in reps if r.status != "failed"]
    summary = RunSummary(
        config=cfg.to_dict(),
        seeds=seeds,
        reps=reps,
        mean_curve=mean_curve,
        std_curve=std_curve,
        violation_rate=(sum(1 for r in ok if r.iterate_violations > 0) / len(ok)) if ok else 1.0,
        mean_n_total=float(np.mean([r.n_total for r in ok])) if ok else 0.0,
        failed_fraction=sum(1 for r in reps if r.status == "failed") / len(reps),
    )
    write_summary_json(summary, out / "summary.json")
    return summary


@dataclass
class ComparisonReport:
    config: dict
    seeds: list[int]
    sfw_final: list[float]
    ro_final: list[float]
    budgets: list[int]
    sfw_wins: int
    fraction_sfw_better: float


def compare_sfw_ro(cfg: ExperimentConfig, out_dir: str | None = None) -> ComparisonReport:
    """Paired adaptive-vs-baseline runs with matched seeds and budgets.

    The baseline budget is each seed's realized adaptive measurement total, so
    both methods consume identical measurement counts.
    """
    res = resolve(cfg)
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h0 = res.objective.value(res.x0) - res.f_star
    seeds = [cfg.base_seed + i for i in range(cfg.repetitions)]
    sfw_final, ro_final, budgets = [], [], []
    for i, seed in enumerate(seeds):
        rec_sfw, rep_sfw = run_single(res, seed, variant="adaptive")
        budget = max(rec_sfw.total_measurements, 2 * (res.polytope.d + 1))
        rec_ro, rep_ro = run_single(res, seed, variant="ro", ro_budget=budget)
        write_trajectory_csv(rec_sfw, res.f_star, h0, out / f"sfw_rep{i:03d}.csv")
        write_trajectory_csv(rec_ro, res.f_star, h0, out / f"ro_rep{i:03d}.csv")
        sfw_final.append(rep_sfw.normalized[-1])
        ro_final.append(rep_ro.normalized[-1])
        budgets.append(budget)
    wins = sum(1 for a, b in zip(sfw_final, ro_final) if a <= b)
    report = ComparisonReport(
        config=cfg.to_dict(),
        seeds=seeds,
        sfw_final=sfw_final,
        ro_final=ro_final,
        budgets=budgets,
        sfw_wins=wins,
        fraction_sfw_better=wins / len(seeds),
    )
    payload = {
        "config": report.config,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "seeds": report.seeds,
        "sfw_final": report.sfw_final,
        "ro_final": report.ro_final,
        "budgets": report.budgets,
        "sfw_wins": report.sfw_wins,
        "fraction_sfw_better": report.fraction_sfw_better,
    }
    (out / "comparison.json").write_text(json.dumps(payload, indent=2))
    return report


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_trajectory_csv(rec: TrajectoryRecord, f_star: float, h0: float, path) -> None:
    """One row per iterate; deterministic bytes for a fixed record."""
    lines = [",".join(CSV_COLUMNS)]
    for t in range(len(rec.xs)):
        f_gap = rec.f_vals[t] - f_star
        row = [
            _fmt(t),
            _fmt(f_gap),
            _fmt(f_gap / h0),
            _fmt(rec.ghat[t]),
            _fmt(rec.et[t]),
            _fmt(rec.n_realized[t]),
            _fmt(rec.n_cum[t]),
            _fmt(rec.lhs[t]),
            _fmt(rec.min_margin[t]),
            _fmt(rec.safe[t]),
            _fmt(None if rec.feasible is None else rec.feasible[t]),
        ]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory_csv(path) -> dict[str, list]:
    """Parse a trajectory CSV back into typed columns (round-trip helper)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    cols: dict[str, list] = {name: [] for name in header}
    for line in text[1:]:
        for name, cell in zip(header, line.split(",")):
            if cell == "":
                cols[name].append(None)
            elif name in ("t", "n_t", "N_t"):
                cols[name].append(int(cell))
            elif name in ("safe_flag", "feasible_flag"):
                cols[name].append(cell == "True")
            else:
                cols[name].append(float(cell))
    return cols


def write_summary_json(summary: RunSummary, path) -> None:
    payload = {
        "config": summary.config,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "seeds": summary.seeds,
        "aggregate": {
            "mean_curve": summary.mean_curve,
            "std_curve": summary.std_curve,
            "violation_rate": summary.violation_rate,
            "mean_n_total": summary.mean_n_total,
            "failed_fraction": summary.failed_fraction,
        },
        "reps": [
            {
                "seed": r.seed,
                "status": r.status,
                "normalized": r.normalized,
                "iterate_violations": r.iterate_violations,
                "probe_violations": r.probe_violations,
                "fact1_violations": r.fact1_violations,
                "n_total": r.n_total,
                "wall_time": r.wall_time,
                "error": r.error,
            }
            for r in summary.reps
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_summary_json(path) -> dict:
    return json.loads(Path(path).read_text())
