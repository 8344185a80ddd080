"""Feasible Frank-Wolfe over polytopes learned online from noisy measurements.

The optimizer keeps every iterate inside an unknown linear constraint set with
high probability: it probes around the trajectory, maintains running
least-squares constraint estimates with confidence ellipsoids, and only steps
to points certified by the resulting safety set.
"""

from .estimator import (
    ConstraintEstimator,
    confidence_membership,
    covariance_sqrt_norm_bound,
    phi_inverse,
)
from .harness import ExperimentConfig, compare_sfw_ro, run_experiment
from .lp import LpProblem, LpSolution, enumerate_vertices, solve
from .oracle import ConstraintOracle, MeasurementBatch, NoiseModel, cross_pattern
from .problem import (
    GeometryConstants,
    Objective,
    Polytope,
    box_geometry_constants,
    box_polytope,
    geometry_constants,
    minimize_quadratic,
    quadratic_objective,
    validate,
)
from .ro import RoConfig, ro_run, soc_linmin
from .safety import (
    SafetyConfig,
    SafetyVerdict,
    cn_lower_bound,
    fact2_check,
    make_safety_config,
    margins,
    nt_schedule,
    soc_check,
)
from .sfw import (
    ProblemSetup,
    SfwConfig,
    TrajectoryRecord,
    et_bound,
    run,
    run_fw_reference,
    surrogate_gap,
)

__all__ = [
    "ConstraintEstimator",
    "ConstraintOracle",
    "ExperimentConfig",
    "GeometryConstants",
    "LpProblem",
    "LpSolution",
    "MeasurementBatch",
    "NoiseModel",
    "Objective",
    "Polytope",
    "ProblemSetup",
    "RoConfig",
    "SafetyConfig",
    "SafetyVerdict",
    "SfwConfig",
    "TrajectoryRecord",
    "box_geometry_constants",
    "box_polytope",
    "cn_lower_bound",
    "compare_sfw_ro",
    "confidence_membership",
    "covariance_sqrt_norm_bound",
    "cross_pattern",
    "enumerate_vertices",
    "et_bound",
    "fact2_check",
    "geometry_constants",
    "make_safety_config",
    "margins",
    "minimize_quadratic",
    "nt_schedule",
    "phi_inverse",
    "quadratic_objective",
    "ro_run",
    "run",
    "run_experiment",
    "run_fw_reference",
    "soc_check",
    "soc_linmin",
    "solve",
    "surrogate_gap",
    "validate",
]

__version__ = "0.1.0"
