"""Safety-set membership tests, margins, and the measurement schedule.

Membership of x in the safety set (all constraints satisfied for every
parameter in the confidence ellipsoids) has two equivalent forms: the scalar
test through the sample mean and centered-scatter inverse, and the
second-order-cone form through the full covariance factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import ConstraintEstimator, phi_inverse
from .problem import GeometryConstants

SCHEDULES = ("prescribed", "adaptive")


@dataclass(frozen=True)
class SafetyConfig:
    delta: float          # total confidence budget over the run
    T: int                # iteration budget
    delta_bar: float      # per-iteration budget, delta / T
    omega0: float         # probe radius
    phi_delta: float      # sigma * phi_inverse(delta_bar / m), possibly overridden
    cn: float             # schedule constant
    schedule: str = "prescribed"

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.T < 3:
            raise ValueError("iteration budget must be at least 3 (ln ln T must be positive)")
        if abs(self.delta_bar * self.T - self.delta) > 1e-12 * self.delta:
            raise ValueError("delta_bar must equal delta / T")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.phi_delta < 0.0 or self.omega0 <= 0.0:
            raise ValueError("phi_delta must be >= 0 and omega0 > 0")


def make_safety_config(
    delta: float,
    T: int,
    m: int,
    d: int,
    sigma: float,
    omega0: float,
    cn: float = 0.0,
    schedule: str = "prescribed",
    mode: str = "chisq",
    phi_delta_override: float | None = None,
    n_ref: int | None = None,
) -> SafetyConfig:
    """Resolve the per-iteration budget and the confidence radius.

    The sub-Gaussian radius depends on the sample count, so mode="subgaussian"
    needs a reference count n_ref; the chisq default is count-free.
    """
    delta_bar = delta / T
    if phi_delta_override is not None:
        phi_delta = float(phi_delta_override)
    elif mode == "subgaussian":
        if n_ref is None:
            raise ValueError("subgaussian mode needs a reference sample count n_ref")
        phi_delta = sigma * phi_inverse("subgaussian", n_ref, d, delta_bar / m)
    else:
        phi_delta = sigma * phi_inverse("chisq", 1, d, delta_bar / m)
    return SafetyConfig(
        delta=delta,
        T=T,
        delta_bar=delta_bar,
        omega0=omega0,
        phi_delta=phi_delta,
        cn=cn,
        schedule=schedule,
    )


@dataclass
class SafetyVerdict:
    safe: bool
    lhs: float                   # uncertainty radius at the test point
    min_margin: float
    margins: np.ndarray
    binding_constraint: int


def margins(est: ConstraintEstimator, x: np.ndarray) -> np.ndarray:
    """Estimated slacks b_hat_i - <a_hat_i, x>, one per constraint."""
    if est.beta_hat is None:
        raise ValueError("no estimate available yet")
    x = np.asarray(x, dtype=float)
    return est.b_hat() - x @ est.a_hat()


def fact2_check(est: ConstraintEstimator, cfg: SafetyConfig, x: np.ndarray) -> SafetyVerdict:
    """Scalar safety test: phi * sqrt(1/N + (x-xbar)^T R (x-xbar)) <= min margin.

    Ties count as safe.
    """
    x = np.asarray(x, dtype=float)
    xbar, R = est.block_quantities()
    diff = x - xbar
    lhs = cfg.phi_delta * math.sqrt(1.0 / est.N + float(diff @ R @ diff))
    eps = margins(est, x)
    binding = int(np.argmin(eps))
    min_margin = float(eps[binding])
    return SafetyVerdict(
        safe=lhs <= min_margin,
        lhs=lhs,
        min_margin=min_margin,
        margins=eps,
        binding_constraint=binding,
    )


def soc_check(est: ConstraintEstimator, cfg: SafetyConfig, x: np.ndarray) -> SafetyVerdict:
    """Cone-form safety test: <a_hat_i, x> - b_hat_i + phi ||Sigma^(1/2) [x; -1]|| <= 0.

    Uses the full covariance factor; must agree with fact2_check.
    """
    if est.P is None:
        raise ValueError("design does not yet span R^(d+1)")
    x = np.asarray(x, dtype=float)
    z = np.append(x, -1.0)
    quad = float(z @ est.P @ z)
    lhs = cfg.phi_delta * math.sqrt(max(quad, 0.0))
    eps = margins(est, x)
    binding = int(np.argmin(eps))
    min_margin = float(eps[binding])
    return SafetyVerdict(
        safe=lhs <= min_margin,
        lhs=lhs,
        min_margin=min_margin,
        margins=eps,
        binding_constraint=binding,
    )


def c_delta_constant(geo: GeometryConstants, phi_delta: float, omega0: float, d: int) -> float:
    """Vertex-estimation error constant: 2 phi d (Gamma0+1) / rho_min * sqrt((Gamma0^2+1)/omega0^2 + 1)."""
    return (
        2.0
        * phi_delta
        * d
        * (geo.gamma0 + 1.0)
        / geo.rho_min
        * math.sqrt((geo.gamma0 * geo.gamma0 + 1.0) / (omega0 * omega0) + 1.0)
    )


def cn_lower_bound(geo: GeometryConstants, cfg: SafetyConfig, d: int, T: int) -> float:
    """Schedule constant lower bound guaranteeing per-iterate safety."""
    if T < 3:
        raise ValueError("T must be at least 3 so that ln ln T is defined and positive")
    c_delta = c_delta_constant(geo, cfg.phi_delta, cfg.omega0, d)
    lnln = math.log(math.log(T))
    return c_delta * c_delta * max(
        4.0 * lnln * lnln * geo.l_a * geo.l_a / (geo.eps0 * geo.eps0),
        1.0 / ((geo.gamma0 + 1.0) ** 2),
    )


def nt_schedule(cn: float, t: int) -> int:
    """Prescribed per-iteration measurement count ceil(4 cn (t+2) ln(t+2)^2)."""
    if t < 0:
        raise ValueError("iteration index must be >= 0")
    if cn < 0.0:
        raise ValueError("cn must be non-negative")
    log_term = math.log(t + 2)
    return math.ceil(4.0 * cn * (t + 2) * log_term * log_term)
