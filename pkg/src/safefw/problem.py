"""Ground-truth problem description: the polytope, the smooth objective, and
the geometric constants the measurement schedule and convergence bounds consume."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import lp

FEAS_TOL = 1e-9


@dataclass
class Polytope:
    """Linear inequality system A x <= b, assumed compact with interior for use."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        m, d = self.A.shape
        if self.b.shape != (m,):
            raise ValueError(f"A is {m}x{d} but b has shape {self.b.shape}")
        row_norms = np.linalg.norm(self.A, axis=1)
        if np.any(row_norms == 0.0):
            raise ValueError("constraint matrix contains an all-zero row")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def margins(self, x: np.ndarray) -> np.ndarray:
        return self.b - self.A @ np.asarray(x, dtype=float)

    def max_violation(self, x: np.ndarray) -> float:
        return float(np.max(self.A @ np.asarray(x, dtype=float) - self.b))

    def contains(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return self.max_violation(x) <= tol


@dataclass
class Objective:
    """Smooth convex objective with exact gradients.

    M bounds the gradient norm over the feasible set (Lipschitz constant of
    the values), L is the Lipschitz constant of the gradient.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    M: float
    L: float
    name: str = ""


@dataclass
class GeometryConstants:
    gamma: float      # diameter of the feasible set
    gamma0: float     # max norm over the feasible set
    eps0: float       # initial margin min_i (b_i - <a_i, x0>)
    l_a: float        # max row norm of A
    rho_min: float    # min over vertices of the active submatrix's smallest singular value
    cf_bound: float   # curvature bound L * gamma^2

    def __post_init__(self):
        expected = self.cf_bound
        if not math.isfinite(expected):
            raise ValueError("curvature bound must be finite")


@dataclass
class ValidationReport:
    bounded: bool
    interior_point: np.ndarray | None


def box_polytope(d: int, half_width: float = 1.0) -> Polytope:
    """The box -half_width <= x_i <= half_width, rows interleaved (+e_i, -e_i)."""
    if d < 1 or half_width <= 0:
        raise ValueError("box needs d >= 1 and a positive half width")
    A = np.zeros((2 * d, d))
    for i in range(d):
        A[2 * i, i] = 1.0
        A[2 * i + 1, i] = -1.0
    return Polytope(A, np.full(2 * d, float(half_width)))


def quadratic_objective(x_prime: np.ndarray, M: float) -> Objective:
    """f(x) = 0.5 ||x - x'||^2 with exact gradient x - x'."""
    target = np.asarray(x_prime, dtype=float)

    def value(x):
        diff = np.asarray(x, dtype=float) - target
        return 0.5 * float(diff @ diff)

    def gradient(x):
        return np.asarray(x, dtype=float) - target

    return Objective(value=value, gradient=gradient, M=float(M), L=1.0, name="quadratic")


def box_quadratic_lipschitz(d: int, half_width: float, x_prime: np.ndarray) -> float:
    """Max gradient norm of the quadratic over the box: distance to the far corner."""
    target = np.asarray(x_prime, dtype=float)
    far = np.maximum(np.abs(-half_width - target), np.abs(half_width - target))
    return float(np.linalg.norm(far))


def validate(p: Polytope) -> ValidationReport:
    """Boundedness via 2d support LPs, interiority via the max-margin LP."""
    d = p.d
    for i in range(d):
        for sign in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = sign
            sol = lp.solve(lp.LpProblem(c, p.A, p.b))
            if sol.status == "infeasible":
                return ValidationReport(False, None)
            if sol.status == "unbounded":
                return ValidationReport(False, None)
    # maximize t subject to A x + t 1 <= b; t* > 0 certifies a strict interior
    A_ext = np.hstack([p.A, np.ones((p.m, 1))])
    c_ext = np.zeros(d + 1)
    c_ext[-1] = -1.0
    sol = lp.solve(lp.LpProblem(c_ext, A_ext, p.b))
    if sol.status != "optimal" or sol.point is None:
        return ValidationReport(True, None)
    t_star = sol.point[-1]
    if t_star > 1e-9:
        return ValidationReport(True, sol.point[:-1].copy())
    return ValidationReport(True, None)


def _feasible_basis_pass(p: Polytope, subset_cap: int):
    """One sweep over d-subsets: feasible intersection points and their sigma_min."""
    m, d = p.m, p.d
    if math.comb(m, d) > subset_cap:
        raise lp.EnumerationCapError(
            f"{math.comb(m, d)} constraint subsets exceed the cap {subset_cap}; "
            "supply analytic geometry (rho_min override) for this instance"
        )
    vertices: list[np.ndarray] = []
    sigma_mins: list[float] = []
    for subset in itertools.combinations(range(m), d):
        sub = p.A[list(subset)]
        svals = np.linalg.svd(sub, compute_uv=False)
        if svals[-1] <= 1e-10 * max(1.0, svals[0]):
            continue
        v = np.linalg.solve(sub, p.b[list(subset)])
        if np.all(p.A @ v - p.b <= FEAS_TOL):
            vertices.append(v)
            sigma_mins.append(float(svals[-1]))
    return vertices, sigma_mins


def geometry_constants(
    p: Polytope,
    obj: Objective,
    x0: np.ndarray,
    rho_min_override: float | None = None,
    subset_cap: int = 10**6,
) -> GeometryConstants:
    """Exact geometric constants via vertex enumeration (small instances).

    rho_min enumeration is exponential in d; pass rho_min_override when the
    value is known analytically (boxes: 1).
    """
    x0 = np.asarray(x0, dtype=float)
    eps0 = float(np.min(p.margins(x0)))
    if eps0 <= 0.0:
        raise ValueError("x0 must be strictly feasible")
    l_a = float(np.max(np.linalg.norm(p.A, axis=1)))
    vertices, sigma_mins = _feasible_basis_pass(p, subset_cap)
    if not vertices:
        raise ValueError("no vertices found; polytope is unbounded or empty")
    V = np.array(vertices)
    gamma0 = float(np.max(np.linalg.norm(V, axis=1)))
    diffs = V[:, None, :] - V[None, :, :]
    gamma = float(np.max(np.linalg.norm(diffs, axis=2)))
    rho_min = float(min(sigma_mins)) if rho_min_override is None else float(rho_min_override)
    if rho_min <= 0.0:
        raise ValueError("rho_min must be positive for a valid polytope")
    return GeometryConstants(
        gamma=gamma,
        gamma0=gamma0,
        eps0=eps0,
        l_a=l_a,
        rho_min=rho_min,
        cf_bound=obj.L * gamma * gamma,
    )


def box_geometry_constants(
    d: int, half_width: float, obj: Objective, x0: np.ndarray
) -> GeometryConstants:
    """Closed-form constants for the box, valid for any dimension."""
    p = box_polytope(d, half_width)
    eps0 = float(np.min(p.margins(np.asarray(x0, dtype=float))))
    if eps0 <= 0.0:
        raise ValueError("x0 must be strictly feasible")
    gamma0 = half_width * math.sqrt(d)
    return GeometryConstants(
        gamma=2.0 * gamma0,
        gamma0=gamma0,
        eps0=eps0,
        l_a=1.0,
        rho_min=1.0,
        cf_bound=obj.L * 4.0 * gamma0 * gamma0,
    )


def minimize_quadratic(
    p: Polytope, x_prime: np.ndarray, subset_cap: int = 10**6
) -> tuple[np.ndarray, float]:
    """Exact minimizer of 0.5 ||x - x'||^2 over the polytope.

    Active-set enumeration over equality subsets with KKT sign checks; exact
    on instances small enough to enumerate.
    """
    target = np.asarray(x_prime, dtype=float)
    m, d = p.m, p.d
    if p.contains(target):
        return target.copy(), 0.0
    total = sum(math.comb(m, k) for k in range(1, d + 1))
    if total > subset_cap:
        raise lp.EnumerationCapError(
            f"{total} active-set candidates exceed the cap {subset_cap}"
        )
    best_x = None
    best_f = math.inf
    for k in range(1, d + 1):
        for subset in itertools.combinations(range(m), k):
            A_s = p.A[list(subset)]
            b_s = p.b[list(subset)]
            gram = A_s @ A_s.T
            svals = np.linalg.svd(gram, compute_uv=False)
            if svals[-1] <= 1e-12 * max(1.0, svals[0]):
                continue
            lam = np.linalg.solve(gram, A_s @ target - b_s)
            if np.any(lam < -1e-9):
                continue
            x = target - A_s.T @ lam
            if p.max_violation(x) > 1e-9:
                continue
            f = 0.5 * float((x - target) @ (x - target))
            if f < best_f:
                best_f, best_x = f, x
    if best_x is None:
        raise ValueError("no KKT point found; polytope may be empty")
    return best_x, best_f


def check_gradient(
    obj: Objective,
    points: np.ndarray,
    step: float = 1e-6,
    rtol: float = 1e-5,
) -> bool:
    """Central finite differences agree with the exact gradient at each point."""
    for x in np.atleast_2d(np.asarray(points, dtype=float)):
        g = obj.gradient(x)
        approx = np.zeros_like(g)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            approx[i] = (obj.value(x + e) - obj.value(x - e)) / (2.0 * step)
        denom = max(1.0, float(np.linalg.norm(g)))
        if np.linalg.norm(approx - g) > rtol * denom:
            return False
    return True
