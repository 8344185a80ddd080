"""Dense linear programming over inequality systems A x <= b with free variables.

Two-phase primal simplex on the split-variable standard form (x = u - v plus
slacks), Bland's rule for anti-cycling, and a post-solve push to a vertex of
the optimal face. A brute-force vertex enumerator for small instances doubles
as an independent correctness oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-9
COST_TOL = 1e-10
PIVOT_TOL = 1e-11


class PivotLimitError(RuntimeError):
    """Simplex exceeded its pivot budget without reaching a verdict."""


class EnumerationCapError(ValueError):
    """Vertex enumeration would exceed the combinatorial cap."""


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        m, d = self.A.shape
        if self.c.shape != (d,) or self.b.shape != (m,):
            raise ValueError(
                f"inconsistent LP dimensions: A is {m}x{d}, "
                f"c has shape {self.c.shape}, b has shape {self.b.shape}"
            )


@dataclass
class LpSolution:
    point: np.ndarray | None
    value: float
    status: str  # optimal | infeasible | unbounded
    active_set: list[int] = field(default_factory=list)


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    coeffs = T[:, col].copy()
    coeffs[row] = 0.0
    T -= np.outer(coeffs, T[row])
    basis[row] = col


def _simplex(T: np.ndarray, basis: list[int], allowed: list[int], max_pivots: int) -> str:
    """Minimize the bottom-row objective. Bland's rule on entering and leaving."""
    m = T.shape[0] - 1
    for _ in range(max_pivots):
        enter = -1
        for j in allowed:
            if T[-1, j] < -COST_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal"
        leave = -1
        best = math.inf
        for i in range(m):
            a = T[i, enter]
            if a > PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best - 1e-12:
                    best, leave = ratio, i
                elif abs(ratio - best) <= 1e-12 and leave >= 0 and basis[i] < basis[leave]:
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(T, basis, leave, enter)
    raise PivotLimitError(f"simplex made no verdict within {max_pivots} pivots")


def _null_direction(rows: np.ndarray, d: int) -> np.ndarray | None:
    """A unit vector in the nullspace of the stacked rows, None if empty."""
    if rows.size == 0:
        w = np.zeros(d)
        w[0] = 1.0
        return w
    u, s, vt = np.linalg.svd(rows)
    if s.size < d or s[-1] <= 1e-10 * max(1.0, s[0]):
        return vt[-1]
    return None


def _push_to_vertex(p: LpProblem, x: np.ndarray, max_rounds: int | None = None) -> np.ndarray:
    """Slide along the optimal face (constant objective) until d active rows.

    Requires the face to be bounded in the chosen directions; otherwise the
    incoming point is returned unchanged.
    """
    m, d = p.A.shape
    if max_rounds is None:
        max_rounds = m + d + 2
    for _ in range(max_rounds):
        resid = p.b - p.A @ x
        scale = 1.0 + np.abs(p.b) + np.abs(p.A) @ np.abs(x)
        active = resid <= 1e-8 * scale
        rows = p.A[active]
        if rows.shape[0] >= d and np.linalg.matrix_rank(rows, tol=1e-10) >= d:
            break
        w = _null_direction(np.vstack([rows, p.c[None, :]]), d)
        if w is None:
            break
        step = math.inf
        direction = None
        for cand in (w, -w):
            aw = p.A @ cand
            movable = (~active) & (aw > 1e-12)
            if np.any(movable):
                t = np.min(resid[movable] / aw[movable])
                if t < step:
                    step, direction = t, cand
        if direction is None or not math.isfinite(step):
            break
        x = x + step * direction
    return x


def solve(p: LpProblem, max_pivots: int = 20000) -> LpSolution:
    """Minimize <c, x> over {x : A x <= b}.

    Returns a vertex of the optimal face when the feasible set is bounded
    around the optimum. Status reports infeasibility and unboundedness.
    """
    m, d = p.A.shape
    A = p.A.copy()
    b = p.b.copy()
    flip = b < -0.0
    A[flip] *= -1.0
    b[flip] *= -1.0
    slack_sign = np.where(flip, -1.0, 1.0)
    art_rows = np.flatnonzero(flip)
    n_struct = 2 * d
    n_art = art_rows.size
    ncols = n_struct + m + n_art

    T = np.zeros((m + 1, ncols + 1))
    T[:m, :d] = A
    T[:m, d:n_struct] = -A
    for i in range(m):
        T[i, n_struct + i] = slack_sign[i]
    for k, i in enumerate(art_rows):
        T[i, n_struct + m + k] = 1.0
    T[:m, -1] = b

    basis = [0] * m
    art_iter = iter(range(n_art))
    for i in range(m):
        basis[i] = n_struct + m + next(art_iter) if flip[i] else n_struct + i

    if n_art:
        T[-1, :] = 0.0
        T[-1, n_struct + m:ncols] = 1.0
        for i, bc in enumerate(basis):
            if bc >= n_struct + m:
                T[-1] -= T[i]
        _simplex(T, basis, list(range(ncols)), max_pivots)
        if -T[-1, -1] > 1e-7 * (1.0 + float(np.abs(b).sum())):
            return LpSolution(None, math.inf, "infeasible")
        # drive surviving artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= n_struct + m:
                piv = next(
                    (j for j in range(n_struct + m) if abs(T[i, j]) > 1e-9), None
                )
                if piv is not None:
                    _pivot(T, basis, i, piv)

    T[-1, :] = 0.0
    T[-1, :d] = p.c
    T[-1, d:n_struct] = -p.c
    for i, bc in enumerate(basis):
        if T[-1, bc] != 0.0:
            T[-1] -= T[-1, bc] * T[i]
    status = _simplex(T, basis, list(range(n_struct + m)), max_pivots)
    if status == "unbounded":
        return LpSolution(None, -math.inf, "unbounded")

    vals = np.zeros(ncols)
    for i, bc in enumerate(basis):
        vals[bc] = T[i, -1]
    x = vals[:d] - vals[d:n_struct]
    x = _push_to_vertex(p, x)
    resid = p.b - p.A @ x
    scale = 1.0 + np.abs(p.b) + np.abs(p.A) @ np.abs(x)
    active = [int(i) for i in np.flatnonzero(resid <= 1e-8 * scale)]
    return LpSolution(x, float(p.c @ x), "optimal", active)


def enumerate_vertices(p: LpProblem, cap_m: int = 16, cap_d: int = 6) -> list[np.ndarray]:
    """All vertices of {x : A x <= b} by solving every nonsingular d-subset.

    Deduplicated at 1e-9. Intended for small instances and for testing the
    simplex path, hence the hard caps on m and d.
    """
    m, d = p.A.shape
    if m > cap_m or d > cap_d:
        raise EnumerationCapError(
            f"vertex enumeration capped at m<={cap_m}, d<={cap_d} (got m={m}, d={d}); "
            "use the simplex solver or an analytic description for larger instances"
        )
    vertices: list[np.ndarray] = []
    for subset in itertools.combinations(range(m), d):
        sub = p.A[list(subset)]
        svals = np.linalg.svd(sub, compute_uv=False)
        if svals[-1] <= 1e-10 * max(1.0, svals[0]):
            continue
        v = np.linalg.solve(sub, p.b[list(subset)])
        if np.all(p.A @ v - p.b <= FEAS_TOL):
            if all(np.linalg.norm(v - u) > 1e-9 for u in vertices):
                vertices.append(v)
    return vertices
