"""Shared test utilities: random bounded polytopes, estimator builders, and
an independent reference solver for the cone-constrained linear subproblem."""

import math

import numpy as np

from safefw.estimator import ConstraintEstimator
from safefw.oracle import ConstraintOracle, NoiseModel, cross_pattern
from safefw.problem import Polytope, box_polytope


def random_bounded_polytope(rng, d, m):
    """Box rows (bounded by construction) plus m - 2d random cuts, interior at a
    jittered center."""
    assert m >= 2 * d
    A = np.zeros((m, d))
    b = np.empty(m)
    for i in range(d):
        A[2 * i, i] = 1.0
        A[2 * i + 1, i] = -1.0
    b[: 2 * d] = rng.uniform(0.7, 1.5, size=2 * d)
    center = rng.uniform(-0.2, 0.2, d)
    for j in range(2 * d, m):
        v = rng.normal(0.0, 1.0, d)
        v /= np.linalg.norm(v)
        A[j] = v
        b[j] = v @ center + rng.uniform(0.3, 1.2)
    return Polytope(A, b)


def random_estimator(rng, d, m, n, spread=1.0, sigma=0.0, beta=None):
    """An estimator fed n random probe rows; returns (estimator, beta_true)."""
    if beta is None:
        beta = rng.normal(0.0, 1.0, (d + 1, m))
    est = ConstraintEstimator(d, m)
    for _ in range(n):
        x = rng.uniform(-spread, spread, d)
        clean = x @ beta[:d, :] - beta[d, :]
        est.absorb(x, clean + (rng.normal(0.0, sigma, m) if sigma > 0 else 0.0))
    return est, beta


def cross_fed_estimator(polytope, sigma, seed, omega0, centers, n_per_center):
    """Estimator fed full cross batches at the given centers through an oracle."""
    oracle = ConstraintOracle(polytope, NoiseModel("gaussian", sigma, seed), omega0)
    est = ConstraintEstimator(polytope.d, polytope.m)
    for center, n in zip(centers, n_per_center):
        pattern = cross_pattern(np.asarray(center, dtype=float), omega0, n)
        for point in pattern.points:
            est.absorb_repeated(point, oracle.measure_repeated(point, pattern.multiplicity), pattern.multiplicity)
    return est, oracle


def box_estimator_exact(d):
    """Zero-noise estimator holding the exact unit-box constraints."""
    p = box_polytope(d)
    est, _ = cross_fed_estimator(p, 0.0, 0, 0.01, [np.zeros(d)], [2 * d])
    return est, p


def soc_worst_violation_grid(est, phi_delta, points):
    """Vectorized worst cone-constraint violation for each row of points."""
    Z = np.hstack([points, -np.ones((points.shape[0], 1))])
    quad = np.einsum("ij,jk,ik->i", Z, est.P, Z)
    norms = np.sqrt(np.maximum(quad, 0.0))
    return np.max(points @ est.a_hat() - est.b_hat()[None, :] + phi_delta * norms[:, None], axis=1)


def soc_linmin_reference(est, cfg, c, anchor, radius=2.0):
    """Independent solver for min <c, s> over the cone-constrained safety set.

    Projected-subgradient localization (Polyak alternating feasibility and
    objective steps) followed by a multi-resolution grid zoom; d = 2 only.
    """
    c = np.asarray(c, dtype=float)
    cn = np.linalg.norm(c)
    phi = cfg.phi_delta
    d = est.d
    assert d == 2
    s = np.asarray(anchor, dtype=float).copy()
    best = s.copy()
    best_val = float(c @ s)
    for k in range(4000):
        viol = soc_worst_violation_grid(est, phi, s[None, :])[0]
        if viol > 1e-12:
            z = np.append(s, -1.0)
            pz = est.P @ z
            nrm = math.sqrt(max(float(z @ pz), 1e-300))
            g_all = s @ est.a_hat() - est.b_hat() + phi * nrm
            i = int(np.argmax(g_all))
            grad = est.a_hat()[:, i] + phi * pz[:d] / nrm
            s = s - (g_all[i] / float(grad @ grad)) * grad
        else:
            if float(c @ s) < best_val:
                best_val = float(c @ s)
                best = s.copy()
            s = s - (0.5 / math.sqrt(k + 1)) * c / cn
    center, half = best.copy(), radius
    for _ in range(14):
        g = np.linspace(-half, half, 33)
        X, Y = np.meshgrid(center[0] + g, center[1] + g)
        S = np.column_stack([X.ravel(), Y.ravel()])
        viol = soc_worst_violation_grid(est, phi, S)
        vals = S @ c
        vals[viol > 0] = np.inf
        j = int(np.argmin(vals))
        if np.isfinite(vals[j]) and vals[j] < best_val:
            best_val = float(vals[j])
            center = S[j]
        half *= 0.55
    return best_val
