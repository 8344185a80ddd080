"""Incremental least-squares estimation of the constraint parameters.

Each probe point x with measurement row y (one value per constraint)
contributes an extended regressor v = [x, -1], so the i-th column of the
estimate stacks [a_i; b_i]. The normal-equation inverse P = (VtV)^-1 is
maintained by rank-one updates; until the design spans R^(d+1) estimates fall
back to a pseudo-inverse solve.
"""

from __future__ import annotations

import math

import numpy as np

from .special import chi_squared_quantile

CONFIDENCE_MODES = ("subgaussian", "chisq")


class ScatterSingularError(RuntimeError):
    """Centered probe scatter is singular (all points collinear)."""


def phi_inverse(mode: str, n: int, d: int, delta_bar: float) -> float:
    """Confidence-ellipsoid radius for the parameter estimate of one constraint.

    subgaussian: max{sqrt(128 d ln N ln(N^2/db)), (8/3) ln(N^2/db)}, valid for
    N e^(-1/16) >= db. chisq: sqrt of the chi-squared quantile with d+1
    degrees of freedom at level 1-db (Gaussian noise, deterministic design).
    """
    if not 0.0 < delta_bar < 1.0:
        raise ValueError("delta_bar must lie strictly between 0 and 1")
    if mode == "chisq":
        return math.sqrt(chi_squared_quantile(1.0 - delta_bar, d + 1))
    if mode == "subgaussian":
        if n * math.exp(-1.0 / 16.0) < delta_bar:
            raise ValueError(
                f"subgaussian radius requires N e^(-1/16) >= delta_bar "
                f"(N={n}, delta_bar={delta_bar})"
            )
        log_ratio = math.log(n * n / delta_bar)
        return max(
            math.sqrt(128.0 * d * math.log(n) * log_ratio),
            (8.0 / 3.0) * log_ratio,
        )
    raise ValueError(f"unknown confidence mode {mode!r}; expected one of {CONFIDENCE_MODES}")


def covariance_sqrt_norm_bound(sigma: float, d: int, gamma0: float, omega0: float, n: int) -> float:
    """Analytic upper bound on ||Sigma^(1/2)|| under full-cross sampling inside the set."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return sigma * math.sqrt(d) * math.sqrt((gamma0 * gamma0 + 1.0) / (omega0 * omega0) + 1.0) / math.sqrt(n)


class ConstraintEstimator:
    """Running least squares for m affine constraints in d variables.

    Absorbing a probe row costs O(d^2 + d m) once the design spans R^(d+1).
    Repeated measurements at one point are absorbed in aggregate: summing the
    measurement rows leaves the normal equations unchanged.
    """

    def __init__(self, d: int, m: int):
        if d < 1 or m < 1:
            raise ValueError("need d >= 1 and m >= 1")
        self.d = d
        self.m = m
        k = d + 1
        self.N = 0
        self.sum_x = np.zeros(d)
        self.sum_outer = np.zeros((d, d))
        self.G = np.zeros((k, m))
        self.P: np.ndarray | None = None
        self.beta_hat: np.ndarray | None = None
        self.rows: list[tuple[np.ndarray, int, np.ndarray]] = []  # (point, count, value sum)
        self.rebuilds = 0

    @property
    def spanned(self) -> bool:
        return self.P is not None

    @property
    def xbar(self) -> np.ndarray:
        if self.N == 0:
            raise ValueError("no measurements absorbed yet")
        return self.sum_x / self.N

    def xtx(self) -> np.ndarray:
        """Extended normal matrix VtV assembled from the running sums."""
        k = self.d + 1
        out = np.empty((k, k))
        out[: self.d, : self.d] = self.sum_outer
        out[: self.d, self.d] = -self.sum_x
        out[self.d, : self.d] = -self.sum_x
        out[self.d, self.d] = self.N
        return out

    def a_hat(self) -> np.ndarray:
        """Estimated constraint normals, one per column."""
        return self.beta_hat[: self.d, :]

    def b_hat(self) -> np.ndarray:
        return self.beta_hat[self.d, :]

    def absorb(self, point: np.ndarray, values: np.ndarray) -> None:
        """Absorb one measurement row (length m) taken at `point`."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.m,):
            raise ValueError(f"values must have length {self.m}, got shape {values.shape}")
        self.absorb_repeated(point, values, 1)

    def absorb_repeated(self, point: np.ndarray, value_sum: np.ndarray, count: int) -> None:
        """Absorb `count` identical probe rows whose measurements sum to value_sum."""
        if count < 1:
            raise ValueError("count must be >= 1")
        x = np.asarray(point, dtype=float)
        value_sum = np.asarray(value_sum, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"point must have length {self.d}")
        if value_sum.shape != (self.m,):
            raise ValueError(f"value sum must have length {self.m}")
        v = np.append(x, -1.0)
        self.rows.append((x.copy(), int(count), value_sum.copy()))
        self.N += count
        self.sum_x += count * x
        self.sum_outer += count * np.outer(x, x)
        self.G += np.outer(v, value_sum)
        if self.P is None:
            xtx = self.xtx()
            if np.linalg.matrix_rank(xtx) == self.d + 1:
                self.P = np.linalg.inv(xtx)
                self.P = 0.5 * (self.P + self.P.T)
            else:
                self.beta_hat = np.linalg.lstsq(xtx, self.G, rcond=None)[0]
                return
        else:
            pv = self.P @ v
            denom = 1.0 + count * float(v @ pv)
            if denom <= 1e-12:
                self.rebuild()
            else:
                self.P -= (count / denom) * np.outer(pv, pv)
                self.P = 0.5 * (self.P + self.P.T)
        self.beta_hat = self.P @ self.G

    def rebuild(self) -> None:
        """Recompute P from the stored rows by a dense factorization."""
        self.P = np.linalg.inv(self.xtx())
        self.P = 0.5 * (self.P + self.P.T)
        self.beta_hat = self.P @ self.G
        self.rebuilds += 1

    def block_quantities(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample mean xbar and R = (sum (x_j - xbar)(x_j - xbar)^T)^-1."""
        xbar = self.xbar
        scatter = self.sum_outer - self.N * np.outer(xbar, xbar)
        eigs = np.linalg.eigvalsh(0.5 * (scatter + scatter.T))
        if eigs[0] <= 1e-12 * max(1.0, eigs[-1]):
            raise ScatterSingularError("centered probe scatter is singular")
        R = np.linalg.inv(scatter)
        return xbar, 0.5 * (R + R.T)

    def covariance_sqrt_norm(self, sigma: float) -> float:
        """||Sigma^(1/2)|| = sigma * sqrt(largest eigenvalue of P)."""
        if self.P is None:
            raise ValueError("design does not yet span R^(d+1)")
        lam = float(np.linalg.eigvalsh(0.5 * (self.P + self.P.T))[-1])
        if lam <= 0.0:
            raise ValueError("normal-equation inverse is not positive definite")
        return sigma * math.sqrt(lam)


def confidence_membership_arrays(
    beta_hat: np.ndarray,
    xtx: np.ndarray,
    sigma: float,
    phi: float,
    beta_true: np.ndarray,
) -> np.ndarray:
    """Per-constraint flags: true parameters inside the confidence ellipsoid.

    Diagnostic only; uses ground truth. With sigma = 0 the ellipsoid degenerates
    and membership means exact recovery.
    """
    beta_true = np.asarray(beta_true, dtype=float)
    diff = np.asarray(beta_hat, dtype=float) - beta_true
    if sigma == 0.0:
        scale = 1.0 + np.abs(beta_true).max(axis=0)
        return np.max(np.abs(diff), axis=0) <= 1e-9 * scale
    mahal = np.einsum("ki,kl,li->i", diff, xtx, diff) / (sigma * sigma)
    return mahal <= phi * phi + 1e-12


def confidence_membership(
    est: ConstraintEstimator,
    sigma: float,
    phi: float,
    beta_true: np.ndarray,
) -> np.ndarray:
    if est.beta_hat is None:
        raise ValueError("no estimate available yet")
    return confidence_membership_arrays(est.beta_hat, est.xtx(), sigma, phi, beta_true)
