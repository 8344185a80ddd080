"""Simulated noisy zeroth-order constraint oracle and the coordinate cross
probe pattern (2d points at x +/- omega0 e_i)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import Polytope

_NOISE_KINDS = ("gaussian", "bounded-uniform")
_DRAW_CHUNK = 4_000_000  # bounds per-call memory for huge multiplicities


@dataclass
class NoiseModel:
    """Sub-Gaussian measurement noise with parameter sigma.

    gaussian draws N(0, sigma^2); bounded-uniform draws U[-sigma, sigma],
    an interval of length 2 sigma and hence sigma-sub-Gaussian.
    """

    kind: str = "gaussian"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {_NOISE_KINDS}")
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")


@dataclass
class CrossPattern:
    center: np.ndarray
    points: np.ndarray      # 2d rows, center +/- omega0 e_i
    multiplicity: int       # measurements per point
    total: int              # realized measurement count, 2d * multiplicity


@dataclass
class MeasurementBatch:
    center: np.ndarray
    points: np.ndarray      # n x d
    values: np.ndarray      # n x m

    def within_radius(self, omega0: float) -> bool:
        """Every point offset from the center along one axis by at most omega0."""
        offsets = self.points - self.center
        linf = np.max(np.abs(offsets), axis=1)
        support = np.count_nonzero(np.abs(offsets) > 1e-12, axis=1)
        return bool(np.all(linf <= omega0 + 1e-12) and np.all(support <= 1))


def cross_pattern(x: np.ndarray, omega0: float, n: int) -> CrossPattern:
    """2d probe points x +/- omega0 e_i, each measured ceil(n / 2d) times.

    The realized total 2d * ceil(n / 2d) is reported back so measurement
    bookkeeping stays exact; rounding up preserves scheduled lower bounds.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    if n < 2 * d:
        raise ValueError(f"cross pattern needs n >= 2d = {2 * d}, got {n}")
    if omega0 <= 0.0:
        raise ValueError("omega0 must be positive")
    points = np.tile(x, (2 * d, 1))
    for i in range(d):
        points[2 * i, i] += omega0
        points[2 * i + 1, i] -= omega0
    mult = -(-n // (2 * d))
    return CrossPattern(center=x.copy(), points=points, multiplicity=int(mult), total=int(2 * d * mult))


class ConstraintOracle:
    """Returns y(x) = A x - b + eta with independent noise per component.

    Probe points outside reach (no feasible point within omega0) are counted,
    not rejected: the reach test uses the max normalized half-space deficit,
    a lower bound on the distance to the feasible set, so only definite
    violations are flagged.
    """

    def __init__(self, polytope: Polytope, noise: NoiseModel, omega0: float):
        self._A = polytope.A.copy()
        self._b = polytope.b.copy()
        self._row_norms = np.linalg.norm(self._A, axis=1)
        self.noise = noise
        self.omega0 = float(omega0)
        self._rng = np.random.default_rng(noise.seed)
        self.calls = 0
        self.measurements = 0
        self.out_of_reach_events = 0

    @property
    def m(self) -> int:
        return self._A.shape[0]

    def _draw(self, shape) -> np.ndarray:
        if self.noise.sigma == 0.0:
            return np.zeros(shape)
        if self.noise.kind == "gaussian":
            return self._rng.normal(0.0, self.noise.sigma, size=shape)
        return self._rng.uniform(-self.noise.sigma, self.noise.sigma, size=shape)

    def _note_reach(self, x: np.ndarray) -> None:
        deficit = np.max((self._A @ x - self._b) / self._row_norms)
        if deficit > self.omega0 + 1e-12:
            self.out_of_reach_events += 1

    def measure(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._note_reach(x)
        self.calls += 1
        self.measurements += 1
        return self._A @ x - self._b + self._draw(self.m)

    def measure_batch(self, points: np.ndarray) -> MeasurementBatch:
        """One measurement per row of points, bundled with a shared center."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.array([self.measure(p) for p in points])
        return MeasurementBatch(center=points.mean(axis=0), points=points, values=values)

    def measure_repeated(self, x: np.ndarray, count: int) -> np.ndarray:
        """Componentwise sum of `count` independent measurements at x."""
        if count < 1:
            raise ValueError("count must be >= 1")
        x = np.asarray(x, dtype=float)
        self._note_reach(x)
        self.calls += 1
        self.measurements += count
        total = count * (self._A @ x - self._b)
        if self.noise.sigma > 0.0:
            remaining = count
            while remaining > 0:
                block = min(remaining, max(1, _DRAW_CHUNK // self.m))
                total += self._draw((block, self.m)).sum(axis=0)
                remaining -= block
        return total

    def tightened_measure(self, x: np.ndarray, kappa: np.ndarray) -> np.ndarray:
        """Constraint values reported against a set tightened by kappa.

        Raising each reported value by kappa_i makes the apparent feasible set
        {x : a_i^T x <= b_i - kappa_i}; with kappa_i >= ||a_i|| * omega0 every
        probe within omega0 of an apparently feasible point stays truly
        feasible, for when strictly in-set sampling is required.
        """
        kappa = np.asarray(kappa, dtype=float)
        if kappa.shape != (self.m,):
            raise ValueError(f"kappa must have length {self.m}")
        if np.any(kappa < 0.0):
            raise ValueError("kappa must be non-negative componentwise")
        return self.measure(x) + kappa
