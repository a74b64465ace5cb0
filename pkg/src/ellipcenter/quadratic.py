"""Strongly convex quadratic objectives over three SPD operator representations.

The objective is f(w) = 1/2 w^T A w - b^T w + c with A symmetric positive
definite.  A is stored in one of three forms so that matrix-vector products
stay O(n) where the structure allows it and extreme eigenvalues are exact
where they are known analytically:

* ``DiagonalOperator`` holds the diagonal of a diagonal matrix,
* ``RankOneOperator`` represents v v^T + sigma I without materializing it,
* ``DenseOperator`` wraps an explicit symmetric matrix.

All operators and problems are immutable after construction; every operation
here is a pure function, safe to call concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenBounds",
    "DiagonalOperator",
    "RankOneOperator",
    "DenseOperator",
    "QuadraticProblem",
    "POWER_ITERATION_TOL",
    "POWER_ITERATION_MAX_ITER",
]

# Power iteration settings for DenseOperator.eigen_bounds.
POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX_ITER = 10_000
_POWER_ITERATION_SEED = 0x5EED


def _as_vector(v, n=None, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EigenBounds:
    """Extreme eigenvalues of an SPD operator.

    ``lambda_min`` is None when the representation does not expose it (dense
    matrices, where only the largest eigenvalue is estimated).  ``exact`` is
    True when both values follow analytically from the representation.
    """

    lambda_min: float | None
    lambda_max: float
    exact: bool

    @property
    def condition_number(self) -> float | None:
        if self.lambda_min is None:
            return None
        return self.lambda_max / self.lambda_min


class DiagonalOperator:
    """SPD operator stored as the diagonal of a diagonal matrix."""

    def __init__(self, diag):
        d = _as_vector(diag, name="diag")
        if d.size < 1:
            raise ValueError("diagonal must have at least one entry")
        if not np.all(np.isfinite(d)) or not np.all(d > 0.0):
            raise ValueError("diagonal entries must be finite and strictly positive")
        self.diag = _readonly(d)

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def matvec(self, v):
        v = _as_vector(v, self.dim)
        return self.diag * v

    def solve(self, v):
        """Apply the exact inverse (elementwise division)."""
        v = _as_vector(v, self.dim)
        return v / self.diag

    def eigen_bounds(self) -> EigenBounds:
        return EigenBounds(float(self.diag.min()), float(self.diag.max()), exact=True)

    def dense(self):
        return np.diag(self.diag)


class RankOneOperator:
    """The SPD operator v v^T + sigma I, applied in O(n) without materialization."""

    def __init__(self, v, sigma):
        vv = _as_vector(v, name="v")
        if vv.size < 1:
            raise ValueError("v must have at least one entry")
        sigma = float(sigma)
        if not np.isfinite(sigma) or sigma <= 0.0:
            raise ValueError("sigma must be finite and strictly positive")
        if not np.all(np.isfinite(vv)):
            raise ValueError("v must be finite")
        self.v = _readonly(vv)
        self.sigma = sigma
        self._v_sq = float(vv @ vv)

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def matvec(self, x):
        x = _as_vector(x, self.dim)
        return (self.v @ x) * self.v + self.sigma * x

    def solve(self, x):
        """Apply the exact inverse via the Sherman-Morrison identity."""
        x = _as_vector(x, self.dim)
        coeff = (self.v @ x) / (self.sigma * (self.sigma + self._v_sq))
        return x / self.sigma - coeff * self.v

    def eigen_bounds(self) -> EigenBounds:
        top = self.sigma + self._v_sq
        # In one dimension the operator is the scalar sigma + v^2.
        low = self.sigma if self.dim > 1 else top
        return EigenBounds(float(low), float(top), exact=True)

    def dense(self):
        return np.outer(self.v, self.v) + self.sigma * np.eye(self.dim)


class DenseOperator:
    """SPD operator stored as an explicit symmetric matrix."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("matrix must have at least one row")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if not np.allclose(m, m.T, rtol=1e-10, atol=0.0):
            raise ValueError("matrix must be symmetric")
        self.matrix = _readonly(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v):
        v = _as_vector(v, self.dim)
        return self.matrix @ v

    def eigen_bounds(self) -> EigenBounds:
        """Estimate the largest eigenvalue by power iteration.

        Starts from a fixed seeded random vector so the estimate is
        reproducible; stops when the Rayleigh quotient changes by less than
        ``POWER_ITERATION_TOL`` relatively.  The smallest eigenvalue is not
        estimated for dense matrices (``lambda_min`` is None).
        """
        rng = np.random.default_rng(_POWER_ITERATION_SEED)
        x = rng.standard_normal(self.dim)
        x /= np.linalg.norm(x)
        lam = float(x @ self.matrix @ x)
        for _ in range(POWER_ITERATION_MAX_ITER):
            y = self.matrix @ x
            ny = np.linalg.norm(y)
            if ny == 0.0:
                break
            x = y / ny
            lam_new = float(x @ self.matrix @ x)
            if abs(lam_new - lam) <= POWER_ITERATION_TOL * abs(lam_new):
                return EigenBounds(None, lam_new, exact=False)
            lam = lam_new
        warnings.warn(
            "power iteration did not reach the relative tolerance "
            f"{POWER_ITERATION_TOL:g} within {POWER_ITERATION_MAX_ITER} iterations; "
            "returning the best estimate",
            RuntimeWarning,
            stacklevel=2,
        )
        return EigenBounds(None, lam, exact=False)

    def dense(self):
        return np.array(self.matrix)


@dataclass(frozen=True)
class QuadraticProblem:
    """The objective f(w) = 1/2 w^T A w - b^T w + c with SPD operator A.

    Its unique minimizer solves A w = b.
    """

    A: DiagonalOperator | RankOneOperator | DenseOperator
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        b = _as_vector(self.b, self.A.dim, name="b")
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return self.A.dim

    def value(self, x) -> float:
        x = _as_vector(x, self.dim)
        return float(0.5 * (x @ self.A.matvec(x)) - self.b @ x + self.c)

    def gradient(self, x):
        """The derivative A x - b."""
        x = _as_vector(x, self.dim)
        return self.A.matvec(x) - self.b

    def a_inner(self, u, v) -> float:
        """The scalar product u^T A v of the energy norm."""
        u = _as_vector(u, self.dim, name="u")
        return float(u @ self.A.matvec(v))
