"""Data containers, column standardization and penalized objectives.

Everything downstream works on the standardized scale, where every kept
column satisfies ``||X_j||^2 = n``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


class VarsigmaError(ValueError):
    """Base class for the errors raised by this package."""


class DegenerateDesignError(VarsigmaError):
    """Every column of the design was dropped during standardization."""


class DegenerateFitError(VarsigmaError):
    """A fit collapsed to zero residual (exact interpolation)."""


class UndefinedEstimateError(VarsigmaError):
    """An estimator is undefined for the given fit, e.g. Reid with s >= n."""


class PenaltyKind(enum.Enum):
    L1 = "l1"
    L1_SQUARED = "l1_squared"


@dataclass(frozen=True)
class Dataset:
    """Response ``y`` and design ``X`` of a linear model without intercept."""

    y: NDArray[np.float64]
    X: NDArray[np.float64]

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        X = np.asarray(self.X, dtype=np.float64)
        if y.ndim != 1:
            raise VarsigmaError(f"y must be one-dimensional, got shape {y.shape}")
        if X.ndim != 2:
            raise VarsigmaError(f"X must be two-dimensional, got shape {X.shape}")
        n, p = X.shape
        if n < 1 or p < 1:
            raise VarsigmaError(f"need n >= 1 and p >= 1, got X of shape {X.shape}")
        if y.shape[0] != n:
            raise VarsigmaError(f"y has length {y.shape[0]} but X has {n} rows")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise VarsigmaError("y and X must not contain NaN or Inf")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def centered(self) -> Dataset:
        """Copy with ``y`` and every column of ``X`` centered to mean zero."""
        return Dataset(self.y - self.y.mean(), self.X - self.X.mean(axis=0))


@dataclass(frozen=True)
class StandardizedDesign:
    """Design with kept columns rescaled to squared norm ``n``.

    Attributes
    ----------
    X : ndarray, shape (n, p)
        Fortran-ordered standardized design. Dropped columns are all zero.
    scales : ndarray, shape (p,)
        Original column norm divided by ``sqrt(n)``; zero for dropped columns.
        Coefficients map back as ``beta_orig = beta_std / scales``.
    dropped : frozenset of int
        Columns whose original norm fell below the drop tolerance.
    """

    X: NDArray[np.float64]
    scales: NDArray[np.float64]
    dropped: frozenset = field(default_factory=frozenset)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def degenerate(self) -> bool:
        return len(self.dropped) == self.p

    def kept_mask(self) -> NDArray[np.bool_]:
        mask = np.ones(self.p, dtype=bool)
        mask[list(self.dropped)] = False
        return mask

    def to_original_scale(self, beta: NDArray[np.float64]) -> NDArray[np.float64]:
        out = np.zeros(self.p)
        keep = self.kept_mask()
        out[keep] = np.asarray(beta)[keep] / self.scales[keep]
        return out

    def to_standardized_scale(self, beta: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.asarray(beta, dtype=np.float64) * self.scales


def default_drop_tol(n: int) -> float:
    return 1e-10 * math.sqrt(n)


def standardize_columns(data: Dataset | NDArray, drop_tol: float | None = None) -> StandardizedDesign:
    """Rescale every column of the design to squared Euclidean norm ``n``.

    Parameters
    ----------
    data : Dataset or ndarray
        The dataset, or a bare ``n x p`` design matrix.
    drop_tol : float, optional
        Columns with norm at or below this value are dropped (kept as zero
        columns). Defaults to ``1e-10 * sqrt(n)``.

    Returns
    -------
    StandardizedDesign
    """
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise VarsigmaError(f"X must be two-dimensional, got shape {X.shape}")
    n, p = X.shape
    if drop_tol is None:
        drop_tol = default_drop_tol(n)
    if drop_tol < 0:
        raise VarsigmaError("drop_tol must be nonnegative")

    norms = np.linalg.norm(X, axis=0)
    keep = norms > drop_tol
    scales = np.where(keep, norms / math.sqrt(n), 0.0)
    Xs = np.zeros((n, p), order="F")
    Xs[:, keep] = X[:, keep] / scales[keep]
    dropped = frozenset(int(j) for j in np.flatnonzero(~keep))
    if len(dropped) == p:
        warnings.warn("all columns dropped; solvers will return beta = 0", RuntimeWarning, stacklevel=2)
    Xs.setflags(write=False)
    scales.setflags(write=False)
    return StandardizedDesign(X=Xs, scales=scales, dropped=dropped)


@dataclass(frozen=True)
class PenaltySpec:
    lam: float
    kind: PenaltyKind = PenaltyKind.L1

    def __post_init__(self):
        if not self.lam >= 0:
            raise VarsigmaError(f"lambda must be nonnegative, got {self.lam}")


@dataclass(frozen=True)
class FitResult:
    """Outcome of a coordinate-descent solve on the standardized scale."""

    beta: NDArray[np.float64]
    objective: float
    iterations: int
    converged: bool
    duality_gap: float | None = None
    trace: NDArray[np.float64] | None = None

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.beta))


def soft_threshold(a, b):
    """``sign(a) * max(|a| - b, 0)``; works elementwise on arrays."""
    if np.any(np.asarray(b) < 0):
        raise VarsigmaError("threshold must be nonnegative")
    out = np.sign(a) * np.maximum(np.abs(a) - b, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _design(sd) -> NDArray[np.float64]:
    return sd.X if isinstance(sd, (StandardizedDesign, Dataset)) else np.asarray(sd, dtype=np.float64)


def objective(sd, y, beta, pen: PenaltySpec) -> float:
    """Penalized least-squares objective ``n^-1 ||y - X beta||^2 + 2 lam P(beta)``.

    ``P`` is ``||beta||_1`` for ``PenaltyKind.L1`` and ``||beta||_1^2`` for
    ``PenaltyKind.L1_SQUARED``.
    """
    X = _design(sd)
    y = np.asarray(y, dtype=np.float64)
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    n = X.shape[0]
    r = y - X @ beta
    l1 = float(np.abs(beta).sum())
    penalty = l1 if pen.kind is PenaltyKind.L1 else l1 * l1
    return float(r @ r) / n + 2.0 * pen.lam * penalty


def max_abs_correlation(sd, r) -> float:
    """``n^-1 ||X^T r||_inf``."""
    X = _design(sd)
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != X.shape[0]:
        raise VarsigmaError(f"r has length {r.shape[0]}, expected {X.shape[0]}")
    return float(np.max(np.abs(X.T @ r))) / X.shape[0]
