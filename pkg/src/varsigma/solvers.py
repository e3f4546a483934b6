"""Coordinate-descent solvers and duality-gap certificates.

The lasso and the l1-squared ("organic") problems are solved by cyclic
coordinate descent; the square-root lasso by alternating a noise-level
update with a lasso solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .core import (
    DegenerateFitError,
    FitResult,
    PenaltyKind,
    PenaltySpec,
    StandardizedDesign,
    VarsigmaError,
    objective,
)

__all__ = [
    "SolverOptions",
    "lasso_cd",
    "organic_cd",
    "sqrt_lasso",
    "lasso_duality_gap",
    "organic_duality_gap",
    "lambda_max_lasso",
    "lambda_max_sqrt",
    "relative_gap",
]


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rules shared by all solvers.

    A solve stops once a full sweep moves no coordinate by more than
    ``tol`` and the duality gap is at most ``gap_tol`` times the primal
    value. ``gap_tol=None`` drops the gap test, so a solve stops on the move
    rule alone (the gap is still reported). ``record_trace`` stores the
    objective after every sweep.
    """

    max_sweeps: int = 100_000
    tol: float = 1e-8
    gap_tol: float | None = 1e-8
    warm_start: NDArray[np.float64] | None = None
    record_trace: bool = False

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise VarsigmaError("max_sweeps must be >= 1")
        if not self.tol > 0:
            raise VarsigmaError("tol must be positive")
        if self.gap_tol is not None and not self.gap_tol > 0:
            raise VarsigmaError("gap_tol must be positive or None")

    def with_warm_start(self, beta) -> SolverOptions:
        return SolverOptions(self.max_sweeps, self.tol, self.gap_tol, beta, self.record_trace)


DEFAULT_OPTIONS = SolverOptions()


def _arrays(sd, y):
    X = sd.X if isinstance(sd, StandardizedDesign) else np.asfortranarray(sd, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise VarsigmaError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    return X, y


def _column_sq(X) -> NDArray[np.float64]:
    return np.einsum("ij,ij->j", X, X)


def _run(mode: int, X, y, lam, opts: SolverOptions, col_sq=None, sigma_floor: float = 0.0):
    """Run the coordinate-descent kernel on raw arrays; returns the kernel tuple and ``beta``."""
    n, p = X.shape
    if not lam >= 0:
        raise VarsigmaError(f"lambda must be nonnegative, got {lam}")
    if col_sq is None:
        col_sq = _column_sq(X)
    if not np.isfortran(X):
        X = np.asfortranarray(X)
    if opts.warm_start is None:
        beta = np.zeros(p)
    else:
        beta = np.array(opts.warm_start, dtype=np.float64)
        if beta.shape != (p,):
            raise VarsigmaError(f"warm start has shape {beta.shape}, expected ({p},)")
        beta[col_sq == 0.0] = 0.0
    r = y - X @ beta
    trace = np.empty(opts.max_sweeps if opts.record_trace else 0)
    gap_tol = math.inf if opts.gap_tol is None else opts.gap_tol
    out = _kernels.coordinate_descent(
        X, y, col_sq, float(lam), mode, beta, r, opts.max_sweeps, opts.tol, gap_tol, float(sigma_floor), trace
    )
    if out[5]:
        raise ArithmeticError(f"objective increased on {out[5]} sweep(s); coordinate descent is broken")
    return out, beta, trace if opts.record_trace else None


def _fit_result(out, beta, trace) -> FitResult:
    sweeps, converged, _, obj, gap, _, _ = out
    return FitResult(
        beta=beta,
        objective=float(obj),
        iterations=int(sweeps),
        converged=bool(converged),
        duality_gap=None if math.isnan(gap) else float(gap),
        trace=None if trace is None else trace[:sweeps],
    )


def _cd(squared: bool, X, y, lam, opts: SolverOptions, col_sq=None) -> FitResult:
    """Lasso (or, with ``squared``, l1-squared) fit on raw arrays."""
    mode = _kernels.ORGANIC if squared else _kernels.LASSO
    return _fit_result(*_run(mode, X, y, lam, opts, col_sq))


def lasso_cd(sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS) -> FitResult:
    """Solve ``min_b n^-1 ||y - X b||^2 + 2 lam ||b||_1`` by cyclic coordinate descent.

    Parameters
    ----------
    sd : StandardizedDesign
    y : array_like, shape (n,)
    lam : float
        Nonnegative penalty level. ``lam = 0`` gives unpenalized coordinate
        descent, which need not converge when ``p > n``.
    opts : SolverOptions

    Returns
    -------
    FitResult
        ``converged`` is False when ``max_sweeps`` ran out; ``beta`` is then
        the last iterate.
    """
    X, y = _arrays(sd, y)
    return _cd(False, X, y, lam, opts)


def organic_cd(sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS) -> FitResult:
    """Solve ``min_b n^-1 ||y - X b||^2 + 2 lam ||b||_1^2`` by cyclic coordinate descent.

    Any coordinatewise minimum of this objective is a global minimum, so
    the cyclic scheme needs no safeguards beyond the stopping rule.
    """
    X, y = _arrays(sd, y)
    return _cd(True, X, y, lam, opts)


def _sqrt_fit(X, y, lam, opts: SolverOptions, sigma_floor: float, col_sq=None) -> tuple[FitResult, float]:
    """Square-root lasso on raw arrays; returns the fit and ``sigma = n^-1/2 ||y - X beta||``."""
    out, beta, trace = _run(_kernels.SQRT, X, y, lam, opts, col_sq, sigma_floor)
    if out[2]:
        raise DegenerateFitError(
            f"square-root lasso residual collapsed (sigma <= {sigma_floor:.3g}) at lambda = {lam:.6g}"
        )
    return _fit_result(out, beta, trace), float(out[6])


def sqrt_lasso(
    sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS
) -> tuple[FitResult, float]:
    """Square-root lasso ``min_b n^-1/2 ||y - X b||_2 + lam ||b||_1``.

    Solved as the jointly convex problem
    ``min_{b, s > 0} ||y - X b||^2 / (2 n s) + s / 2 + lam ||b||_1`` by block
    coordinate descent started at ``beta = 0``, ``s = n^-1/2 ||y||``: each
    cyclic sweep is a lasso sweep at penalty ``lam * s``, followed by the
    exact update ``s <- n^-1/2 ||y - X beta||``. At convergence ``beta``
    solves the lasso at ``lam * s`` (certified by its duality gap) and ``s``
    matches the residual, which is the scaled-lasso fixed point.

    Returns
    -------
    fit : FitResult
        ``objective`` holds the square-root objective at ``fit.beta``;
        ``duality_gap`` is the lasso gap at penalty ``lam * sigma``.
    sigma2 : float
        ``n^-1 ||y - X beta||^2``.

    Raises
    ------
    DegenerateFitError
        If the residual collapses to (numerically) zero.
    """
    if not lam > 0:
        raise VarsigmaError(f"square-root lasso needs lambda > 0, got {lam}")
    X, y = _arrays(sd, y)
    n = X.shape[0]
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        raise DegenerateFitError("y is identically zero")
    fit, _ = _sqrt_fit(X, y, lam, opts, 1e-8 * ynorm / math.sqrt(n))
    r = y - X @ fit.beta
    return fit, float(r @ r) / n


def lasso_duality_gap(sd, y, lam: float, beta) -> float:
    """Lasso primal objective minus the dual value at a rescaled residual.

    The dual is ``n^-1 (||y||^2 - ||y - u||^2)`` over
    ``||X^T u||_inf <= n lam``. The dual point is ``u = s r`` with
    ``r = y - X beta`` and ``s`` the best feasible scale:
    ``y^T r / ||r||^2`` clipped to ``[-n lam / ||X^T r||_inf, n lam / ||X^T r||_inf]``.
    """
    if not lam > 0:
        raise VarsigmaError("duality gap needs lambda > 0")
    X, y = _arrays(sd, y)
    beta = np.asarray(beta, dtype=np.float64)
    n = X.shape[0]
    r = y - X @ beta
    rr = float(r @ r)
    if rr == 0.0:
        dual = 0.0
    else:
        corr = float(np.max(np.abs(X.T @ r)))
        s = float(y @ r) / rr
        if corr > 0.0:
            bound = n * lam / corr
            s = min(max(s, -bound), bound)
        dual = (2.0 * s * float(y @ r) - s * s * rr) / n
    return objective(X, y, beta, PenaltySpec(lam, PenaltyKind.L1)) - float(dual)


def organic_duality_gap(sd, y, lam: float, beta) -> float:
    """Primal minus dual for the l1-squared problem, dual at a rescaled residual.

    The dual function is
    ``g(u) = n^-1 (||y||^2 - ||y - u||^2) - (2 lam)^-1 ||X^T u / n||_inf^2``,
    evaluated at the maximizing multiple ``u = s r`` of ``r = y - X beta``.
    """
    if not lam > 0:
        raise VarsigmaError("duality gap needs lambda > 0")
    X, y = _arrays(sd, y)
    beta = np.asarray(beta, dtype=np.float64)
    n = X.shape[0]
    r = y - X @ beta
    rr = float(r @ r)
    if rr == 0.0:
        dual = 0.0
    else:
        c = float(np.max(np.abs(X.T @ r))) / n
        dual = (float(y @ r) / n) ** 2 / (rr / n + c * c / (2.0 * lam))
    return objective(X, y, beta, PenaltySpec(lam, PenaltyKind.L1_SQUARED)) - float(dual)


def relative_gap(gap: float, primal: float) -> float:
    return gap / max(abs(primal), np.finfo(float).tiny)


def lambda_max_lasso(sd, y) -> float:
    """Smallest lambda at which the lasso solution is zero: ``n^-1 ||X^T y||_inf``."""
    X, y = _arrays(sd, y)
    # same summation order as the solver, so lasso_cd at this value gives exact zeros
    return _kernels._max_corr(np.asfortranarray(X), y, _column_sq(X)) / X.shape[0]


def lambda_max_sqrt(sd, y) -> float:
    """Smallest lambda at which the square-root lasso solution is zero."""
    X, y = _arrays(sd, y)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return 0.0
    return float(np.max(np.abs(X.T @ y))) / (math.sqrt(X.shape[0]) * ynorm)
