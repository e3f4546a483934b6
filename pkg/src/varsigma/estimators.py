"""Error-variance estimators built on the lasso-type fits."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .core import PenaltyKind, PenaltySpec, StandardizedDesign, UndefinedEstimateError, VarsigmaError, objective
from .solvers import DEFAULT_OPTIONS, SolverOptions, lasso_cd, organic_cd, sqrt_lasso

# identities hold exactly only at the optimum; tolerance matches the solver gap
IDENTITY_RTOL = 1e-6


class Method(enum.Enum):
    NAIVE = "naive"
    REID = "reid"
    NATURAL = "natural"
    ORGANIC = "organic"
    SQRT = "sqrt"
    ORACLE = "oracle"


@dataclass(frozen=True)
class VarianceEstimate:
    """An estimate of the error variance plus fit diagnostics.

    ``identity_residual`` is the largest pairwise disagreement between the
    closed-form expressions of the estimate (natural and organic only);
    ``identity_ok`` compares it with ``1e-6 * max(1, sigma2)``.
    """

    sigma2: float
    method: Method
    lam: float | None = None
    nnz: int | None = None
    beta: NDArray[np.float64] | None = None
    converged: bool = True
    duality_gap: float | None = None
    identity_residual: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def identity_ok(self) -> bool | None:
        if self.identity_residual is None:
            return None
        return self.identity_residual <= IDENTITY_RTOL * max(1.0, self.sigma2)

    def summary(self) -> dict:
        return {
            "method": self.method.value,
            "sigma2": self.sigma2,
            "lambda": self.lam,
            "nnz": self.nnz,
            "converged": self.converged,
            "duality_gap": self.duality_gap,
            "identity_residual": self.identity_residual,
        }


def _rss(sd, y, beta) -> float:
    r = np.asarray(y) - sd.X @ beta
    return float(r @ r)


def natural_variance(sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS) -> VarianceEstimate:
    """Natural lasso estimate: the optimal value of the lasso problem.

    ``sigma2 = min_b n^-1 ||y - X b||^2 + 2 lam ||b||_1``. The closed form
    ``n^-1 (||y||^2 - ||X b_hat||^2)`` is evaluated as a check.
    """
    y = np.asarray(y, dtype=np.float64)
    fit = lasso_cd(sd, y, lam, opts)
    n = sd.n
    fitted = sd.X @ fit.beta
    closed = (float(y @ y) - float(fitted @ fitted)) / n
    return VarianceEstimate(
        sigma2=fit.objective,
        method=Method.NATURAL,
        lam=lam,
        nnz=fit.nnz,
        beta=fit.beta,
        converged=fit.converged,
        duality_gap=fit.duality_gap,
        identity_residual=abs(fit.objective - closed),
    )


def organic_variance(sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS) -> VarianceEstimate:
    """Organic lasso estimate: the optimal value of l1-squared penalized least squares.

    Three expressions of the optimum are compared: the solver objective,
    the objective recomputed from ``beta``, and
    ``n^-1 (||y||^2 - ||X b||^2 - 2 n lam ||b||_1^2)``.
    """
    y = np.asarray(y, dtype=np.float64)
    fit = organic_cd(sd, y, lam, opts)
    n = sd.n
    beta = fit.beta
    l1 = float(np.abs(beta).sum())
    fitted = sd.X @ beta
    direct = objective(sd, y, beta, PenaltySpec(lam, PenaltyKind.L1_SQUARED))
    closed = (float(y @ y) - float(fitted @ fitted) - 2.0 * n * lam * l1 * l1) / n
    values = (fit.objective, direct, closed)
    return VarianceEstimate(
        sigma2=fit.objective,
        method=Method.ORGANIC,
        lam=lam,
        nnz=fit.nnz,
        beta=beta,
        converged=fit.converged,
        duality_gap=fit.duality_gap,
        identity_residual=max(values) - min(values),
    )


def naive_variance(sd: StandardizedDesign, y, beta) -> VarianceEstimate:
    """Residual mean square ``n^-1 ||y - X beta||^2``."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (sd.p,):
        raise VarsigmaError(f"beta has shape {beta.shape}, expected ({sd.p},)")
    return VarianceEstimate(
        sigma2=_rss(sd, y, beta) / sd.n,
        method=Method.NAIVE,
        nnz=int(np.count_nonzero(beta)),
        beta=beta,
    )


def reid_variance(sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS) -> VarianceEstimate:
    """Degrees-of-freedom adjusted estimate ``(n - s)^-1 ||y - X b_hat||^2``.

    ``s`` counts the exactly nonzero lasso coefficients at ``lam``; pass a
    cross-validated ``lam`` to reproduce the usual protocol.

    Raises
    ------
    UndefinedEstimateError
        When ``s >= n``.
    """
    fit = lasso_cd(sd, y, lam, opts)
    s = fit.nnz
    if s >= sd.n:
        raise UndefinedEstimateError(f"Reid estimator undefined: {s} nonzero coefficients with n = {sd.n}")
    return VarianceEstimate(
        sigma2=_rss(sd, y, fit.beta) / (sd.n - s),
        method=Method.REID,
        lam=lam,
        nnz=s,
        beta=fit.beta,
        converged=fit.converged,
        duality_gap=fit.duality_gap,
    )


def sqrt_variance(sd: StandardizedDesign, y, lam: float, opts: SolverOptions = DEFAULT_OPTIONS) -> VarianceEstimate:
    """Square-root / scaled lasso estimate ``n^-1 ||y - X b_sqrt||^2``."""
    fit, sigma2 = sqrt_lasso(sd, y, lam, opts)
    return VarianceEstimate(
        sigma2=sigma2,
        method=Method.SQRT,
        lam=lam,
        nnz=fit.nnz,
        beta=fit.beta,
        converged=fit.converged,
        duality_gap=fit.duality_gap,
    )


def oracle_variance(eps) -> VarianceEstimate:
    """``n^-1 ||eps||^2``; needs the true noise, so simulation only."""
    eps = np.asarray(eps, dtype=np.float64)
    return VarianceEstimate(sigma2=float(eps @ eps) / eps.shape[0], method=Method.ORACLE)
