"""Tuning-parameter selection: grids, K-fold cross-validation, fixed values.

Also holds the map between the lasso and organic-lasso solution paths.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .core import DegenerateFitError, PenaltyKind, StandardizedDesign, VarsigmaError
from .estimators import Method
from .seeding import make_rng
from .solvers import (
    DEFAULT_OPTIONS,
    SolverOptions,
    _cd,
    _column_sq,
    _sqrt_fit,
    lambda_max_lasso,
    lambda_max_sqrt,
    organic_cd,
)

# a training fit explaining more than this fraction of ||y||^2 ends the path
SATURATION = 0.999

# CV only ranks validation errors, so its path fits stop on coordinate moves
# alone (no gap certificate), as glmnet does
CV_OPTIONS = SolverOptions(tol=1e-5, gap_tol=None)

# CV stops early once the mean curve sits RISE above its minimum for PATIENCE points
RISE = 0.1
PATIENCE = 5


class FixedLambda(enum.Enum):
    LAMBDA0 = "lambda0"
    LAMBDA2 = "lambda2"


class PathDirection(enum.Enum):
    NATURAL_TO_ORGANIC = "natural_to_organic"
    ORGANIC_TO_NATURAL = "organic_to_natural"


@dataclass(frozen=True)
class LambdaGrid:
    values: NDArray[np.float64]
    anchor: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise VarsigmaError("grid must be a non-empty vector")
        if np.any(v <= 0):
            raise VarsigmaError("grid values must be positive")
        if np.any(np.diff(v) >= 0):
            raise VarsigmaError("grid values must be strictly decreasing")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class CvResult:
    """Cross-validation outcome.

    ``cv_mean`` and ``cv_se`` are the mean and standard error over folds of
    the validation mean squared prediction error; ``inf`` marks grid points
    beyond a saturated (near-interpolating) fit on some fold.
    """

    chosen_lambda: float
    grid: LambdaGrid
    cv_mean: NDArray[np.float64]
    cv_se: NDArray[np.float64]
    fold_assignment_seed: int
    folds: tuple

    @property
    def chosen_index(self) -> int:
        return int(np.flatnonzero(self.grid.values == self.chosen_lambda)[0])


def log_grid(anchor: float, count: int, ratio: float) -> LambdaGrid:
    if count < 2:
        raise VarsigmaError("grid needs at least two points")
    if not 0 < ratio < 1:
        raise VarsigmaError("ratio must lie in (0, 1)")
    if not anchor > 0:
        raise VarsigmaError("degenerate grid: anchor must be positive (is y zero?)")
    return LambdaGrid(anchor * np.logspace(0.0, math.log10(ratio), count), anchor)


def make_grid(
    sd: StandardizedDesign,
    y,
    kind: PenaltyKind = PenaltyKind.L1,
    count: int = 50,
    ratio: float = 1e-3,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> LambdaGrid:
    """Log-spaced grid from an anchor down to ``anchor * ratio``.

    The L1 anchor is ``lambda_max_lasso``. The organic problem never has an
    all-zero solution, so its anchor maps ``lambda_max_lasso`` through the
    path correspondence using a pilot organic fit at ``log(p) / n``:
    ``anchor = lambda_max / (2 ||beta_pilot||_1)``.
    """
    lmax = lambda_max_lasso(sd, y)
    if lmax == 0.0:
        raise VarsigmaError("degenerate grid: X^T y = 0")
    anchor = lmax
    if kind is PenaltyKind.L1_SQUARED and sd.p >= 2:
        pilot = organic_cd(sd, y, lambda_fixed(sd.n, sd.p, FixedLambda.LAMBDA2), opts)
        l1 = float(np.abs(pilot.beta).sum())
        if l1 > 0 and np.isfinite(l1):
            anchor = lmax / (2.0 * l1)
    return log_grid(anchor, count, ratio)


def sqrt_grid(sd: StandardizedDesign, y, count: int = 50, ratio: float = 1e-3) -> LambdaGrid:
    """Grid for the square-root lasso anchored at its own zero-solution threshold."""
    return log_grid(lambda_max_sqrt(sd, y), count, ratio)


def grid_for(method: Method, sd, y, count: int = 50, ratio: float = 1e-3, opts=DEFAULT_OPTIONS) -> LambdaGrid:
    if method is Method.ORGANIC:
        return make_grid(sd, y, PenaltyKind.L1_SQUARED, count, ratio, opts)
    if method is Method.SQRT:
        return sqrt_grid(sd, y, count, ratio)
    if method is Method.ORACLE:
        raise VarsigmaError("the oracle has no tuning parameter")
    return make_grid(sd, y, PenaltyKind.L1, count, ratio, opts)


def fold_assignment(n: int, K: int, seed: int) -> list[NDArray[np.intp]]:
    """Seeded permutation of ``range(n)`` cut into K contiguous near-equal blocks."""
    if K < 2:
        raise VarsigmaError("need K >= 2 folds")
    if n < K:
        raise VarsigmaError(f"cannot split {n} observations into {K} non-empty folds")
    perm = make_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(perm, K)]


class _FoldPath:
    """Warm-started path on one training split, advanced one grid point at a time."""

    def __init__(self, method: Method, Xtr, ytr, Xva, yva, opts: SolverOptions):
        self.method = method
        self.X = np.asfortranarray(Xtr)
        self.y = ytr
        self.Xva = Xva
        self.yva = yva
        self.opts = opts
        self.col_sq = _column_sq(self.X)
        self.yy = float(ytr @ ytr)
        self.beta = np.zeros(self.X.shape[1])
        self.sigma_floor = math.sqrt((1.0 - SATURATION) * self.yy / ytr.shape[0])
        self.saturated = False

    def step(self, lam: float) -> float:
        """Validation MSE at ``lam``; ``inf`` once the path has saturated."""
        if self.saturated:
            return math.inf
        warm = SolverOptions(self.opts.max_sweeps, self.opts.tol, self.opts.gap_tol, self.beta)
        if self.method is Method.SQRT:
            try:
                fit, _ = _sqrt_fit(self.X, self.y, lam, warm, self.sigma_floor, self.col_sq)
            except DegenerateFitError:
                self.saturated = True
                return math.inf
        else:
            fit = _cd(self.method is Method.ORGANIC, self.X, self.y, lam, warm, self.col_sq)
        self.beta = fit.beta
        rt = self.y - self.X @ self.beta
        if float(rt @ rt) <= (1.0 - SATURATION) * self.yy:
            self.saturated = True
        rv = self.yva - self.Xva @ self.beta
        return float(rv @ rv) / self.yva.shape[0]


def kfold_cv(
    sd: StandardizedDesign,
    y,
    method: Method,
    grid: LambdaGrid,
    K: int = 5,
    seed: int = 0,
    opts: SolverOptions = CV_OPTIONS,
    patience: int | None = PATIENCE,
) -> CvResult:
    """K-fold cross-validation of prediction error along ``grid``.

    The naive, Reid and natural estimators share the lasso fit, so they
    share its cross-validation curve. All folds walk the grid together from
    the largest lambda down with warm starts. A fold stops once its training
    fit explains more than 99.9% of ``||y||^2``, and its remaining grid
    points get infinite error. The walk also ends once the mean validation
    error has stayed above ``1 + RISE`` times its running minimum for
    ``patience`` consecutive points (``None`` walks the whole grid). The
    chosen lambda minimizes the mean validation MSE, ties going to the
    larger lambda.
    """
    y = np.asarray(y, dtype=np.float64)
    folds = fold_assignment(sd.n, K, seed)
    X = sd.X
    paths = []
    for val in folds:
        train = np.ones(sd.n, dtype=bool)
        train[val] = False
        paths.append(_FoldPath(method, X[train], y[train], X[val], y[val], opts))
    errs = np.full((K, len(grid)), np.inf)
    best = math.inf
    above = 0
    for g, lam in enumerate(grid.values):
        for k, path in enumerate(paths):
            errs[k, g] = path.step(lam)
        m = float(errs[:, g].mean())
        if not math.isfinite(m):
            break
        best = min(best, m)
        above = above + 1 if m > (1.0 + RISE) * best else 0
        if patience is not None and above >= patience:
            break
    with np.errstate(invalid="ignore"):
        mean = errs.mean(axis=0)
        se = errs.std(axis=0, ddof=1) / math.sqrt(K)
    se[~np.isfinite(mean)] = np.inf
    chosen = int(np.argmin(mean))
    return CvResult(
        chosen_lambda=float(grid.values[chosen]),
        grid=grid,
        cv_mean=mean,
        cv_se=se,
        fold_assignment_seed=int(seed),
        folds=tuple(folds),
    )


def lambda_fixed(n: int, p: int, variant: FixedLambda | str) -> float:
    """Fixed tuning values: ``lambda0 = sqrt(2 log p / n)``, ``lambda2 = log p / n``."""
    variant = FixedLambda(variant)
    if n < 1:
        raise VarsigmaError("n must be >= 1")
    if p < 2:
        raise VarsigmaError("fixed tuning values need p >= 2")
    if variant is FixedLambda.LAMBDA0:
        return math.sqrt(2.0 * math.log(p) / n)
    return math.log(p) / n


def lambda3_monte_carlo(sd, reps: int = 1000, seed: int = 0, chunk: int = 1000) -> float:
    """Monte Carlo estimate of ``E(n^-2 ||X^T e||_inf^2)`` with ``e ~ N(0, I_n)``."""
    if reps < 1:
        raise VarsigmaError("reps must be >= 1")
    X = sd.X if isinstance(sd, StandardizedDesign) else np.asarray(sd, dtype=np.float64)
    n = X.shape[0]
    rng = make_rng(seed)
    total = 0.0
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        E = rng.standard_normal((m, n))
        total += float(np.sum((np.max(np.abs(E @ X), axis=1) / n) ** 2))
        done += m
    return total / reps


def path_map(beta, lam: float, direction: PathDirection | str) -> float:
    """Tuning value at which the other problem reproduces ``beta``.

    ``NATURAL_TO_ORGANIC``: a lasso solution at ``lam`` solves the organic
    problem at ``lam / (2 ||beta||_1)``. ``ORGANIC_TO_NATURAL``: an organic
    solution at ``lam`` solves the lasso at ``2 lam ||beta||_1``.
    """
    direction = PathDirection(direction)
    l1 = float(np.abs(np.asarray(beta, dtype=np.float64)).sum())
    if direction is PathDirection.NATURAL_TO_ORGANIC:
        if l1 == 0.0:
            raise VarsigmaError("path map undefined for a zero lasso solution")
        return lam / (2.0 * l1)
    return 2.0 * lam * l1
