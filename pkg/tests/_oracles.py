"""Independent reference computations used by the tests.

Nothing here calls into the package's solvers; objectives are written out
from their definitions.
"""

from __future__ import annotations

import math

import numpy as np


def standardized(X):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    return X * (math.sqrt(n) / np.linalg.norm(X, axis=0))


def random_instance(rng, n, p, k=None, noise=1.0):
    """Standardized Gaussian design and ``y = X b + noise`` with ``k`` nonzero entries in ``b``."""
    X = standardized(rng.standard_normal((n, p)))
    k = min(p, 3) if k is None else k
    b = np.zeros(p)
    b[rng.choice(p, k, replace=False)] = rng.uniform(-1.0, 1.0, k)
    y = X @ b + noise * rng.standard_normal(n)
    return X, y


def penalized(X, y, squared):
    """Vectorized objective ``B -> n^-1 ||y - X b||^2 + 2 lam P(b)`` over rows of ``B``."""
    n = X.shape[0]
    G = X.T @ X
    Xty = X.T @ y
    yy = float(y @ y)

    def f(B, lam):
        rss = yy - 2.0 * B @ Xty + np.einsum("ij,jk,ik->i", B, G, B)
        l1 = np.abs(B).sum(axis=1)
        return rss / n + 2.0 * lam * (l1 * l1 if squared else l1)

    return f


def _axis(center, half, step):
    lo = math.floor((center - half) / step)
    hi = math.ceil((center + half) / step)
    return np.arange(lo, hi + 1) * step


def _mesh(axes):
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def grid_minimum(f, lam, p, radius):
    """Brute-force minimum of ``f`` over ``[-radius, radius]^p``.

    A step-1e-2 pass locates the basin; step-1e-3 and step-1e-5 windows are
    then re-centred until their argmin is interior. Grid points are integer
    multiples of the step, so the kinks at zero are always sampled.
    """
    coarse = 1e-3 if p == 1 else 1e-2
    B = _mesh([_axis(0.0, radius, coarse)] * p)
    vals = f(B, lam)
    best = B[np.argmin(vals)]
    for step, half in ((1e-3, 0.15), (1e-5, 3e-3)):
        for _ in range(50):
            axes = [_axis(c, half, step) for c in best]
            B = _mesh(axes)
            vals = f(B, lam)
            i = int(np.argmin(vals))
            new = B[i]
            interior = all(a[0] < v < a[-1] for a, v in zip(axes, new))
            best = new
            if interior:
                break
    return float(f(best[None, :], lam)[0]), best


def l1_radius(y, lam, squared):
    """Every minimizer lies in the l1 ball where the penalty alone stays below ``||y||^2 / n``."""
    bound = float(y @ y) / (y.shape[0] * 2.0 * lam)
    return math.sqrt(bound) if squared else bound
