"""In-context linear heads: closed-form ridge and pinball-loss regression.

Both fits standardize feature columns internally (statistics of the context
rows, std floored) and keep the intercept unpenalized; coefficients are
mapped back to the original scale before being returned, so predictions are
invariant to affine rescaling of any feature column.

The ridge head solves the regularized normal equations with a symmetric
positive-definite solve. The quantile head minimizes the pinball loss by
gradient descent on a smoothed surrogate, annealing the smoothing width and
letting a backtracking line search decay the step; adequate at in-context
scale (a few thousand rows) without pulling in an LP solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import STD_FLOOR

DEFAULT_LAMBDA = 1e-3

_PINBALL_MAX_ITER = 5000
_PINBALL_TOL_REL = 1e-7
_PINBALL_STALL = 5
_H_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class LinearModel:
    """Fitted coefficients of a ridge or pinball linear head.

    ``lam`` is the ridge penalty applied to the standardized coefficients;
    ``quantile`` is set for pinball models and None for ridge.
    """

    weights: np.ndarray
    intercept: float
    lam: float
    quantile: float | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.intercept):
            raise ValueError("model coefficients must be finite")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.quantile is not None and not (0.0 < self.quantile < 1.0):
            raise ValueError("quantile must lie strictly in (0, 1)")


def _rows(X) -> np.ndarray:
    rows = np.asarray(getattr(X, "rows", X), dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    return rows


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mx = X.mean(axis=0)
    sx = np.maximum(X.std(axis=0), STD_FLOOR)
    return (X - mx) / sx, mx, sx


def ridge_fit(X, y, lam: float = DEFAULT_LAMBDA) -> LinearModel:
    """Ridge regression with unpenalized intercept via normal equations.

    Minimizes ||y - Xw - b||^2 + lam * ||w_std||^2 where w_std are the
    coefficients on internally standardized columns. Falls back to a
    least-squares solve when the regularized system is singular (lam = 0 on
    rank-deficient contexts).
    """
    X = _rows(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 1:
        raise ValueError("empty context")
    if X.shape[0] != len(y):
        raise ValueError("X and y must have matching row counts")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite inputs")
    if lam < 0:
        raise ValueError("lam must be nonnegative")

    Xs, mx, sx = _standardize(X)
    my = float(np.mean(y))
    ys = y - my

    A = Xs.T @ Xs + lam * np.eye(X.shape[1])
    rhs = Xs.T @ ys
    try:
        with warnings.catch_warnings():
            # The residual check below decides whether the solve was good
            # enough; scipy's ill-conditioning warning is redundant here.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            ws = scipy.linalg.solve(A, rhs, assume_a="pos")
    except np.linalg.LinAlgError:
        ws = np.linalg.lstsq(A, rhs, rcond=None)[0]
    resid = np.linalg.norm(A @ ws - rhs)
    if resid > 1e-8 * max(np.linalg.norm(rhs), 1.0):
        ws = np.linalg.lstsq(A, rhs, rcond=None)[0]
        resid = np.linalg.norm(A @ ws - rhs)
        if resid > 1e-8 * max(np.linalg.norm(rhs), 1.0):
            raise ArithmeticError("normal equations solve did not converge")

    w = ws / sx
    b = my - float(w @ mx)
    return LinearModel(weights=w, intercept=b, lam=lam)


def predict(model: LinearModel, X) -> np.ndarray:
    """Apply a fitted linear head: X @ w + b."""
    rows = _rows(X)
    if rows.shape[1] != len(model.weights):
        raise ValueError("feature dimension mismatch")
    return rows @ model.weights + model.intercept


def _pinball(residual: np.ndarray, alpha: float) -> float:
    return float(np.where(residual > 0, alpha * residual, (alpha - 1.0) * residual).sum())


def _smoothed_slope(residual: np.ndarray, alpha: float, h: float) -> np.ndarray:
    # d/dr of the smoothed pinball loss: the two linear branches joined by a
    # quadratic ramp of half-width h.
    return np.where(
        residual >= h,
        alpha,
        np.where(residual <= -h, alpha - 1.0, residual / (2.0 * h) + (alpha - 0.5)),
    )


def pinball_fit(
    X,
    y,
    alpha: float,
    lam: float = DEFAULT_LAMBDA,
    max_iter: int = _PINBALL_MAX_ITER,
    tol_rel: float = _PINBALL_TOL_REL,
) -> LinearModel:
    """Quantile linear head: minimize sum pinball_alpha(Xw + b, y) + lam*||w||^2.

    Warm-started at the ridge solution, then descended on a smoothed pinball
    objective with the smoothing width annealed over a fixed schedule. Each
    stage stops once the exact objective improves by less than ``tol_rel``
    (relative) for 5 consecutive iterations; ``max_iter`` caps the total
    iteration count across stages.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly in (0, 1)")
    X = _rows(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("empty context: pinball fit needs at least 2 rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite inputs")

    Xs, mx, sx = _standardize(X)
    my = float(np.mean(y))
    sy = max(float(np.std(y)), STD_FLOOR)
    ys = (y - my) / sy
    # The descent runs on the target scaled by sy; dividing the penalty by sy
    # keeps the minimizer that of sum QL(original units) + lam * ||w_std||^2.
    lam_eff = lam / sy

    A = Xs.T @ Xs + max(lam_eff, 1e-10) * np.eye(X.shape[1])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            w = scipy.linalg.solve(A, Xs.T @ ys, assume_a="pos")
    except np.linalg.LinAlgError:
        w = np.zeros(X.shape[1])
    b = 0.0

    def objective(wv: np.ndarray, bv: float) -> float:
        r = ys - (Xs @ wv + bv)
        return _pinball(r, alpha) + lam_eff * float(wv @ wv)

    obj = objective(w, b)
    budget = max_iter
    for h in _H_SCHEDULE:
        if budget <= 0:
            break
        stall = 0
        step = 1.0
        while budget > 0:
            budget -= 1
            r = ys - (Xs @ w + b)
            slope = _smoothed_slope(r, alpha, h)
            gw = -Xs.T @ slope + 2.0 * lam_eff * w
            gb = -float(slope.sum())
            gnorm2 = float(gw @ gw) + gb * gb
            if gnorm2 == 0.0:
                break
            # Backtracking line search on the exact objective; the accepted
            # step only ever decays within an iteration.
            s = step
            new_obj = obj
            for _ in range(60):
                wn = w - s * gw / len(ys)
                bn = b - s * gb / len(ys)
                cand = objective(wn, bn)
                if cand < obj:
                    new_obj = cand
                    break
                s *= 0.5
            else:
                break
            w, b = wn, bn
            improved = obj - new_obj
            obj = new_obj
            step = min(s * 2.0, 1e3)
            if improved < tol_rel * max(1.0, abs(obj)):
                stall += 1
                if stall >= _PINBALL_STALL:
                    break
            else:
                stall = 0

    w_orig = w * sy / sx
    b_orig = my + sy * b - float(w_orig @ mx)
    return LinearModel(weights=w_orig, intercept=b_orig, lam=lam, quantile=alpha)


def enforce_noncrossing(quantile_predictions: dict[float, np.ndarray]) -> dict[float, np.ndarray]:
    """Monotone rearrangement of per-timestamp quantile predictions.

    Values at each timestamp are sorted so that a higher quantile level never
    predicts below a lower one; already-monotone inputs come back unchanged.
    """
    if not quantile_predictions:
        raise ValueError("need at least one quantile level")
    alphas = sorted(quantile_predictions)
    stacked = np.vstack([np.asarray(quantile_predictions[a], dtype=float) for a in alphas])
    stacked = np.sort(stacked, axis=0)
    return {a: stacked[i] for i, a in enumerate(alphas)}
