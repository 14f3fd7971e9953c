"""Covariance-projection fairness regularizer for linear ranking models.

The regularizer penalizes the component of the model that moves with the
protected attribute. It is built in two steps from a reference pool:

1. Fit an auxiliary direction ``w_a`` that predicts the protected attribute
   from the features by centered ridge regression,

       (Xh Xh^T + alpha_a * N * I) w_a = Xh Ah^T,

   where ``Xh`` is the column-centered m x N feature matrix, ``Ah`` the
   centered protected attributes, and ``alpha_a`` a small per-sample ridge
   that keeps the solve well posed when ``alpha_a > 0``.

2. Project through the feature covariance ``Sigma_x = Xh Xh^T / N`` to get
   the penalty direction ``w_reg = Sigma_x w_a``, which is proportional to
   the covariance between the features and the predicted protected attribute.

Training then discourages alignment with ``w_reg``. The online update is

    w <- w + eta * (y - yhat) * (1, x) - lambda * (w . w_reg~) * w_reg~,

with ``w_reg~`` the intercept-padded direction (0, w_reg); the penalty term
applies every round, including rounds without a mistake. The batch analogue
solves ``(X X^T + lambda * w_reg~ w_reg~^T) w = X Y^T`` exactly.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .datagen import DataPoint, feature_matrix, protected_values
from .errors import ConfigError, DimensionMismatch, SingularSystemError
from .learner import LinearModel, augment

# Relative residual above which a direct solve is reported as unreliable.
RESIDUAL_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class FairRegularizer:
    """Fitted penalty: auxiliary direction, feature covariance, and strength.

    Immutable after construction; use :meth:`with_strength` to change lambda.
    """

    w_a: np.ndarray
    sigma_x: np.ndarray
    w_reg: np.ndarray
    lam: float
    alpha_a: float

    def __post_init__(self):
        w_a = np.array(self.w_a, dtype=float)
        sigma = np.array(self.sigma_x, dtype=float)
        w_reg = np.array(self.w_reg, dtype=float)
        m = w_a.size
        if w_a.ndim != 1 or sigma.shape != (m, m) or w_reg.shape != (m,):
            raise DimensionMismatch("w_a, sigma_x, and w_reg must be m, (m, m), and m shaped")
        if not (np.all(np.isfinite(w_a)) and np.all(np.isfinite(sigma)) and np.all(np.isfinite(w_reg))):
            raise ConfigError("regularizer entries must be finite")
        if not np.allclose(sigma, sigma.T, rtol=1e-9, atol=1e-12):
            raise ConfigError("sigma_x must be symmetric")
        if not np.allclose(w_reg, sigma @ w_a, rtol=1e-9, atol=1e-12):
            raise ConfigError("w_reg must equal sigma_x @ w_a")
        if self.lam < 0.0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")
        if self.alpha_a < 0.0:
            raise ConfigError(f"alpha_a must be non-negative, got {self.alpha_a}")
        for name, value in (("w_a", w_a), ("sigma_x", sigma), ("w_reg", w_reg)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def m(self) -> int:
        return self.w_a.size

    def with_strength(self, lam: float) -> "FairRegularizer":
        """Same fitted directions with a different penalty strength."""
        return replace(self, lam=lam)

    def padded_direction(self) -> np.ndarray:
        """``w_reg`` with a zero prepended so the intercept is never penalized."""
        return np.concatenate(([0.0], self.w_reg))


def _solve_reported(A: np.ndarray, b: np.ndarray, context: str) -> np.ndarray:
    """Direct solve with a singularity report carrying a condition diagnostic."""
    try:
        w = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"{context}: singular system (cond={np.linalg.cond(A):.3e})"
        ) from exc
    scale = float(np.linalg.norm(b))
    residual = float(np.linalg.norm(A @ w - b))
    relative = residual / scale if scale > 0.0 else residual
    if not np.all(np.isfinite(w)) or relative > RESIDUAL_TOLERANCE:
        raise SingularSystemError(
            f"{context}: unreliable solve, relative residual {relative:.3e} "
            f"(cond={np.linalg.cond(A):.3e})"
        )
    return w


def fit_auxiliary(pool: list[DataPoint], alpha_a: float = 1e-3, lam: float = 0.0) -> FairRegularizer:
    """Fit the auxiliary predictor of the protected attribute and its projection.

    Solves ``(Xh Xh^T + alpha_a * N * I) w_a = Xh Ah^T`` on centered data and
    returns the regularizer with ``sigma_x = Xh Xh^T / N`` and
    ``w_reg = sigma_x @ w_a``. With ``alpha_a = 0`` this is the plain
    least-squares normal system, which can be singular for degenerate data.
    """
    if len(pool) < 2:
        raise ConfigError(f"need at least 2 points to fit, got {len(pool)}")
    if alpha_a < 0.0:
        raise ConfigError(f"alpha_a must be non-negative, got {alpha_a}")
    features = feature_matrix(pool)
    attrs = protected_values(pool).astype(float)
    n, m = features.shape
    centered = features - features.mean(axis=0)
    attrs_centered = attrs - attrs.mean()
    gram = centered.T @ centered
    w_a = _solve_reported(gram + alpha_a * n * np.eye(m), centered.T @ attrs_centered,
                          "auxiliary fit")
    sigma_x = gram / n
    return FairRegularizer(w_a=w_a, sigma_x=sigma_x, w_reg=sigma_x @ w_a,
                           lam=lam, alpha_a=alpha_a)


def solve_exact(design: np.ndarray, targets: np.ndarray, reg: FairRegularizer) -> LinearModel:
    """Solve the penalized least-squares system in closed form.

    ``design`` is the (m + 1, N) matrix whose columns are intercept-augmented
    feature vectors; ``targets`` is the length-N label vector. Solves

        (X X^T + lambda * w_reg~ w_reg~^T) w = X Y^T

    by a direct method and reports failure if the relative residual exceeds
    ``RESIDUAL_TOLERANCE``.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[1] != y.size:
        raise DimensionMismatch(f"design {X.shape} does not match {y.size} targets")
    padded = reg.padded_direction()
    if padded.size != X.shape[0]:
        raise DimensionMismatch(
            f"design has {X.shape[0]} rows but the regularizer expects {padded.size}"
        )
    A = X @ X.T + reg.lam * np.outer(padded, padded)
    w = _solve_reported(A, X @ y, "exact solve")
    return LinearModel(w)


def regularized_update(
    model: LinearModel, x, y: int, eta: float, reg: FairRegularizer
) -> LinearModel:
    """One online step with the fairness penalty.

    Applies ``w + eta * (y - yhat) * (1, x) - lambda * (w . w_reg~) * w_reg~``
    where both terms read the pre-update weights. The penalty applies every
    call; the perceptron term only on a mistake. With ``lambda = 0`` this
    reproduces the plain perceptron step bit for bit.
    """
    xa = augment(x)
    if xa.size != model.weights.size:
        raise DimensionMismatch(f"feature vector of size {xa.size - 1} does not match model")
    if reg.m != model.weights.size - 1:
        raise DimensionMismatch("regularizer direction does not match model width")
    w = model.weights
    yhat = 1.0 if float(w @ xa) >= 0.0 else 0.0
    err = float(y) - yhat
    new = w
    if err != 0.0:
        new = new + (eta * err) * xa
    if reg.lam != 0.0:
        padded = reg.padded_direction()
        aligned = float(w @ padded)
        if aligned != 0.0:
            new = new - (reg.lam * aligned) * padded
    if new is w:
        return model
    return LinearModel(new)


def save_regularizer(reg: FairRegularizer, path: str | Path) -> None:
    """Write a regularizer as JSON with keys w_a, sigma_x, w_reg, lambda, alpha_a."""
    payload = {
        "w_a": [float(v) for v in reg.w_a],
        "sigma_x": [[float(v) for v in row] for row in reg.sigma_x],
        "w_reg": [float(v) for v in reg.w_reg],
        "lambda": float(reg.lam),
        "alpha_a": float(reg.alpha_a),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_regularizer(path: str | Path) -> FairRegularizer:
    """Read a regularizer written by :func:`save_regularizer`."""
    with open(path) as fh:
        payload = json.load(fh)
    return FairRegularizer(
        w_a=np.asarray(payload["w_a"], dtype=float),
        sigma_x=np.asarray(payload["sigma_x"], dtype=float),
        w_reg=np.asarray(payload["w_reg"], dtype=float),
        lam=float(payload["lambda"]),
        alpha_a=float(payload["alpha_a"]),
    )
