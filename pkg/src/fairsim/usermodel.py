"""Simulated user feedback with a tunable amount of group bias.

The user accepts or rejects each candidate. With probability ``p_bias`` the
verdict is a pure reflection of the protected attribute (accept group 1,
reject group 0); otherwise it follows a fixed linear acceptance rule on the
features. Labels are materialized once per pool, so every learner sweep sees
the same feedback.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import DataPoint, feature_matrix, protected_values
from .errors import ConfigError, DimensionMismatch

DEFAULT_USER_WEIGHTS = (-0.48, 0.35, 0.28, 0.28)


@dataclass(frozen=True)
class UserConfig:
    """Feedback recipe: bias level, acceptance weights, and coin seed.

    ``weights`` has length m + 1 with the intercept first; the fair acceptance
    rule is ``w0 + w . x >= 0``. The coin stream drawn from ``seed`` is
    independent of pool generation.
    """

    p_bias: float
    weights: tuple[float, ...]
    seed: int

    def validate(self) -> None:
        if not 0.0 <= self.p_bias <= 1.0:
            raise ConfigError(f"p_bias must lie in [0, 1], got {self.p_bias}")
        if len(self.weights) < 2:
            raise ConfigError("weights must hold an intercept plus at least one coefficient")
        if not all(np.isfinite(w) for w in self.weights):
            raise ConfigError("weights must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def default_user(p_bias: float, seed: int = 0) -> UserConfig:
    """User with the default acceptance weights and the given bias level."""
    user = UserConfig(p_bias=p_bias, weights=DEFAULT_USER_WEIGHTS, seed=seed)
    user.validate()
    return user


def linear_scores(features: np.ndarray, weights) -> np.ndarray:
    """Evaluate ``w0 + w . x`` for each row of ``features``."""
    w = np.asarray(weights, dtype=float)
    f = np.asarray(features, dtype=float)
    if f.ndim != 2 or f.shape[1] != w.size - 1:
        raise DimensionMismatch(
            f"features of width {f.shape[-1] if f.ndim == 2 else '?'} do not match "
            f"{w.size - 1} coefficients"
        )
    return w[0] + f @ w[1:]


@dataclass(eq=False)
class LabeledPool:
    """A pool with materialized user labels and the bias coins behind them."""

    points: list[DataPoint]
    labels: np.ndarray
    bias_coin: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.bias_coin = np.asarray(self.bias_coin, dtype=np.int64)
        n = len(self.points)
        if self.labels.shape != (n,) or self.bias_coin.shape != (n,):
            raise DimensionMismatch("labels and bias_coin must have one entry per point")

    def __len__(self) -> int:
        return len(self.points)


def label_pool(pool: list[DataPoint], user: UserConfig) -> LabeledPool:
    """Materialize one label per candidate.

    One Bernoulli(p_bias) coin is drawn per point, in pool order, from a
    ``default_rng(user.seed)`` stream. Coin 1 copies the protected attribute
    into the label; coin 0 applies the acceptance rule ``w0 + w . x >= 0``
    (non-strict, so a score of exactly zero is accepted).
    """
    user.validate()
    features = feature_matrix(pool)
    fair = linear_scores(features, user.weights) >= 0.0
    rng = np.random.default_rng(user.seed)
    coin = rng.random(len(pool)) < user.p_bias
    protected = protected_values(pool)
    labels = np.where(coin, protected == 1, fair)
    return LabeledPool(points=list(pool), labels=labels, bias_coin=coin)


def save_labeled(labeled: LabeledPool, path: str | Path) -> None:
    """Write a labeled pool as CSV: ``x1,...,xm,protected,label,bias_coin``."""
    if not labeled.points:
        raise ConfigError("pool is empty")
    m = len(labeled.points[0].features)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(m)] + ["protected", "label", "bias_coin"])
        for p, label, coin in zip(labeled.points, labeled.labels, labeled.bias_coin):
            writer.writerow(
                [format(v, ".17g") for v in p.features] + [p.protected, int(label), int(coin)]
            )


def load_labeled(path: str | Path) -> LabeledPool:
    """Read a labeled pool written by :func:`save_labeled`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-3:] != ["protected", "label", "bias_coin"]:
            raise ConfigError(f"{path}: not a labeled pool CSV")
        m = len(header) - 3
        if m < 1 or header[:m] != [f"x{j + 1}" for j in range(m)]:
            raise ConfigError(f"{path}: unexpected header {header}")
        points, labels, coins = [], [], []
        for row in reader:
            if len(row) != m + 3:
                raise ConfigError(f"{path}: row of width {len(row)}, expected {m + 3}")
            features = np.array([float(v) for v in row[:m]], dtype=float)
            features.setflags(write=False)
            points.append(DataPoint(features=features, protected=int(row[m])))
            labels.append(int(row[m + 1]))
            coins.append(int(row[m + 2]))
    if not points:
        raise ConfigError(f"{path}: empty pool")
    return LabeledPool(points=points, labels=np.array(labels), bias_coin=np.array(coins))
