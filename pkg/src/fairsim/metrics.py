"""Fairness and relevance metrics for ranked candidate lists.

Skew@k compares the share of a group in the top k of a ranking against that
group's share among all qualified candidates:

    Skew_v@k = ln( p_{v@k} / p_{v,qualified} )

where "qualified" means passing the fair acceptance rule ``w0 + w . x >= 0``.
Both proportions are floored at ``EPSILON_FLOOR`` so empty groups stay finite.
Zero means the top k mirrors the qualified population; positive values mean
over-representation.

NDCS aggregates skew across prefix sizes with a logarithmic position discount:

    NDCS = (1 / Z) * sum_{j=1..k_max} Skew_v@j / log2(j + 1),
    Z    = sum_{j=1..k_max} 1 / log2(j + 1).

Precision@k is the fraction of the top k the user would accept, judged by the
materialized labels.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import DataPoint, feature_matrix, protected_values
from .errors import ConfigError, EmptyQualifiedPool
from .usermodel import UserConfig, linear_scores

EPSILON_FLOOR = 1e-6


@dataclass(frozen=True)
class Baseline:
    """Qualified-population composition a ranking is judged against.

    ``p_qualified[v]`` is the share of protected value ``v`` among candidates
    that pass the fair acceptance rule; ``qualified_count`` is how many do.
    """

    p_qualified: dict[int, float]
    qualified_count: int


@dataclass(frozen=True)
class MetricsReport:
    """Metric values of one ranking at the requested cutoffs.

    ``counts_at[k]`` is the raw number of group members in the top k backing
    ``skew_at[k]``; ``ndcs`` aggregates skew over every prefix up to its own
    summation limit.
    """

    skew_at: dict[int, float]
    ndcs: float
    precision_at: dict[int, float]
    counts_at: dict[int, int]


def compute_baseline(pool: list[DataPoint], fair_user: UserConfig) -> Baseline:
    """Measure the qualified population of a pool under the fair rule.

    Only the user's weights matter here; any bias setting on the config is
    ignored because qualification is defined by the unbiased rule.
    """
    features = feature_matrix(pool)
    attrs = protected_values(pool)
    qualified = linear_scores(features, fair_user.weights) >= 0.0
    total = int(qualified.sum())
    if total == 0:
        raise EmptyQualifiedPool("no candidate passes the fair acceptance rule")
    ones = int((attrs[qualified] == 1).sum())
    return Baseline(
        p_qualified={0: (total - ones) / total, 1: ones / total},
        qualified_count=total,
    )


def skew_at_k(ranking: Sequence[DataPoint], k: int, baseline: Baseline, group: int = 1) -> float:
    """Log-ratio of a group's share in the top k to its qualified share."""
    if not 1 <= k <= len(ranking):
        raise ConfigError(f"k={k} out of range for a ranking of {len(ranking)}")
    count = sum(1 for p in ranking[:k] if p.protected == group)
    p_top = count / k
    p_base = baseline.p_qualified.get(group, 0.0)
    return math.log(max(p_top, EPSILON_FLOOR) / max(p_base, EPSILON_FLOOR))


def ndcs(ranking: Sequence[DataPoint], k_max: int, baseline: Baseline, group: int = 1) -> float:
    """Discount-weighted average of Skew@j over prefixes j = 1..k_max."""
    if not 1 <= k_max <= len(ranking):
        raise ConfigError(f"k_max={k_max} out of range for a ranking of {len(ranking)}")
    attrs = np.fromiter((p.protected for p in ranking[:k_max]), dtype=np.int64, count=k_max)
    prefix = np.arange(1, k_max + 1, dtype=float)
    p_top = np.cumsum(attrs == group) / prefix
    p_base = max(baseline.p_qualified.get(group, 0.0), EPSILON_FLOOR)
    skews = np.log(np.maximum(p_top, EPSILON_FLOOR) / p_base)
    discounts = 1.0 / np.log2(prefix + 1.0)
    return float((skews @ discounts) / discounts.sum())


def precision_at_k(labels: Sequence[int], k: int) -> float:
    """Fraction of the top k the user accepts; ``labels`` follow ranking order."""
    if not 1 <= k <= len(labels):
        raise ConfigError(f"k={k} out of range for a ranking of {len(labels)}")
    return float(sum(int(v) for v in labels[:k]) / k)


def evaluate_ranking(
    points: Sequence[DataPoint],
    labels: Sequence[int],
    baseline: Baseline,
    k_list: Sequence[int],
    ndcs_k_max: int,
    group: int = 1,
) -> MetricsReport:
    """Build a full report for one ranking; ``points`` and ``labels`` align."""
    if len(points) != len(labels):
        raise ConfigError("points and labels must have equal length")
    skew_values: dict[int, float] = {}
    precision_values: dict[int, float] = {}
    counts: dict[int, int] = {}
    for k in k_list:
        skew_values[k] = skew_at_k(points, k, baseline, group)
        precision_values[k] = precision_at_k(labels, k)
        counts[k] = sum(1 for p in points[:k] if p.protected == group)
    return MetricsReport(
        skew_at=skew_values,
        ndcs=ndcs(points, ndcs_k_max, baseline, group),
        precision_at=precision_values,
        counts_at=counts,
    )


CSV_FIELDS = (
    "config_id",
    "seed",
    "p_bias",
    "eta",
    "lambda",
    "k",
    "skew",
    "precision",
    "ndcs",
    "count_group1",
)


def report_rows(
    report: MetricsReport, *, config_id: str, seed: int, p_bias: float, eta: float, lam: float
) -> list[dict]:
    """Flatten a report into CSV rows, one per cutoff k."""
    rows = []
    for k in sorted(report.skew_at):
        rows.append(
            {
                "config_id": config_id,
                "seed": seed,
                "p_bias": p_bias,
                "eta": eta,
                "lambda": lam,
                "k": k,
                "skew": report.skew_at[k],
                "precision": report.precision_at[k],
                "ndcs": report.ndcs,
                "count_group1": report.counts_at[k],
            }
        )
    return rows


def save_baseline(baseline: Baseline, path: str | Path) -> None:
    """Write a baseline as JSON: ``{"p_qualified": {...}, "qualified_count": n}``."""
    payload = {
        "p_qualified": {str(v): float(p) for v, p in sorted(baseline.p_qualified.items())},
        "qualified_count": int(baseline.qualified_count),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_baseline(path: str | Path) -> Baseline:
    """Read a baseline written by :func:`save_baseline`."""
    with open(path) as fh:
        payload = json.load(fh)
    return Baseline(
        p_qualified={int(v): float(p) for v, p in payload["p_qualified"].items()},
        qualified_count=int(payload["qualified_count"]),
    )
