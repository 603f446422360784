"""Welch's t-test and correlation coefficients.

Welch's unequal-variance test fits groups of very different size and spread
(for example 1708 vs 4330 users); all tests are two-sided. The t survival
function is evaluated through the regularized incomplete beta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from recaudit.errors import DataError

THRESHOLDS = (0.05, 0.01)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this as a test class

    statistic: float
    p_value: float
    dof: float
    n_a: int
    n_b: int
    significant_at: tuple
    degenerate: bool = False

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def _t_sf(t: float, dof: float) -> float:
    """P(T > t) for Student's t with ``dof`` degrees of freedom, t >= 0."""
    x = dof / (dof + t * t)
    return 0.5 * float(special.betainc(0.5 * dof, 0.5, x))


def t_test(sample_a, sample_b) -> TestResult:
    """Welch's two-sided two-sample t-test.

    Zero variance in both samples is degenerate: equal means report p = 1,
    unequal means p = 0, both flagged.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    n_a, n_b = len(a), len(b)
    if n_a < 2 or n_b < 2:
        raise DataError(f"t-test needs at least 2 values per sample "
                        f"(got {n_a} and {n_b})")
    mean_a, mean_b = float(a.mean()), float(b.mean())
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))

    if var_a == 0.0 and var_b == 0.0:
        dof = float(n_a + n_b - 2)
        if mean_a == mean_b:
            return TestResult(0.0, 1.0, dof, n_a, n_b, (), degenerate=True)
        stat = math.inf if mean_a > mean_b else -math.inf
        return TestResult(stat, 0.0, dof, n_a, n_b, tuple(THRESHOLDS),
                          degenerate=True)

    sa, sb = var_a / n_a, var_b / n_b
    stat = (mean_a - mean_b) / math.sqrt(sa + sb)
    dof = (sa + sb) ** 2 / (
        (sa * sa / (n_a - 1) if sa else 0.0)
        + (sb * sb / (n_b - 1) if sb else 0.0))
    p = min(1.0, 2.0 * _t_sf(abs(stat), dof))
    sig = tuple(th for th in THRESHOLDS if p < th)
    return TestResult(stat, p, dof, n_a, n_b, sig)


def pearson_correlation(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) != len(y):
        raise DataError("correlation inputs differ in length")
    if len(x) < 2:
        raise DataError("correlation needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise DataError("correlation is undefined for zero variance")
    r = float(dx @ dy) / denom
    return min(max(r, -1.0), 1.0)


def _average_ranks(vals: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(vals, kind="mergesort")
    ranks = np.empty(len(vals))
    sorted_vals = vals[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_correlation(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) != len(y):
        raise DataError("correlation inputs differ in length")
    return pearson_correlation(_average_ranks(x), _average_ranks(y))
