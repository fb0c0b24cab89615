"""Streaming moments, normality statistics and small fitting helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..fitting import LinearFit, linear_fit, log_log_fit, upper_half


@dataclass
class RunningMoments:
    """One-pass accumulator for the first four central moments.

    Uses the pairwise update formulas for ``M2..M4`` so the results agree with a
    two-pass computation to rounding error.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    def push(self, x: float) -> None:
        n1 = self.count
        self.count += 1
        n = self.count
        delta = x - self.mean
        dn = delta / n
        dn2 = dn * dn
        term1 = delta * dn * n1
        self.mean += dn
        self.m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * self.m2 - 4 * dn * self.m3
        self.m3 += term1 * dn * (n - 2) - 3 * dn * self.m2
        self.m2 += term1

    def extend(self, xs) -> "RunningMoments":
        for x in xs:
            self.push(float(x))
        return self

    @property
    def variance(self) -> float:
        """Unbiased sample variance (``ddof = 1``)."""
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def skewness(self) -> float:
        """Moment coefficient ``m3 / m2^{3/2}`` (population normalisation)."""
        den = self.m2**1.5
        if self.count < 2 or den == 0:
            return 0.0
        return math.sqrt(self.count) * self.m3 / den

    @property
    def excess_kurtosis(self) -> float:
        den = self.m2 * self.m2
        if self.count < 2 or den == 0:
            return 0.0
        return self.count * self.m4 / den - 3.0

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 1 else 0.0


def two_pass_moments(xs) -> dict:
    """Reference implementation for :class:`RunningMoments`."""
    x = np.asarray(xs, dtype=float)
    n = len(x)
    mean = float(x.mean())
    d = x - mean
    m2, m3, m4 = float(np.sum(d**2)), float(np.sum(d**3)), float(np.sum(d**4))
    # guard against underflow of the normalisers for nearly constant samples
    d3, d4 = m2**1.5, m2 * m2
    return {
        "mean": mean,
        "variance": m2 / (n - 1) if n > 1 else 0.0,
        "skewness": math.sqrt(n) * m3 / d3 if d3 > 0 else 0.0,
        "excess_kurtosis": n * m4 / d4 - 3.0 if d4 > 0 else 0.0,
    }


def summarize(xs) -> dict:
    x = np.asarray(xs, dtype=float)
    acc = RunningMoments().extend(x)
    q = np.quantile(x, [0.05, 0.25, 0.5, 0.75, 0.95]) if len(x) else [math.nan] * 5
    return {
        "count": acc.count,
        "mean": acc.mean,
        "variance": acc.variance,
        "stderr": acc.stderr,
        "q05": float(q[0]),
        "q25": float(q[1]),
        "median": float(q[2]),
        "q75": float(q[3]),
        "q95": float(q[4]),
    }


def standardize(xs) -> np.ndarray:
    x = np.asarray(xs, dtype=float)
    acc = RunningMoments().extend(x)
    sd = math.sqrt(acc.variance)
    return (x - acc.mean) / sd if sd > 0 else np.zeros_like(x)


def ks_normal(xs) -> float:
    """Kolmogorov-Smirnov distance between the standardised sample and ``N(0, 1)``."""
    return float(stats.kstest(standardize(xs), "norm").statistic)


def normality(xs) -> dict:
    acc = RunningMoments().extend(np.asarray(xs, dtype=float))
    return {
        "ks": ks_normal(xs),
        "skewness": acc.skewness,
        "excess_kurtosis": acc.excess_kurtosis,
        "count": acc.count,
    }


def fit_window(grid) -> list:
    return upper_half(grid)


def power_fit(grid, values) -> tuple[LinearFit, list]:
    """Slope of ``log value`` against ``log n`` over the upper half of ``grid``."""
    window = fit_window(grid)
    pos = {n: i for i, n in enumerate(grid)}
    ys = [values[pos[n]] for n in window]
    return log_log_fit(window, ys), window


def fit_dict(fit: LinearFit, window) -> dict:
    return {"slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept, "window": list(window)}


__all__ = [
    "RunningMoments",
    "two_pass_moments",
    "summarize",
    "standardize",
    "ks_normal",
    "normality",
    "power_fit",
    "fit_window",
    "fit_dict",
    "linear_fit",
]
