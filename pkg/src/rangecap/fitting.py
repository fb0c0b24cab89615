"""Least-squares helpers shared by growth, decay and experiment fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    stderr: float
    rss: float
    npoints: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "rss": self.rss,
            "npoints": self.npoints,
        }


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares ``y ~ a + b x`` with the standard error of ``b``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = len(x)
    if m < 2:
        raise ValueError("need at least two points to fit a line")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("degenerate fit: all abscissae equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    rss = float(np.sum(resid**2))
    stderr = math.sqrt(rss / (m - 2) / sxx) if m > 2 else 0.0
    return LinearFit(slope, intercept, stderr, rss, m)


def upper_half(values):
    """Fit window used throughout: the top half of the sorted grid points.

    For an odd count the middle point is included, so radii ``0..12`` give
    ``6..12`` and the grid ``128, 256, ..., 4096`` gives ``1024, 2048, 4096``.
    """
    values = sorted(values)
    if len(values) <= 2:
        return values
    return values[len(values) // 2 :]


def log_log_fit(xs, ys) -> LinearFit:
    return linear_fit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)))
