"""Two-sided capacity decomposition checks on a single path.

For finite ``A, B``:

    Cap(A) + Cap(B) - 2 G(A, B) <= Cap(A u B) <= Cap(A) + Cap(B) - Cap(A n B).

Applied along the binary tree of dyadic windows this brackets ``Cap(R_n)``
between the sum of segment capacities minus twice the cross-Green terms of
every merged pair of sibling blocks, and the plain sum of segment capacities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..groups import GroupPresentation
from ..walks import WalkPath, dyadic_segments, segment_boundaries
from .capacity import CapacityEstimate, EstimatorConfig, set_capacity
from .green import GreenSource, cross_green, green_source


def _sd(*ests: CapacityEstimate) -> float:
    return math.sqrt(sum((e.stderr or 0.0) ** 2 for e in ests))


@dataclass
class SandwichReport:
    cap_a: float
    cap_b: float
    cap_union: float
    cap_intersection: float
    cross_green: float
    lower_margin: float
    upper_margin: float
    sigma: float
    lower_ok: bool
    upper_ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _capacity(G, A, config, seed, stream_id):
    return set_capacity(G, A, config, seed=seed * 1_000_003 + stream_id)


def sandwich_sets(
    G: GroupPresentation,
    A,
    B,
    config: EstimatorConfig = EstimatorConfig(),
    source: GreenSource | None = None,
    seed: int = 0,
    nsigma: float = 3.0,
    slack: float = 1e-9,
) -> SandwichReport:
    """Margins of both inequalities; a violation needs to exceed ``nsigma`` combined errors."""
    A = list(dict.fromkeys(G.canonical(a) for a in A))
    B = list(dict.fromkeys(G.canonical(b) for b in B))
    union = list(dict.fromkeys(A + B))
    Bset = set(B)
    inter = [a for a in A if a in Bset]
    ca, cb, cu, ci = (_capacity(G, S, config, seed, i) for i, S in enumerate((A, B, union, inter)))
    source = source or green_source(G, config.green_method, config.green_horizon)
    gab = cross_green(G, A, B, source)
    sigma = _sd(ca, cb, cu, ci)
    lower = cu.point - (ca.point + cb.point - 2 * gab)
    upper = ca.point + cb.point - ci.point - cu.point
    tol = nsigma * sigma + slack
    return SandwichReport(ca.point, cb.point, cu.point, ci.point, gab, lower, upper, sigma, lower >= -tol, upper >= -tol)


def capacity_sandwich_check(
    G: GroupPresentation,
    path: WalkPath,
    m: int,
    config: EstimatorConfig = EstimatorConfig(),
    source: GreenSource | None = None,
    seed: int = 0,
) -> SandwichReport:
    """Apply :func:`sandwich_sets` to ``A = R[0, m]`` and ``B = R[m, n + m]``."""
    A = path.positions[: m + 1]
    B = path.positions[m:]
    return sandwich_sets(G, A, B, config, source, seed)


@dataclass
class DyadicReport:
    level: int
    capacity: float
    segment_sum: float
    error_sum: float
    upper_margin: float
    lower_margin: float
    sigma: float
    upper_ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def dyadic_sandwich(
    path: WalkPath,
    L: int,
    config: EstimatorConfig = EstimatorConfig(),
    source: GreenSource | None = None,
    seed: int = 0,
    nsigma: float = 3.0,
    slack: float = 1e-9,
    full: CapacityEstimate | None = None,
) -> DyadicReport:
    """Compare ``C_n`` with the level-``L`` segment sum and the realised error terms.

    ``error_sum`` is ``sum_{l=1}^{L} sum_i G(W_{l,2i}, W_{l,2i+1})`` where
    ``W_{l,j}`` is the range of the ``j``-th window at level ``l``; the lower
    side reads ``C_n >= segment_sum - 2 error_sum``.
    """
    G = path.group
    source = source or green_source(G, config.green_method, config.green_horizon)
    split = dyadic_segments(path, L)
    segs = [_capacity(G, s.positions, config, seed, 10 + i) for i, s in enumerate(split.segments)]
    if full is None:
        full = _capacity(G, path.positions, config, seed, 1)
    seg_sum = math.fsum(s.point for s in segs)
    err = 0.0
    for level in range(1, L + 1):
        b = segment_boundaries(path.n, level)
        for i in range(0, 2**level, 2):
            left = path.positions[b[i] : b[i + 1] + 1]
            right = path.positions[b[i + 1] : b[i + 2] + 1]
            err += cross_green(G, dict.fromkeys(left), dict.fromkeys(right), source)
    sigma = _sd(full, *segs)
    upper = seg_sum - full.point
    lower = full.point - (seg_sum - 2 * err)
    return DyadicReport(L, full.point, seg_sum, err, upper, lower, sigma, upper >= -(nsigma * sigma + slack))
