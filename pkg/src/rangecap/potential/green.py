"""Green function estimates and Green-matrix sources.

``green_truncated`` sums exact kernels, ``green_mc`` counts visits of simulated
walks.  A *Green source* turns a list of group elements into the matrix
``G(a^{-1} b)``; the truncated source uses ``G_n`` (a lower bound of ``G``), the
lattice-integral source uses the exact full Green function of ``Z^d``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..groups import GroupPresentation
from ..kernels import point_series
from ..rng import stream
from .lattice_green import lattice_green


@dataclass(frozen=True)
class GreenEstimate:
    target: tuple
    value: float
    method: str
    horizon: int
    trials: int | None = None
    stderr: float | None = None
    lower_bound_only: bool = True
    secondary: float | None = None

    @property
    def increment(self) -> float | None:
        return None if self.secondary is None else self.secondary - self.value

    def to_dict(self) -> dict:
        return {
            "target": list(self.target),
            "value": self.value,
            "method": self.method,
            "horizon": self.horizon,
            "trials": self.trials,
            "stderr": self.stderr,
            "lower_bound_only": self.lower_bound_only,
            "secondary": self.secondary,
            "increment": self.increment,
        }


def green_truncated(G: GroupPresentation, g, n_max: int, secondary: bool = True) -> GreenEstimate:
    """``G_{n_max}(g) = sum_{k <= n_max} p_k(g)``, a lower bound of ``G(g)``.

    With ``secondary`` the value at ``2 n_max`` is reported as well, so the
    increment gauges the missing tail.
    """
    if n_max < 0:
        raise ValidationError("n_max must be non-negative")
    g = G.canonical(g)
    H = 2 * n_max if secondary else n_max
    series = point_series(G, g, H)
    cum = np.cumsum(series)
    return GreenEstimate(
        target=g,
        value=float(cum[n_max]),
        method="truncated-kernel",
        horizon=n_max,
        secondary=float(cum[H]) if secondary else None,
    )


def green_mc(G: GroupPresentation, g, horizon: int, trials: int, seed: int, stream_id: int = 0) -> GreenEstimate:
    """Mean number of visits to ``g`` at times ``0..horizon`` over ``trials`` walks."""
    if horizon < 0 or trials < 1:
        raise ValidationError("horizon must be >= 0 and trials >= 1")
    g = G.canonical(g)
    if G.closed_form_length(g) is not None and G.closed_form_length(g) > horizon:
        return GreenEstimate(g, 0.0, "monte-carlo", horizon, trials, 0.0)
    rng = stream(seed, stream_id, 7)
    counts = np.zeros(trials)
    if G.vector:
        target = np.asarray(g, dtype=np.int64)
        block = max(1, min(trials, 2_000_000 // max(horizon, 1)))
        for s in range(0, trials, block):
            T = min(block, trials - s)
            steps = rng.integers(0, G.size, size=(T, horizon))
            origin = np.zeros((T, G.width), dtype=np.int64)
            pos = G.advance(origin, steps)
            hits = np.all(pos == target, axis=-1).sum(axis=1)
            counts[s : s + T] = hits + (g == G.identity())
    else:
        for i in range(trials):
            steps = rng.integers(0, G.size, size=horizon)
            counts[i] = sum(1 for x in G.walk_positions(steps) if x == g)
    value = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return GreenEstimate(g, value, "monte-carlo", horizon, trials, se)


# -- Green sources -------------------------------------------------------------


class GreenSource:
    """Green values on group elements; subclasses fix the method."""

    method = "abstract"

    def __init__(self, group: GroupPresentation):
        self.group = group

    def value(self, g) -> float:
        raise NotImplementedError

    def matrix(self, A, B=None) -> np.ndarray:
        """``M[i, j] = G(a_i^{-1} b_j)``."""
        G = self.group
        A = list(A)
        B = A if B is None else list(B)
        inv = [G.inverse(a) for a in A]
        return np.array([[self.value(G.multiply(ai, b)) for b in B] for ai in inv], dtype=float).reshape(len(A), len(B))

    def describe(self) -> dict:
        return {"method": self.method}


class TruncatedGreen(GreenSource):
    """``G_n`` with a cache keyed by the canonical difference element."""

    method = "truncated-kernel"

    def __init__(self, group: GroupPresentation, horizon: int):
        super().__init__(group)
        self.horizon = horizon
        self._cache: dict = {}
        self._lock = threading.Lock()

    def _key(self, g):
        if self.group.backend == "lattice" and self.group.standard:
            return tuple(sorted(abs(v) for v in g))
        return g

    def value(self, g) -> float:
        key = self._key(g)
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            if self.group.closed_form_length(g) is not None and self.group.closed_form_length(g) > self.horizon:
                hit = 0.0
            else:
                hit = float(np.sum(point_series(self.group, g, self.horizon)))
            with self._lock:
                self._cache[key] = hit
        return hit

    def matrix(self, A, B=None) -> np.ndarray:
        G = self.group
        if not G.vector or G.backend != "lattice":
            return super().matrix(A, B)
        P = np.asarray(list(A), dtype=np.int64).reshape(-1, G.dim)
        Q = P if B is None else np.asarray(list(B), dtype=np.int64).reshape(-1, G.dim)
        diff = Q[None, :, :] - P[:, None, :]
        flat = diff.reshape(-1, G.dim)
        uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
        vals = np.array([self.value(tuple(u)) for u in uniq.tolist()])
        return vals[inverse.ravel()].reshape(len(P), len(Q))

    def describe(self) -> dict:
        return {"method": self.method, "horizon": self.horizon}


class ExactLatticeGreen(GreenSource):
    """Full Green function of the standard walk on ``Z^d``, ``d >= 3``."""

    method = "lattice-integral"

    def __init__(self, group: GroupPresentation):
        if not (group.backend == "lattice" and group.standard and group.dim >= 3):
            raise ValidationError("exact lattice Green needs Z^d with standard generators, d >= 3")
        super().__init__(group)
        self.engine = lattice_green(group.dim)

    def value(self, g) -> float:
        return self.engine(g)

    def matrix(self, A, B=None) -> np.ndarray:
        return self.engine.matrix(list(A), None if B is None else list(B))


def exact_green_available(G: GroupPresentation) -> bool:
    return G.backend == "lattice" and G.standard and G.dim >= 3


def green_source(G: GroupPresentation, method: str = "auto", horizon: int = 800) -> GreenSource:
    """Pick a Green source: ``lattice-integral``, ``truncated-kernel`` or ``auto``."""
    if method == "auto":
        method = "lattice-integral" if exact_green_available(G) else "truncated-kernel"
    if method == "lattice-integral":
        return ExactLatticeGreen(G)
    if method == "truncated-kernel":
        return TruncatedGreen(G, horizon)
    raise ValidationError(f"unknown Green method {method!r}")


def cross_green(G: GroupPresentation, A, B, source: GreenSource | None = None, horizon: int = 800) -> float:
    """``G(A, B) = sum_{a in A, b in B} G(a^{-1} b)``."""
    A, B = list(A), list(B)
    if not A or not B:
        return 0.0
    source = source or green_source(G, "auto", horizon)
    return float(source.matrix(A, B).sum())


__all__ = [
    "GreenEstimate",
    "GreenSource",
    "TruncatedGreen",
    "ExactLatticeGreen",
    "green_truncated",
    "green_mc",
    "green_source",
    "cross_green",
    "exact_green_available",
]
