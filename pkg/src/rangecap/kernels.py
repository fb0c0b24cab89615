"""Exact ``n``-step transition probabilities ``p_k(g)`` from the identity.

``exact_kernel`` runs the convolution ``p_{k+1}(g) = |Gamma|^{-1} sum_gamma
p_k(g gamma^{-1})`` either on a dense integer box (lattice backends) or on a
dictionary of group elements (everything else).  Two closed-form series give
``p_k(x)`` at a single point for long horizons:

* standard lattices, by mixing one-dimensional binomial laws over the number of
  steps spent in each coordinate;
* the standard free product of copies of ``Z/2``, through the word-length chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from .errors import BallTooLarge, ValidationError
from .groups import DEFAULT_BALL_CAP, GroupPresentation


@dataclass(eq=False)
class KernelTable:
    """Distributions ``p_0..p_n`` plus the mass discarded by pruning up to each ``k``.

    Lattice kernels are stored as dense arrays centred at the origin
    (``offset`` is the index of the origin along every axis); other backends
    store one dictionary per step.
    """

    group: GroupPresentation
    horizon: int
    prune_eps: float
    pruned_mass: np.ndarray
    dense: list | None = None
    offset: int = 0
    maps: list | None = None

    def prob(self, k: int, g) -> float:
        g = self.group.canonical(g)
        if self.dense is not None:
            arr = self.dense[k]
            idx = tuple(int(v) + self.offset for v in g)
            if any(i < 0 or i >= s for i, s in zip(idx, arr.shape)):
                return 0.0
            return float(arr[idx])
        return float(self.maps[k].get(g, 0.0))

    def distribution(self, k: int) -> dict:
        if self.dense is not None:
            arr = self.dense[k]
            nz = np.argwhere(arr > 0)
            return {tuple((i - self.offset).tolist()): float(arr[tuple(i)]) for i in nz}
        return dict(self.maps[k])

    def total(self, k: int) -> float:
        if self.dense is not None:
            return float(self.dense[k].sum())
        return float(sum(self.maps[k].values()))

    def support_size(self, k: int) -> int:
        if self.dense is not None:
            return int(np.count_nonzero(self.dense[k]))
        return len(self.maps[k])


def exact_kernel(
    G: GroupPresentation,
    n_max: int,
    prune_eps: float = 0.0,
    cap: int = DEFAULT_BALL_CAP,
) -> KernelTable:
    """Dynamic-programming kernel up to ``n_max`` steps.

    Entries below ``prune_eps`` are dropped after each step and their mass is
    added to ``pruned_mass``.  Raises :class:`BallTooLarge` when a support (or
    the dense box for lattices) would exceed ``cap`` elements.
    """
    if n_max < 0 or prune_eps < 0:
        raise ValidationError("n_max and prune_eps must be non-negative")
    if G.backend == "lattice":
        return _dense_kernel(G, n_max, prune_eps, cap)
    return _dict_kernel(G, n_max, prune_eps, cap)


def _dense_kernel(G, n_max, prune_eps, cap):
    gens = G.generator_array()
    reach = int(np.abs(gens).max()) * n_max
    side = 2 * reach + 1
    if side**G.dim > cap:
        raise BallTooLarge(cap, int(round((cap ** (1 / G.dim) - 1) / 2 / max(1, np.abs(gens).max()))))
    p = np.zeros((side,) * G.dim)
    p[(reach,) * G.dim] = 1.0
    out = [p]
    pruned = np.zeros(n_max + 1)
    lost = 0.0
    for k in range(1, n_max + 1):
        q = np.zeros_like(p)
        for g in gens:
            # q(x) += p(x - g): shift p by +g
            src = tuple(slice(max(0, -s), side - max(0, s)) for s in g)
            dst = tuple(slice(max(0, s), side - max(0, -s)) for s in g)
            q[dst] += p[src]
        q /= G.size
        if prune_eps > 0:
            small = (q < prune_eps) & (q > 0)
            lost += float(q[small].sum())
            q[small] = 0.0
        pruned[k] = lost
        out.append(q)
        p = q
    return KernelTable(G, n_max, prune_eps, pruned, dense=out, offset=reach)


def _dict_kernel(G, n_max, prune_eps, cap):
    gens = G.generators
    p = {G.identity(): 1.0}
    maps = [p]
    pruned = np.zeros(n_max + 1)
    lost = 0.0
    w = 1.0 / G.size
    for k in range(1, n_max + 1):
        q: dict = {}
        for g, v in p.items():
            for s in gens:
                h = G.multiply(g, s)
                q[h] = q.get(h, 0.0) + v * w
            if len(q) > cap:
                raise BallTooLarge(cap, k - 1)
        if prune_eps > 0:
            small = [h for h, v in q.items() if v < prune_eps]
            lost += sum(q.pop(h) for h in small)
        pruned[k] = lost
        maps.append(q)
        p = q
    return KernelTable(G, n_max, prune_eps, pruned, maps=maps)


# -- closed-form series --------------------------------------------------------


def walk1d_series(y: int, H: int) -> np.ndarray:
    """``P(Y_k = y)`` for the simple walk on ``Z``, ``k = 0..H``."""
    k = np.arange(H + 1)
    y = abs(int(y))
    out = np.zeros(H + 1)
    ok = ((k + y) % 2 == 0) & (k >= y)
    out[ok] = binom.pmf((k[ok] + y) // 2, k[ok], 0.5)
    return out


@lru_cache(maxsize=8)
def _mixing_matrix(j: int, H: int) -> np.ndarray:
    # W[n, m] = P(Binomial(n, (j-1)/j) = m)
    n = np.arange(H + 1)
    W = binom.pmf(n[None, :], n[:, None], (j - 1) / j)
    return np.tril(W)


def lattice_point_series(x, H: int) -> np.ndarray:
    """``p_k(x)``, ``k = 0..H``, for the simple walk on ``Z^d`` with standard generators.

    Each step moves coordinate ``j`` with probability ``1/d``; conditioning on
    how many of the first ``n`` steps touch coordinates ``< j`` gives
    ``p^{(j)}_n = sum_m Bin(n, (j-1)/j)(m) p^{(j-1)}_m q_{n-m}(x_j)``.
    """
    x = [abs(int(v)) for v in x]
    p = walk1d_series(x[0], H)
    if len(x) == 1:
        return p
    n = np.arange(H + 1)
    lag = n[:, None] - n[None, :]
    mask = lag >= 0
    for j in range(2, len(x) + 1):
        q = walk1d_series(x[j - 1], H)
        Q = np.where(mask, q[lag.clip(0)], 0.0)
        p = (_mixing_matrix(j, H) * Q) @ p
    return p


def free_product_return_series(arity: int, H: int) -> np.ndarray:
    """``p_k(e)`` for the standard free product of ``arity`` copies of ``Z/2``.

    The word length is a birth-death chain: from 0 it moves to 1, otherwise down
    with probability ``1/N`` and up with probability ``(N-1)/N``.
    """
    N = arity
    dist = np.zeros(H + 2)
    dist[0] = 1.0
    out = np.zeros(H + 1)
    out[0] = 1.0
    for k in range(1, H + 1):
        nxt = np.zeros_like(dist)
        nxt[1] += dist[0]
        nxt[2:] += dist[1:-1] * (N - 1) / N
        nxt[:-1] += dist[1:] / N
        dist = nxt
        out[k] = dist[0]
    return out


def return_probabilities(G: GroupPresentation, n_max: int, cap: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """``p_k(e)`` for ``k = 0..n_max`` using the cheapest exact route."""
    if G.backend == "lattice" and G.standard:
        return lattice_point_series(G.identity(), n_max)
    if G.backend == "free_product_z2" and G.standard:
        return free_product_return_series(G.arity, n_max)
    table = exact_kernel(G, n_max, cap=cap)
    e = G.identity()
    return np.array([table.prob(k, e) for k in range(n_max + 1)])


def point_series(G: GroupPresentation, g, n_max: int, cap: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """``p_k(g)`` for ``k = 0..n_max``."""
    g = G.canonical(g)
    if G.backend == "lattice" and G.standard:
        return lattice_point_series(g, n_max)
    if G.backend == "free_product_z2" and G.standard and len(g) == 0:
        return free_product_return_series(G.arity, n_max)
    table = exact_kernel(G, n_max, cap=cap)
    return np.array([table.prob(k, g) for k in range(n_max + 1)])
