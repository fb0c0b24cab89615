"""Walks without double backtracks at even times, and geometric re-insertion.

A double backtrack at even time ``2k+2`` is the pattern ``S_{2k+1} = S_{2k-1}``,
``S_{2k+2} = S_{2k}``, i.e. the step pair ``(X_{2k}^{-1}, X_{2k})``.  A plain walk
is recovered from a backbone free of this pattern by inserting, after each even
index ``2k``, an independent number ``xi_{2k}`` of copies of that pair, where
``P(xi = j) = p (1-p)^j`` with ``p = 1 - 1/|Gamma|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGenerators, InsufficientCounts
from .groups import GroupPresentation
from .rng import stream
from .walks import WalkPath, from_steps


def success_parameter(G: GroupPresentation) -> float:
    return 1.0 - 1.0 / G.size**2


def _pair_steps(G, n, u, first):
    """Backbone steps from pre-drawn uniforms.

    ``first`` holds the two unconstrained steps (shape ``(T, 2)``); ``u`` holds
    indices into the ``|Gamma|^2 - 1`` admissible pairs (shape ``(T, K)``).
    """
    m = G.size
    inv = G.inverse_index()
    T = first.shape[0]
    npairs = max(-(-n // 2), 1)
    out = np.empty((T, 2 * npairs), dtype=np.int64)
    out[:, :2] = first
    for k in range(1, npairs):
        prev = out[:, 2 * k - 1]
        excluded = inv[prev] * m + prev
        idx = u[:, k - 1] + (u[:, k - 1] >= excluded)
        out[:, 2 * k] = idx // m
        out[:, 2 * k + 1] = idx % m
    return out[:, :n]


def no_backtrack_steps(G: GroupPresentation, n: int, rng: np.random.Generator, samples: int = 1) -> np.ndarray:
    """``(samples, n)`` backbone step indices."""
    if G.size < 2:
        raise DegenerateGenerators("a single generator leaves no admissible pair")
    npairs = max(-(-n // 2), 1)
    first = rng.integers(0, G.size, size=(samples, 2))
    u = rng.integers(0, G.size**2 - 1, size=(samples, max(npairs - 1, 0)))
    return _pair_steps(G, n, u, first)


def simulate_no_backtrack(G: GroupPresentation, n: int, seed: int, stream_id: int = 0) -> WalkPath:
    """Backbone ``S^`` whose pairs ``(X_{2k+1}, X_{2k+2})`` are uniform on the admissible set.

    For odd ``n`` the final pair is drawn in full and truncated.
    """
    steps = no_backtrack_steps(G, n, stream(seed, stream_id, 1))[0]
    return from_steps(G, steps, None, seed, stream_id)


def draw_counts(G: GroupPresentation, n: int, seed: int, stream_id: int = 0) -> np.ndarray:
    """Geometric counts ``xi_2, xi_4, ..., xi_{2 floor(n/2)}`` (support ``0, 1, ...``)."""
    rng = stream(seed, stream_id, 2)
    return rng.geometric(success_parameter(G), size=n // 2) - 1


def insertion_steps(G: GroupPresentation, backbone_steps, counts) -> np.ndarray:
    """Step sequence of the reconstructed walk."""
    steps = np.asarray(backbone_steps, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    n = len(steps)
    if len(counts) < n // 2:
        raise InsufficientCounts(f"need {n // 2} counts, got {len(counts)}")
    if np.any(counts < 0):
        raise InsufficientCounts("counts must be non-negative")
    inv = G.inverse_index()
    pieces = []
    for k in range(1, n // 2 + 1):
        pieces.append(steps[2 * k - 2 : 2 * k])
        x = steps[2 * k - 1]
        if counts[k - 1]:
            pieces.append(np.tile([inv[x], x], counts[k - 1]))
    pieces.append(steps[2 * (n // 2) :])
    return np.concatenate(pieces) if pieces else steps


@dataclass(eq=False)
class BacktrackDecomposition:
    backbone: WalkPath
    counts: np.ndarray
    partial_sums: np.ndarray
    reconstructed: WalkPath
    intervals: list

    def range_identity_holds(self) -> bool:
        """``R^[0, 2k] == R~[0, 2k + 2 N_{2k}]`` for every ``k``."""
        b, r = self.backbone, self.reconstructed
        seen_b: set = set()
        seen_r: set = set()
        jb = jr = 0
        for k in range(0, b.n // 2 + 1):
            tb = 2 * k
            tr = 2 * k + 2 * int(self.partial_sums[k])
            while jb <= tb:
                seen_b.add(b.positions[jb])
                jb += 1
            while jr <= tr:
                seen_r.add(r.positions[jr])
                jr += 1
            if seen_b != seen_r:
                return False
        return True


def insert_backtracks(backbone: WalkPath, counts) -> BacktrackDecomposition:
    """Rebuild a plain walk from a backbone and counts ``xi_2, xi_4, ...``.

    ``partial_sums[k]`` is ``N_{2k}`` (with ``N_0 = 0``) and ``intervals[k-1]`` is
    ``I_k = [2k + 2 N_{2k-2} + 1, 2k + 2 N_{2k}]`` (empty when ``xi_{2k} = 0``).
    """
    G = backbone.group
    counts = np.asarray(counts, dtype=np.int64)
    steps = insertion_steps(G, backbone.steps, counts)
    K = backbone.n // 2
    partial = np.concatenate([[0], np.cumsum(counts[:K])]).astype(np.int64)
    intervals = [(2 * k + 2 * int(partial[k - 1]) + 1, 2 * k + 2 * int(partial[k])) for k in range(1, K + 1)]
    recon = from_steps(G, steps, backbone.positions[0], backbone.seed, backbone.stream_id)
    return BacktrackDecomposition(backbone, counts[:K], partial, recon, intervals)


def decompose_sample(G: GroupPresentation, n: int, seed: int, stream_id: int = 0) -> BacktrackDecomposition:
    return insert_backtracks(simulate_no_backtrack(G, n, seed, stream_id), draw_counts(G, n, seed, stream_id))


def reconstructed_batch(G: GroupPresentation, n: int, samples: int, seed: int, stream_id: int = 0) -> np.ndarray:
    """First ``n`` reconstructed steps for ``samples`` independent draws, vectorised.

    Used for distributional checks of the reconstruction against exact kernels.
    """
    rng = stream(seed, stream_id, 3)
    backbone = no_backtrack_steps(G, n, rng, samples)
    counts = rng.geometric(success_parameter(G), size=(samples, n // 2)) - 1
    inv = G.inverse_index()
    out = np.empty((samples, n), dtype=np.int64)
    ptr = np.zeros(samples, dtype=np.int64)
    rows = np.arange(samples)

    def put(mask, values):
        ok = mask & (ptr < n)
        out[rows[ok], ptr[ok]] = values[ok]
        ptr[mask] += 1

    every = np.ones(samples, dtype=bool)
    for j in range(n):
        put(every, backbone[:, j])
        if j % 2 == 1:
            x = backbone[:, j]
            c = counts[:, j // 2].copy()
            while True:
                active = (c > 0) & (ptr < n)
                if not active.any():
                    break
                put(active, inv[x])
                put(active, x)
                c -= 1
    return out
