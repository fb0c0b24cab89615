"""Trajectories, ranges, exit times and dyadic path splitting."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import TooManyLevels, ValidationError, WindowOutOfBounds
from .groups import DEFAULT_BALL_CAP, GroupPresentation, ball
from .rng import stream


@dataclass(eq=False)
class WalkPath:
    """A realised trajectory ``S_0..S_n`` with its generator indices ``X_1..X_n``."""

    group: GroupPresentation
    steps: np.ndarray
    positions: list
    seed: int | None = None
    stream_id: int | None = None

    @property
    def n(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.positions)

    @cached_property
    def coords(self) -> np.ndarray:
        """Positions as an ``(n+1, width)`` integer array (vector backends only)."""
        if not self.group.vector:
            raise TypeError(f"{self.group.backend} elements are not vectors")
        return np.asarray(self.positions, dtype=np.int64).reshape(len(self.positions), -1)

    def prefix(self, n: int) -> "WalkPath":
        return from_steps(self.group, self.steps[:n], self.positions[0], self.seed, self.stream_id)

    def validate(self) -> None:
        """Check the recursion ``S_{k+1} = S_k * gamma[X_{k+1}]``."""
        G = self.group
        if len(self.positions) != len(self.steps) + 1:
            raise ValidationError("positions must have one more entry than steps")
        for k, s in enumerate(np.asarray(self.steps).tolist()):
            if G.multiply(self.positions[k], G.generators[s]) != self.positions[k + 1]:
                raise ValidationError(f"path recursion broken at step {k + 1}")


def from_steps(G: GroupPresentation, steps, start=None, seed=None, stream_id=None) -> WalkPath:
    steps = np.asarray(steps, dtype=np.int64)
    if steps.size and (steps.min() < 0 or steps.max() >= G.size):
        raise ValidationError("generator index out of range")
    positions = G.walk_positions(steps, start)
    return WalkPath(G, steps, positions, seed, stream_id)


def simulate(G: GroupPresentation, n: int, seed: int, stream_id: int = 0, start=None) -> WalkPath:
    """Walk of ``n`` uniform steps drawn from the Philox stream keyed by ``(seed, stream_id)``.

    Paths for the same key are prefixes of one another, so ``simulate(G, n)`` is
    the first ``n`` steps of ``simulate(G, m)`` for every ``m >= n``.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    steps = draw_steps(G, n, seed, stream_id)
    return from_steps(G, steps, start, seed, stream_id)


def draw_steps(G: GroupPresentation, n: int, seed: int, stream_id: int = 0) -> np.ndarray:
    # draw in fixed blocks so a shorter request is a prefix of a longer one
    rng = stream(seed, stream_id)
    block = 4096
    out = [rng.integers(0, G.size, size=block) for _ in range(-(-n // block))]
    return np.concatenate(out)[:n] if out else np.zeros(0, dtype=np.int64)


@dataclass
class RangeSet:
    """Visited set ``R[m, n]`` with first-visit indices (insertion order = visit order)."""

    members: dict
    window: tuple

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, g) -> bool:
        return g in self.members

    def __iter__(self):
        return iter(self.members)

    @property
    def size(self) -> int:
        return len(self.members)

    def elements(self) -> list:
        return list(self.members)


def range_of(path: WalkPath, m: int = 0, n: int | None = None) -> RangeSet:
    """Exact visited set of ``S_m..S_n``."""
    last = path.n
    if n is None:
        n = last
    if not 0 <= m <= n <= last:
        raise WindowOutOfBounds(f"window ({m}, {n}) outside 0..{last}")
    members: dict = {}
    for k in range(m, n + 1):
        members.setdefault(path.positions[k], k)
    return RangeSet(members, (m, n))


def range_sizes(path: WalkPath) -> np.ndarray:
    """``|R_k|`` for ``k = 0..n``."""
    seen = set()
    out = np.empty(len(path.positions), dtype=np.int64)
    for k, g in enumerate(path.positions):
        seen.add(g)
        out[k] = len(seen)
    return out


def local_times(path: WalkPath, m: int = 0, n: int | None = None):
    """Visited elements in first-visit order and their visit counts on ``[m, n]``."""
    counts: dict = {}
    n = path.n if n is None else n
    for g in path.positions[m : n + 1]:
        counts[g] = counts.get(g, 0) + 1
    return list(counts), np.array(list(counts.values()), dtype=np.int64)


# -- exit times --------------------------------------------------------------


def word_lengths(G: GroupPresentation, elements: Iterable, r: int, cap: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """Word lengths, clipped at ``r`` (any value ``>= r`` is reported as ``r``)."""
    elements = list(elements)
    if G.closed_form_length(G.identity()) is not None:
        return np.minimum([G.closed_form_length(g) for g in elements], r).astype(np.int64)
    table = ball(G, r - 1, cap=cap) if r >= 1 else {}
    return np.array([table.get(g, r) for g in elements], dtype=np.int64)


def exit_time(path: WalkPath, r: int, cap: int = DEFAULT_BALL_CAP) -> int | None:
    """First index ``k`` with ``rho(S_k) >= r``, or None if the path never leaves."""
    if r < 0:
        raise ValidationError("radius must be non-negative")
    if r == 0:
        return 0
    G = path.group
    if G.backend == "lattice" and G.standard:
        lengths = np.abs(path.coords).sum(axis=1)
    else:
        lengths = word_lengths(G, path.positions, r, cap)
    hit = np.flatnonzero(lengths >= r)
    return int(hit[0]) if hit.size else None


# -- dyadic splitting --------------------------------------------------------


def translate(G: GroupPresentation, h, elements) -> list:
    """Left translation ``g -> h g`` of each element."""
    return [G.multiply(h, g) for g in elements]


@dataclass
class DyadicSplit:
    segments: list
    boundaries: list
    level: int


def segment_boundaries(n: int, L: int) -> list:
    """Window endpoints ``0 = b_0 < ... < b_{2^L} = n``; earlier windows take the extra steps."""
    k = 2**L
    q, rem = divmod(n, k)
    lengths = [q + 1 if i < rem else q for i in range(k)]
    return [0] + np.cumsum(lengths).tolist()


def dyadic_segments(path: WalkPath, L: int) -> DyadicSplit:
    """Split into ``2^L`` consecutive windows, each left-translated to start at the identity."""
    n = path.n
    if L < 0 or 2**L > max(n, 1):
        raise TooManyLevels(f"2^{L} segments do not fit a path of length {n}")
    G = path.group
    bounds = segment_boundaries(n, L)
    segments = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        h = G.inverse(path.positions[a])
        seg = WalkPath(G, path.steps[a:b], translate(G, h, path.positions[a : b + 1]), path.seed, path.stream_id)
        segments.append(seg)
    return DyadicSplit(segments, bounds, L)


# -- export --------------------------------------------------------------------


def encode_element(g) -> str:
    return " ".join(str(int(v)) for v in g)


def path_to_csv(path: WalkPath) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "step", "element"])
    steps = np.asarray(path.steps).tolist()
    for k, g in enumerate(path.positions):
        w.writerow([k, "" if k == 0 else steps[k - 1], encode_element(g)])
    return buf.getvalue()
