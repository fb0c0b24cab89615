"""Finitely generated groups with a finite symmetric generating set.

Three backends are provided, each with a canonical hashable element encoding
so that equality is structural:

* ``lattice``: ``Z^d``, elements are integer tuples of length ``d``;
* ``heisenberg``: the discrete Heisenberg group, elements ``(a, b, c)`` stand
  for the upper unitriangular matrix with entries ``a, b`` above the diagonal
  and ``c`` in the corner;
* ``free_product_z2``: the free product of ``N`` copies of ``Z/2``, elements are
  reduced words over the letters ``1..N`` (no two equal adjacent letters).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BallTooLarge,
    DuplicateGenerator,
    EmptyGeneratorSet,
    NonSymmetricGenerators,
    ValidationError,
)
from .fitting import linear_fit, upper_half

DEFAULT_BALL_CAP = 10**7

_BACKEND_ALIASES = {
    "lattice": "lattice",
    "integer-lattice": "lattice",
    "integer_lattice": "lattice",
    "heisenberg": "heisenberg",
    "free_product_z2": "free_product_z2",
    "free-product-z2": "free_product_z2",
    "free-product-Z2": "free_product_z2",
}


@dataclass(frozen=True)
class GroupPresentation:
    """A group backend together with an ordered symmetric generator list."""

    backend: str
    generators: tuple
    dim: int = 0
    arity: int = 0
    lazy: bool = field(default=False, compare=False)

    # -- element algebra -------------------------------------------------
    def identity(self):
        raise NotImplementedError

    def multiply(self, g, h):
        raise NotImplementedError

    def inverse(self, g):
        raise NotImplementedError

    def canonical(self, value):
        """Convert a user-supplied value into the canonical element encoding."""
        raise NotImplementedError

    # -- metadata --------------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.generators)

    @property
    def vector(self) -> bool:
        """True when elements are fixed-length integer vectors (numpy fast paths)."""
        return False

    @property
    def growth_index(self) -> float:
        """Exact growth index of the backend (``math.inf`` for superpolynomial growth)."""
        raise NotImplementedError

    @property
    def recurrent(self) -> bool:
        return self.growth_index <= 2

    @property
    def standard(self) -> bool:
        """True when the generator set is the backend's standard one."""
        return set(self.generators) == set(standard_generators(self.backend, self.dim, self.arity))

    def closed_form_length(self, g) -> int | None:
        """Word length when a closed form exists for this generator set, else None."""
        return None

    def inverse_index(self) -> np.ndarray:
        """``inv[i]`` is the index of ``generators[i]^-1``."""
        pos = {g: i for i, g in enumerate(self.generators)}
        return np.array([pos[self.inverse(g)] for g in self.generators], dtype=np.int64)

    # -- walks -----------------------------------------------------------
    def walk_positions(self, steps, start=None) -> list:
        """Positions ``S_0..S_n`` for generator indices ``steps``."""
        g = self.identity() if start is None else self.canonical(start)
        out = [g]
        gens = self.generators
        for s in np.asarray(steps, dtype=np.int64).tolist():
            g = self.multiply(g, gens[s])
            out.append(g)
        return out

    def to_spec(self) -> dict:
        spec = {"backend": self.backend, "generators": [list(g) for g in self.generators]}
        if self.backend == "lattice":
            spec["dim"] = self.dim
        if self.backend == "free_product_z2":
            spec["arity"] = self.arity
        return spec


class VectorGroup(GroupPresentation):
    """Backends whose elements are integer tuples of fixed length."""

    @property
    def vector(self) -> bool:
        return True

    @property
    def width(self) -> int:
        return len(self.identity())

    def generator_array(self) -> np.ndarray:
        return np.array(self.generators, dtype=np.int64).reshape(self.size, self.width)

    def positions_array(self, steps, start=None) -> np.ndarray:
        """``(n+1, width)`` array of positions; vectorised."""
        steps = np.asarray(steps, dtype=np.int64)
        origin = np.asarray(self.identity() if start is None else self.canonical(start), dtype=np.int64)
        walk = self.advance(origin[None, :], steps[None, :])[0]
        return np.vstack([origin[None, :], walk])

    def advance(self, current: np.ndarray, steps: np.ndarray) -> np.ndarray:
        """Positions after each of ``steps`` (shape ``(T, k)``) from ``current`` (``(T, width)``).

        Returns an array of shape ``(T, k, width)``.
        """
        raise NotImplementedError

    def walk_positions(self, steps, start=None) -> list:
        return list(map(tuple, self.positions_array(steps, start).tolist()))


@dataclass(frozen=True)
class Lattice(VectorGroup):
    def identity(self):
        return (0,) * self.dim

    def multiply(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inverse(self, g):
        return tuple(-a for a in g)

    def canonical(self, value):
        if isinstance(value, (int, np.integer)):
            value = (value,)
        value = tuple(int(v) for v in value)
        if len(value) != self.dim:
            raise ValidationError(f"lattice element {value!r} does not have length {self.dim}")
        return value

    @property
    def growth_index(self) -> float:
        return float(np.linalg.matrix_rank(self.generator_array())) if self.generators else 0.0

    def closed_form_length(self, g):
        if self.standard:
            return int(sum(abs(v) for v in g))
        return None

    def advance(self, current, steps):
        gens = self.generator_array()
        return current[:, None, :] + np.cumsum(gens[steps], axis=1)


@dataclass(frozen=True)
class Heisenberg(VectorGroup):
    def identity(self):
        return (0, 0, 0)

    def multiply(self, g, h):
        a1, b1, c1 = g
        a2, b2, c2 = h
        return (a1 + a2, b1 + b2, c1 + c2 + a1 * b2)

    def inverse(self, g):
        a, b, c = g
        return (-a, -b, a * b - c)

    def canonical(self, value):
        value = tuple(int(v) for v in value)
        if len(value) != 3:
            raise ValidationError(f"heisenberg element {value!r} is not a triple")
        return value

    @property
    def growth_index(self) -> float:
        return 4.0

    def advance(self, current, steps):
        gens = self.generator_array()
        inc = gens[steps]  # (T, k, 3)
        a = current[:, 0:1] + np.cumsum(inc[..., 0], axis=1)
        b = current[:, 1:2] + np.cumsum(inc[..., 1], axis=1)
        a_prev = np.concatenate([current[:, 0:1], a[:, :-1]], axis=1)
        c = current[:, 2:3] + np.cumsum(inc[..., 2] + a_prev * inc[..., 1], axis=1)
        return np.stack([a, b, c], axis=-1)


@dataclass(frozen=True)
class FreeProductZ2(GroupPresentation):
    def identity(self):
        return ()

    def multiply(self, g, h):
        g = list(g)
        i = 0
        while g and i < len(h) and g[-1] == h[i]:
            g.pop()
            i += 1
        return tuple(g) + tuple(h[i:])

    def inverse(self, g):
        return tuple(reversed(g))

    def canonical(self, value):
        if isinstance(value, (int, np.integer)):
            value = (value,)
        word = ()
        for letter in value:
            letter = int(letter)
            if not 1 <= letter <= self.arity:
                raise ValidationError(f"letter {letter} outside 1..{self.arity}")
            word = self.multiply(word, (letter,))
        return word

    @property
    def growth_index(self) -> float:
        if self.arity <= 1:
            return 0.0
        if self.arity == 2:
            return 1.0
        return math.inf

    def closed_form_length(self, g):
        if self.standard:
            return len(g)
        return None

    def walk_positions(self, steps, start=None):
        g = list(self.identity() if start is None else self.canonical(start))
        gens = self.generators
        out = [tuple(g)]
        if self.standard:
            for s in np.asarray(steps, dtype=np.int64).tolist():
                letter = gens[s][0]
                if g and g[-1] == letter:
                    g.pop()
                else:
                    g.append(letter)
                out.append(tuple(g))
            return out
        return super().walk_positions(steps, start)


_CLASSES = {"lattice": Lattice, "heisenberg": Heisenberg, "free_product_z2": FreeProductZ2}


def normalize_backend(backend: str) -> str:
    try:
        return _BACKEND_ALIASES[backend]
    except KeyError:
        raise ValidationError(f"unknown backend {backend!r}") from None


def standard_generators(backend: str, dim: int = 0, arity: int = 0) -> list:
    backend = normalize_backend(backend)
    if backend == "lattice":
        gens = []
        for i in range(dim):
            e = [0] * dim
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return gens
    if backend == "heisenberg":
        return [(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)]
    return [(i,) for i in range(1, arity + 1)]


def make_group(backend: str, parameters: dict | None = None, generators: Sequence | None = None) -> GroupPresentation:
    """Build and validate a group presentation.

    ``parameters`` holds ``dim`` for the lattice and ``arity`` for the free
    product.  When ``generators`` is None the backend's standard set is used.
    Raises :class:`EmptyGeneratorSet`, :class:`DuplicateGenerator` or
    :class:`NonSymmetricGenerators` on invalid input.
    """
    backend = normalize_backend(backend)
    parameters = dict(parameters or {})
    dim = int(parameters.get("dim", 0))
    arity = int(parameters.get("arity", 0))
    if backend == "lattice" and dim < 1:
        if generators:
            dim = len(np.atleast_1d(generators[0]))
        else:
            raise ValidationError("lattice backend needs dim >= 1")
    if backend == "free_product_z2" and arity < 1:
        raise ValidationError("free_product_z2 backend needs arity >= 1")
    if backend == "heisenberg":
        dim = 3
    cls = _CLASSES[backend]
    probe = cls(backend=backend, generators=(), dim=dim, arity=arity)
    if generators is None:
        generators = standard_generators(backend, dim, arity)
    gens = [probe.canonical(g) for g in generators]
    if not gens:
        raise EmptyGeneratorSet("generator list is empty")
    seen = set()
    for g in gens:
        if g in seen:
            raise DuplicateGenerator(f"generator {g!r} listed twice")
        seen.add(g)
    e = probe.identity()
    for g in gens:
        inv = probe.inverse(g)
        if inv not in seen:
            raise NonSymmetricGenerators(f"inverse {inv!r} of generator {g!r} is missing")
        if probe.multiply(g, inv) != e or probe.multiply(inv, g) != e:
            raise NonSymmetricGenerators(f"generator {g!r} does not cancel against {inv!r}")
    lazy = e in seen
    if lazy:
        warnings.warn("identity is among the generators: the walk is lazy", stacklevel=2)
    return cls(backend=backend, generators=tuple(gens), dim=dim, arity=arity, lazy=lazy)


def group_from_spec(spec: dict | str) -> GroupPresentation:
    """Build a group from the JSON object accepted by the CLI."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "backend" not in spec:
        raise ValidationError("group spec must be an object with a 'backend' key")
    nested = spec.get("parameters") or {}
    if not isinstance(nested, dict):
        raise ValidationError("'parameters' must be an object")
    params = {**nested, **{k: spec[k] for k in ("dim", "arity") if k in spec}}
    return make_group(spec["backend"], params, spec.get("generators"))


def load_group(source: str) -> GroupPresentation:
    """Accept either a path to a JSON file or an inline JSON string."""
    text = source
    if not source.lstrip().startswith("{"):
        path = Path(source)
        if not path.is_file():
            raise ValidationError(f"group file {source!r} not found")
        text = path.read_text(encoding="utf-8")
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid group JSON: {exc}") from None
    return group_from_spec(spec)


def multiply(G: GroupPresentation, g, h):
    return G.multiply(g, h)


def inverse(G: GroupPresentation, g):
    return G.inverse(g)


def identity(G: GroupPresentation):
    return G.identity()


# -- word metric -------------------------------------------------------------


def _bfs_levels(G: GroupPresentation, r: int, cap: int):
    dist = {G.identity(): 0}
    frontier = [G.identity()]
    counts = [1]
    gens = G.generators
    for level in range(1, r + 1):
        nxt = []
        for g in frontier:
            for s in gens:
                h = G.multiply(g, s)
                if h not in dist:
                    dist[h] = level
                    nxt.append(h)
                    if len(dist) > cap:
                        raise BallTooLarge(cap, level - 1)
        frontier = nxt
        counts.append(counts[-1] + len(nxt))
    return dist, counts


def ball(G: GroupPresentation, r: int, closed: bool = True, cap: int = DEFAULT_BALL_CAP) -> dict:
    """Map every element with word length ``<= r`` (``< r`` if not ``closed``) to its length."""
    if r < 0:
        raise ValidationError("radius must be non-negative")
    radius = r if closed else r - 1
    if radius < 0:
        return {}
    return dict(_cached_ball(G, radius, cap))


@lru_cache(maxsize=32)
def _cached_ball(G, radius, cap):
    dist, _ = _bfs_levels(G, radius, cap)
    return dist


def word_length(G: GroupPresentation, g, cap: int = DEFAULT_BALL_CAP) -> int:
    """Exact word length; closed form where available, else BFS outward until found."""
    g = G.canonical(g)
    closed = G.closed_form_length(g)
    if closed is not None:
        return closed
    dist = {G.identity(): 0}
    if g in dist:
        return 0
    frontier = [G.identity()]
    level = 0
    while frontier:
        level += 1
        nxt = []
        for x in frontier:
            for s in G.generators:
                y = G.multiply(x, s)
                if y not in dist:
                    if y == g:
                        return level
                    dist[y] = level
                    nxt.append(y)
                    if len(dist) > cap:
                        raise BallTooLarge(cap, level - 1)
        frontier = nxt
    raise ValidationError(f"{g!r} is not in the generated subgroup")


@dataclass(frozen=True)
class GrowthProfile:
    radii: list
    ball_sizes: list
    fitted_index: float
    stderr: float
    window: list
    superpolynomial: bool

    def to_dict(self):
        return {
            "radii": list(self.radii),
            "ball_sizes": list(self.ball_sizes),
            "fitted_index": self.fitted_index,
            "stderr": self.stderr,
            "window": list(self.window),
            "superpolynomial": self.superpolynomial,
        }


def growth_profile(G: GroupPresentation, r_max: int, cap: int = DEFAULT_BALL_CAP, threshold: float = 8.0) -> GrowthProfile:
    """Ball sizes ``V(0..r_max)`` from one BFS and a log-log fit over the upper half of radii.

    The superpolynomial flag is raised when ``log V`` is convex in ``log n`` over the
    window and either the fitted index exceeds ``threshold`` or an exponential
    model (``log V`` linear in ``n``) fits better than a power law.
    """
    if r_max < 2:
        raise ValidationError("r_max must be at least 2")
    _, counts = _bfs_levels(G, r_max, cap)
    radii = list(range(r_max + 1))
    window = [r for r in upper_half(radii) if r >= 1]
    logv = np.log([counts[r] for r in window])
    fit = linear_fit(np.log(window), logv)
    expo = linear_fit(np.asarray(window, float), logv)
    local = np.diff(logv) / np.diff(np.log(window))
    convex = bool(np.all(np.diff(local) > 0)) if len(local) > 1 else False
    superpoly = convex and (fit.slope > threshold or expo.rss < fit.rss)
    return GrowthProfile(radii, counts, fit.slope, fit.stderr, window, superpoly)
