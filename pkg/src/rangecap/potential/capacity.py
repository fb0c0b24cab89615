"""Capacity of finite sets: Monte Carlo escape, harmonic brackets and Green solves.

``Cap(A) = sum_{a in A} P_a(tau_A^+ = inf)``.  Three routes are provided:

* ``escape_mc`` / ``capacity_mc``: finite-horizon non-return frequencies, an
  upward-biased estimator with a report of the value at half the horizon;
* ``capacity_bracket``: solve the harmonic equation on a ball; counting exits as
  escapes gives an upper bound, counting them as returns gives the lower bound;
* ``capacity_solve``: the linear system ``G_A e = 1`` for the equilibrium
  measure, exact when the Green source is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import NonConvergence, ValidationError
from ..groups import DEFAULT_BALL_CAP, GroupPresentation, ball
from ..parallel import pmap
from ..rng import stream
from ..walks import WalkPath, range_sizes
from .green import GreenSource, exact_green_available, green_source

METHODS = ("auto", "green-solve", "escape-mc", "harmonic-bracket", "recurrent")


@dataclass
class CapacityEstimate:
    set_size: int
    point: float
    method: str
    stderr: float | None = None
    bracket: tuple | None = None
    horizon: int | None = None
    radius: int | None = None
    trials: int | None = None
    seed: int | None = None
    half_horizon_point: float | None = None
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "point": self.point,
            "stderr": self.stderr,
            "bracket": None if self.bracket is None else list(self.bracket),
            "horizon": self.horizon,
            "trials": self.trials,
            "seed": self.seed,
            "set_size": self.set_size,
        }
        if self.radius is not None:
            out["radius"] = self.radius
        if self.half_horizon_point is not None:
            out["half_horizon_point"] = self.half_horizon_point
        if not self.converged:
            out["converged"] = False
        out.update(self.extra)
        return out


def _canonical_set(G: GroupPresentation, A) -> list:
    seen: dict = {}
    for a in A:
        seen.setdefault(G.canonical(a), None)
    return list(seen)


# -- Monte Carlo escape --------------------------------------------------------


@dataclass(frozen=True)
class EscapeEstimate:
    value: float
    stderr: float
    half_value: float
    half_stderr: float
    horizon: int
    trials: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "half_horizon_value": self.half_value,
            "half_horizon_stderr": self.half_stderr,
            "horizon": self.horizon,
            "trials": self.trials,
        }


class _Membership:
    """Vectorised membership test for a finite set of integer vectors."""

    def __init__(self, points: np.ndarray):
        self.lo = points.min(axis=0)
        span = points.max(axis=0) - self.lo + 1
        self.span = span
        self.stride = np.concatenate([np.cumprod(span[::-1])[::-1][1:], [1]]).astype(np.int64)
        self.keys = np.sort(((points - self.lo) * self.stride).sum(axis=1))

    def contains(self, pos: np.ndarray) -> np.ndarray:
        rel = pos - self.lo
        inside = np.all((rel >= 0) & (rel < self.span), axis=-1)
        key = np.where(inside, (rel * self.stride).sum(axis=-1), -1)
        idx = np.searchsorted(self.keys, key).clip(max=len(self.keys) - 1)
        return inside & (self.keys[idx] == key)


_BLOCK = 256


def _first_returns_vector(G, members: _Membership, start, horizon, trials, rng):
    """First return time (``horizon + 1`` if none) for each trial."""
    first = np.full(trials, horizon + 1, dtype=np.int64)
    active = np.arange(trials)
    current = np.tile(np.asarray(start, dtype=np.int64), (trials, 1))
    t0 = 0
    while t0 < horizon and active.size:
        # draw full blocks so a shorter horizon sees a prefix of the same paths
        steps = rng.integers(0, G.size, size=(active.size, _BLOCK))
        use = min(_BLOCK, horizon - t0)
        pos = G.advance(current[active], steps[:, :use])
        hit = members.contains(pos)
        any_hit = hit.any(axis=1)
        first[active[any_hit]] = t0 + 1 + hit[any_hit].argmax(axis=1)
        current[active] = pos[:, -1]
        active = active[~any_hit]
        t0 += use
    return first


def _first_returns_generic(G, A_set, start, horizon, trials, rng):
    first = np.full(trials, horizon + 1, dtype=np.int64)
    gens = G.generators
    for i in range(trials):
        g = start
        t = 0
        while t < horizon:
            steps = rng.integers(0, G.size, size=_BLOCK).tolist()
            use = min(_BLOCK, horizon - t)
            for s in steps[:use]:
                t += 1
                g = G.multiply(g, gens[s])
                if g in A_set:
                    first[i] = t
                    break
            if first[i] <= horizon:
                break
    return first


def escape_mc(
    G: GroupPresentation,
    A,
    g,
    horizon: int,
    trials: int,
    seed: int,
    stream_id: int = 0,
) -> EscapeEstimate:
    """Frequency of ``tau_A^+ > horizon`` from ``g`` over ``trials`` walks.

    The value at ``horizon // 2`` comes from the same trial paths, so it is
    samplewise at least the full-horizon value.
    """
    if horizon < 1 or trials < 1:
        raise ValidationError("horizon and trials must be >= 1")
    A = _canonical_set(G, A)
    g = G.canonical(g)
    rng = stream(seed, stream_id, 11)
    if G.vector:
        first = _first_returns_vector(G, _Membership(np.asarray(A, dtype=np.int64)), g, horizon, trials, rng)
    else:
        first = _first_returns_generic(G, set(A), g, horizon, trials, rng)
    full = (first > horizon).astype(float)
    half = (first > horizon // 2).astype(float)

    def se(x):
        return float(x.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0

    return EscapeEstimate(float(full.mean()), se(full), float(half.mean()), se(half), horizon, trials)


def capacity_mc(
    G: GroupPresentation,
    A,
    horizon: int,
    trials: int,
    seed: int,
    stream_id: int = 0,
    threads: int = 1,
) -> CapacityEstimate:
    """Sum of escape estimates over the points of ``A`` (independent streams per point)."""
    A = _canonical_set(G, A)
    if not A:
        return CapacityEstimate(0, 0.0, "escape-mc", 0.0, None, horizon, None, trials, seed, 0.0)
    ests = pmap(lambda ia: escape_mc(G, A, ia[1], horizon, trials, seed, stream_id * 1_000_003 + ia[0]), enumerate(A), threads)
    point = math.fsum(e.value for e in ests)
    var = math.fsum(e.stderr**2 for e in ests)
    half = math.fsum(e.half_value for e in ests)
    return CapacityEstimate(len(A), point, "escape-mc", math.sqrt(var), None, horizon, None, trials, seed, half)


# -- harmonic bracket ----------------------------------------------------------


DIRECT_SOLVE_LIMIT = 8000


def _solve_harmonic(P, rhs, solver, tol, max_sweeps):
    """Solve ``(I - P) x = b`` for each column of ``rhs``; returns ``(x, sweeps)``.

    ``I - P`` is symmetric positive definite for symmetric generator sets, so
    large domains use conjugate gradients (``auto`` switches above
    ``DIRECT_SOLVE_LIMIT`` unknowns, where sparse LU fill-in becomes costly).
    """
    n = P.shape[0]
    if n == 0:
        return np.zeros_like(rhs), 0
    if solver == "auto":
        solver = "direct" if n <= DIRECT_SOLVE_LIMIT else "cg"
    K = (sp.identity(n, format="csc") - P.tocsc()).tocsc()
    if solver == "direct":
        lu = spla.splu(K)
        return np.column_stack([lu.solve(rhs[:, j]) for j in range(rhs.shape[1])]), 0
    if solver == "cg":
        out = []
        iters = 0
        for j in range(rhs.shape[1]):
            count = [0]

            def tick(_):
                count[0] += 1

            x, info = spla.cg(K.tocsr(), rhs[:, j], rtol=tol * 1e-3, atol=0.0, maxiter=int(max_sweeps), callback=tick)
            if info != 0:
                raise NonConvergence(f"conjugate gradients stopped after {count[0]} iterations")
            out.append(x)
            iters += count[0]
        return np.column_stack(out), iters
    if solver == "jacobi":
        out = []
        sweeps = 0
        for j in range(rhs.shape[1]):
            b = rhs[:, j]
            h = np.zeros(n)
            k = 0
            while True:
                new = P @ h + b
                k += 1
                resid = float(np.max(np.abs(new - h)))
                h = new
                if resid < tol:
                    break
                if k >= max_sweeps:
                    raise NonConvergence(f"relaxation residual {resid:.3e} after {k} sweeps")
            out.append(h)
            sweeps += k
        return np.column_stack(out), sweeps
    raise ValidationError(f"unknown solver {solver!r}")


def _harmonic_escape(G, A, domain, solver, tol, max_sweeps):
    """Escape probabilities from the points of ``A`` with exits counted as escapes and as returns.

    ``h`` (probability of hitting ``A`` before leaving the domain, with exits
    valued ``c``) is linear in ``c``: ``h = x_A + c x_exit``, so one system with
    two right-hand sides gives both bounds.  Returns ``(esc_upper, esc_lower, sweeps)``.
    """
    A_set = set(A)
    interior = [v for v in domain if v not in A_set]
    index = {v: i for i, v in enumerate(interior)}
    m = G.size
    rows, cols = [], []
    rhs = np.zeros((len(interior), 2))
    for i, v in enumerate(interior):
        for s in G.generators:
            u = G.multiply(v, s)
            j = index.get(u)
            if j is not None:
                rows.append(i)
                cols.append(j)
            elif u in A_set:
                rhs[i, 0] += 1.0 / m
            else:
                rhs[i, 1] += 1.0 / m
    P = sp.csr_matrix((np.full(len(rows), 1.0 / m), (rows, cols)), shape=(len(interior), len(interior)))
    x, sweeps = _solve_harmonic(P, rhs, solver, tol, max_sweeps)
    out = []
    for c in (0.0, 1.0):
        h = x[:, 0] + c * x[:, 1] if len(interior) else np.zeros(0)
        esc = []
        for a in A:
            tot = 0.0
            for s in G.generators:
                u = G.multiply(a, s)
                if u in A_set:
                    ret = 1.0
                elif u in index:
                    ret = h[index[u]]
                else:
                    ret = c
                tot += 1.0 - ret
            esc.append(tot / m)
        out.append(np.array(esc))
    return out[0], out[1], sweeps


def capacity_bracket(
    G: GroupPresentation,
    A,
    ball_radius: int,
    solver: str = "auto",
    tol: float = 1e-10,
    max_sweeps: int = 10**6,
    cap: int = DEFAULT_BALL_CAP,
) -> CapacityEstimate:
    """Deterministic ``[lower, upper]`` for ``Cap(A)`` from the ball ``{rho < R}``.

    ``h(v)`` is the probability of hitting ``A`` before leaving the ball.  Counting
    exits as escapes (``h = 0`` outside) gives the upper bound; counting them as
    returns (``h = 1`` outside) gives the lower bound, which is ``0``.  The point
    value is the upper bound.
    """
    A = _canonical_set(G, A)
    if ball_radius < 1:
        raise ValidationError("ball_radius must be >= 1")
    if not A:
        return CapacityEstimate(0, 0.0, "harmonic-bracket", None, (0.0, 0.0), radius=ball_radius)
    domain = ball(G, ball_radius, closed=False, cap=cap)
    outside = [a for a in A if a not in domain]
    if outside:
        raise ValidationError(f"{outside[0]!r} lies outside the ball of radius {ball_radius}")
    if solver == "auto":
        solver = "direct" if len(domain) - len(A) <= DIRECT_SOLVE_LIMIT else "cg"
    up, low, sweeps = _harmonic_escape(G, A, domain, solver, tol, max_sweeps)
    upper = math.fsum(up.tolist())
    # capacities are non-negative; the lower system only differs by rounding
    lower = max(0.0, min(math.fsum(low.tolist()), upper))
    extra = {"solver": solver, "domain_size": len(domain)}
    if sweeps:
        extra["iterations"] = sweeps
    return CapacityEstimate(len(A), upper, "harmonic-bracket", None, (lower, upper), radius=ball_radius, extra=extra)


# -- Green solve ---------------------------------------------------------------


def equilibrium_weights(M: np.ndarray) -> np.ndarray:
    """Solve ``M e = 1`` by Cholesky (falls back to LU if ``M`` is not positive definite)."""
    ones = np.ones(len(M))
    try:
        return sla.cho_solve(sla.cho_factor(M, lower=True), ones)
    except np.linalg.LinAlgError:
        return np.linalg.solve(M, ones)


def capacity_solve(G: GroupPresentation, A, source: GreenSource | None = None) -> CapacityEstimate:
    """``Cap(A) = 1^T G_A^{-1} 1`` from a Green source (exact on ``Z^d`` by default)."""
    A = _canonical_set(G, A)
    if not A:
        return CapacityEstimate(0, 0.0, "green-solve")
    if G.recurrent:
        return CapacityEstimate(len(A), 0.0, "recurrent", 0.0)
    source = source or green_source(G)
    e = equilibrium_weights(source.matrix(A))
    return CapacityEstimate(len(A), float(e.sum()), "green-solve", 0.0, extra={"green": source.describe()})


# -- range capacity --------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorConfig:
    """How experiments turn a range into a capacity value.

    ``auto`` means: ``0`` for recurrent groups, the exact Green solve when the
    full lattice Green function is available, else ``escape-mc``.
    """

    method: str = "auto"
    horizon_factor: int = 16
    trials: int = 64
    green_method: str = "auto"
    green_horizon: int = 800

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown capacity method {self.method!r}")

    @classmethod
    def from_dict(cls, d: dict | None) -> "EstimatorConfig":
        d = dict(d or {})
        known = {k: d.pop(k) for k in list(d) if k in cls.__dataclass_fields__}
        if d:
            raise ValidationError(f"unknown estimator keys {sorted(d)}")
        return cls(**known)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "horizon_factor": self.horizon_factor,
            "trials": self.trials,
            "green_method": self.green_method,
            "green_horizon": self.green_horizon,
        }

    def resolve(self, G: GroupPresentation) -> str:
        if self.method != "auto":
            return self.method
        if G.recurrent:
            return "recurrent"
        if self.green_method in ("auto", "lattice-integral") and exact_green_available(G):
            return "green-solve"
        return "escape-mc"


def prefix_range_capacities(
    path: WalkPath,
    ns,
    config: EstimatorConfig = EstimatorConfig(),
    seed: int | None = None,
) -> list:
    """``Cap(R_n)`` for each ``n`` in ``ns`` from one path (nested prefixes).

    For the Green solve the range is ordered by first visit, so ``R_n`` is a
    leading block of ``R_N``: one Cholesky factorisation of the largest Green
    matrix gives every prefix capacity as a partial sum of ``(L^{-1} 1)^2``.
    """
    G = path.group
    ns = [int(n) for n in ns]
    if max(ns) > path.n:
        raise ValidationError("grid exceeds the path length")
    method = config.resolve(G)
    sizes = range_sizes(path)
    if method == "recurrent":
        return [CapacityEstimate(int(sizes[n]), 0.0, "recurrent", 0.0) for n in ns]
    if method == "green-solve":
        N = max(ns)
        elems = list(dict.fromkeys(path.positions[: N + 1]))
        source = green_source(G, config.green_method, config.green_horizon)
        M = source.matrix(elems)
        L = sla.cholesky(M, lower=True)
        y = sla.solve_triangular(L, np.ones(len(elems)), lower=True)
        caps = np.cumsum(y * y)
        return [
            CapacityEstimate(int(sizes[n]), float(caps[sizes[n] - 1]), "green-solve", 0.0, extra={"green": source.describe()})
            for n in ns
        ]
    if method == "escape-mc":
        out = []
        base = path.seed if seed is None else seed
        for i, n in enumerate(ns):
            A = list(dict.fromkeys(path.positions[: n + 1]))
            est = capacity_mc(G, A, config.horizon_factor * max(n, 1), config.trials, base, stream_id=(path.stream_id or 0) * 64 + i)
            out.append(est)
        return out
    if method == "harmonic-bracket":
        raise ValidationError("harmonic-bracket is not available for ranges; use a fixed set")
    raise ValidationError(f"unknown method {method!r}")


def range_capacity(path: WalkPath, n: int | None = None, config: EstimatorConfig = EstimatorConfig()) -> CapacityEstimate:
    return prefix_range_capacities(path, [path.n if n is None else n], config)[0]


def set_capacity(G: GroupPresentation, A, config: EstimatorConfig = EstimatorConfig(), seed: int = 0, horizon: int | None = None) -> CapacityEstimate:
    """Capacity of an arbitrary finite set with the configured estimator."""
    method = config.resolve(G)
    A = _canonical_set(G, A)
    if method == "recurrent":
        return CapacityEstimate(len(A), 0.0, "recurrent", 0.0)
    if method == "green-solve":
        return capacity_solve(G, A, green_source(G, config.green_method, config.green_horizon))
    if method == "escape-mc":
        H = horizon or config.horizon_factor * max(len(A), 1)
        return capacity_mc(G, A, H, config.trials, seed)
    raise ValidationError(f"method {method!r} is not available here")
