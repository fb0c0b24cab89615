"""Green energy of probability measures and the equilibrium measure.

``Cap(A) = 1 / inf_nu E(nu)`` with ``E(nu) = sum G(a^{-1} b) nu(a) nu(b)`` over
probability measures supported on ``A``.  The minimiser is found by the
conditional-gradient (Frank-Wolfe) method on the simplex.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import NonConvergence, ValidationError
from ..groups import GroupPresentation
from ..walks import WalkPath, local_times
from .capacity import CapacityEstimate
from .green import GreenSource, green_source


@dataclass(eq=False)
class SimplexMeasure:
    support: list
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.support):
            raise ValidationError("weights and support differ in length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise ValidationError("weights must be non-negative and sum to 1")
        self.weights = w

    @classmethod
    def dirac(cls, g) -> "SimplexMeasure":
        return cls([g], np.ones(1))

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.weights.tolist()))


def energy(G: GroupPresentation, A, nu: SimplexMeasure, source: GreenSource | None = None) -> float:
    """``E(nu) = nu^T G_A nu`` restricted to the support of ``nu``."""
    A_set = {G.canonical(a) for a in A}
    support = [G.canonical(g) for g in nu.support]
    if any(g not in A_set for g in support):
        raise ValidationError("measure is not supported on A")
    source = source or green_source(G)
    M = source.matrix(support)
    w = nu.weights
    return float(w @ M @ w)


def empirical_measure(path: WalkPath, n: int | None = None) -> SimplexMeasure:
    """``nu_n = n^{-1} sum_{k=1}^n delta_{S_k}``."""
    n = path.n if n is None else n
    if n < 1 or n > path.n:
        raise ValidationError("empirical measure needs 1 <= n <= path length")
    elems, counts = local_times(path, 1, n)
    return SimplexMeasure(elems, counts / n)


@dataclass
class FrankWolfeResult:
    measure: SimplexMeasure
    estimate: CapacityEstimate
    energy: float
    gap: float
    iterations: int
    converged: bool


def minimize_energy(M: np.ndarray, iterations: int = 20000, tolerance: float = 1e-9, step: str = "open-loop", start=None):
    """Conditional-gradient minimisation of ``w^T M w`` over the simplex.

    Returns ``(w, energy, gap, iterations, converged)``.  ``gap`` is the
    Frank-Wolfe duality gap ``2 (w^T M w - min_i (M w)_i)``, an upper bound on
    the energy excess.
    """
    k = len(M)
    w = np.full(k, 1.0 / k) if start is None else np.asarray(start, float).copy()
    Mw = M @ w
    best = (np.inf, w.copy(), np.inf)
    gap = np.inf
    t = 0
    for t in range(iterations + 1):
        f = float(w @ Mw)
        i = int(np.argmin(Mw))
        gap = 2.0 * (f - float(Mw[i]))
        if f < best[0]:
            best = (f, w.copy(), gap)
        if gap < tolerance or t == iterations:
            break
        d = -w
        d[i] += 1.0
        if step == "line-search":
            Md = M[:, i] - Mw
            curv = float(d @ Md)
            gamma = 1.0 if curv <= 0 else min(1.0, max(0.0, -float(d @ Mw) / curv))
        else:
            gamma = 2.0 / (t + 2.0)
        w = w + gamma * d
        Mw = (1.0 - gamma) * Mw + gamma * M[:, i]
    f, w, g = best
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    return w, float(w @ M @ w), float(min(g, gap)), t, bool(min(g, gap) < tolerance)


def equilibrium_measure(
    G: GroupPresentation,
    A,
    iterations: int = 20000,
    tolerance: float = 1e-9,
    source: GreenSource | None = None,
    step: str = "open-loop",
    strict: bool = False,
) -> FrankWolfeResult:
    """Minimise the Green energy over probability measures on ``A``.

    The capacity estimate is ``1 / E(nu*)`` with method ``variational-lower``.
    When the gap target is missed the best iterate is returned with
    ``converged=False`` (or :class:`NonConvergence` is raised if ``strict``).
    """
    A = list(dict.fromkeys(G.canonical(a) for a in A))
    if not A:
        raise ValidationError("A must be non-empty")
    source = source or green_source(G)
    M = source.matrix(A)
    w, E, gap, its, ok = minimize_energy(M, iterations, tolerance, step)
    if not ok:
        msg = f"duality gap {gap:.3e} above tolerance after {its} iterations"
        if strict:
            raise NonConvergence(msg)
        warnings.warn(msg, stacklevel=2)
    est = CapacityEstimate(
        len(A),
        1.0 / E,
        "variational-lower",
        converged=ok,
        extra={"green": source.describe(), "gap": gap, "iterations": its},
    )
    return FrankWolfeResult(SimplexMeasure(A, w), est, E, gap, its, ok)
