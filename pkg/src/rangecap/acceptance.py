"""Acceptance criteria as runnable checks.

Each ``criterion_k(threads)`` returns a :class:`CriterionResult` whose payload is
a pure function of the fixed configuration; criterion 11 recomputes 1-10 with a
different thread count from cold caches and compares the serialised payloads.

Run all of them with ``python -m rangecap.acceptance``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .backtrack import decompose_sample, reconstructed_batch
from .experiments import (
    clt_experiment,
    dyadic_sandwich_experiment,
    exponent_fit,
    kernel_decay_check,
    pair_green_sum_check,
    slln_experiment,
)
from .groups import _cached_ball, ball, make_group
from .io import dumps
from .kernels import exact_kernel
from .potential import capacity_bracket, equilibrium_measure, escape_mc, green_source, green_truncated
from .potential.lattice_green import _INSTANCES as _LATTICE_GREENS
from .rng import stream


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    payload: dict = field(default_factory=dict)
    runtime: float = 0.0
    limit: float | None = None

    @property
    def within_time(self) -> bool:
        return self.limit is None or self.runtime < self.limit

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_time else "FAIL"
        t = f"{self.runtime:.1f}s" + (f" (limit {self.limit:.0f}s)" if self.limit else "")
        return f"[{status}] criterion {self.number:2d}: {self.title} -- {self.summary} [{t}]"


def lattice(d):
    return make_group("lattice", {"dim": d})


def _timed(fn):
    def wrapper(threads: int = 1) -> CriterionResult:
        t0 = time.perf_counter()
        res = fn(threads)
        res.runtime = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def criterion_1(threads=1):
    """Gambler's ruin: the bracket upper bound on Z is exactly 1/R."""
    G = lattice(1)
    rows = {}
    ok = True
    for R in (10, 50, 100):
        est = capacity_bracket(G, [(0,)], R)
        err = abs(est.bracket[1] - 1.0 / R)
        rows[str(R)] = {"bracket": list(est.bracket), "error": err}
        ok &= err <= 1e-8
    worst = max(r["error"] for r in rows.values())
    return CriterionResult(1, "recurrence / gambler's ruin", ok, f"max |upper - 1/R| = {worst:.2e} (tol 1e-8)", rows, limit=5)


@_timed
def criterion_2(threads=1):
    """Cap({e}) G(e) close to 1 on Z^3 from two independent estimators."""
    G = lattice(3)
    e = G.identity()
    esc = escape_mc(G, [e], e, 10**4, 2000, seed=2)
    gr = green_truncated(G, e, 800)
    prod = esc.value * gr.value
    ok = 0.9 <= prod <= 1.1
    payload = {"escape": esc.to_dict(), "green": gr.to_dict(), "product": prod}
    return CriterionResult(2, "singleton identity Cap({e}) G(e) = 1", ok, f"product = {prod:.4f} in [0.9, 1.1]", payload, limit=60)


@_timed
def criterion_3(threads=1):
    """Phase transition of C_n / n at growth index 4."""
    grid = [256, 512, 1024, 2048]
    seeds = list(range(20))
    reps = {d: slln_experiment(lattice(d), grid, seeds, threads=threads) for d in (5, 4, 2)}
    ok = all(r.passed for r in reps.values())
    m5 = reps[5].fits["mu_hat"]
    top = reps[5].diagnostics["top_octave_relative_change"]
    means4 = [s["mean"] for s in reps[4].series]
    summary = (
        f"d=5 mu={m5:.4f}, top-octave change {top:.3f}; "
        f"d=4 C_n/n {' > '.join(f'{m:.4f}' for m in means4)}; d=2 mu={reps[2].fits['mu_hat']:.1e}"
    )
    return CriterionResult(3, "SLLN phase transition", ok, summary, {str(d): r.payload() for d, r in reps.items()}, limit=600)


@_timed
def criterion_4(threads=1):
    rep = exponent_fit(lattice(3), [128, 256, 512, 1024, 2048, 4096], list(range(20)), threads=threads)
    a = rep.fits["alpha"]
    return CriterionResult(
        4, "d=3 capacity exponent", rep.passed,
        f"alpha = {a['slope']:.3f} +- {a['stderr']:.3f} over n in {a['window']} (bracket [0.40, 0.60])",
        rep.payload(), limit=600,
    )


@_timed
def criterion_5(threads=1):
    rep = clt_experiment(lattice(6), 1024, list(range(300)), threads=threads)
    nm = rep.normality
    return CriterionResult(
        5, "CLT proxy on Z^6", rep.passed,
        f"KS = {nm['ks']:.3f}, skew = {nm['skewness']:.3f}, Var ratio (1024 vs 512) = {rep.fits['variance_ratio']:.3f}",
        rep.payload(), limit=1200,
    )


@_timed
def criterion_6(threads=1):
    rep = dyadic_sandwich_experiment(lattice(5), 512, [1, 2, 3], list(range(100)), threads=threads)
    mins = {s["level"]: s["min_lower_margin"] for s in rep.series}
    return CriterionResult(
        6, "capacity decomposition sandwich", rep.passed,
        f"upper violations = {rep.checks['upper_violations'].value}; min lower margins {mins}",
        rep.payload(), limit=600,
    )


@_timed
def criterion_7(threads=1):
    G = lattice(1)
    identity_ok = all(decompose_sample(G, 32, 7, i).range_identity_holds() for i in range(10**4))
    steps = reconstructed_batch(G, 4, 10**6, seed=7)
    gens = G.generator_array()[:, 0]
    endpoints = gens[steps].sum(axis=1)
    vals, counts = np.unique(endpoints, return_counts=True)
    exact = exact_kernel(G, 4).distribution(4)
    support = sorted(set(vals.tolist()) | {g[0] for g in exact})
    emp = dict(zip(vals.tolist(), (counts / 10**6).tolist()))
    tv = 0.5 * sum(abs(emp.get(x, 0.0) - exact.get((x,), 0.0)) for x in support)
    ok = identity_ok and tv < 0.005
    payload = {"range_identity_samples": 10**4, "range_identity_holds": identity_ok, "tv": tv, "empirical": {str(k): v for k, v in emp.items()}}
    return CriterionResult(7, "double-backtrack construction", ok, f"range identity on 1e4 samples: {identity_ok}; TV = {tv:.5f} (< 0.005)", payload, limit=120)


@_timed
def criterion_8(threads=1):
    r2 = kernel_decay_check(lattice(2), [4, 8, 16, 32, 64])
    r3 = kernel_decay_check(lattice(3), [2, 4, 8, 16, 32])
    rf = kernel_decay_check(make_group("free_product_z2", {"arity": 3}), [4, 8, 16, 32, 64])
    ok = r2.passed and r3.passed and rf.passed
    s2, s3 = r2.fits["slope"]["slope"], r3.fits["slope"]["slope"]
    summary = f"slope d=2 {s2:.3f} (target -1), d=3 {s3:.3f} (target -1.5); free product flag {rf.diagnostics['superpolynomial']}"
    return CriterionResult(8, "heat-kernel decay", ok, summary, {"d2": r2.payload(), "d3": r3.payload(), "free": rf.payload()}, limit=120)


@_timed
def criterion_9(threads=1):
    G = lattice(3)
    pts = sorted(ball(G, 4))
    rng = stream(9, 0)
    src = green_source(G, "truncated-kernel", 800)
    rows = []
    ok = True
    for i in range(20):
        A = [pts[j] for j in rng.choice(len(pts), 10, replace=False)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fw = equilibrium_measure(G, A, iterations=20000, tolerance=1e-10, source=src, step="line-search")
        br = capacity_bracket(G, A, 12)
        v = fw.estimate.point
        inside = br.bracket[0] - 1e-4 <= v <= br.bracket[1] + 1e-4
        ok &= inside
        rows.append({"variational": v, "bracket": list(br.bracket), "gap": fw.gap, "inside": inside})
    worst = min(r["bracket"][1] - r["variational"] for r in rows)
    return CriterionResult(9, "variational consistency", ok, f"20/20 inside: {ok}; min(upper - 1/E) = {worst:.4f}", {"sets": rows}, limit=300)


@_timed
def criterion_10(threads=1):
    grid = [64, 128, 256, 512, 1024]
    seeds = list(range(20))
    r3 = pair_green_sum_check(lattice(3), grid, seeds, threads=threads)
    r5 = pair_green_sum_check(lattice(5), grid, seeds, threads=threads)
    s3, s5 = r3.fits["exponent"]["slope"], r5.fits["exponent"]["slope"]
    return CriterionResult(
        10, "pair Green sum growth", r3.passed and r5.passed,
        f"exponent d=3 {s3:.3f} in [1.35, 1.65]; d=5 {s5:.3f} in [0.9, 1.1]",
        {"d3": r3.payload(), "d5": r5.payload()}, limit=600,
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def clear_caches() -> None:
    """Drop every memoised table so a rerun starts cold."""
    _LATTICE_GREENS.clear()
    kernels._mixing_matrix.cache_clear()
    _cached_ball.cache_clear()


def criterion_11(first: dict, threads: int = 2) -> CriterionResult:
    """Recompute 1-10 with another thread count and compare serialised payloads."""
    t0 = time.perf_counter()
    clear_caches()
    mismatched = []
    for fn in CRITERIA:
        res = fn(threads)
        if dumps(res.payload) != dumps(first[res.number].payload):
            mismatched.append(res.number)
    ok = not mismatched
    res = CriterionResult(11, "determinism across thread counts", ok,
                          f"payloads byte-identical with threads=1 vs {threads}: {ok}" + (f" (differ: {mismatched})" if mismatched else ""),
                          {"mismatched": mismatched})
    res.runtime = time.perf_counter() - t0
    return res


def run_all(threads: int = 1, other_threads: int = 2) -> list:
    results = {}
    for fn in CRITERIA:
        res = fn(threads)
        results[res.number] = res
        print(res.line(), flush=True)
    last = criterion_11(results, other_threads)
    print(last.line(), flush=True)
    return list(results.values()) + [last]


if __name__ == "__main__":
    import sys

    out = run_all()
    sys.exit(0 if all(r.passed and r.within_time for r in out) else 1)
