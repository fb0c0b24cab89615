"""Batch experiments on range capacities, kernels, exit times and pair sums.

All randomness is keyed by explicit seeds; every experiment simulates one path
per seed and evaluates all grid points on its prefixes.  Aggregation happens in
seed order after an ordered parallel map, so reports do not depend on the
number of worker threads.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..errors import ValidationError
from ..fitting import linear_fit
from ..groups import GroupPresentation
from ..kernels import return_probabilities
from ..parallel import pmap
from ..potential.capacity import EstimatorConfig, prefix_range_capacities
from ..potential.green import GreenSource, green_source
from ..potential.sandwich import dyadic_sandwich
from ..rng import stream
from ..walks import local_times, simulate, word_lengths
from .report import ExperimentReport
from .stats import fit_dict, normality, power_fit, summarize

DEFAULT_SUPERPOLY_THRESHOLD = 8.0


def _check_grid(grid) -> list:
    grid = [int(n) for n in grid]
    if not grid or any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("grid must be a strictly increasing list of positive integers")
    return grid


def _capacity_table(G, grid, seeds, config, threads):
    """``caps[i][j] = Cap(R_{grid[j]})`` along the path of ``seeds[i]``."""
    N = max(grid)

    def one(seed):
        path = simulate(G, N, seed, 0)
        return [c.point for c in prefix_range_capacities(path, grid, config)]

    return np.array(pmap(one, seeds, threads), dtype=float).reshape(len(seeds), len(grid))


def _bracket_key(idx):
    """3 for index 3, 5 for finite index >= 5, otherwise no bracket."""
    if idx == 3:
        return 3
    if 5 <= idx < math.inf:
        return 5
    return None


def _new_report(name, G, grid, seeds, config) -> ExperimentReport:
    est = config.to_dict() if isinstance(config, EstimatorConfig) else dict(config or {})
    if isinstance(config, EstimatorConfig):
        est["resolved_method"] = config.resolve(G)
    return ExperimentReport(name, G.to_spec(), list(grid), [int(s) for s in seeds], est)


# -- law of large numbers and exponents -----------------------------------------


def slln_experiment(
    G: GroupPresentation,
    grid,
    seeds,
    config: EstimatorConfig = EstimatorConfig(),
    threads: int = 1,
) -> ExperimentReport:
    """``C_n / n`` along the grid; the checks follow the growth regime of ``G``.

    * growth index ``> 4``: positive limit, relative change over the top octave
      below 15 %;
    * transient with index ``<= 4``: strictly decreasing across grid points;
    * recurrent: estimate at the largest ``n`` below ``1e-3``.
    """
    grid = _check_grid(grid)
    seeds = list(seeds)
    if len(seeds) < 5:
        raise ValidationError("slln needs at least 5 seeds")
    t0 = time.perf_counter()
    rep = _new_report("slln", G, grid, seeds, config)
    caps = _capacity_table(G, grid, seeds, config, threads)
    ratio = caps / np.asarray(grid, dtype=float)
    means = []
    for j, n in enumerate(grid):
        s = summarize(ratio[:, j])
        means.append(s["mean"])
        rep.series.append({"n": n, "statistic": "C_n/n", **s})
        for i, seed in enumerate(seeds):
            rep.add_row(n, seed, "C_n", float(caps[i, j]))
            rep.add_row(n, seed, "C_n/n", float(ratio[i, j]))
    mu = means[-1]
    rep.fits["mu_hat"] = mu
    idx = G.growth_index
    rep.diagnostics["growth_index"] = "inf" if math.isinf(idx) else idx
    if len(grid) >= 2:
        top = abs(means[-1] - means[-2]) / abs(means[-2]) if means[-2] else math.inf
        rep.diagnostics["top_octave_relative_change"] = top
    if idx > 4:
        rep.add_check("mu_positive", mu, "> 0", mu > 0)
        rep.add_check("top_octave_flat", rep.diagnostics["top_octave_relative_change"], "< 0.15", rep.diagnostics["top_octave_relative_change"] < 0.15)
    elif idx > 2:
        dec = all(b < a for a, b in zip(means, means[1:]))
        rep.add_check("strictly_decreasing", [float(m) for m in means], "C_n/n strictly decreasing in n", dec)
    else:
        rep.add_check("mu_zero", mu, "< 1e-3", mu < 1e-3)
    rep.runtime = time.perf_counter() - t0
    return rep


EXPONENT_BRACKETS = {3: (0.40, 0.60), 5: (0.90, 1.05)}


def exponent_fit(
    G: GroupPresentation,
    grid,
    seeds,
    config: EstimatorConfig = EstimatorConfig(),
    threads: int = 1,
) -> ExperimentReport:
    """Slope of ``log E[C_n]`` against ``log n`` over the upper half of the grid."""
    grid = _check_grid(grid)
    seeds = list(seeds)
    t0 = time.perf_counter()
    rep = _new_report("fit", G, grid, seeds, config)
    caps = _capacity_table(G, grid, seeds, config, threads)
    means = caps.mean(axis=0)
    for j, n in enumerate(grid):
        rep.series.append({"n": n, "statistic": "C_n", **summarize(caps[:, j])})
        for i, seed in enumerate(seeds):
            rep.add_row(n, seed, "C_n", float(caps[i, j]))
    if np.all(means > 0):
        fit, window = power_fit(grid, means.tolist())
        rep.fits["alpha"] = fit_dict(fit, window)
        idx = G.growth_index
        if idx == 4:
            probe = [float(m * math.log(n) / n) for m, n in zip(means, grid)]
            rep.diagnostics["mean_C_log_n_over_n"] = probe
        key = _bracket_key(idx)
        if key is not None:
            lo, hi = EXPONENT_BRACKETS[key]
            rep.add_check("alpha_in_bracket", fit.slope, f"in [{lo}, {hi}]", lo <= fit.slope <= hi)
    else:
        rep.fits["alpha"] = None
        rep.diagnostics["note"] = "capacity identically zero; no exponent"
    rep.runtime = time.perf_counter() - t0
    return rep


# -- central limit theorem -------------------------------------------------------


def clt_experiment(
    G: GroupPresentation,
    n: int,
    seeds,
    config: EstimatorConfig = EstimatorConfig(),
    threads: int = 1,
    ks_max: float = 0.10,
    skew_max: float = 0.5,
    var_tol: float = 0.25,
) -> ExperimentReport:
    """Normality of ``C_n`` across replications and ``Var(C_m)/m`` at ``m = n/2, n``.

    The variance comparison uses the prefix of length ``n/2`` of the same
    paths; it passes when the ratio of the two normalised variances lies within
    ``var_tol`` of 1.
    """
    seeds = list(seeds)
    if n < 2:
        raise ValidationError("n must be >= 2")
    if len(seeds) < 2:
        raise ValidationError("need at least two replications")
    half = n // 2
    grid = [half, n]
    t0 = time.perf_counter()
    rep = _new_report("clt", G, grid, seeds, config)
    caps = _capacity_table(G, grid, seeds, config, threads)
    for j, m in enumerate(grid):
        s = summarize(caps[:, j])
        rep.series.append({"n": m, "statistic": "C_n", **s, "variance_over_n": s["variance"] / m})
        for i, seed in enumerate(seeds):
            rep.add_row(m, seed, "C_n", float(caps[i, j]))
    rep.normality = normality(caps[:, 1])
    v_half = rep.series[0]["variance_over_n"]
    v_full = rep.series[1]["variance_over_n"]
    ratio = v_full / v_half if v_half > 0 else math.inf
    rep.fits["variance_ratio"] = ratio
    rep.add_check("ks", rep.normality["ks"], f"< {ks_max}", rep.normality["ks"] < ks_max)
    rep.add_check("skewness", rep.normality["skewness"], f"|.| < {skew_max}", abs(rep.normality["skewness"]) < skew_max)
    rep.add_check("variance_ratio", ratio, f"|ratio - 1| < {var_tol}", abs(ratio - 1) < var_tol)
    rep.runtime = time.perf_counter() - t0
    return rep


# -- heat kernel decay -----------------------------------------------------------


def kernel_decay_check(
    G: GroupPresentation,
    grid,
    tolerance: float = 0.3,
    threshold: float = DEFAULT_SUPERPOLY_THRESHOLD,
) -> ExperimentReport:
    """Fit ``log p_{2n}(e)`` against ``log n``; compare the slope with ``-d/2``.

    The superpolynomial flag is raised when the fitted decay exponent exceeds
    ``threshold`` or, over the fit window, ``log p`` is better fitted as linear
    in ``n`` than in ``log n`` while the local log-log slopes keep steepening.
    """
    grid = _check_grid(grid)
    t0 = time.perf_counter()
    rep = _new_report("decay", G, grid, [], {})
    p = return_probabilities(G, 2 * max(grid))
    vals = [float(p[2 * n]) for n in grid]
    for n, v in zip(grid, vals):
        rep.series.append({"n": n, "statistic": "p_2n(e)", "value": v})
        rep.add_row(n, "", "p_2n(e)", v)
    fit, window = power_fit(grid, vals)
    wv = [vals[grid.index(n)] for n in window]
    semilog = linear_fit(window, np.log(wv))
    local = np.diff(np.log(vals)) / np.diff(np.log(grid))
    steepening = bool(np.all(np.diff(local) < 0)) if len(local) > 1 else False
    superpoly = (-2 * fit.slope > threshold) or (semilog.rss < fit.rss and steepening)
    rep.fits["slope"] = fit_dict(fit, window)
    rep.fits["semilog_rss"] = semilog.rss
    rep.diagnostics["local_slopes"] = local.tolist()
    rep.diagnostics["superpolynomial"] = superpoly
    d = G.growth_index
    if math.isinf(d):
        rep.add_check("superpolynomial", superpoly, "flag raised", superpoly)
    else:
        target = -d / 2
        rep.add_check("slope", fit.slope, f"within {tolerance} of {target}", abs(fit.slope - target) <= tolerance)
    rep.runtime = time.perf_counter() - t0
    return rep


# -- exit-time tails -------------------------------------------------------------


def _max_lengths(G, n, trials, r_max, rng):
    """``max_{k < n} rho(S_k)`` clipped at ``r_max``, for each trial."""
    out = np.zeros(trials, dtype=np.int64)
    if n <= 1:
        return out
    block = max(1, 2_000_000 // max(n, 1))
    standard_lattice = G.backend == "lattice" and G.standard
    for s in range(0, trials, block):
        T = min(block, trials - s)
        steps = rng.integers(0, G.size, size=(T, n - 1))
        if G.vector:
            pos = G.advance(np.zeros((T, G.width), dtype=np.int64), steps)
            if standard_lattice:
                lengths = np.abs(pos).sum(axis=-1)
            else:
                flat = [tuple(row) for row in pos.reshape(-1, G.width).tolist()]
                lengths = word_lengths(G, flat, r_max).reshape(T, n - 1)
        else:
            rows = [G.walk_positions(st)[1:] for st in steps]
            lengths = np.array([word_lengths(G, r, r_max) for r in rows])
        out[s : s + T] = np.minimum(lengths.max(axis=1), r_max)
    return out


def exit_tail_check(
    G: GroupPresentation,
    r_grid,
    n: int,
    trials: int,
    seed: int = 0,
) -> ExperimentReport:
    """Empirical ``P(tau_r < n)`` against ``r^2 / n`` with a log-linear fit."""
    r_grid = _check_grid(r_grid)
    t0 = time.perf_counter()
    rep = _new_report("exit-tail", G, r_grid, [seed], {"n": n, "trials": trials})
    rng = stream(seed, 0, 21)
    maxlen = _max_lengths(G, n, trials, max(r_grid), rng)
    freqs = []
    for r in r_grid:
        f = float(np.mean(maxlen >= r))
        freqs.append(f)
        se = math.sqrt(f * (1 - f) / trials)
        rep.series.append({"r": r, "x": r * r / n, "frequency": f, "stderr": se})
        rep.add_row(r, seed, "P(tau_r<n)", f)
    x = np.array([r * r / n for r in r_grid])
    ok = np.asarray(freqs) > 0
    decreasing = all(b <= a for a, b in zip(freqs, freqs[1:]))
    rep.add_check("decreasing_in_r", freqs, "non-increasing", decreasing)
    if ok.sum() >= 2:
        fit = linear_fit(x[ok], np.log(np.asarray(freqs)[ok]))
        rep.fits["log_frequency_vs_r2_over_n"] = {"slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept}
        rep.add_check("negative_slope", fit.slope, "< 0", fit.slope < 0)
        if ok.sum() >= 3:
            lf = np.log(np.asarray(freqs)[ok])
            sl = np.diff(lf) / np.diff(x[ok])
            rep.diagnostics["segment_slopes"] = sl.tolist()
    rep.runtime = time.perf_counter() - t0
    return rep


# -- pair Green sums ---------------------------------------------------------------


PAIR_SUM_BRACKETS = {3: (1.35, 1.65), 5: (0.9, 1.1)}


def pair_green_sum(path, grid, source: GreenSource) -> list:
    """``sum_{k, l <= n} G(S_k^{-1} S_l)`` for each ``n`` in ``grid`` (one path).

    With local times ``c`` on the range, the double sum is ``c^T G_R c``; ranges
    of prefixes are leading blocks of the full range in first-visit order.
    """
    N = max(grid)
    elems, _ = local_times(path, 0, N)
    M = source.matrix(elems)
    index = {g: i for i, g in enumerate(elems)}
    ids = np.array([index[g] for g in path.positions[: N + 1]])
    out = []
    for n in grid:
        c = np.bincount(ids[: n + 1], minlength=len(elems)).astype(float)
        k = int(np.count_nonzero(c))
        c = c[:k]
        out.append(float(c @ M[:k, :k] @ c))
    return out


def pair_sum_expectation(return_probs: np.ndarray, green_e: float, n: int) -> float:
    """Exact ``E[sum_{k,l=0}^n G(S_k, S_l)] = (n+1) G(e) + 2 sum_j (n+1-j) sum_{m>=j} p_m(e)``."""
    p = np.asarray(return_probs, dtype=float)
    tails = green_e - np.concatenate([[0.0], np.cumsum(p)])[: n + 1]  # tails[j] = sum_{m>=j} p_m
    j = np.arange(1, n + 1)
    return float((n + 1) * green_e + 2 * np.sum((n + 1 - j) * tails[1:]))


def pair_green_sum_check(
    G: GroupPresentation,
    grid,
    seeds,
    source: GreenSource | None = None,
    threads: int = 1,
) -> ExperimentReport:
    """Monte Carlo ``E[sum_{k,l<=n} G(S_k, S_l)]`` and its growth exponent."""
    grid = _check_grid(grid)
    seeds = list(seeds)
    t0 = time.perf_counter()
    source = source or green_source(G)
    rep = _new_report("pair-sum", G, grid, seeds, source.describe())
    N = max(grid)
    sums = np.array(pmap(lambda s: pair_green_sum(simulate(G, N, s, 0), grid, source), seeds, threads))
    sums = sums.reshape(len(seeds), len(grid))
    means = sums.mean(axis=0)
    for j, n in enumerate(grid):
        rep.series.append({"n": n, "statistic": "pair_sum", **summarize(sums[:, j])})
        for i, seed in enumerate(seeds):
            rep.add_row(n, seed, "pair_sum", float(sums[i, j]))
    fit, window = power_fit(grid, means.tolist())
    rep.fits["exponent"] = fit_dict(fit, window)
    key = _bracket_key(G.growth_index)
    if key is not None:
        lo, hi = PAIR_SUM_BRACKETS[key]
        rep.add_check("exponent_in_bracket", fit.slope, f"in [{lo}, {hi}]", lo <= fit.slope <= hi)
    rep.runtime = time.perf_counter() - t0
    return rep


# -- dyadic sandwich ---------------------------------------------------------------


def dyadic_sandwich_experiment(
    G: GroupPresentation,
    n: int,
    levels,
    seeds,
    config: EstimatorConfig = EstimatorConfig(),
    threads: int = 1,
    nsigma: float = 3.0,
) -> ExperimentReport:
    """Per sample, ``C_n`` against the level-``L`` segment sum and cross-Green errors."""
    levels = [int(L) for L in levels]
    seeds = list(seeds)
    if max(levels) < 0 or 2 ** max(levels) > n:
        raise ValidationError("2^max(L) must not exceed n")
    t0 = time.perf_counter()
    rep = _new_report("sandwich", G, levels, seeds, config)
    source = green_source(G, config.green_method, config.green_horizon)

    def one(seed):
        path = simulate(G, n, seed, 0)
        full = prefix_range_capacities(path, [n], config)[0]
        reps = [dyadic_sandwich(path, L, config, source, seed, nsigma, full=full) for L in levels]
        return full, reps

    results = pmap(one, seeds, threads)
    violations = {L: 0 for L in levels}
    monotone_failures = 0
    lower_margins = {L: [] for L in levels}
    upper_margins = {L: [] for L in levels}
    for seed, (full, reps) in zip(seeds, results):
        sums = [full.point] + [r.segment_sum for r in reps]
        order = [0] + levels
        by_level = dict(zip(order, sums))
        chain = [by_level[L] for L in sorted(set(order))]
        if any(b < a - 1e-9 * max(1.0, abs(a)) for a, b in zip(chain, chain[1:])):
            monotone_failures += 1
        for r in reps:
            violations[r.level] += int(not r.upper_ok)
            lower_margins[r.level].append(r.lower_margin)
            upper_margins[r.level].append(r.upper_margin)
            rep.add_row(r.level, seed, "upper_margin", r.upper_margin)
            rep.add_row(r.level, seed, "lower_margin", r.lower_margin)
            rep.add_row(r.level, seed, "error_sum", r.error_sum)
        rep.add_row(0, seed, "C_n", full.point)
    for L in levels:
        rep.series.append(
            {
                "level": L,
                "violations": violations[L],
                "upper_margin": summarize(upper_margins[L]),
                "lower_margin": summarize(lower_margins[L]),
                "min_lower_margin": float(min(lower_margins[L])),
            }
        )
    total = sum(violations.values())
    rep.add_check("upper_violations", total, f"0 beyond {nsigma} sigma", total == 0)
    rep.add_check("segment_sum_monotone", monotone_failures, "segment sums non-decreasing in L", monotone_failures == 0)
    rep.runtime = time.perf_counter() - t0
    return rep


__all__ = [
    "slln_experiment",
    "exponent_fit",
    "clt_experiment",
    "kernel_decay_check",
    "exit_tail_check",
    "pair_green_sum",
    "pair_sum_expectation",
    "pair_green_sum_check",
    "dyadic_sandwich_experiment",
]
