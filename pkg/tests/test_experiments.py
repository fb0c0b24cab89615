import numpy as np
import pytest

from rangecap import ValidationError, make_group
from rangecap.experiments import (
    clt_experiment,
    dyadic_sandwich_experiment,
    exit_tail_check,
    exponent_fit,
    kernel_decay_check,
    pair_green_sum,
    pair_green_sum_check,
    pair_sum_expectation,
    slln_experiment,
)
from rangecap.io import dumps
from rangecap.kernels import return_probabilities
from rangecap.potential import green_source
from rangecap.walks import simulate

from conftest import lattice

Z2, Z3, Z5 = lattice(2), lattice(3), lattice(5)


def test_slln_report_structure_and_recurrent_zero():
    rep = slln_experiment(Z2, [16, 32], range(5))
    assert rep.passed and rep.fits["mu_hat"] == 0
    assert set(rep.checks) == {"mu_zero"}
    p = rep.payload()
    assert p["schema"] == 1 and p["seeds"] == [0, 1, 2, 3, 4] and "runtime" not in p
    assert rep.csv_rows()[0] == ("n", "seed", "statistic", "value")


def test_slln_validation():
    with pytest.raises(ValidationError):
        slln_experiment(Z3, [32, 16], range(5))
    with pytest.raises(ValidationError):
        slln_experiment(Z3, [16, 32], range(2))


def test_slln_thread_independence():
    a = slln_experiment(Z5, [32, 64], range(6), threads=1)
    b = slln_experiment(Z5, [32, 64], range(6), threads=3)
    assert dumps(a.payload()) == dumps(b.payload())


def test_exponent_fit_bracket_only_for_known_indices():
    rep = exponent_fit(Z3, [16, 32, 64, 128], range(4))
    assert "alpha_in_bracket" in rep.checks
    assert rep.fits["alpha"]["window"] == [64, 128]
    rec = exponent_fit(Z2, [16, 32], range(3))
    assert rec.fits["alpha"] is None


def test_clt_report_fields():
    rep = clt_experiment(Z5, 64, range(30))
    nm = rep.normality
    assert 0 <= nm["ks"] <= 1 and set(rep.checks) == {"ks", "skewness", "variance_ratio"}
    assert all(s["variance"] >= 0 for s in rep.series)
    with pytest.raises(ValidationError):
        clt_experiment(Z5, 1, range(30))


def test_kernel_decay_on_z3():
    rep = kernel_decay_check(Z3, [2, 4, 8, 16, 32])
    assert rep.passed and abs(rep.fits["slope"]["slope"] + 1.5) < 0.3
    assert not rep.diagnostics["superpolynomial"]


def test_kernel_decay_flags_free_product():
    rep = kernel_decay_check(make_group("free_product_z2", {"arity": 3}), [4, 8, 16, 32, 64])
    assert rep.passed and rep.diagnostics["superpolynomial"]


def test_exit_tail_monotone():
    rep = exit_tail_check(Z3, [4, 6, 8, 10], 60, 3000, seed=1)
    freqs = [s["frequency"] for s in rep.series]
    assert all(b <= a for a, b in zip(freqs, freqs[1:]))
    assert rep.passed
    # oracle: direct simulation of the same event on independent paths
    hits = np.mean([np.abs(simulate(Z3, 59, s, 5).coords).sum(axis=1).max() >= 6 for s in range(1500)])
    assert abs(hits - freqs[1]) < 0.05


def test_pair_green_sum_single_path_double_sum():
    path = simulate(Z3, 40, 3)
    src = green_source(Z3)
    direct = sum(src.value(tuple(np.subtract(b, a))) for a in path.positions for b in path.positions)
    assert pair_green_sum(path, [40], src)[0] == pytest.approx(direct, rel=1e-10)


def test_pair_sum_expectation_matches_monte_carlo():
    n = 64
    src = green_source(Z3)
    g0 = src.value((0, 0, 0))
    exact = pair_sum_expectation(return_probabilities(Z3, n), g0, n)
    sums = [pair_green_sum(simulate(Z3, n, s), [n], src)[0] for s in range(300)]
    se = np.std(sums, ddof=1) / np.sqrt(len(sums))
    assert abs(np.mean(sums) - exact) < 4 * se


def test_pair_green_sum_check_structure():
    rep = pair_green_sum_check(Z5, [32, 64, 128], range(4))
    assert "exponent_in_bracket" in rep.checks
    assert rep.fits["exponent"]["window"] == [64, 128]


def test_dyadic_sandwich_experiment_small():
    rep = dyadic_sandwich_experiment(Z5, 64, [1, 2], range(5))
    assert rep.passed
    assert [s["level"] for s in rep.series] == [1, 2]
    with pytest.raises(ValidationError):
        dyadic_sandwich_experiment(Z5, 4, [3], range(2))
