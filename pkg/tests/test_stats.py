import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sst

from rangecap.experiments.stats import (
    RunningMoments,
    ks_normal,
    normality,
    power_fit,
    standardize,
    summarize,
    two_pass_moments,
)
from rangecap.fitting import linear_fit, log_log_fit, upper_half
from rangecap.rng import stream, stream_key

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(st.lists(finite, min_size=3, max_size=200))
def test_one_pass_matches_two_pass(xs):
    acc = RunningMoments().extend(xs)
    ref = two_pass_moments(xs)
    scale = max(1.0, max(abs(x) for x in xs))
    assert acc.mean == pytest.approx(ref["mean"], abs=1e-9 * scale)
    assert acc.variance == pytest.approx(ref["variance"], rel=1e-9, abs=1e-9 * scale**2)
    if ref["variance"] > 1e-6 * scale**2:
        assert acc.skewness == pytest.approx(ref["skewness"], rel=1e-6, abs=1e-9)
        assert acc.excess_kurtosis == pytest.approx(ref["excess_kurtosis"], rel=1e-6, abs=1e-9)


def test_moments_against_scipy():
    x = stream(1).gamma(2.0, size=5000)
    acc = RunningMoments().extend(x)
    assert acc.variance == pytest.approx(np.var(x, ddof=1), rel=1e-12)
    assert acc.skewness == pytest.approx(sst.skew(x), rel=1e-9)
    assert acc.excess_kurtosis == pytest.approx(sst.kurtosis(x), rel=1e-9)


def test_ks_manual_computation():
    x = stream(2).normal(size=400)
    z = np.sort(standardize(x))
    cdf = sst.norm.cdf(z)
    n = len(z)
    d = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
    assert ks_normal(x) == pytest.approx(d, abs=1e-12)
    assert 0 <= d <= 1


def test_normality_flags_skewed_data():
    good = normality(stream(3).normal(size=2000))
    bad = normality(stream(3).exponential(size=2000))
    assert good["ks"] < 0.05 and bad["ks"] > 0.05
    assert abs(good["skewness"]) < 0.2 and bad["skewness"] > 1


def test_summarize_fields():
    s = summarize([1.0, 2.0, 3.0, 4.0])
    assert s["count"] == 4 and s["mean"] == 2.5 and s["variance"] == pytest.approx(5 / 3)
    assert s["variance"] >= 0


def test_linear_fit_recovers_line():
    x = np.arange(10.0)
    f = linear_fit(x, 3 * x - 1)
    assert f.slope == pytest.approx(3) and f.intercept == pytest.approx(-1) and f.rss < 1e-20
    g = log_log_fit([1, 2, 4, 8], [5, 10, 20, 40])
    assert g.slope == pytest.approx(1.0)


def test_power_fit_uses_upper_half():
    grid = [2, 4, 8, 16, 32, 64]
    vals = [1, 1, 1, 16**0.5, 32**0.5, 64**0.5]
    fit, window = power_fit(grid, vals)
    assert window == [16, 32, 64]
    assert fit.slope == pytest.approx(0.5)
    assert upper_half([5, 1, 3, 2]) == [3, 5]


def test_rng_streams_independent_and_reproducible():
    assert stream_key(1, 2) == stream_key(1, 2)
    assert stream_key(1, 2) != stream_key(2, 1)
    a = stream(7, 0, 3).integers(0, 2**32, 8)
    b = stream(7, 0, 3).integers(0, 2**32, 8)
    c = stream(7, 1, 3).integers(0, 2**32, 8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_standardize():
    z = standardize([1.0, 2.0, 3.0])
    assert z.mean() == pytest.approx(0) and np.std(z, ddof=1) == pytest.approx(1)
    assert math.isfinite(z.sum())
