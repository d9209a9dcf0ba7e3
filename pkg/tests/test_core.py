import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from approx_count import (Budget, CountingOracle, Dataset, SkybandQuery, exact_count,
                          stratified_variance, wald_interval, wilson_interval)
from approx_count.core import normal_quantile, z_value
from approx_count.predicates import LabelQuery


def test_dataset_rejects_duplicates_and_empty():
    with pytest.raises(ValueError, match="duplicate id 3"):
        Dataset([3, 3], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        Dataset([], np.zeros((0, 2)))


def test_dataset_is_immutable():
    ds = Dataset.from_coords([(0.0, 1.0), (2.0, 3.0)])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0
    assert ds.point(1).id == 1 and ds.point(1).y == 3.0


@pytest.mark.parametrize("value, expect", [(False, 0), (True, 5)])
def test_exact_count_constant_labels(value, expect):
    ds = Dataset.from_coords(np.zeros((5, 2)) + np.arange(5)[:, None])
    oracle = CountingOracle(LabelQuery(ds, [value] * 5))
    assert exact_count(oracle, ds) == expect
    assert oracle.calls == 5


def test_exact_count_skyband_diagonal(diag3):
    assert exact_count(CountingOracle(SkybandQuery(diag3, 1)), diag3) == 1


@given(st.lists(st.booleans(), min_size=1, max_size=40), st.integers(1, 39))
def test_exact_count_additive_over_partition(labels, cut):
    ds = Dataset.from_coords([(float(i), 0.0) for i in range(len(labels))])
    q = LabelQuery(ds, labels)
    cut = min(cut, len(labels))
    o = CountingOracle(q)
    parts = o.evaluate(np.arange(cut)).sum() + o.evaluate(np.arange(cut, len(labels))).sum()
    assert parts == exact_count(CountingOracle(q), ds)


def test_normal_quantile_matches_reference():
    # reference values from scipy.stats.norm.ppf
    ref = {0.001: -3.09023231, 0.01: -2.32634787, 0.3: -0.52440051, 0.9: 1.28155157,
           0.999999: 4.75342431}
    for p, v in ref.items():
        assert normal_quantile(p) == pytest.approx(v, abs=1e-8)
    assert z_value(0.05) == pytest.approx(1.959963984540054, abs=1e-12)


def test_wald_examples():
    assert wald_interval(0.0, 50, 1000) == (0.0, 0.0)
    assert wald_interval(0.5, 100, 100) == (0.5, 0.5)
    lo, hi = wald_interval(0.5, 100, 10000)
    assert lo == pytest.approx(0.40249, abs=1e-4) and hi == pytest.approx(0.59751, abs=1e-4)
    assert lo == pytest.approx(0.4024881471955245, abs=1e-12)


def test_wilson_examples():
    assert wilson_interval(0.5, 100, 100) == (0.5, 0.5)
    assert wilson_interval(0.0, 10, 10**6)[1] > 0
    # statsmodels proportion_confint(method="wilson") at effective size n / fpc
    lo, hi = wilson_interval(0.3, 100, 10**6)
    assert lo == pytest.approx(0.218952393492099, abs=1e-9)
    assert hi == pytest.approx(0.39584359503493766, abs=1e-9)


@given(st.floats(0, 1), st.integers(1, 500), st.integers(0, 500))
def test_wald_width_non_increasing_in_n(p, n, extra):
    N = 1000
    n2 = min(N, n + extra)
    w1 = np.subtract(*wald_interval(p, n, N)[::-1])
    w2 = np.subtract(*wald_interval(p, n2, N)[::-1])
    assert w2 <= w1 + 1e-12


def test_stratified_variance_examples():
    assert stratified_variance([0.5, 0.5], [0, 0], [3, 3], 100) == 0.0
    assert stratified_variance([1.0], [0.5], [10], 100) == pytest.approx(0.0225, abs=1e-15)
    assert stratified_variance([0.5, 0.5], [0, 0.5], [5, 5], 100) == pytest.approx(0.01125, abs=1e-15)
    with pytest.raises(ValueError, match="empty allocation"):
        stratified_variance([0.5, 0.5], [0.1, 0.1], [0, 4], 100)


@given(st.integers(2, 2000), st.data())
def test_stratified_variance_single_stratum_is_srs(N, data):
    n = data.draw(st.integers(1, N))
    c = data.draw(st.integers(0, N))
    p = c / N
    S2 = N * p * (1 - p) / (N - 1)  # finite-population Bernoulli variance
    v = stratified_variance([1.0], [math.sqrt(S2)], [n], N)
    assert v == pytest.approx(p * (1 - p) / n * (N - n) / (N - 1), abs=1e-9)


def test_budget_split():
    assert Budget(100, 0.25, 0.1875).split() == (25, 19, 56)
    assert sum(Budget(37, 0.3, 0.3).split()) == 37
    with pytest.raises(ValueError):
        Budget(10, 0.6, 0.5)
