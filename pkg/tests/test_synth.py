import numpy as np
import pytest

from approx_count import (CountingOracle, NoiseSpec, NoiseTable, NoisySkybandQuery,
                          exact_count, generate_points)
from approx_count.predicates import dominance_counts, neighbor_counts
from approx_count.rng import Stream
from approx_count.scorers import f1_score, train_knn
from approx_count.synth import (gaussian_noise_table, make_noise_table, separable_threshold,
                                zipf_noise_table, zipf_pmf)


@pytest.mark.parametrize("kind", ["uniform2d", "clustered2d", "separable2d"])
def test_generators_are_deterministic(kind):
    a, b = generate_points(kind, 500, 4), generate_points(kind, 500, 4)
    assert np.array_equal(a.features, b.features) and a.ids.tolist() == list(range(500))
    assert not np.array_equal(a.features, generate_points(kind, 500, 5).features)


def test_uniform_in_unit_square():
    xy = generate_points("uniform2d", 5000, 1).features
    assert xy.min() >= 0 and xy.max() < 1


def test_separable_margin_and_fraction():
    ds = generate_points("separable2d", 20000, 2, positive_fraction=0.3, margin=0.01)
    gap = np.abs(ds.features.sum(axis=1) - separable_threshold(0.3)) / np.sqrt(2)
    assert gap.min() >= 0.01
    assert abs(np.mean(ds.features.sum(axis=1) > separable_threshold(0.3)) - 0.3) < 0.015
    with pytest.raises(ValueError):
        separable_threshold(1.0)


def test_clustered_neighbors_learnable_from_two_percent():
    # N = 2000 is the size at which k=15, d=0.2 marks the sparse blob (p about 0.3)
    ds = generate_points("clustered2d", 2000, 1)
    truth = neighbor_counts(ds, 0.2) <= 15
    for seed in range(3):
        idx = Stream(seed).sample(2000, 40)
        held = np.setdiff1d(np.arange(2000), idx)
        model = train_knn((idx, truth[idx]), ds, 3)
        assert f1_score(model.predict_indices(ds, held), truth[held]) >= 0.9


def test_gaussian_noise_examples():
    ids = np.arange(10)
    assert gaussian_noise_table((ids, ids * 3), seed=1, scale=0.0).values.tolist() == (ids * 3).tolist()
    t = gaussian_noise_table((ids, np.zeros(10, dtype=int)), seed=1, scale=10.0)
    assert t.values.min() == 0  # negative draws are truncated


def test_gaussian_noise_half_normal_mean():
    ids = np.arange(100_000)
    c = np.full(ids.size, 1000)
    dev = np.abs(gaussian_noise_table((ids, c), seed=3).values - c)
    # E|round(Z)| differs from E|Z| by well under the tolerance
    assert abs(dev.mean() - np.sqrt(2 / np.pi)) < 0.05


def test_gaussian_noise_independent_of_listing_order():
    ids = np.arange(50)
    c = np.arange(50) % 7
    a = gaussian_noise_table(dict(zip(ids.tolist(), c.tolist())), seed=9)
    b = gaussian_noise_table((ids[::-1], c[::-1]), seed=9)
    assert a.values.tolist() == b.values.tolist()


def test_zipf_examples():
    ids = np.arange(20000)
    counts = ids % 5
    t = zipf_noise_table((ids, counts), s=20, seed=2)
    assert np.max(np.bincount(t.values)) / ids.size >= 0.99
    assert np.allclose(zipf_pmf(3, 1.0), [6 / 11, 3 / 11, 2 / 11])
    t = zipf_noise_table((ids, ids % 3), s=1, seed=2)
    freq = np.sort(np.bincount(t.values, minlength=3))[::-1] / ids.size
    assert np.allclose(freq, [6 / 11, 3 / 11, 2 / 11], atol=0.01)
    one = zipf_noise_table((ids[:30], np.full(30, 4)), s=1.5, seed=2)
    assert set(one.values.tolist()) == {4}
    with pytest.raises(ValueError):
        zipf_noise_table((ids, counts), s=0, seed=2)


def test_noise_spec_parse_round_trip():
    for text in ("gaussian", "gaussian:2.5", "gaussian:rel:1", "zipf:1.5"):
        assert NoiseSpec.parse(text).text() == text
    with pytest.raises(ValueError):
        NoiseSpec.parse("cauchy")
    ids = np.arange(40)
    spec = NoiseSpec("gaussian", seed=4, scale=1.0, relative=True)
    c = ids % 9
    assert make_noise_table(spec, ids, c).values.tolist() == \
        gaussian_noise_table((ids, c), 4, float(c.std())).values.tolist()


def test_mixing_monotone_when_noise_dominates():
    ds = generate_points("uniform2d", 400, 6)
    c = dominance_counts(ds)
    noise = NoiseTable(ds.ids, c + np.random.default_rng(1).integers(0, 50, size=400))
    sizes = [exact_count(CountingOracle(NoisySkybandQuery(ds, 40, a, noise)), ds)
             for a in np.linspace(0, 1, 11)]
    assert all(x >= y for x, y in zip(sizes, sizes[1:])) and sizes[0] > sizes[-1]
