import io

import numpy as np
import pytest

from conftest import logistic_from
from pskip.problems import (
    Dataset,
    LibsvmParseError,
    heterogeneity_at,
    load_ijcnn1,
    make_logistic,
    make_quadratic,
    parse_libsvm,
    partition,
    serialize_libsvm,
    shard_manifest,
    smoothness_constant,
    synthetic_blobs,
)
from pskip.reference import solve_quadratic


class TestQuadratic:
    def test_hand_computed_xstar(self):
        p = make_quadratic(2, 1, 1.0, 0.0, seed=0)
        p.b = np.array([[1.0], [1.0]])
        # (0.5*1 + 1*1) / (0.25 + 1)
        assert p.xstar()[0] == pytest.approx(1.2, abs=1e-15)

    def test_zero_heterogeneity(self):
        p = make_quadratic(5, 3, 0.0, 0.0, seed=1)
        assert np.all(p.b == 0.0)
        assert np.all(p.xstar() == 0.0)
        for i in range(5):
            assert np.all(p.grad_i(i, np.zeros(3)) == 0.0)

    def test_constants(self):
        p = make_quadratic(10, 4, 1.0, 0.0, seed=2)
        assert p.L == 1.0
        assert p.mu == pytest.approx(0.01, abs=1e-15)

    def test_gradient_at_xstar(self):
        p = make_quadratic(8, 5, 3.0, 0.0, seed=3)
        assert np.linalg.norm(p.full_grad(p.xstar())) <= 1e-12

    def test_b_seed_deterministic(self):
        a = make_quadratic(6, 4, 2.0, 0.0, seed=9)
        b = make_quadratic(6, 4, 2.0, 0.0, seed=9)
        assert np.array_equal(a.b, b.b)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            make_quadratic(0, 3, 1.0, 0.0, seed=0)
        with pytest.raises(ValueError):
            make_quadratic(3, 3, -1.0, 0.0, seed=0)


class TestStochasticGradient:
    def test_zero_noise_is_exact(self):
        p = make_quadratic(4, 3, 1.0, 0.0, seed=0)
        rng = np.random.default_rng(0)
        x = rng.normal(size=3)
        assert np.array_equal(p.stochastic_grad_i(2, x, rng), p.grad_i(2, x))

    def test_noise_variance(self):
        p = make_quadratic(2, 22, 0.0, 1.0, seed=0)
        rng = np.random.default_rng(42)
        x = np.zeros(22)
        draws = np.array([p.stochastic_grad_i(0, x, rng)
                          for _ in range(100_000)])
        var = draws.var(axis=0)
        assert np.all(var > 0.98) and np.all(var < 1.02)

    def test_unbiasedness(self):
        p = make_quadratic(3, 6, 1.0, 1.0, seed=5)
        rng = np.random.default_rng(7)
        x = rng.normal(size=6)
        g = p.grad_i(1, x)
        draws = np.array([p.stochastic_grad_i(1, x, rng)
                          for _ in range(10_000)])
        se = 1.0 / np.sqrt(10_000)
        assert np.all(np.abs(draws.mean(axis=0) - g) < 5 * se)

    def test_effective_variance_reported(self):
        p = make_quadratic(2, 22, 0.0, 0.5, seed=0)
        assert p.sigma2_effective == pytest.approx(11.0)


class TestParseLibsvm:
    def test_basic_line(self):
        ds = parse_libsvm("1 1:0.5 3:-2\n")
        assert ds.labels[0] == 1
        idx, val = ds.rows[0]
        assert list(idx) == [0, 2]
        assert list(val) == [0.5, -2.0]
        assert ds.d == 3

    def test_dimension_from_max_index(self):
        ds = parse_libsvm("-1 2:1\n1 5:1\n")
        assert ds.d == 5

    def test_zero_label_maps_to_minus_one(self):
        ds = parse_libsvm("0 1:1\n")
        assert ds.labels[0] == -1

    def test_malformed_value(self):
        with pytest.raises(LibsvmParseError) as err:
            parse_libsvm("1 1:x\n")
        assert err.value.lineno == 1

    def test_duplicate_index(self):
        with pytest.raises(LibsvmParseError) as err:
            parse_libsvm("1 1:1\n-1 2:1 2:3\n")
        assert err.value.lineno == 2

    def test_bad_label(self):
        with pytest.raises(LibsvmParseError):
            parse_libsvm("2 1:1\n")

    def test_roundtrip_exact(self):
        ds = synthetic_blobs(80, 7, seed=3)
        back = parse_libsvm(serialize_libsvm(ds))
        assert back.d == ds.d
        assert np.array_equal(back.labels, ds.labels)
        for (i1, v1), (i2, v2) in zip(ds.rows, back.rows):
            assert np.array_equal(i1, i2)
            assert np.array_equal(v1, v2)

    def test_fixture_parses(self, fixture_dataset):
        assert len(fixture_dataset) == 2000
        assert fixture_dataset.d == 22
        assert set(np.unique(fixture_dataset.labels)) == {-1, 1}

    def test_ijcnn1_loader_validates_dimension(self, tmp_path):
        path = tmp_path / "tiny.libsvm"
        path.write_text("1 1:0.5\n")
        with pytest.raises(ValueError):
            load_ijcnn1(str(path))


class TestPartition:
    def test_even_split_49950(self):
        empty = (np.zeros(0, dtype=np.int64), np.zeros(0))
        ds = Dataset(rows=[empty] * 49950,
                     labels=np.ones(49950, dtype=np.int64), d=1)
        shards = partition(ds, 10, seed=0)
        assert all(len(s) == 4995 for s in shards)

    def test_sizes_differ_by_at_most_one(self):
        ds = synthetic_blobs(103, 4, seed=0)
        sizes = [len(s) for s in partition(ds, 7, seed=1)]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == 103

    def test_single_shard_is_whole_dataset(self):
        ds = synthetic_blobs(30, 4, seed=0)
        (shard,) = partition(ds, 1, seed=5)
        assert sorted(shard) == list(range(30))

    def test_determinism(self):
        ds = synthetic_blobs(50, 4, seed=0)
        a = partition(ds, 5, seed=9)
        b = partition(ds, 5, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_manifest_json(self):
        import json

        ds = synthetic_blobs(10, 2, seed=0)
        manifest = json.loads(shard_manifest(partition(ds, 3, seed=0)))
        assert sorted(int(i) for ix in manifest.values() for i in ix) \
            == list(range(10))


class TestLogistic:
    def test_value_at_zero_is_log2(self, fixture_dataset):
        p = logistic_from(fixture_dataset, 4, ("l2", 1.0), 0.0)
        for i in range(4):
            assert p.value_i(i, np.zeros(p.d)) == pytest.approx(np.log(2),
                                                                abs=1e-12)

    def test_grad_at_zero_sigmoid_half(self, fixture_dataset):
        p = logistic_from(fixture_dataset, 3, ("l2", 1.0), 0.0)
        for i in range(3):
            A, y = p.features[i], p.labels[i]
            expected = -(A.T @ y) / (2 * len(y))
            assert np.allclose(p.grad_i(i, np.zeros(p.d)), expected,
                               atol=1e-14)

    def test_nonconvex_regularizer_at_one(self):
        A = np.zeros((1, 3))
        y = np.array([1.0])
        p = make_logistic([(A, y)], ("nonconvex",), 0.0)
        x = np.ones(3)
        # data part is ln 2 (zero margins); r adds 1/2 per coordinate
        assert p.value_i(0, x) == pytest.approx(np.log(2) + 1.5, abs=1e-12)
        assert np.allclose(p._reg_grad(x), 0.5, atol=1e-15)

    def test_empty_shard_rejected(self):
        with pytest.raises(ValueError):
            make_logistic([(np.zeros((0, 2)), np.zeros(0))], ("l2", 1.0), 0.0)

    def test_unknown_regularizer(self):
        A = np.ones((2, 2))
        y = np.array([1.0, -1.0])
        with pytest.raises(ValueError):
            make_logistic([(A, y)], ("l1", 1.0), 0.0)


class TestSmoothness:
    def test_rank_one_sample(self):
        a = np.array([2.0, 0.0])
        p = make_logistic([(a[None, :], np.array([1.0]))], ("l2", 0.0), 0.0)
        assert p.L == pytest.approx(1.0, rel=1e-7)

    def test_zero_features_l2(self):
        p = make_logistic([(np.zeros((3, 4)), np.ones(3))], ("l2", 1.0), 0.0)
        assert p.L == pytest.approx(1.0, abs=1e-12)

    def test_nonconvex_curvature_bound(self):
        p = make_logistic([(np.zeros((2, 3)), np.ones(2))], ("nonconvex",),
                          0.0)
        assert p.L == pytest.approx(2.0, abs=1e-12)
        # oracle: |r''| = |2(1-3x^2)/(1+x^2)^3| peaks at 2 at x=0
        xs = np.linspace(-5, 5, 20001)
        rpp = 2 * (1 - 3 * xs**2) / (1 + xs**2) ** 3
        assert np.max(np.abs(rpp)) == pytest.approx(2.0, abs=1e-6)

    def test_matches_dense_eigensolver(self, fixture_dataset):
        p = logistic_from(fixture_dataset, 5, ("l2", 0.5), 0.0)
        expected = max(np.linalg.eigvalsh(A.T @ A)[-1] / (4 * len(A))
                       for A in p.features) + 0.5
        assert p.L == pytest.approx(expected, rel=1e-6)


class TestGradientConsistency:
    @pytest.mark.parametrize("family", ["quadratic", "logistic_l2",
                                        "logistic_nc"])
    def test_finite_differences(self, family, fixture_dataset):
        if family == "quadratic":
            p = make_quadratic(6, 5, 2.0, 0.0, seed=4)
        else:
            reg = ("l2", 1.0) if family == "logistic_l2" else ("nonconvex",)
            small = synthetic_blobs(90, 5, seed=2)
            p = logistic_from(small, 3, reg, 0.0)
        rng = np.random.default_rng(1)
        h = 1e-5
        for _ in range(20):
            i = int(rng.integers(p.n))
            x = rng.normal(size=p.d)
            g = p.grad_i(i, x)
            for k in range(p.d):
                e = np.zeros(p.d)
                e[k] = h
                fd = (p.value_i(i, x + e) - p.value_i(i, x - e)) / (2 * h)
                assert abs(fd - g[k]) <= 1e-5


def test_heterogeneity_monotone_in_varsigma2():
    values = []
    for vs2 in (0.0, 1.0, 10.0, 100.0):
        p = make_quadratic(10, 6, vs2, 0.0, seed=12)
        ref = solve_quadratic(p)
        values.append(heterogeneity_at(p, ref.xstar))
    assert values[0] == 0.0
    assert values[0] < values[1] < values[2] < values[3]
