import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from miscclust.data import (
    DataMatrix,
    DroppedFeatureWarning,
    GeneratorSpec,
    LabeledDataset,
    compose_multiview,
    gen_atom,
    gen_gaussian_blobs,
    gen_lsun,
    generate,
    load_csv,
    load_views,
    save_csv,
    save_views,
    standardize,
    two_view_blobs,
)
from miscclust.errors import DegenerateInputError, ParseError
from miscclust.metrics import nmi
from miscclust.selection import kmeans


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestDataMatrix:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            DataMatrix(np.array([[1.0, np.nan]]))

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            DataMatrix(np.zeros((2, 1)))

    def test_values_are_read_only(self):
        X = DataMatrix(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            X.values[0, 0] = 1.0

    def test_labels_must_be_contiguous(self):
        X = DataMatrix(np.zeros((1, 3)))
        with pytest.raises(ValueError):
            LabeledDataset(X, (("v", np.array([0, 2, 2])),))


class TestLoadCsv:
    def test_samples_as_rows(self, tmp_path):
        X = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n"), "samples_as_rows")
        assert (X.d, X.n) == (2, 3)
        np.testing.assert_array_equal(X.values, [[1, 3, 5], [2, 4, 6]])

    def test_features_as_rows(self, tmp_path):
        X = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n"), "features_as_rows")
        assert (X.d, X.n) == (3, 2)

    def test_header_becomes_feature_names(self, tmp_path):
        X = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n"))
        assert X.feature_names == ("a", "b")

    def test_non_numeric_cell_reports_coordinates(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_csv(write(tmp_path, "1,2\nabc,4\n5,6\n"))
        assert (err.value.row, err.value.col) == (2, 1)
        assert "(2,1)" in str(err.value)

    def test_ragged_row_reports_row(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_csv(write(tmp_path, "1,2\n3,4,5\n"))
        assert err.value.row == 2

    def test_roundtrip(self, tmp_path):
        X = DataMatrix(np.random.default_rng(0).normal(size=(3, 7)), ("a", "b", "c"))
        save_csv(tmp_path / "x.csv", X)
        Y = load_csv(tmp_path / "x.csv")
        np.testing.assert_array_equal(X.values, Y.values)
        assert Y.feature_names == X.feature_names


class TestStandardize:
    def test_population_std(self):
        out = standardize(DataMatrix(np.array([[1.0, 2.0, 3.0]])))
        np.testing.assert_allclose(out.values, [[-1.224744871391589, 0.0, 1.224744871391589]], atol=1e-12)

    def test_idempotent(self):
        X = standardize(DataMatrix(np.random.default_rng(1).normal(size=(3, 50))))
        np.testing.assert_allclose(standardize(X).values, X.values, atol=1e-10)

    def test_drops_constant_row(self):
        X = DataMatrix(np.array([[1.0, 2.0, 4.0], [5.0, 5.0, 5.0]]))
        with pytest.warns(DroppedFeatureWarning):
            out = standardize(X)
        assert out.d == 1

    def test_all_constant_is_degenerate(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(DegenerateInputError):
                standardize(DataMatrix(np.ones((2, 4))))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 4), st.integers(3, 30), st.integers(0, 10_000))
    def test_mean_zero_unit_variance(self, d, n, seed):
        values = np.random.default_rng(seed).normal(size=(d, n)) * 5 + 3
        out = standardize(DataMatrix(values)).values
        np.testing.assert_allclose(out.mean(axis=1), 0, atol=1e-10)
        np.testing.assert_allclose(out.std(axis=1), 1, atol=1e-10)


class TestGenerators:
    def test_blobs_round_robin(self):
        ds = gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", 120, {"k": 6, "dim": 2}, 7))
        labels = ds.views[0][1]
        assert ds.data.values.shape == (2, 120)
        assert np.bincount(labels).tolist() == [20] * 6

    @pytest.mark.parametrize("kind", ["gaussian_blobs", "atom", "lsun", "rings"])
    def test_bit_identical(self, kind):
        spec = GeneratorSpec(kind, 80, {}, 3)
        a, b = generate(spec), generate(spec)
        assert a.data.values.tobytes() == b.data.values.tobytes()
        assert all(x[1].tobytes() == y[1].tobytes() for x, y in zip(a.views, b.views))

    def test_blobs_too_many_clusters(self):
        with pytest.raises(ValueError):
            gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", 5, {"k": 3}, 0))

    def test_blobs_separable_by_kmeans(self):
        ds = gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", 200, {"centers": [[-5, 0], [5, 0]]}, 0))
        labels = kmeans(ds.data.values, 2).labels
        assert nmi(labels, ds.views[0][1]) >= 0.95

    def test_atom_shape(self):
        ds = gen_atom(GeneratorSpec("atom", 800, {}, 1))
        assert (ds.data.d, ds.data.n) == (3, 800)
        assert np.bincount(ds.views[0][1]).tolist() == [400, 400]

    def test_atom_radial_gap(self):
        ds = gen_atom(GeneratorSpec("atom", 800, {}, 1))
        r = np.linalg.norm(ds.data.values, axis=0)
        labels = ds.views[0][1]
        assert r[labels == 0].max() < r[labels == 1].min()

    def test_atom_defeats_kmeans(self):
        low = 0
        for seed in range(10):
            ds = gen_atom(GeneratorSpec("atom", 800, {}, seed))
            low += nmi(kmeans(ds.data.values, 2, seed=seed).labels, ds.views[0][1]) < 0.5
        assert low >= 8

    def test_lsun_shape(self):
        ds = gen_lsun(GeneratorSpec("lsun", 400, {}, 2))
        assert (ds.data.d, ds.data.n) == (2, 400)
        assert np.unique(ds.views[0][1]).size == 3

    def test_lsun_boxes_disjoint(self):
        ds = gen_lsun(GeneratorSpec("lsun", 400, {}, 2))
        X, labels = ds.data.values, ds.views[0][1]
        boxes = [(X[:, labels == c].min(axis=1), X[:, labels == c].max(axis=1)) for c in range(3)]
        for i in range(3):
            for j in range(i + 1, 3):
                (lo_a, hi_a), (lo_b, hi_b) = boxes[i], boxes[j]
                overlap = np.all(lo_a <= hi_b) and np.all(lo_b <= hi_a)
                assert not overlap

    def test_lsun_defeats_kmeans(self):
        low = 0
        for seed in range(10):
            ds = gen_lsun(GeneratorSpec("lsun", 400, {}, seed))
            low += nmi(kmeans(ds.data.values, 3, seed=seed).labels, ds.views[0][1]) < 0.9
        assert low >= 7

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            GeneratorSpec("moons", 10, {}, 0)


class TestComposeMultiview:
    def parts(self, n=100):
        a = gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", n, {"k": 2, "dim": 2}, 0))
        b = gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", n, {"k": 3, "dim": 3}, 1))
        return a, b

    def test_shape(self):
        ds = compose_multiview(self.parts())
        assert (ds.data.d, ds.data.n, len(ds.views)) == (5, 100, 2)

    def test_identity_permutation(self):
        a, b = self.parts()
        ds = compose_multiview([a, b], seed=None)
        np.testing.assert_array_equal(ds.views[0][1], a.views[0][1])
        np.testing.assert_array_equal(ds.views[1][1], b.views[0][1])

    def test_preserves_cluster_sizes(self):
        a, b = self.parts()
        ds = compose_multiview([a, b], seed=5)
        for (_, new), part in zip(ds.views, (a, b)):
            assert np.bincount(new).tolist() == np.bincount(part.views[0][1]).tolist()

    def test_parts_decorrelated(self):
        a = gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", 800, {"centers": [[0, 0], [6, 0]]}, 0))
        b = gen_gaussian_blobs(GeneratorSpec("gaussian_blobs", 800, {"centers": [[0, 0], [6, 0]]}, 0))
        ds = compose_multiview([a, b], seed=3)
        r = np.corrcoef(ds.data.values[0], ds.data.values[2])[0, 1]
        assert abs(r) < 0.15

    def test_two_view_blobs(self):
        ds = two_view_blobs(600, seed=0)
        assert (ds.data.d, ds.data.n) == (4, 600)
        assert [np.unique(v).size for _, v in ds.views] == [4, 2]


def test_views_roundtrip(tmp_path):
    ds = two_view_blobs(40, seed=1)
    save_views(tmp_path / "v.csv", ds)
    loaded = load_views(tmp_path / "v.csv")
    assert [name for name, _ in loaded] == list(ds.view_names)
    for (_, got), (_, want) in zip(loaded, ds.views):
        np.testing.assert_array_equal(got, want)
