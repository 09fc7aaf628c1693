import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hyperproto.data import DataFormatError, Dataset, gen_blobs, load_csv, save_csv, split


def test_load_basic(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("1.0,2.0,0\n3.0,4.0,1")
    ds = load_csv(path)
    assert len(ds) == 2 and ds.n_features == 2
    np.testing.assert_array_equal(ds.labels, [0, 1])
    np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4]])


def test_header_and_label_columns(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,label\n1.0,2.0,0\n")
    assert len(load_csv(path, has_header=True)) == 1
    path.write_text("2,1.0,5.0\n")
    ds = load_csv(path, label_column="first")
    np.testing.assert_array_equal(ds.labels, [2])
    np.testing.assert_array_equal(ds.features, [[1.0, 5.0]])
    ds = load_csv(path, label_column=None)
    assert ds.n_features == 3 and ds.labels[0] == 0


@pytest.mark.parametrize(
    "text, message",
    [
        ("1.0,x,0\n", "row 1"),
        ("1.0,2.0,0\n1.0,1\n", "row 2: expected 3 columns"),
        ("1.0,2.0,0.5\n", "row 1: label"),
        ("1.0,2.0,-1\n", "row 1: negative"),
        ("1.0,nan,0\n", "row 1: non-finite"),
        ("", "empty"),
    ],
)
def test_load_errors(tmp_path, text, message):
    path = tmp_path / "d.csv"
    path.write_text(text)
    with pytest.raises(DataFormatError, match=message):
        load_csv(path)


@settings(max_examples=50, deadline=None)
@given(
    features=arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)),
                    elements=st.floats(-1e300, 1e300, allow_nan=False)),
    seed=st.integers(0, 10),
)
def test_save_load_roundtrip(tmp_path_factory, features, seed):
    labels = np.random.default_rng(seed).integers(0, 5, features.shape[0])
    ds = Dataset(features, labels)
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    save_csv(ds, path)
    back = load_csv(path)
    assert back.features.tobytes() == ds.features.tobytes()
    np.testing.assert_array_equal(back.labels, ds.labels)


class TestBlobs:
    def test_counts(self):
        ds = gen_blobs(3, 2, 50)
        assert len(ds) == 150
        np.testing.assert_array_equal(np.bincount(ds.labels), [50, 50, 50])

    def test_zero_spread_hits_centers(self):
        ds = gen_blobs(4, 3, 5, spread=0.0)
        centers = 4 * np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]])
        np.testing.assert_allclose(ds.features, centers[ds.labels], atol=1e-15)

    def test_one_dimensional_centers(self):
        ds = gen_blobs(2, 1, 3, spread=0.0)
        np.testing.assert_array_equal(np.unique(ds.features), [-4.0, 4.0])

    def test_deterministic(self):
        a, b = gen_blobs(3, 2, 20, seed=5), gen_blobs(3, 2, 20, seed=5)
        assert a.features.tobytes() == b.features.tobytes()

    def test_means_near_centers_golden(self):
        ds = gen_blobs(3, 2, 100, spread=0.5, seed=0)
        means = np.array([ds.features[ds.labels == k].mean(axis=0) for k in range(3)])
        centers = 4 * np.array([[1, 0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]])
        assert np.all(np.linalg.norm(means - centers, axis=1) < 5 * 0.5 / np.sqrt(100))

    @pytest.mark.parametrize("args", [(1, 2, 5), (3, 0, 5), (3, 2, 0), (3, 2, 5, -1.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            gen_blobs(*args)


class TestSplit:
    def test_sizes(self):
        ds = gen_blobs(2, 2, 5)
        train, test = split(ds, 0.3, seed=1)
        assert (len(train), len(test)) == (7, 3)

    def test_partition(self):
        ds = gen_blobs(3, 2, 10, seed=2)
        train, test = split(ds, 0.25, seed=4)
        rows = lambda d: sorted(map(tuple, np.column_stack([d.features, d.labels])))
        assert rows(ds) == sorted(rows(train) + rows(test))

    def test_deterministic(self):
        ds = gen_blobs(3, 2, 10, seed=2)
        a, b = split(ds, 0.3, seed=9), split(ds, 0.3, seed=9)
        assert a[1].features.tobytes() == b[1].features.tobytes()

    @pytest.mark.parametrize("fraction", [0.0, 1.0, 0.05, 0.09])
    def test_degenerate(self, fraction):
        with pytest.raises(ValueError):
            split(gen_blobs(2, 2, 5), fraction)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.inf]]), np.array([0]))
