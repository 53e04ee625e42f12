import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgc_lvof.dataset import (
    DataFormatError,
    Dataset,
    LabelAssignment,
    corrupt_labels,
    corrupted_from_truth,
    generate_gaussian_blobs,
    load_dense_csv,
    load_idx,
    sample_labels,
    trial_seeds,
    write_dense_csv,
)


def test_csv_reindexes_classes_by_first_appearance(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y,label\n1,2,a\n3,4,b\n5,6,a\n")
    data = load_dense_csv(p, "label")
    assert data.class_count == 2
    assert data.true_classes.tolist() == [0, 1, 0]
    assert data.features.tolist() == [[1, 2], [3, 4], [5, 6]]


def test_csv_label_column_anywhere(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("label,x\ncat,0.5\ndog,1.5\n")
    data = load_dense_csv(p, "label")
    assert data.features[:, 0].tolist() == [0.5, 1.5]


def test_csv_missing_cell_names_line(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y,label\n1,2,a\n3,,b\n5,6,a\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_dense_csv(p, "label")


def test_csv_short_row_and_non_numeric(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y,label\n1,2\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_dense_csv(p, "label")
    p.write_text("x,y,label\n1,2,a\n1,abc,b\n")
    with pytest.raises(DataFormatError, match="non-numeric"):
        load_dense_csv(p, "label")
    with pytest.raises(DataFormatError, match="not found"):
        load_dense_csv(p, "target")


def test_csv_shape_passthrough_and_roundtrip(tmp_path):
    data = generate_gaussian_blobs(150, 4, 3, 5.0, seed=1)
    p = tmp_path / "blobs.csv"
    write_dense_csv(data, p)
    back = load_dense_csv(p, "label")
    assert back.features.shape == (150, 4)
    np.testing.assert_array_equal(back.features, data.features)
    # blobs come grouped by class, so first-appearance order is the identity
    np.testing.assert_array_equal(back.true_classes, data.true_classes)


def _idx_pair(tmp_path, images, labels, img_magic=0x803):
    n = images.shape[0]
    ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
    ip.write_bytes(struct.pack(">IIII", img_magic, n, 28, 28) + images.astype(np.uint8).tobytes())
    lp.write_bytes(struct.pack(">II", 0x801, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes())
    return ip, lp


def test_idx_reader(tmp_path):
    images = np.zeros((3, 28, 28), dtype=np.uint8)
    images[0, 0, 0] = 255
    images[2, 27, 27] = 51
    ip, lp = _idx_pair(tmp_path, images, [3, 1, 3])
    assert ip.read_bytes()[:4] == bytes([0, 0, 8, 3])
    data = load_idx(ip, lp)
    assert data.features.shape == (3, 784)
    assert data.features[0, 0] == 1.0
    assert data.features[2, 783] == pytest.approx(0.2)
    assert data.true_classes.tolist() == [3, 1, 3]


def test_idx_rejects_bad_magic_and_count_mismatch(tmp_path):
    images = np.zeros((2, 28, 28), dtype=np.uint8)
    ip, lp = _idx_pair(tmp_path, images, [0, 1], img_magic=0x801)
    with pytest.raises(DataFormatError, match="magic"):
        load_idx(ip, lp)
    ip, lp = _idx_pair(tmp_path, images, [0, 1, 1])
    with pytest.raises(DataFormatError, match="count"):
        load_idx(ip, lp)


def test_blobs_deterministic_and_balanced():
    a = generate_gaussian_blobs(4, 3, 2, 10.0, seed=7)
    b = generate_gaussian_blobs(4, 3, 2, 10.0, seed=7)
    np.testing.assert_array_equal(a.features, b.features)
    assert sorted(np.bincount(generate_gaussian_blobs(5, 2, 2, 1.0, 0).true_classes)) == [2, 3]


@pytest.mark.parametrize("c,d", [(2, 1), (3, 2), (4, 6)])
def test_blob_centers_equidistant(c, d):
    from lgc_lvof.dataset import _simplex_centers

    z = _simplex_centers(c, d) * 7.0
    dist = np.linalg.norm(z[:, None] - z[None], axis=-1)
    off = dist[~np.eye(c, dtype=bool)]
    np.testing.assert_allclose(off, 7.0, rtol=1e-12)


def test_far_blobs_nearest_neighbor_purity():
    data = generate_gaussian_blobs(200, 3, 4, 50.0, seed=3)
    x = data.features
    dist = np.linalg.norm(x[:, None] - x[None], axis=-1)
    np.fill_diagonal(dist, np.inf)
    nn = dist.argmin(axis=1)
    assert np.mean(data.true_classes[nn] == data.true_classes) == 1.0


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((1, 2)), [0], 1)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), [0, 2], 2)
    with pytest.raises(ValueError):
        Dataset(np.array([[0.0], [np.nan]]), [0, 1], 2)
    data = generate_gaussian_blobs(6, 2, 2, 1.0)
    with pytest.raises(ValueError):
        data.features[0, 0] = 1.0


def test_indicator():
    a = LabelAssignment(5, 3, [4, 1], [2, 0])
    y = a.indicator()
    assert y.shape == (5, 3)
    assert y.sum(axis=1).tolist() == [0, 1, 0, 0, 1]
    assert y[4, 2] == 1 and y[1, 0] == 1
    assert y.sum(axis=0).tolist() == [1, 0, 1]
    np.testing.assert_array_equal(a.labeled_indicator(), y[[4, 1]])


def test_sample_labels():
    data = generate_gaussian_blobs(300, 2, 3, 5.0, seed=0)
    full = sample_labels(data, 300, seed=9)
    assert sorted(full.labeled_indices.tolist()) == list(range(300))
    a = sample_labels(data, 150, seed=1)
    assert a.l == 150
    np.testing.assert_array_equal(a.observed_classes, data.true_classes[a.labeled_indices])
    b = sample_labels(data, 150, seed=1)
    np.testing.assert_array_equal(a.labeled_indices, b.labeled_indices)
    with pytest.raises(ValueError):
        sample_labels(data, 2, seed=0)


def test_sample_labels_covers_every_class_for_trial_seeds():
    # 10 classes, 12 labels: an uncovered class is likely without resampling
    data = generate_gaussian_blobs(200, 10, 10, 5.0, seed=0)
    for seed in range(20):
        a = sample_labels(data, 12, seed)
        assert set(a.observed_classes.tolist()) == set(range(10))


def test_corrupt_count_and_noop():
    data = generate_gaussian_blobs(500, 2, 2, 5.0, seed=0)
    a = sample_labels(data, 150, seed=0)
    noisy, rec = corrupt_labels(a, 0.2, seed=4)
    assert len(rec.corrupted_indices) == 30
    assert np.all(a.observed_classes == data.true_classes[a.labeled_indices])  # input untouched
    same, empty = corrupt_labels(a, 0.0, seed=4)
    assert same is a and not empty.corrupted_indices


@settings(max_examples=60, deadline=None)
@given(
    fraction=st.floats(0, 1),
    seed=st.integers(0, 2**32 - 1),
    c=st.integers(2, 6),
    l=st.integers(6, 40),
)
def test_corruption_recovered_from_truth(fraction, seed, c, l):
    data = generate_gaussian_blobs(60, 6, c, 3.0, seed=seed % 1000)
    a = sample_labels(data, l, seed)
    noisy, rec = corrupt_labels(a, fraction, seed)
    assert corrupted_from_truth(data, noisy) == rec.corrupted_indices
    assert rec.corrupted_indices <= set(a.labeled_indices.tolist())
    assert len(rec.corrupted_indices) == int(np.floor(fraction * l + 0.5))


def test_flip_targets_uniform_over_other_classes():
    a = LabelAssignment(4000, 4, np.arange(4000), np.zeros(4000, dtype=int))
    noisy, _ = corrupt_labels(a, 1.0, seed=0)
    counts = np.bincount(noisy.observed_classes, minlength=4)
    assert counts[0] == 0
    # each of the three targets ~ Binomial(4000, 1/3): sd ~ 30
    assert np.all(np.abs(counts[1:] - 4000 / 3) < 150)


def test_trial_seeds_independent_streams():
    a, b = trial_seeds(0)
    assert a != b
    assert trial_seeds(0) == (a, b)
    assert trial_seeds(1) != (a, b)
