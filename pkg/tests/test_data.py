import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dckd import data
from dckd.data import Dataset
from dckd.errors import FormatError, InvalidArgument


def test_dataset_validation():
    with pytest.raises(InvalidArgument):
        Dataset(np.zeros((3, 2)), [0, 1], 2)
    with pytest.raises(InvalidArgument):
        Dataset(np.zeros((2, 2)), [0, 2], 2)
    with pytest.raises(InvalidArgument):
        Dataset(np.array([[np.inf, 0.0]]), [0], 2)


def test_blobs_collapse_to_centers():
    ds = data.gen_blobs(4, 1, 3, 1e-12, seed=2)
    np.testing.assert_allclose(ds.features, data.blob_centers(4, 3, 1e-12, 2), atol=1e-9)


def test_blobs_deterministic():
    a, b = data.gen_blobs(5, 10, 2, 0.4, 3), data.gen_blobs(5, 10, 2, 0.4, 3)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_blobs_geometry():
    centers = data.blob_centers(10, 2, 0.4, 7)
    norms = np.linalg.norm(centers, axis=1)
    paired = {b for _, b in data.overlap_pairs(10)}
    for c in range(10):
        if c not in paired:
            assert norms[c] == pytest.approx(3.0)
    for a, b in data.overlap_pairs(10):
        assert np.linalg.norm(centers[a] - centers[b]) == pytest.approx(0.5 * 0.4)


@pytest.mark.parametrize("kw", [dict(num_classes=0), dict(per_class=0), dict(dim=0), dict(spread=0.0)])
def test_blobs_bad_args(kw):
    args = dict(num_classes=3, per_class=2, dim=2, spread=0.4, seed=0)
    args.update(kw)
    with pytest.raises(InvalidArgument):
        data.gen_blobs(**args)


def test_preset_shape():
    ds = data.blobs_preset(7)
    assert ds.features.shape == (2000, 2) and ds.num_classes == 10
    assert np.bincount(ds.labels).tolist() == [200] * 10


def test_split_is_stratified_and_disjoint():
    ds = data.blobs_preset(7)
    train, val = data.train_val_split(ds, 0.2, seed=7)
    assert len(train) == 1600 and len(val) == 400
    assert np.bincount(val.labels).tolist() == [40] * 10
    rows = {tuple(r) for r in train.features} & {tuple(r) for r in val.features}
    assert not rows
    again = data.train_val_split(ds, 0.2, seed=7)[1]
    np.testing.assert_array_equal(again.features, val.features)


def test_batches_examples():
    ds = Dataset(np.arange(10.0).reshape(5, 2), [0, 1, 0, 1, 0], 2)
    assert [len(y) for _, y in data.batches(ds, 2, 3)] == [2, 2, 1]
    single = data.batches(ds, 10, 3)
    assert len(single) == 1 and sorted(single[0][0][:, 0]) == [0, 2, 4, 6, 8]
    a, b = data.batches(ds, 2, 3, epoch=4), data.batches(ds, 2, 3, epoch=4)
    for (xa, _), (xb, _) in zip(a, b):
        np.testing.assert_array_equal(xa, xb)


def test_batches_errors():
    with pytest.raises(InvalidArgument):
        data.batches(Dataset(np.zeros((0, 2)), [], 2), 4, 0)
    with pytest.raises(InvalidArgument):
        data.batches(Dataset(np.zeros((3, 2)), [0, 0, 0], 2), 0, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.integers(1, 70), st.integers(0, 2**31), st.integers(0, 100))
def test_batches_cover_each_sample_once(n, bs, seed, epoch):
    ds = Dataset(np.arange(n, dtype=float)[:, None], np.zeros(n, dtype=int), 1)
    seen = np.concatenate([x[:, 0] for x, _ in data.batches(ds, bs, seed, epoch)])
    assert sorted(seen) == list(range(n))


# ---------------------------------------------------------------- IDX

def _write(path, magic, dims, payload: bytes):
    path.write_bytes(struct.pack(">I", magic) + struct.pack(f">{len(dims)}I", *dims) + payload)


def test_load_idx_hand_built(tmp_path):
    pixels = bytes([0, 255, 0, 255,
                    255, 255, 255, 255,
                    0, 0, 0, 0,
                    51, 102, 153, 204])
    _write(tmp_path / "img", 0x00000803, (4, 2, 2), pixels)
    _write(tmp_path / "lab", 0x00000801, (4,), bytes([3, 1, 0, 2]))
    ds = data.load_idx(tmp_path / "img", tmp_path / "lab")
    raw = np.array([[0, 1, 0, 1], [1, 1, 1, 1], [0, 0, 0, 0], [0.2, 0.4, 0.6, 0.8]])
    expected = (raw - raw.mean()) / raw.std()
    assert ds.features.shape == (4, 4)
    np.testing.assert_allclose(ds.features, expected, atol=1e-12)
    assert ds.labels.tolist() == [3, 1, 0, 2] and ds.num_classes == 4


def test_load_idx_wrong_magic(tmp_path):
    _write(tmp_path / "img", 0x00000803, (1, 2, 2), bytes(4))
    _write(tmp_path / "lab", 0x00000803, (1,), bytes(1))
    with pytest.raises(FormatError):
        data.load_idx(tmp_path / "img", tmp_path / "lab")


def test_load_idx_count_mismatch(tmp_path):
    _write(tmp_path / "img", 0x00000803, (2, 2, 2), bytes(8))
    _write(tmp_path / "lab", 0x00000801, (3,), bytes(3))
    with pytest.raises(FormatError):
        data.load_idx(tmp_path / "img", tmp_path / "lab")


def test_load_idx_truncated_payload(tmp_path):
    _write(tmp_path / "img", 0x00000803, (2, 2, 2), bytes(7))
    _write(tmp_path / "lab", 0x00000801, (2,), bytes(2))
    with pytest.raises(FormatError):
        data.load_idx(tmp_path / "img", tmp_path / "lab")


def test_load_idx_limit(tmp_path):
    rng = np.random.default_rng(0)
    data.write_idx(tmp_path / "img", rng.integers(0, 256, (6, 3, 3)).astype(np.uint8))
    data.write_idx(tmp_path / "lab", np.array([0, 1, 2, 0, 1, 2], dtype=np.uint8))
    empty = data.load_idx(tmp_path / "img", tmp_path / "lab", limit=0, num_classes=3)
    assert len(empty) == 0 and empty.features.shape == (0, 9)
    three = data.load_idx(tmp_path / "img", tmp_path / "lab", limit=3)
    assert three.labels.tolist() == [0, 1, 2]


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, (10, 4, 4)).astype(np.uint8)
    labels = rng.integers(0, 10, 10).astype(np.uint8)
    data.write_idx(tmp_path / "img", images)
    data.write_idx(tmp_path / "lab", labels)
    np.testing.assert_array_equal(data.read_idx(tmp_path / "img"), images)
    first = data.load_idx(tmp_path / "img", tmp_path / "lab", limit=7, num_classes=10)
    # write the loaded subset back and reload it
    data.write_idx(tmp_path / "img2", data.read_idx(tmp_path / "img")[:7])
    data.write_idx(tmp_path / "lab2", data.read_idx(tmp_path / "lab")[:7])
    second = data.load_idx(tmp_path / "img2", tmp_path / "lab2", num_classes=10)
    np.testing.assert_array_equal(first.features, second.features)
    np.testing.assert_array_equal(first.labels, second.labels)


def test_read_idx_wider_types(tmp_path):
    arr = np.arange(6, dtype=np.float64).reshape(2, 3) / 7
    data.write_idx(tmp_path / "f", arr)
    np.testing.assert_array_equal(data.read_idx(tmp_path / "f"), arr)
    assert (tmp_path / "f").read_bytes()[:4] == bytes([0, 0, 0x0E, 2])


def test_csv_round_trip(tmp_path):
    ds = data.gen_blobs(3, 4, 2, 0.4, 1)
    data.to_csv(ds, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "f0,f1,label"
    back = data.from_csv(tmp_path / "d.csv", 3)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
