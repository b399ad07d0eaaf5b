import struct

import numpy as np
import pytest

from pertfool.data import (Dataset, IdxFormatError, gen_blobs, gen_dataset,
                           gen_rings, load_dataset, load_idx_images,
                           load_idx_labels, load_mnist, save_dataset)


def write_idx_images(path, images):
    """images: (n, rows, cols) uint8 array."""
    n, rows, cols = images.shape
    path.write_bytes(struct.pack(">iiii", 0x0803, n, rows, cols)
                     + images.tobytes())


def write_idx_labels(path, labels):
    path.write_bytes(struct.pack(">ii", 0x0801, len(labels))
                     + bytes(int(v) for v in labels))


class TestGenerators:
    def test_blobs_shapes_and_balance(self):
        data = gen_blobs(n_samples=90, n_classes=3, dim=5, seed=0)
        assert data.samples.shape == (90, 5)
        assert sorted(np.bincount(data.labels)) == [30, 30, 30]

    def test_blobs_deterministic(self):
        a = gen_blobs(n_samples=50, n_classes=2, dim=4, seed=9)
        b = gen_blobs(n_samples=50, n_classes=2, dim=4, seed=9)
        np.testing.assert_array_equal(a.samples, b.samples)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_blobs_separation_controls_distance(self):
        near = gen_blobs(n_samples=200, n_classes=2, dim=4, seed=1, separation=0.1)
        far = gen_blobs(n_samples=200, n_classes=2, dim=4, seed=1, separation=2.0)

        def center_gap(d):
            c0 = d.samples[d.labels == 0].mean(axis=0)
            c1 = d.samples[d.labels == 1].mean(axis=0)
            return np.linalg.norm(c0 - c1)

        assert center_gap(far) > 5 * center_gap(near)

    def test_blobs_requires_enough_dims(self):
        with pytest.raises(ValueError):
            gen_blobs(n_samples=10, n_classes=5, dim=3, seed=0)

    def test_six_sigma_blobs_are_linearly_separable(self):
        # center gap of 6 noise-sigmas: a fresh 1-layer net fits it cleanly
        from pertfool.network import TrainConfig, classify, random_network, train_sgd
        sigma = 0.05
        data = gen_blobs(n_samples=400, n_classes=2, dim=6, seed=12,
                         separation=6 * np.sqrt(2) * sigma, noise=sigma)
        net = random_network([6, 2], "identity", seed=12)
        net = train_sgd(net, data, TrainConfig(seed=12, epochs=50))
        acc = np.mean([classify(net, x) == y
                       for x, y in zip(data.samples, data.labels)])
        assert acc >= 0.99

    def test_rings_radii_ordered(self):
        data = gen_rings(n_samples=300, n_classes=3, seed=2, noise=0.0)
        r = np.linalg.norm(data.samples - 0.5, axis=1)
        means = [r[data.labels == c].mean() for c in range(3)]
        assert means[0] < means[1] < means[2]

    def test_gen_dataset_dispatch(self):
        data = gen_dataset("blobs", {"n_samples": 20, "n_classes": 2, "dim": 3},
                           seed=4)
        assert data.name == "blobs"
        with pytest.raises(ValueError):
            gen_dataset("spirals", {}, seed=0)


class TestDatasetType:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), [0, 1])

    def test_split(self):
        data = gen_blobs(n_samples=50, n_classes=2, dim=3, seed=0)
        train, test = data.split(30)
        assert len(train) == 30 and len(test) == 20
        np.testing.assert_array_equal(
            np.vstack([train.samples, test.samples]), data.samples)

    def test_npz_round_trip(self, tmp_path):
        data = gen_blobs(n_samples=25, n_classes=2, dim=4, seed=3)
        path = tmp_path / "d.npz"
        save_dataset(data, path)
        back = load_dataset(path)
        np.testing.assert_array_equal(back.samples, data.samples)
        np.testing.assert_array_equal(back.labels, data.labels)
        assert back.name == data.name


class TestIdx:
    def test_round_trip(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(7, 4, 3), dtype=np.uint8)
        labels = rng.integers(0, 3, size=7)
        write_idx_images(tmp_path / "img", images)
        write_idx_labels(tmp_path / "lab", labels)
        data = load_mnist(tmp_path / "img", tmp_path / "lab")
        assert data.samples.shape == (7, 12)
        assert data.samples.min() >= 0.0 and data.samples.max() <= 1.0
        np.testing.assert_array_equal(data.labels, labels)
        np.testing.assert_allclose(data.samples[0],
                                   images[0].ravel() / 255.0)

    def test_wrong_image_magic(self, tmp_path):
        bad = tmp_path / "img"
        bad.write_bytes(struct.pack(">iiii", 0x0801, 1, 2, 2) + bytes(4))
        with pytest.raises(IdxFormatError, match="magic"):
            load_idx_images(bad)

    def test_wrong_label_magic(self, tmp_path):
        bad = tmp_path / "lab"
        bad.write_bytes(struct.pack(">ii", 0x0803, 1) + bytes(1))
        with pytest.raises(IdxFormatError, match="magic"):
            load_idx_labels(bad)

    def test_truncated_pixels_reports_offset(self, tmp_path):
        bad = tmp_path / "img"
        bad.write_bytes(struct.pack(">iiii", 0x0803, 2, 2, 2) + bytes(5))
        with pytest.raises(IdxFormatError, match="offset"):
            load_idx_images(bad)

    def test_truncated_header_reports_offset(self, tmp_path):
        bad = tmp_path / "img"
        bad.write_bytes(b"\x00\x00")
        with pytest.raises(IdxFormatError, match="offset"):
            load_idx_images(bad)

    def test_count_mismatch(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(3, 2, 2), dtype=np.uint8)
        write_idx_images(tmp_path / "img", images)
        write_idx_labels(tmp_path / "lab", [0, 1])
        with pytest.raises(IdxFormatError, match="images"):
            load_mnist(tmp_path / "img", tmp_path / "lab")
