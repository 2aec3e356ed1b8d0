import gzip
import struct

import numpy as np
import pytest

from dataset import (
    CorruptionSpec,
    ImageDataset,
    at_resolution,
    corrupt,
    downsample_8x8,
    load_idx,
    load_split,
    ring_centers,
    split,
    toy_ring,
    write_idx,
)
from utils.errors import IdxParseError


def test_idx_roundtrip_is_byte_exact(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (5, 3, 4)) / 255.
    labels = np.array([0, 9, 3, 3, 1])
    write_idx(images, tmp_path / 'images')
    write_idx(labels, tmp_path / 'labels.gz')
    assert np.array_equal(load_idx(tmp_path / 'images'), images)
    assert np.array_equal(load_idx(tmp_path / 'labels.gz', num_classes=10), labels)

    write_idx(load_idx(tmp_path / 'images'), tmp_path / 'again')
    assert (tmp_path / 'again').read_bytes() == (tmp_path / 'images').read_bytes()


def test_pixel_one_is_stored_as_255(tmp_path):
    write_idx(np.ones((1, 2, 2)), tmp_path / 'white')
    data = (tmp_path / 'white').read_bytes()
    assert struct.unpack('>I', data[:4])[0] == 0x803
    assert set(data[16:]) == {255}


def test_write_idx_refuses_empty_tensor(tmp_path):
    with pytest.raises(ValueError):
        write_idx(np.zeros((0, 28, 28)), tmp_path / 'empty')


def test_label_out_of_range_is_rejected(tmp_path):
    write_idx(np.array([1, 10, 2]), tmp_path / 'labels')
    with pytest.raises(IdxParseError) as e:
        load_idx(tmp_path / 'labels', num_classes=10)
    assert e.value.offset == 8 + 1


def test_bad_magic_and_truncation(tmp_path):
    (tmp_path / 'magic').write_bytes(struct.pack('>I', 0x0000_0802) + b'\x00' * 8)
    with pytest.raises(IdxParseError) as e:
        load_idx(tmp_path / 'magic')
    assert e.value.offset == 0

    (tmp_path / 'short').write_bytes(struct.pack('>II', 0x801, 10) + b'\x01' * 4)
    with pytest.raises(IdxParseError):
        load_idx(tmp_path / 'short')


def test_load_split_reads_gzip_mnist_layout(tmp_path):
    root = tmp_path / 'mnist'
    root.mkdir()
    rng = np.random.default_rng(2)
    write_idx(rng.integers(0, 256, (6, 28, 28)) / 255., root / 't10k-images-idx3-ubyte.gz')
    write_idx(rng.integers(0, 10, 6), root / 't10k-labels-idx1-ubyte.gz')
    test = load_split(str(tmp_path), 'mnist', 'test')
    assert test.shape == (28, 28)
    assert len(test) == 6
    with gzip.open(root / 't10k-labels-idx1-ubyte.gz') as f:
        assert f.read(4) == struct.pack('>I', 0x801)


def test_corrupt_with_zero_fraction_is_identity(tiny_images):
    out, mask = corrupt(tiny_images, CorruptionSpec('rotate90', 0.0, seed=3))
    assert not mask.any()
    assert np.array_equal(out.images, tiny_images.images)


def test_rotating_four_times_restores_image(tiny_images):
    data = tiny_images
    for _ in range(4):
        data, _ = corrupt(data, CorruptionSpec('rotate90', 1.0))
    assert np.array_equal(data.images, tiny_images.images)


def test_rotation_is_counter_clockwise_and_only_touches_masked_images(tiny_images):
    out, mask = corrupt(tiny_images, CorruptionSpec('rotate90', 0.5, seed=4))
    assert len(out) == len(tiny_images)
    assert np.array_equal(out.labels, tiny_images.labels)
    assert np.array_equal(out.images[~mask], tiny_images.images[~mask])
    i = int(np.argmax(mask))
    # 좌상단 -> 좌하단 (반시계 방향)
    assert out.images[i][-1, 0] == tiny_images.images[i][0, 0]
    for a, b in zip(out.images[mask], tiny_images.images[mask]):
        assert np.array_equal(np.sort(a, axis=None), np.sort(b, axis=None))


def test_invert_maps_p_to_one_minus_p(tiny_images):
    out, mask = corrupt(tiny_images, CorruptionSpec('invert', 1.0))
    assert mask.all()
    assert np.allclose(out.images, 1.0 - tiny_images.images)


def test_rotation_needs_square_images():
    data = ImageDataset(np.zeros((3, 2, 4)))
    with pytest.raises(ValueError):
        corrupt(data, CorruptionSpec('rotate90', 0.5))


def test_mask_size_is_binomial():
    data = ImageDataset(np.zeros((10000, 2, 2)))
    _, mask = corrupt(data, CorruptionSpec('rotate90', 0.3, seed=11))
    assert abs(mask.sum() - 3000) <= 3 * np.sqrt(10000 * 0.3 * 0.7)


def test_toy_ring_points_sit_on_centers_when_std_vanishes():
    data = toy_ring(400, modes=8, radius=2.0, std=1e-12, seed=0)
    centers = ring_centers(8, 2.0)
    points = data.images.reshape(-1, 2)
    assert np.abs(points - centers[data.labels]).max() <= 1e-9


def test_toy_ring_modes_are_balanced():
    n, modes = 8000, 8
    data = toy_ring(n, modes=modes, seed=1)
    counts = np.bincount(data.labels, minlength=modes)
    sd = np.sqrt(n * (1 / modes) * (1 - 1 / modes))
    assert np.all(np.abs(counts - n / modes) <= 4 * sd)


def test_zero_radius_centers_coincide():
    assert np.array_equal(ring_centers(8, 0.0), np.zeros((8, 2)))


def test_split_properties(tiny_images):
    (whole,) = split(tiny_images, [1.0], seed=0)
    assert np.array_equal(whole.images, tiny_images.images)

    data = ImageDataset(np.arange(2000, dtype=np.float64).reshape(2000, 1, 1))
    a, b = split(data, [0.5, 0.5], seed=5)
    assert len(a) == len(b) == 1000
    assert not set(a.images.ravel()) & set(b.images.ravel())
    a2, _ = split(data, [0.5, 0.5], seed=5)
    assert np.array_equal(a.images, a2.images)


def test_downsample_to_8x8_pads_bottom_right():
    images = np.ones((2, 28, 28))
    small = downsample_8x8(ImageDataset(images))
    assert small.shape == (8, 8)
    assert np.all(small.images[:, :7, :7] == 1.0)
    assert np.all(small.images[:, 7, :] == 0.0)
    assert np.all(small.images[:, :, 7] == 0.0)


def test_rotating_at_full_resolution_keeps_a_centred_square_in_place():
    images = np.zeros((3, 28, 28))
    images[:, 8:20, 8:20] = 1.0
    square = ImageDataset(images, name='square')
    rotated, _ = corrupt(square, CorruptionSpec('rotate90', 1.0))
    pooled = downsample_8x8(square).images
    assert np.array_equal(at_resolution(rotated, '8x8').images, pooled)
    # 축소 후 회전하면 padding 행이 안쪽으로 들어와 내용이 1px 밀림
    shifted, _ = corrupt(downsample_8x8(square), CorruptionSpec('rotate90', 1.0))
    assert not np.array_equal(shifted.images, pooled)


def test_at_resolution_passes_full_images_and_toy_points(tiny_images):
    assert at_resolution(tiny_images, 'full') is tiny_images
    points = toy_ring(16, seed=0)
    assert at_resolution(points, '8x8') is points
