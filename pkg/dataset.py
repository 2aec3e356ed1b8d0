import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np
import torch
from torch.utils.data import Dataset

from utils.errors import IdxParseError

# 상수 정의
CLASSES = [str(i) for i in range(10)]
IDX_LABEL_MAGIC = 0x00000801
IDX_IMAGE_MAGIC = 0x00000803
ROTATION_DIRECTION = 'counter-clockwise'

DATASET_FILES = {
    'train': ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte'),
    'test': ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte'),
}
DATASET_DIRS = {'mnist': 'mnist', 'fashion-mnist': 'fashion-mnist'}


@dataclass
class CorruptionSpec:
    kind: str = 'rotate90'    # rotate90 | invert
    fraction: float = 0.0     # 이미지별 독립 손상 확률
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ('rotate90', 'invert'):
            raise ValueError(f"unsupported corruption kind: {self.kind}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"corruption fraction must lie in [0, 1], got {self.fraction}")


class ImageDataset(Dataset):
    """Images (n × h × w, values in [0, 1]) with optional class ids in [0, num_classes)."""

    def __init__(self, images, labels=None, name='dataset', num_classes=len(CLASSES)):
        self.images = np.asarray(images, dtype=np.float64)
        if self.images.ndim != 3:
            raise ValueError(f"images must be n x h x w, got shape {self.images.shape}")
        if not np.all(np.isfinite(self.images)):
            raise ValueError(f"{name}: images contain non-finite values")
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)
        self.name = name
        self.num_classes = num_classes
        if self.labels is not None:
            if self.labels.shape != (len(self.images),):
                raise ValueError(f"{name}: {len(self.images)} images but labels of shape {self.labels.shape}")
            if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= num_classes):
                raise ValueError(f"{name}: labels must lie in [0, {num_classes})")

    @property
    def shape(self):
        return self.images.shape[1:]

    @property
    def dim(self):
        return int(np.prod(self.shape))

    def flat(self) -> torch.Tensor:
        return torch.from_numpy(self.images.reshape(len(self.images), -1).copy())

    def subset(self, indices, name=None):
        labels = None if self.labels is None else self.labels[indices]
        return ImageDataset(self.images[indices], labels, name or self.name, self.num_classes)

    def __len__(self):
        return len(self.images)

    def __getitem__(self, item):
        image = torch.from_numpy(self.images[item].reshape(-1).copy())
        label = -1 if self.labels is None else int(self.labels[item])
        return image, label


def _open(path):
    return gzip.open(path, 'rb') if str(path).endswith('.gz') else open(path, 'rb')


def load_idx(path, num_classes=None) -> np.ndarray:
    """Read an IDX file: images (0x803) come back as float64 in [0, 1], labels (0x801) as int64."""
    with _open(path) as f:
        data = f.read()
    if len(data) < 4:
        raise IdxParseError("file shorter than the magic number", len(data))
    magic = struct.unpack_from('>I', data, 0)[0]
    if magic not in (IDX_LABEL_MAGIC, IDX_IMAGE_MAGIC):
        raise IdxParseError(f"bad magic 0x{magic:08x}", 0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxParseError("truncated dimension header", len(data))
    dims = struct.unpack_from(f'>{ndim}I', data, 4)
    count = int(np.prod(dims))
    if len(data) < header + count:
        raise IdxParseError(f"truncated payload: expected {count} bytes", len(data))
    if len(data) > header + count:
        raise IdxParseError("trailing bytes after payload", header + count)
    payload = np.frombuffer(data, dtype=np.uint8, count=count, offset=header).reshape(dims)

    if magic == IDX_LABEL_MAGIC:
        labels = payload.astype(np.int64)
        if num_classes is not None and len(labels) and labels.max() >= num_classes:
            bad = int(np.argmax(labels >= num_classes))
            raise IdxParseError(f"label {labels[bad]} outside [0, {num_classes})", header + bad)
        return labels
    return payload.astype(np.float64) / 255.


def write_idx(array, path):
    """Write images (floats in [0, 1], n × h × w) or labels (integers, n) as IDX, gzip if path ends in .gz."""
    array = np.asarray(array)
    if array.size == 0 or array.ndim == 0:
        raise ValueError("refusing to write an empty tensor")
    if array.ndim == 1:
        if not np.all(np.equal(np.mod(array, 1), 0)) or array.min() < 0 or array.max() > 255:
            raise ValueError("labels must be integers in [0, 255]")
        magic, payload = IDX_LABEL_MAGIC, array.astype(np.uint8)
    elif array.ndim == 3:
        if not np.all(np.isfinite(array)) or array.min() < 0.0 or array.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        magic, payload = IDX_IMAGE_MAGIC, np.rint(array.astype(np.float64) * 255.).astype(np.uint8)
    else:
        raise ValueError(f"IDX writer supports 1-D labels or 3-D images, got {array.ndim}-D")
    header = struct.pack('>I', magic) + struct.pack(f'>{array.ndim}I', *array.shape)
    opener = gzip.open if str(path).endswith('.gz') else open
    with opener(path, 'wb') as f:
        f.write(header)
        f.write(payload.tobytes())


def corrupt(dataset: ImageDataset, spec: CorruptionSpec):
    """Alter each image independently with probability `spec.fraction`.

    Returns (new dataset, boolean mask of altered indices). Rotation is 90° counter-clockwise.
    """
    if spec.kind == 'rotate90' and dataset.shape[0] != dataset.shape[1]:
        raise ValueError(f"rotate90 needs square images, got {dataset.shape}")
    rng = np.random.default_rng(spec.seed)
    mask = rng.random(len(dataset)) < spec.fraction
    images = dataset.images.copy()
    if spec.kind == 'rotate90':
        images[mask] = np.rot90(images[mask], k=1, axes=(1, 2))
    else:
        images[mask] = 1.0 - images[mask]
    corrupted = ImageDataset(images, dataset.labels, f"{dataset.name}+{spec.kind}", dataset.num_classes)
    return corrupted, mask


def ring_centers(modes=8, radius=2.0):
    angles = 2 * np.pi * np.arange(modes) / modes
    return np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)


def toy_ring(n, modes=8, radius=2.0, std=0.02, seed=0) -> ImageDataset:
    """Mixture of `modes` isotropic Gaussians on a regular polygon; points are stored as 1 × 2 images."""
    if modes < 1:
        raise ValueError("modes must be >= 1")
    if not std > 0:
        raise ValueError("std must be positive")
    if n < modes:
        raise ValueError(f"n={n} is smaller than the number of modes {modes}")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, modes, size=n)
    points = ring_centers(modes, radius)[labels] + std * rng.standard_normal((n, 2))
    return ImageDataset(points.reshape(n, 1, 2), labels, f"toy_ring{modes}", num_classes=modes)


def split(dataset: ImageDataset, fractions, seed=0):
    fractions = np.asarray(fractions, dtype=np.float64)
    if abs(fractions.sum() - 1.0) > 1e-9 or np.any(fractions < 0):
        raise ValueError(f"fractions must be nonnegative and sum to 1, got {fractions.tolist()}")
    perm = np.random.default_rng(seed).permutation(len(dataset))
    bounds = np.rint(np.cumsum(fractions) * len(dataset)).astype(int)
    bounds[-1] = len(dataset)
    parts, start = [], 0
    for i, stop in enumerate(bounds):
        if stop <= start:
            raise ValueError(f"split part {i} would be empty")
        parts.append(dataset.subset(np.sort(perm[start:stop]), f"{dataset.name}[{i}]"))
        start = stop
    return parts


def downsample_8x8(dataset: ImageDataset) -> ImageDataset:
    """28 × 28 → 4 × 4 block means (7 × 7), zero-padded on the bottom/right to 8 × 8."""
    if dataset.shape != (28, 28):
        raise ValueError(f"downsample_8x8 expects 28 x 28 images, got {dataset.shape}")
    n = len(dataset)
    pooled = dataset.images.reshape(n, 7, 4, 7, 4).mean(axis=(2, 4))
    padded = np.zeros((n, 8, 8), dtype=np.float64)
    padded[:, :7, :7] = pooled
    return ImageDataset(padded, dataset.labels, f"{dataset.name}@8x8", dataset.num_classes)


def _find(data_dir, stem):
    for candidate in (stem, stem + '.gz', stem.replace('-idx', '.idx'), stem.replace('-idx', '.idx') + '.gz'):
        path = os.path.join(data_dir, candidate)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"{stem}(.gz) not found in {data_dir}")


def load_split(data_dir, name, part='train') -> ImageDataset:
    """MNIST-family split from `data_dir/<name>/` (or `data_dir` itself)."""
    root = os.path.join(data_dir, DATASET_DIRS.get(name, name))
    if not os.path.isdir(root):
        root = data_dir
    image_stem, label_stem = DATASET_FILES[part]
    images = load_idx(_find(root, image_stem))
    labels = load_idx(_find(root, label_stem), num_classes=len(CLASSES))
    return ImageDataset(images, labels, f"{name}-{part}")


def _limit(dataset, limit):
    return dataset if not limit or limit >= len(dataset) else dataset.subset(np.arange(limit))


def at_resolution(dataset: ImageDataset, resolution) -> ImageDataset:
    """Image at the training resolution; toy points and 'full' pass through."""
    if resolution == '8x8' and dataset.shape != (1, 2):
        return downsample_8x8(dataset)
    return dataset


def load_experiment_data(cfg, resize=True):
    """(train, test) for an ExperimentConfig, before any corruption.

    Corruption belongs at full resolution, so callers that corrupt pass
    `resize=False` and call `at_resolution` afterwards.
    """
    if cfg.dataset == 'toy_ring':
        train = toy_ring(cfg.toy_n, cfg.toy_modes, cfg.toy_radius, cfg.toy_std, seed=cfg.seed)
        test = toy_ring(cfg.toy_n, cfg.toy_modes, cfg.toy_radius, cfg.toy_std, seed=cfg.seed + 1)
        return train, test
    train = _limit(load_split(cfg.resolved_data_dir(), cfg.dataset, 'train'), cfg.train_limit)
    test = _limit(load_split(cfg.resolved_data_dir(), cfg.dataset, 'test'), cfg.test_limit)
    if resize:
        train, test = at_resolution(train, cfg.resolution), at_resolution(test, cfg.resolution)
    return train, test
