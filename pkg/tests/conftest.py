import os
import sys

import numpy as np
import pytest
import torch

# 루트의 스크립트(dataset.py, trainer.py ...)를 import 할 수 있도록
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from dataset import ImageDataset  # noqa: E402


@pytest.fixture
def blobs():
    """Two linearly separable 2-D blobs as 1 x 2 images, labels 0/1."""
    rng = np.random.default_rng(0)
    n = 200
    labels = np.repeat([0, 1], n // 2)
    centers = np.array([[-2.0, -2.0], [2.0, 2.0]])
    points = centers[labels] + 0.3 * rng.standard_normal((n, 2))
    return ImageDataset(points.reshape(n, 1, 2), labels, 'blobs', num_classes=2)


@pytest.fixture
def tiny_images():
    """Forty random 4 x 4 images in [0, 1] with labels 0..9."""
    rng = np.random.default_rng(1)
    return ImageDataset(rng.random((40, 4, 4)), rng.integers(0, 10, 40), 'tiny')


@pytest.fixture
def generator():
    return torch.Generator().manual_seed(0)
