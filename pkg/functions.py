import json
import math
import warnings

import numpy as np
from PIL import Image

from utils.errors import DegenerateLabelWarning

REPORT_SCHEMA_VERSION = 1


## 이미지 grid (cell 마다 오른쪽/아래 1 pixel 검은 구분선)
def make_grid(images, rows, cols):
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3:
        raise ValueError(f"images must be n x h x w, got shape {images.shape}")
    if rows < 1 or cols < 1:
        raise ValueError("grid needs at least one row and one column")
    n, h, w = images.shape
    grid = np.zeros(((h + 1) * rows, (w + 1) * cols), dtype=np.uint8)
    pixels = np.rint(np.clip(images, 0.0, 1.0) * 255.).astype(np.uint8)
    for i in range(min(n, rows * cols)):
        r, c = divmod(i, cols)
        grid[r * (h + 1):r * (h + 1) + h, c * (w + 1):c * (w + 1) + w] = pixels[i]
    return grid


## Binary PGM (P5, maxval 255)
def save_pgm(array, path):
    array = np.asarray(array)
    if array.ndim != 2 or array.dtype != np.uint8:
        raise ValueError("PGM output needs a 2-D uint8 array")
    Image.fromarray(array).save(path, format='PPM')


def load_pgm(path):
    with Image.open(path) as image:
        if image.mode != 'L':
            raise ValueError(f"{path}: expected a greyscale PGM, got mode {image.mode}")
        return np.array(image)


def label_histogram(labels, num_classes):
    """Counts per class; warns when every label is the same class."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=num_classes)
    warning = None
    if len(labels) and np.count_nonzero(counts) == 1:
        warning = f"all {len(labels)} labels are class {int(np.argmax(counts))}"
        warnings.warn(warning, DegenerateLabelWarning, stacklevel=2)
    return counts.tolist(), warning


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def write_report(report, path):
    report = {'schema_version': REPORT_SCHEMA_VERSION, **report}
    with open(path, 'w') as f:
        json.dump(_jsonable(report), f, indent=2, ensure_ascii=False)
    return report


def read_report(path):
    with open(path, 'r') as f:
        return json.load(f)
