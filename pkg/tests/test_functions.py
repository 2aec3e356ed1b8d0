import numpy as np
import pytest

from functions import label_histogram, load_pgm, make_grid, read_report, save_pgm, write_report
from utils.errors import DegenerateLabelWarning


def test_grid_size_and_separators():
    images = np.ones((64, 28, 28))
    grid = make_grid(images, 8, 8)
    assert grid.shape == (232, 232)
    assert grid.dtype == np.uint8
    assert np.all(grid[28, :] == 0)
    assert np.all(grid[:28, :28] == 255)


def test_grid_leaves_missing_cells_black():
    grid = make_grid(np.ones((3, 2, 2)), 2, 2)
    assert grid[3:5, 3:5].max() == 0
    assert grid[:2, :2].min() == 255


def test_pgm_roundtrip(tmp_path):
    grid = make_grid(np.random.default_rng(0).random((4, 3, 3)), 2, 2)
    save_pgm(grid, tmp_path / 'grid.pgm')
    assert (tmp_path / 'grid.pgm').read_bytes()[:2] == b'P5'
    assert np.array_equal(load_pgm(tmp_path / 'grid.pgm'), grid)


def test_save_pgm_needs_uint8(tmp_path):
    with pytest.raises(ValueError):
        save_pgm(np.zeros((2, 2)), tmp_path / 'x.pgm')


def test_label_histogram():
    counts, warning = label_histogram([0, 1, 1, 9], 10)
    assert counts == [1, 2, 0, 0, 0, 0, 0, 0, 0, 1]
    assert warning is None
    with pytest.warns(DegenerateLabelWarning):
        _, warning = label_histogram([4] * 5, 10)
    assert 'class 4' in warning


def test_report_roundtrip_handles_numpy_and_infinity(tmp_path):
    write_report({'a': np.float64(0.5), 'b': np.arange(3), 'c': float('inf')}, tmp_path / 'r.json')
    report = read_report(tmp_path / 'r.json')
    assert report == {'schema_version': 1, 'a': 0.5, 'b': [0, 1, 2], 'c': 'inf'}
