import math
import warnings

import numpy as np
import pytest
import torch
from scipy import stats

from mechanisms import (
    MechanismParams,
    calibrate_sigma,
    clip_rows,
    clip_to_norm,
    gaussian_mechanism,
    privacy_loss,
)
from utils.errors import PrivacyBoundWarning
from utils.rng import make_generator


def test_clip_rescales_to_norm():
    out = clip_to_norm(torch.tensor([3.0, 4.0]), 1.0)
    assert out.tolist() == pytest.approx([0.6, 0.8], abs=1e-15)
    assert float(torch.linalg.vector_norm(out)) <= 1.0


def test_clip_leaves_short_vectors_and_zero_alone():
    v = torch.tensor([0.1, -0.2], dtype=torch.float64)
    assert torch.equal(clip_to_norm(v, 1.0), v)
    assert torch.equal(clip_to_norm(torch.zeros(3), 1.0), torch.zeros(3, dtype=torch.float64))


def test_clip_is_idempotent_and_homogeneous_in_c():
    g = torch.Generator().manual_seed(0)
    for _ in range(200):
        v = 10 * torch.randn(7, generator=g, dtype=torch.float64)
        once = clip_to_norm(v, 0.7)
        assert float(torch.linalg.vector_norm(once)) <= 0.7
        assert torch.equal(clip_to_norm(once, 0.7), once)
        assert torch.allclose(clip_to_norm(3 * v, 2.1), 3 * once, rtol=1e-12)


def test_clip_rows_never_exceeds_bound():
    rows = 1e3 * torch.randn(500, 11, generator=torch.Generator().manual_seed(1), dtype=torch.float64)
    clipped, norms = clip_rows(rows, 1.0)
    assert bool((torch.linalg.vector_norm(clipped, dim=1) <= 1.0).all())
    assert torch.allclose(norms, torch.linalg.vector_norm(rows, dim=1))


def test_zero_noise_is_identity():
    total = torch.tensor([1.0, -2.0, 3.0], dtype=torch.float64)
    assert torch.equal(gaussian_mechanism(total, MechanismParams(1.0, 0.0)), total)


def test_noise_statistics():
    params = MechanismParams(clip_norm=2.0, noise_multiplier=1.5)
    total = torch.full((1_000_000,), 0.25, dtype=torch.float64)
    noised = gaussian_mechanism(total, params, make_generator(0, 'noise')).numpy()
    noise = noised - 0.25
    expected = params.noise_std ** 2
    assert abs(noise.var() - expected) <= 0.01 * expected
    assert abs(noised.mean() - 0.25) <= 4 * params.noise_std / 1000
    # 정규성: 10^6 샘플에서 skew ~ N(0, 6/n), excess kurtosis ~ N(0, 24/n)
    n = len(noise)
    assert abs(stats.skew(noise)) <= 5 * math.sqrt(6 / n)
    assert abs(stats.kurtosis(noise)) <= 5 * math.sqrt(24 / n)


def test_noise_is_replayable_from_named_stream():
    params = MechanismParams(1.0, 1.0)
    a = gaussian_mechanism(torch.zeros(10), params, make_generator(5, 'noise'))
    b = gaussian_mechanism(torch.zeros(10), params, make_generator(5, 'noise'))
    c = gaussian_mechanism(torch.zeros(10), params, make_generator(5, 'other'))
    assert torch.equal(a, b)
    assert not torch.equal(a, c)


def test_mechanism_params_validation():
    with pytest.raises(ValueError):
        MechanismParams(0.0, 1.0)
    with pytest.raises(ValueError):
        MechanismParams(1.0, -1.0)
    with pytest.raises(ValueError):
        MechanismParams(math.inf, 1.0)


def test_calibrate_sigma_reference_value():
    assert calibrate_sigma(1.0, 1e-5).sigma == pytest.approx(4.84480, abs=5e-6)


def test_calibrate_sigma_rejects_delta_at_or_above_one():
    with pytest.raises(ValueError):
        calibrate_sigma(1.0, 1.25)


def test_halving_epsilon_doubles_sigma():
    assert calibrate_sigma(0.5, 1e-5).sigma == pytest.approx(2 * calibrate_sigma(1.0, 1e-5).sigma, rel=1e-12)


def test_calibrate_warns_above_epsilon_one():
    with pytest.warns(PrivacyBoundWarning):
        result = calibrate_sigma(2.0, 1e-5)
    assert not result.valid
    assert result.warning
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        assert calibrate_sigma(1.0, 1e-5).valid


def test_privacy_loss_examples():
    assert privacy_loss(0.0, 0.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert privacy_loss(0.5, 0.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    for w in np.linspace(-3, 3, 13):
        assert privacy_loss(w, 0.7, 0.7, 2.0) == pytest.approx(0.0, abs=1e-12)
        assert privacy_loss(w, 0.0, 1.0, 0.5) == pytest.approx(-privacy_loss(w, 1.0, 0.0, 0.5), abs=1e-10)
