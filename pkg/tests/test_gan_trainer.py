import numpy as np
import pytest
import torch

import gan_trainer
from accountant import AccountantConfig, worst_case_costs
from dataset import CorruptionSpec, ImageDataset, corrupt, downsample_8x8, ring_centers, split, toy_ring
from gan_trainer import (
    GanConfig,
    build_gan,
    generate,
    generator_gradient,
    mode_coverage,
    rotation_statistic,
    train_rotation_detector,
    train_wgan,
)
from mechanisms import MechanismParams
from model import build_network, optimizer_step
from utils.errors import NumericDivergence
from utils.rng import Streams


def _toy_config(steps=3, private=True, **changes):
    sigma = 1.0 if private else 0.0
    accountant = None
    if private:
        accountant = AccountantConfig(q=0.5, sigma=sigma, m=4, lambda_grid=tuple(range(1, 9)))
    defaults = dict(steps=steps, q=0.5, mechanism=MechanismParams(1.0, sigma), accountant=accountant,
                    latent_dim=4, critic_steps=2, generator_hidden=(16,), critic_hidden=(16,), squash=False)
    defaults.update(changes)
    return GanConfig(**defaults)


def test_gan_config_validation():
    with pytest.raises(ValueError):
        _toy_config(critic_steps=0)
    with pytest.raises(ValueError):
        _toy_config(weight_clip=0.0)


def test_ledger_counts_only_critic_real_halves():
    result = train_wgan(toy_ring(200, seed=0), _toy_config(steps=3), progress=False)
    ledger = result.ledger
    assert ledger.iterations == 3 * 2
    assert len(result.norm_log) == ledger.iterations
    assert np.allclose(ledger.wc_costs, ledger.iterations * worst_case_costs(ledger.config))
    assert np.all(ledger.bdp_costs <= ledger.wc_costs)


def test_critic_weights_stay_clipped():
    config = _toy_config(steps=4, weight_clip=0.05)
    result = train_wgan(toy_ring(200, seed=1), config, progress=False)
    params = result.critic.flatten()
    assert float(params.abs().max()) <= 0.05
    assert len(result.history) == 4


def test_non_private_gan_has_no_ledger():
    result = train_wgan(toy_ring(200, seed=2), _toy_config(private=False), progress=False)
    assert result.ledger is None
    assert result.norm_log == []


def _ledger_sums(ledger):
    return ledger.bdp_costs.copy(), ledger.wc_costs.copy(), ledger.iterations, ledger.gamma_spent


def test_extra_generator_updates_leave_ledger_untouched():
    config = _toy_config(steps=3)
    result = train_wgan(toy_ring(200, seed=3), config, progress=False)
    bdp, wc, iterations, gamma = _ledger_sums(result.ledger)

    generator, state = result.generator, {}
    z_rng = torch.Generator().manual_seed(7)
    for _ in range(5):
        z = torch.randn(16, config.latent_dim, generator=z_rng, dtype=torch.float64)
        grad = generator_gradient(generator, result.critic, z, config.squash)
        generator, state = optimizer_step(generator, grad, config.optimizer, state)
    generate(generator, 100, seed=0)

    assert not torch.equal(generator.flatten(), result.generator.flatten())
    assert np.array_equal(result.ledger.bdp_costs, bdp)
    assert np.array_equal(result.ledger.wc_costs, wc)
    assert result.ledger.iterations == iterations
    assert result.ledger.gamma_spent == gamma


def test_generator_settings_do_not_change_worst_case_sums():
    data = toy_ring(200, seed=4)
    plain = train_wgan(data, _toy_config(steps=3), progress=False).ledger
    clipped = train_wgan(data, _toy_config(steps=3, clip_generator=1e-3, generator_hidden=(8, 8)),
                         progress=False).ledger
    assert np.array_equal(plain.wc_costs, clipped.wc_costs)
    assert plain.iterations == clipped.iterations
    assert plain.gamma_spent == clipped.gamma_spent


def test_image_gan_rejects_out_of_range_data():
    data = ImageDataset(np.full((10, 2, 2), 1.5))
    with pytest.raises(ValueError):
        train_wgan(data, _toy_config(squash=True), progress=False)


def test_divergence_carries_last_good_state(monkeypatch):
    def poisoned(net, *args, **kwargs):
        return torch.full((net.num_params,), float('nan'), dtype=torch.float64)

    monkeypatch.setattr(gan_trainer, 'batch_gradient', poisoned)
    with pytest.raises(NumericDivergence) as e:
        train_wgan(toy_ring(200, seed=3), _toy_config(), progress=False)
    assert e.value.step == 0
    assert set(e.value.state) == {'generator', 'critic'}
    assert torch.isfinite(e.value.state['critic'].flatten()).all()


def test_generate_is_deterministic_and_in_range():
    generator = build_network([4, 8, 6], output_activation='tanh', generator=torch.Generator().manual_seed(0))
    a, b = generate(generator, 50, seed=7), generate(generator, 50, seed=7)
    assert torch.equal(a.samples, b.samples)
    assert a.checkpoint == generator.fingerprint()
    assert not torch.equal(a.samples, generate(generator, 50, seed=8).samples)
    assert float(a.samples.min()) >= 0.0 and float(a.samples.max()) <= 1.0
    assert a.as_images((2, 3)).shape == (50, 2, 3)
    with pytest.raises(ValueError):
        generate(generator, 0, seed=0)


def test_mode_coverage_examples():
    centers = ring_centers(8, 2.0)
    count, fractions = mode_coverage(np.repeat(centers, 10, axis=0), centers, std=0.02)
    assert count == 8
    assert np.allclose(fractions, 0.125)

    count, _ = mode_coverage(np.repeat(centers[:1], 80, axis=0), centers, std=0.02)
    assert count == 1

    count, fractions = mode_coverage(ring_centers(8, 50.0), centers, std=0.02)
    assert count == 0
    assert not fractions.any()


def test_untrained_generator_collapses_onto_few_modes():
    config = GanConfig(steps=1, q=0.1, mechanism=MechanismParams(1.0, 0.0), squash=False)
    generator, _ = build_gan(2, config, Streams(0))
    count, _ = mode_coverage(generate(generator, 2000, seed=0), ring_centers(8, 2.0), std=0.02)
    assert count <= 3


def _upright_images(n, seed):
    """Bright top half over a dark bottom half; a quarter turn puts the bright half on the left."""
    rng = np.random.default_rng(seed)
    images = 0.2 * rng.random((n, 8, 8))
    images[:, :4, :] += rng.uniform(0.6, 0.8, (n, 1, 1))
    return ImageDataset(images, name='upright')


@pytest.fixture(scope='module')
def detector():
    public = _upright_images(600, seed=0)
    return public, train_rotation_detector(public, steps=300, seed=0, learning_rate=0.1)


def test_detector_separates_rotated_images(detector):
    _, det = detector
    assert det.tpr >= 0.9
    assert det.fpr <= 0.1


def test_rotation_statistic_matches_detector_rates(detector):
    public, det = detector
    _, held_out = split(public, [0.8, 0.2], seed=0)
    assert rotation_statistic(held_out, det) == pytest.approx(det.fpr, abs=1e-12)
    rotated, _ = corrupt(held_out, CorruptionSpec('rotate90', 1.0))
    assert rotation_statistic(rotated, det) == pytest.approx(det.tpr, abs=1e-12)

    mixed, mask = corrupt(held_out, CorruptionSpec('rotate90', 0.3, seed=5))
    f = mask.mean()
    assert abs(rotation_statistic(mixed, det) - (f * det.tpr + (1 - f) * det.fpr)) <= 0.05


def test_rotation_statistic_rejects_empty_input(detector):
    _, det = detector
    with pytest.raises(ValueError):
        rotation_statistic(np.zeros((0, 64)), det)


def test_detector_alters_before_downsampling():
    rng = np.random.default_rng(3)
    images = 0.1 * rng.random((40, 28, 28))
    images[:, :12, :] += 0.7
    public = ImageDataset(images, name='upright28')
    fit, altered = gan_trainer._with_alterations(public, 'rotate90', 'fit', resolution='8x8')

    rotated, _ = corrupt(public, CorruptionSpec('rotate90', 1.0))
    assert np.array_equal(altered.images, downsample_8x8(rotated).images)
    # padding 은 항상 마지막 행 / 열에 남음
    assert np.all(fit.images[:, 7, :] == 0) and np.all(fit.images[:, :, 7] == 0)

    det = train_rotation_detector(public, steps=5, seed=0, resolution='8x8')
    assert det.net.input_dim == 64
