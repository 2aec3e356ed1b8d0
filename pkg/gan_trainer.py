import math
import time
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
import torch
from torch.func import grad
from tqdm import tqdm

from accountant import AccountantConfig, GradientNormSample, PrivacyLedger
from dataset import CorruptionSpec, ImageDataset, at_resolution, corrupt, split
from loss import wasserstein_critic_fake, wasserstein_critic_real, wasserstein_generator
from mechanisms import MechanismParams, clip_to_norm
from model import (
    DenseNetwork,
    OptimizerConfig,
    apply_flat,
    batch_gradient,
    build_network,
    clip_weights,
    forward,
    optimizer_step,
)
from trainer import (
    HISTORY_COLUMNS,
    TrainConfig,
    ceiling_hit,
    convert_seconds_to_hms,
    current_epsilons,
    evaluate,
    log_metrics,
    poisson_batch,
    predict,
    private_step,
    train_private_classifier,
)
from utils.errors import NonFiniteLossError, NumericDivergence, PrivacyCeilingExceeded
from utils.rng import Streams, make_generator


@dataclass
class GanConfig:
    steps: int                                  # generator step 수
    q: float
    mechanism: MechanismParams
    optimizer: OptimizerConfig = OptimizerConfig('rmsprop', 5e-5)
    accountant: Optional[AccountantConfig] = None   # None = non-private
    latent_dim: int = 64
    critic_steps: int = 5
    weight_clip: float = 0.01
    generator_hidden: Sequence[int] = (256, 256)
    critic_hidden: Sequence[int] = (256, 64)
    squash: bool = True                         # tanh 출력을 (x+1)/2 로 [0, 1] 이미지에 매핑
    clip_generator: float = 0.0                 # > 0 이면 generator gradient 를 이 norm 으로 클리핑
    seed: int = 0
    bdp_delta: float = 1e-10
    dp_delta: float = 1e-5
    epsilon_ceiling: float = 0.0
    ceiling_track: str = 'bdp'
    on_ceiling: str = 'stop'
    log_every: int = 50

    def __post_init__(self):
        if self.critic_steps < 1:
            raise ValueError(f"critic_steps must be >= 1, got {self.critic_steps}")
        if not self.weight_clip > 0:
            raise ValueError(f"weight_clip must be positive, got {self.weight_clip}")
        if self.steps <= 0:
            raise ValueError(f"step budget must be positive, got {self.steps}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.accountant is None and self.mechanism.private:
            raise ValueError("a noised run needs an AccountantConfig")


@dataclass
class SyntheticBatch:
    samples: torch.Tensor       # n × dims
    checkpoint: str             # generator fingerprint
    seed: int

    def __len__(self):
        return self.samples.shape[0]

    def as_images(self, shape):
        return self.samples.reshape(len(self), *shape).numpy()


@dataclass
class GanResult:
    generator: DenseNetwork
    critic: DenseNetwork
    ledger: Optional[PrivacyLedger]
    partial: bool = False
    history: pd.DataFrame = None
    norm_log: List[GradientNormSample] = field(default_factory=list)


def _squash(out):
    return (out + 1.0) / 2.0


def _generator_output(params, z, architecture, squash):
    out = apply_flat(params, z, architecture)
    return _squash(out) if squash else out


def build_gan(data_dim, config: GanConfig, streams: Streams):
    generator = build_network([config.latent_dim, *config.generator_hidden, data_dim],
                              output_activation='tanh' if config.squash else 'identity',
                              generator=streams['init_generator'])
    critic = build_network([data_dim, *config.critic_hidden, 1], generator=streams['init_critic'])
    return generator, clip_weights(critic, config.weight_clip)


def generator_gradient(generator, critic, z, squash):
    """∂/∂θ_G of −mean critic(G(z)); only the generator parameters move."""
    critic_params, critic_arch = critic.flatten(), critic.architecture
    gen_arch = generator.architecture

    def generator_loss(params):
        fake = _generator_output(params, z, gen_arch, squash)
        return wasserstein_generator(apply_flat(critic_params, fake, critic_arch))

    return grad(generator_loss)(generator.flatten())


def train_wgan(real: ImageDataset, config: GanConfig, ledger: Optional[PrivacyLedger] = None,
               streams: Optional[Streams] = None, progress=True) -> GanResult:
    """Weight-clipped WGAN; only the real half of each critic update is clipped, noised and accounted."""
    if config.squash and (real.images.min() < 0.0 or real.images.max() > 1.0):
        raise ValueError(f"{real.name}: image data must lie in [0, 1]")
    if config.accountant is not None and ledger is None:
        ledger = PrivacyLedger(config.accountant)
    streams = streams or Streams(config.seed)
    inputs = real.flat()
    n = len(real)
    expected_batch = config.q * n
    fake_size = max(1, int(round(expected_batch)))
    generator, critic = build_gan(real.dim, config, streams)
    gen_state, critic_state = {}, {}
    ceiling = TrainConfig(steps=1, q=config.q, mechanism=config.mechanism, optimizer=config.optimizer,
                          accountant=config.accountant, bdp_delta=config.bdp_delta,
                          epsilon_ceiling=config.epsilon_ceiling, ceiling_track=config.ceiling_track)

    print('Start training..')
    rows, norm_log, partial = [], [], False
    start = time.time()
    with tqdm(total=config.steps, desc='WGAN', disable=not progress) as pbar:
        for step in range(config.steps):
            good = {'generator': generator, 'critic': critic}
            try:
                for _ in range(config.critic_steps):
                    indices = poisson_batch(n, config.q, streams['batch'])
                    before = (critic, critic_state, ledger.copy() if ledger is not None else None)
                    # real half: private_step 가 clip + noise + 회계를 담당
                    result = private_step(critic, inputs[indices], None, 'wasserstein_critic_real',
                                          config.mechanism, ledger, streams['noise'],
                                          optimizer=config.optimizer, state=critic_state,
                                          expected_batch=expected_batch, pool=(inputs, None),
                                          sample_rng=streams['accountant'])
                    critic = clip_weights(result.net, config.weight_clip)
                    critic_state = result.state

                    exceeded = ceiling_hit(ceiling, ledger)
                    if exceeded is not None:
                        critic, critic_state, ledger = before
                        partial = True
                        if config.on_ceiling == 'abort':
                            raise PrivacyCeilingExceeded(exceeded, config.epsilon_ceiling)
                        break
                    if result.norms is not None:
                        norm_log.append(GradientNormSample(result.norms, len(norm_log)))

                    # fake half: 생성 샘플만 사용하므로 noise / 회계 없음
                    z = torch.randn(fake_size, config.latent_dim, generator=streams['latent'], dtype=torch.float64)
                    with torch.no_grad():
                        fake = _generator_output(generator.flatten(), z, generator.architecture, config.squash)
                    fake_grad = batch_gradient(critic, fake, None, 'wasserstein_critic_fake')
                    critic, critic_state = optimizer_step(critic, fake_grad, config.optimizer, critic_state)
                    critic = clip_weights(critic, config.weight_clip)

                    critic_loss = float(wasserstein_critic_fake(forward(critic, fake)))
                    if result.batch_size:
                        critic_loss += float(wasserstein_critic_real(forward(critic, inputs[indices])))
                    if not math.isfinite(critic_loss):
                        raise NumericDivergence(f"critic loss {critic_loss} at generator step {step}")
                if partial:
                    print(f"Privacy ceiling reached after {step} generator steps.")
                    break

                z = torch.randn(fake_size, config.latent_dim, generator=streams['latent'], dtype=torch.float64)
                gen_grad = generator_gradient(generator, critic, z, config.squash)
                if config.clip_generator > 0:
                    gen_grad = clip_to_norm(gen_grad, config.clip_generator)
                generator, gen_state = optimizer_step(generator, gen_grad, config.optimizer, gen_state)
                if not torch.isfinite(generator.flatten()).all():
                    raise NumericDivergence(f"non-finite generator parameters at step {step}")
            except (NumericDivergence, NonFiniteLossError) as e:
                raise NumericDivergence(str(e), step=step, state=good) from e

            bdp_eps, wc_eps = current_epsilons(ledger, config.bdp_delta) if ledger is not None else (0.0, 0.0)
            rows.append([step, critic_loss, result.batch_size, bdp_eps, wc_eps, time.time() - start])
            if step % config.log_every == 0:
                log_metrics({'gan/critic_loss': critic_loss, 'privacy/bdp_epsilon': bdp_eps,
                             'privacy/wc_epsilon': wc_eps, 'step': step})
            pbar.set_postfix(critic_loss=round(critic_loss, 4), eps=round(bdp_eps, 4))
            pbar.update(1)

    print(f'Total training completed in {convert_seconds_to_hms(time.time() - start)}.')
    return GanResult(generator, critic, ledger, partial, pd.DataFrame(rows, columns=HISTORY_COLUMNS), norm_log)


def generate(generator: DenseNetwork, n, seed, squash=None) -> SyntheticBatch:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if squash is None:
        squash = generator.layers[-1].activation == 'tanh'
    z = torch.randn(n, generator.input_dim, generator=make_generator(seed, 'generate'), dtype=torch.float64)
    with torch.no_grad():
        samples = forward(generator, z)
    if squash:
        samples = _squash(samples).clamp(0.0, 1.0)
    return SyntheticBatch(samples, generator.fingerprint(), int(seed))


def _as_points(samples):
    if isinstance(samples, SyntheticBatch):
        samples = samples.samples
    return np.asarray(samples, dtype=np.float64).reshape(len(samples), -1)


def mode_coverage(samples, centers, std, threshold=0.02):
    """Modes holding at least `threshold` of the samples within 3·std of their center."""
    points = _as_points(samples)
    centers = np.asarray(centers, dtype=np.float64)
    if points.shape[1] != centers.shape[1]:
        raise ValueError(f"samples have {points.shape[1]} dims, centers {centers.shape[1]}")
    distances = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    nearest = distances.argmin(axis=1)
    near = distances[np.arange(len(points)), nearest] <= 3.0 * std
    fractions = np.bincount(nearest[near], minlength=len(centers)) / max(len(points), 1)
    return int((fractions >= threshold).sum()), fractions


class RotationDetector(NamedTuple):
    net: DenseNetwork
    fpr: float      # 깨끗한 held-out 이미지 중 rotated 로 판정된 비율
    tpr: float
    kind: str


def _with_alterations(dataset: ImageDataset, kind, name, resolution='full'):
    # 변형은 원본 해상도에서, 그 다음 축소
    altered, _ = corrupt(dataset, CorruptionSpec(kind, 1.0))
    dataset, altered = at_resolution(dataset, resolution), at_resolution(altered, resolution)
    images = np.concatenate([dataset.images, altered.images])
    labels = np.concatenate([np.zeros(len(dataset), np.int64), np.ones(len(dataset), np.int64)])
    return ImageDataset(images, labels, name, num_classes=2), altered


def train_rotation_detector(public: ImageDataset, hidden=(64,), steps=1000, seed=0, batch_size=128,
                            kind='rotate90', learning_rate=0.05, resolution='full') -> RotationDetector:
    """upright(0) / altered(1) 분류기, FPR / TPR 은 held-out 20% 에서 측정"""
    fit_part, held_out = split(public, [0.8, 0.2], seed=seed)
    fit, _ = _with_alterations(fit_part, kind, f"{public.name}:detector", resolution)
    q = min(1.0, batch_size / len(fit))
    config = TrainConfig(steps=steps, q=q, mechanism=MechanismParams(math.inf, 0.0),
                         optimizer=OptimizerConfig('sgd', learning_rate), seed=seed,
                         hidden=tuple(hidden), desc='Detector')
    net = train_private_classifier(fit, config, progress=False).net
    _, altered = _with_alterations(held_out, kind, 'held-out', resolution)
    held_out = at_resolution(held_out, resolution)
    fpr = 1.0 - evaluate(net, ImageDataset(held_out.images, np.zeros(len(held_out), np.int64), num_classes=2))
    tpr = evaluate(net, ImageDataset(altered.images, np.ones(len(held_out), np.int64), num_classes=2))
    return RotationDetector(net, fpr, tpr, kind)


def rotation_statistic(samples, detector) -> float:
    if isinstance(detector, RotationDetector):
        detector = detector.net
    if len(samples) == 0:
        raise ValueError("no samples to inspect")
    if isinstance(samples, ImageDataset):
        inputs = samples.flat()
    else:
        inputs = torch.as_tensor(_as_points(samples))
    return float((predict(detector, inputs) == 1).double().mean())
