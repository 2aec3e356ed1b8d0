import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm
import wandb

from accountant import (
    DEFAULT_PERCENTILES,
    AccountantConfig,
    GradientNormSample,
    PrivacyGuarantee,
    PrivacyLedger,
    cost_from_samples,
    extract_guarantee,
    ledger_update,
    worst_case_costs,
)
from dataset import ImageDataset
from mechanisms import MechanismParams, clip_rows, gaussian_mechanism
from model import (
    DenseNetwork,
    OptimizerConfig,
    build_network,
    forward,
    mean_loss,
    optimizer_step,
    per_example_gradients,
    save_network,
)
from utils.errors import ClippingContractError, PrivacyCeilingExceeded
from utils.rng import Streams

HISTORY_COLUMNS = ['step', 'loss', 'batch_size', 'bdp_epsilon', 'wc_epsilon', 'wall_time']


def convert_seconds_to_hms(seconds):
    """초를 시, 분, 초로 변환하는 함수"""
    hours = seconds // 3600
    minutes = (seconds % 3600) // 60
    seconds = seconds % 60
    return f"{int(hours):02d}:{int(minutes):02d}:{int(seconds):02d}"


def set_seed(seed=123):
    torch.manual_seed(seed)
    np.random.seed(seed)
    random.seed(seed)


def save_model(net, model_path):
    save_network(net, model_path)


def log_metrics(metrics):
    # wandb.init 이전(테스트 등)에는 기록하지 않음
    if wandb.run is not None:
        wandb.log(metrics)


@dataclass
class TrainConfig:
    steps: int
    q: float
    mechanism: MechanismParams
    optimizer: OptimizerConfig
    accountant: Optional[AccountantConfig] = None   # None = non-private, no ledger
    seed: int = 0
    hidden: Sequence[int] = (200,)
    hidden_activation: str = 'selu'
    loss: str = 'softmax_cross_entropy'
    bdp_delta: float = 1e-10
    dp_delta: float = 1e-5
    percentiles: Sequence[float] = DEFAULT_PERCENTILES
    epsilon_ceiling: float = 0.0                    # 0 = 제한 없음
    ceiling_track: str = 'bdp'
    on_ceiling: str = 'stop'
    log_every: int = 50
    desc: str = 'Private classifier'

    def __post_init__(self):
        if self.steps <= 0:
            raise ValueError(f"step budget must be positive, got {self.steps}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.accountant is None and self.mechanism.private:
            raise ValueError("a noised run needs an AccountantConfig")
        if self.accountant is not None and self.accountant.q != self.q:
            raise ValueError(f"accountant q {self.accountant.q} != sampling q {self.q}")

    @property
    def private(self):
        return self.accountant is not None

    def non_private(self, **changes):
        """Same run without clipping, noise or ledger (plain minibatch SGD)."""
        return replace(self, mechanism=MechanismParams(math.inf, 0.0), accountant=None,
                       epsilon_ceiling=0.0, **changes)


@dataclass
class StepResult:
    net: DenseNetwork
    state: dict
    loss: float
    batch_size: int
    norms: Optional[np.ndarray] = None      # 회계용으로 샘플링한 clipped gradient norm
    skipped: bool = False


def poisson_batch(n, q, generator=None):
    return (torch.rand(n, generator=generator, dtype=torch.float64) < q).nonzero().flatten()


def _clipped_gradients(net, batch, labels, loss, clip_norm):
    grads = per_example_gradients(net, batch, labels, loss)
    clipped, _ = clip_rows(grads, clip_norm)
    norms = torch.linalg.vector_norm(clipped, dim=1)
    if math.isfinite(clip_norm) and bool((norms > clip_norm).any()):
        i = int(torch.argmax(norms))
        raise ClippingContractError(f"example {i} contributes norm {float(norms[i])!r} > {clip_norm!r}")
    return clipped, norms


def _take(labels, indices):
    return None if labels is None else labels[indices]


def private_step(net, batch, labels, loss, mech: MechanismParams, ledger: Optional[PrivacyLedger], rng,
                 *, optimizer: OptimizerConfig, state=None, expected_batch=1.0, pool=None,
                 sample_rng=None) -> StepResult:
    """clip → 합 → N(0, C²σ²I) → q·n 으로 나눠 step, ledger 가 있으면 pool 에서 m 개 norm 을 뽑아 회계"""
    batch = torch.as_tensor(batch, dtype=torch.float64)
    if batch.shape[0] == 0:
        # 빈 batch 는 아무것도 바꾸지 않음
        return StepResult(net, dict(state or {}), math.nan, 0, skipped=True)

    step_loss = mean_loss(net, batch, labels, loss)
    clipped, _ = _clipped_gradients(net, batch, labels, loss, mech.clip_norm)
    noised = gaussian_mechanism(clipped.sum(dim=0), mech, rng)

    norms = None
    if ledger is not None:
        if pool is None:
            raise ValueError("accounting needs the training pool to sample norms from")
        inputs, pool_labels = pool
        picks = torch.randint(len(inputs), (ledger.config.m,), generator=sample_rng or rng)
        _, sample_norms = _clipped_gradients(net, inputs[picks], _take(pool_labels, picks), loss, mech.clip_norm)
        norms = sample_norms.numpy().copy()
        sample = GradientNormSample(norms, ledger.iterations)
        ledger_update(ledger, cost_from_samples(sample, ledger.config), worst_case_costs(ledger.config))

    net, state = optimizer_step(net, noised / expected_batch, optimizer, state)
    return StepResult(net, state, step_loss, int(batch.shape[0]), norms)


def current_epsilons(ledger, delta):
    return (extract_guarantee(ledger, delta=delta, track='bdp', percentiles=()).epsilon,
            extract_guarantee(ledger, delta=delta, track='worst_case').epsilon)


def ceiling_hit(config, ledger):
    if ledger is None or not config.epsilon_ceiling:
        return None
    bdp_eps, wc_eps = current_epsilons(ledger, config.bdp_delta)
    eps = bdp_eps if config.ceiling_track == 'bdp' else wc_eps
    return eps if eps > config.epsilon_ceiling else None


def final_guarantees(ledger, bdp_delta, dp_delta, percentiles=DEFAULT_PERCENTILES):
    if ledger is None:
        return None, None
    return (extract_guarantee(ledger, delta=bdp_delta, track='bdp', percentiles=percentiles),
            extract_guarantee(ledger, delta=dp_delta, track='worst_case'))


@dataclass
class ClassifierResult:
    net: DenseNetwork
    bdp: Optional[PrivacyGuarantee]
    wc: Optional[PrivacyGuarantee]
    partial: bool = False
    ledger: Optional[PrivacyLedger] = None
    history: pd.DataFrame = None
    norm_log: List[GradientNormSample] = field(default_factory=list)


def train_private_classifier(train: ImageDataset, config: TrainConfig, progress=True) -> ClassifierResult:
    if train.labels is None:
        raise ValueError(f"{train.name}: a classifier needs labels")
    print('Start training..')
    streams = Streams(config.seed)
    net = build_network([train.dim, *config.hidden, train.num_classes],
                        hidden_activation=config.hidden_activation, generator=streams['init'])
    inputs, labels = train.flat(), torch.from_numpy(train.labels)
    ledger = PrivacyLedger(config.accountant) if config.private else None
    expected_batch = config.q * len(train)

    state, rows, norm_log, partial = {}, [], [], False
    start = time.time()
    with tqdm(total=config.steps, desc=config.desc, disable=not progress) as pbar:
        for step in range(config.steps):
            indices = poisson_batch(len(train), config.q, streams['batch'])
            before = (net, state, ledger.copy() if ledger is not None else None)
            result = private_step(net, inputs[indices], labels[indices], config.loss, config.mechanism,
                                  ledger, streams['noise'], optimizer=config.optimizer, state=state,
                                  expected_batch=expected_batch, pool=(inputs, labels),
                                  sample_rng=streams['accountant'])
            net, state = result.net, result.state

            exceeded = ceiling_hit(config, ledger)
            if exceeded is not None:
                # 한도를 넘긴 step 은 되돌림
                net, state, ledger = before
                partial = True
                if config.on_ceiling == 'abort':
                    raise PrivacyCeilingExceeded(exceeded, config.epsilon_ceiling)
                print(f"Privacy ceiling reached at step {step}: epsilon {exceeded:.4f} > "
                      f"{config.epsilon_ceiling:.4f}, keeping the previous step.")
                break

            if result.norms is not None:
                norm_log.append(GradientNormSample(result.norms, step))
            bdp_eps, wc_eps = current_epsilons(ledger, config.bdp_delta) if ledger is not None else (0.0, 0.0)
            rows.append([step, result.loss, result.batch_size, bdp_eps, wc_eps, time.time() - start])

            if step % config.log_every == 0:
                log_metrics({'train/loss': result.loss, 'train/batch_size': result.batch_size,
                             'privacy/bdp_epsilon': bdp_eps, 'privacy/wc_epsilon': wc_eps, 'step': step})
            pbar.set_postfix(loss=round(result.loss, 4) if not result.skipped else None, eps=round(bdp_eps, 4))
            pbar.update(1)

    print(f'Total training completed in {convert_seconds_to_hms(time.time() - start)}.')
    bdp, wc = final_guarantees(ledger, config.bdp_delta, config.dp_delta, config.percentiles)
    return ClassifierResult(net, bdp, wc, partial, ledger, pd.DataFrame(rows, columns=HISTORY_COLUMNS), norm_log)


def predict(net, inputs, chunk=4096):
    inputs = torch.as_tensor(inputs, dtype=torch.float64)
    inputs = inputs.reshape(inputs.shape[0], -1)
    preds = [torch.argmax(forward(net, inputs[i:i + chunk]), dim=1) for i in range(0, len(inputs), chunk)]
    return torch.cat(preds) if preds else torch.zeros(0, dtype=torch.int64)


def evaluate(net, test: ImageDataset) -> float:
    if test.labels is None:
        raise ValueError(f"{test.name}: evaluation needs labels")
    if len(test) == 0:
        raise ValueError(f"{test.name}: empty test set")
    preds = predict(net, test.flat())
    return float((preds == torch.from_numpy(test.labels)).double().mean())


def train_student(train: ImageDataset, config: TrainConfig, batch_size=64, progress=False) -> DenseNetwork:
    """Non-private minibatch training on (synthetic) labeled data."""
    q = min(1.0, batch_size / len(train))
    student_config = config.non_private(q=q, desc='Student')
    return train_private_classifier(train, student_config, progress=progress).net
