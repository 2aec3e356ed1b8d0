import os
from dataclasses import dataclass, field
from typing import List

from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from utils.errors import ConfigError

DATA_DIR_ENV = 'BDP_DATA_DIR'


@dataclass
class ExperimentConfig:
    # 데이터
    dataset: str = 'toy_ring'            # toy_ring | mnist | fashion-mnist
    data_dir: str = ''                   # 비어 있으면 $BDP_DATA_DIR
    resolution: str = 'full'             # full | 8x8
    train_limit: int = 0                 # 0 = 전체
    test_limit: int = 0
    toy_n: int = 2000
    toy_modes: int = 8
    toy_radius: float = 2.0
    toy_std: float = 0.02

    # 데이터 손상 (CorruptionSpec)
    corruption_kind: str = 'rotate90'
    corruption_fraction: float = 0.0
    corruption_seed: int = 0
    corrupt_test: bool = False

    # Gaussian mechanism
    clip_norm: float = 1.0
    noise_multiplier: float = 1.0
    calibrate_epsilon: float = 0.0       # > 0 이면 calibrate_sigma 로 noise_multiplier 결정
    calibrate_delta: float = 1e-5

    # accountant
    q: float = 0.01
    lambda_max: int = 32
    accountant_samples: int = 64
    gamma: float = 0.0                   # 0 = 1e-3 / 계획된 반복 수
    bdp_delta: float = 1e-10
    dp_delta: float = 1e-5
    percentiles: List[float] = field(default_factory=lambda: [0.9, 0.99, 0.999])
    epsilon_ceiling: float = 0.0         # 0 = 제한 없음
    ceiling_track: str = 'bdp'           # bdp | worst_case
    on_ceiling: str = 'stop'             # stop | abort

    # optimizer
    optimizer: str = 'rmsprop'
    learning_rate: float = 5e-5
    decay: float = 0.9
    eps: float = 1e-8

    # 학습
    seed: int = 0
    steps: int = 1000
    log_every: int = 50

    # GAN
    latent_dim: int = 64
    critic_steps: int = 5
    weight_clip: float = 0.01
    generator_hidden: List[int] = field(default_factory=lambda: [256, 256])
    critic_hidden: List[int] = field(default_factory=lambda: [256, 64])
    clip_generator: float = 0.0          # 0 = generator gradient 클리핑 없음

    # classifier / annotator / student
    classifier_hidden: List[int] = field(default_factory=lambda: [200])
    classifier_optimizer: str = 'sgd'
    classifier_learning_rate: float = 0.05
    train_baseline: bool = False
    student_budgets: List[int] = field(default_factory=lambda: [100, 300, 1000, 3000, 10000, -1])
    student_seeds: int = 3
    student_steps: int = 500
    student_batch: int = 64

    # inspect
    inspect_samples: int = 1000
    grid_rows: int = 8
    grid_cols: int = 8
    bug_margin: float = 0.10
    detector_steps: int = 1000
    detector_hidden: List[int] = field(default_factory=lambda: [64])
    inspect_dp_baseline: bool = False    # bug 데이터에 worst-case ceiling GAN 을 하나 더 학습

    # logging
    wandb_mode: str = 'disabled'
    wandb_project: str = 'bdp-gan'

    def resolved_data_dir(self):
        return self.data_dir or os.environ.get(DATA_DIR_ENV, './data')


def _strip_comment(line):
    return line.split('#', 1)[0].strip()


def parse_config_text(text, base=None):
    """Parse flat `key = value` text onto an ExperimentConfig.

    Each value is parsed by OmegaConf (YAML scalars and `[a, b]` lists) and
    type-checked against the structured schema; errors carry the line number.
    """
    schema = OmegaConf.structured(base if base is not None else ExperimentConfig)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        try:
            parsed = OmegaConf.from_dotlist([f"{key}={value}"])
            schema = OmegaConf.merge(schema, parsed)
        except OmegaConfBaseException as e:
            raise ConfigError(f"invalid value for {key!r}: {value!r} ({e})", line=lineno) from e
    return OmegaConf.to_object(schema)


def load_config(path=None, overrides=None):
    cfg = ExperimentConfig()
    if path is not None:
        with open(path, 'r') as f:
            cfg = parse_config_text(f.read())
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.dataset not in ('toy_ring', 'mnist', 'fashion-mnist'):
        raise ConfigError(f"unsupported dataset {cfg.dataset!r}")
    if cfg.resolution not in ('full', '8x8'):
        raise ConfigError(f"unsupported resolution {cfg.resolution!r}")
    if cfg.corruption_kind not in ('rotate90', 'invert'):
        raise ConfigError(f"unsupported corruption_kind {cfg.corruption_kind!r}")
    if not 0.0 <= cfg.corruption_fraction <= 1.0:
        raise ConfigError("corruption_fraction must lie in [0, 1]")
    if not 0.0 < cfg.q <= 1.0:
        raise ConfigError("q must lie in (0, 1]")
    if cfg.clip_norm <= 0:
        raise ConfigError("clip_norm must be positive")
    if cfg.noise_multiplier < 0:
        raise ConfigError("noise_multiplier must be nonnegative")
    if cfg.steps <= 0:
        raise ConfigError("steps must be positive")
    if cfg.critic_steps < 1:
        raise ConfigError("critic_steps must be >= 1")
    if cfg.weight_clip <= 0:
        raise ConfigError("weight_clip must be positive")
    if cfg.accountant_samples < 2:
        raise ConfigError("accountant_samples must be >= 2")
    if cfg.ceiling_track not in ('bdp', 'worst_case'):
        raise ConfigError(f"unsupported ceiling_track {cfg.ceiling_track!r}")
    if cfg.on_ceiling not in ('stop', 'abort'):
        raise ConfigError(f"unsupported on_ceiling {cfg.on_ceiling!r}")
    if cfg.inspect_dp_baseline and cfg.epsilon_ceiling <= 0:
        raise ConfigError("inspect_dp_baseline needs epsilon_ceiling > 0")
    if cfg.optimizer not in ('sgd', 'rmsprop') or cfg.classifier_optimizer not in ('sgd', 'rmsprop'):
        raise ConfigError("optimizer must be 'sgd' or 'rmsprop'")
    if cfg.wandb_mode not in ('online', 'offline', 'disabled'):
        raise ConfigError(f"unsupported wandb_mode {cfg.wandb_mode!r}")
    budgets = [b for b in cfg.student_budgets if b != -1]
    if any(b <= 0 for b in budgets) or budgets != sorted(budgets):
        raise ConfigError("student_budgets must be positive and ascending (-1 = all, last)")
    if -1 in cfg.student_budgets and cfg.student_budgets[-1] != -1:
        raise ConfigError("student_budgets: -1 (all) must be the last entry")
    return cfg


def config_echo(cfg):
    return OmegaConf.to_container(OmegaConf.structured(cfg), resolve=True)
