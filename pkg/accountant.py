"""BDP track 과 worst-case track 을 같은 λ 위에서 함께 회계"""

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import binom

from utils.errors import ClippingContractError, InsufficientSamplesError

DEFAULT_LAMBDAS = tuple(range(1, 33))
DEFAULT_PERCENTILES = (0.9, 0.99, 0.999)
SIDES = ('left', 'right')
LEDGER_HEADER = '# bdp ledger v1'


@dataclass(frozen=True)
class AccountantConfig:
    q: float                    # per-point batch inclusion probability
    sigma: float                # noise multiplier
    clip_norm: float = 1.0
    m: int = 64                 # sampled norms per accounted iteration
    gamma: float = 1e-3         # UCB failure level per iteration
    lambda_grid: Tuple[int, ...] = DEFAULT_LAMBDAS

    def __post_init__(self):
        grid = tuple(int(l) for l in self.lambda_grid)
        object.__setattr__(self, 'lambda_grid', grid)
        if not grid or any(l < 1 for l in grid) or list(grid) != sorted(set(grid)):
            raise ValueError(f"lambda_grid must be ascending positive integers, got {grid}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive for accounting, got {self.sigma}")
        if not 0 < self.clip_norm < math.inf:
            raise ValueError(f"clip_norm must be positive and finite, got {self.clip_norm}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")

    @classmethod
    def planned(cls, q, sigma, clip_norm, iterations, m=64, lambda_max=32, gamma=0.0):
        # gamma 0 = 1e-3 / iterations
        return cls(q=q, sigma=sigma, clip_norm=clip_norm, m=m,
                   gamma=gamma or 1e-3 / max(int(iterations), 1),
                   lambda_grid=tuple(range(1, lambda_max + 1)))


@dataclass
class GradientNormSample:
    norms: np.ndarray           # ‖g_t − g′_t‖ of m sampled points
    iteration: int = 0


def _check_moment_args(lam, q, sigma, side):
    if int(lam) != lam or lam < 1:
        raise ValueError(f"lambda must be a positive integer, got {lam}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if side not in SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def log_moments(lam, q, sigma, d, side):
    """log E_{k~B(n,q)}[exp(p(k)·d²/(2σ²))]; left: n = λ+1, p = k²−k, right: n = λ, p = k²+k"""
    _check_moment_args(lam, q, sigma, side)
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    if np.any(d < 0):
        raise ValueError("norms must be nonnegative")
    out = np.zeros(d.shape, dtype=np.float64)
    if q == 0:
        return out
    n = int(lam) + 1 if side == 'left' else int(lam)
    k = np.arange(n + 1, dtype=np.float64)
    power = k * k - k if side == 'left' else k * k + k
    log_pmf = binom.logpmf(k, n, q)
    active = d > 0
    if np.any(active):
        exponent = np.outer(d[active] ** 2, power) / (2.0 * sigma ** 2)
        # exponent >= 0, so each log moment is >= log(Σ pmf) = 0
        out[active] = np.maximum(logsumexp(log_pmf[None, :] + exponent, axis=1), 0.0)
    return out


def binomial_moment(lam, q, sigma, d, side) -> float:
    return float(log_moments(lam, q, sigma, [d], side)[0])


def worst_case_cost(lam, q, sigma, clip_norm) -> float:
    return max(binomial_moment(lam, q, sigma, clip_norm, side) for side in SIDES)


def worst_case_costs(config: AccountantConfig) -> np.ndarray:
    return np.array([worst_case_cost(l, config.q, config.sigma, config.clip_norm) for l in config.lambda_grid])


@dataclass(frozen=True)
class MomentEstimate:
    # worst-case moment B 로 나눈 값이라 모두 (0, 1]
    log_scale: float
    mean: float
    std_error: float
    ucb: float

    @property
    def log_ucb(self):
        return self.log_scale + math.log(self.ucb)


def estimate_moment(norms, lam, config: AccountantConfig, side) -> MomentEstimate:
    """Empirical-Bernstein (Maurer–Pontil) UCB on E_x[moment] at level 1 − γ."""
    norms = np.asarray(norms, dtype=np.float64)
    m = len(norms)
    log_b = log_moments(lam, config.q, config.sigma, [config.clip_norm], side)[0]
    logs = log_moments(lam, config.q, config.sigma, norms, side)
    values = np.exp(logs - log_b)
    mean = float(values.mean())
    variance = float(values.var(ddof=1))
    if variance == 0.0:
        # point mass: scale by its own moment so the log comes back exactly
        return MomentEstimate(log_scale=float(min(logs.max(), log_b)), mean=1.0, std_error=0.0, ucb=1.0)
    log_term = math.log(2.0 / config.gamma)
    # b = 1 − 1/B: support [1/B, 1] 의 폭
    width = -math.expm1(-log_b)
    ucb = mean + math.sqrt(2.0 * variance * log_term / m) + 7.0 * width * log_term / (3.0 * (m - 1))
    return MomentEstimate(log_scale=float(log_b), mean=mean,
                          std_error=math.sqrt(variance / m), ucb=min(ucb, 1.0))


def _check_sample(norms, config):
    norms = np.asarray(norms, dtype=np.float64)
    if norms.ndim != 1 or len(norms) < 2:
        raise InsufficientSamplesError(
            f"need at least 2 sampled norms per iteration, got {norms.size}; "
            "use the worst-case track (worst_case_costs) without samples")
    if not np.all(np.isfinite(norms)) or np.any(norms < 0):
        raise ValueError("sampled norms must be finite and nonnegative")
    if np.any(norms > config.clip_norm):
        raise ClippingContractError(
            f"sampled norm {norms.max()!r} exceeds clip norm {config.clip_norm!r}; clipping was not applied")
    return norms


def cost_from_samples(sample: GradientNormSample, config: AccountantConfig) -> np.ndarray:
    norms = _check_sample(sample.norms, config)
    costs = np.array([
        max(estimate_moment(norms, lam, config, side).log_ucb for side in SIDES)
        for lam in config.lambda_grid
    ])
    return np.maximum(costs, 0.0)


@dataclass
class PrivacyLedger:
    config: AccountantConfig
    bdp_costs: Optional[np.ndarray] = None
    wc_costs: Optional[np.ndarray] = None
    iterations: int = 0
    gamma_spent: float = 0.0

    def __post_init__(self):
        size = len(self.config.lambda_grid)
        if self.bdp_costs is None:
            self.bdp_costs = np.zeros(size)
        if self.wc_costs is None:
            self.wc_costs = np.zeros(size)

    def copy(self):
        return PrivacyLedger(self.config, self.bdp_costs.copy(), self.wc_costs.copy(),
                             self.iterations, self.gamma_spent)

    def save(self, path):
        c = self.config
        lines = [
            LEDGER_HEADER,
            f"q = {c.q!r}",
            f"sigma = {c.sigma!r}",
            f"clip_norm = {c.clip_norm!r}",
            f"m = {c.m}",
            f"gamma = {c.gamma!r}",
            f"lambda_grid = {','.join(str(l) for l in c.lambda_grid)}",
            f"iterations = {self.iterations}",
            f"gamma_spent = {self.gamma_spent!r}",
            "lambda bdp worst_case",
        ]
        lines += [f"{l} {float(b)!r} {float(w)!r}"
                  for l, b, w in zip(c.lambda_grid, self.bdp_costs, self.wc_costs)]
        with open(path, 'w') as f:
            f.write('\n'.join(lines) + '\n')

    @classmethod
    def load(cls, path):
        with open(path, 'r') as f:
            lines = [line.rstrip('\n') for line in f if line.strip()]
        if not lines or lines[0] != LEDGER_HEADER:
            raise ValueError(f"{path}: not a ledger checkpoint")
        header, rows = {}, []
        for line in lines[1:]:
            if '=' in line:
                key, value = (part.strip() for part in line.split('=', 1))
                header[key] = value
            elif not line.startswith('lambda'):
                rows.append(line.split())
        config = AccountantConfig(
            q=float(header['q']), sigma=float(header['sigma']), clip_norm=float(header['clip_norm']),
            m=int(header['m']), gamma=float(header['gamma']),
            lambda_grid=tuple(int(l) for l in header['lambda_grid'].split(',')))
        if [int(r[0]) for r in rows] != list(config.lambda_grid):
            raise ValueError(f"{path}: ledger rows do not match the lambda grid")
        return cls(config,
                   np.array([float(r[1]) for r in rows]),
                   np.array([float(r[2]) for r in rows]),
                   int(header['iterations']), float(header['gamma_spent']))


def ledger_update(ledger: PrivacyLedger, bdp_costs, wc_costs) -> PrivacyLedger:
    """Compose one iteration onto both tracks (single writer)."""
    size = len(ledger.config.lambda_grid)
    bdp_costs = np.asarray(bdp_costs, dtype=np.float64)
    wc_costs = np.asarray(wc_costs, dtype=np.float64)
    if bdp_costs.shape != (size,) or wc_costs.shape != (size,):
        raise ValueError(f"cost vectors must match the {size}-point lambda grid, "
                         f"got {bdp_costs.shape} and {wc_costs.shape}")
    if np.any(bdp_costs < 0) or np.any(wc_costs < 0):
        raise ValueError("privacy costs must be nonnegative")
    ledger.bdp_costs = ledger.bdp_costs + bdp_costs
    ledger.wc_costs = ledger.wc_costs + wc_costs
    ledger.iterations += 1
    ledger.gamma_spent += ledger.config.gamma
    return ledger


@dataclass
class PrivacyGuarantee:
    epsilon: float
    delta: float
    track: str                  # bdp | worst_case
    achieving_lambda: int
    percentile_pairs: List[Tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self):
        return {
            'epsilon': self.epsilon,
            'delta': self.delta,
            'track': self.track,
            'achieving_lambda': self.achieving_lambda,
            'percentile_pairs': [{'p': p, 'epsilon': e, 'delta': d} for p, e, d in self.percentile_pairs],
        }


def extract_guarantee(ledger: PrivacyLedger, delta=None, epsilon=None, track='bdp',
                      percentiles: Sequence[float] = DEFAULT_PERCENTILES) -> PrivacyGuarantee:
    """Fix δ (ε = min_λ (Σc − ln δ)/λ) or fix ε (δ = exp(min_λ Σc − λε), at most 1)."""
    if (delta is None) == (epsilon is None):
        raise ValueError("fix exactly one of delta or epsilon")
    if track not in ('bdp', 'worst_case'):
        raise ValueError(f"unknown track {track!r}")
    sums = ledger.bdp_costs if track == 'bdp' else ledger.wc_costs
    lambdas = np.asarray(ledger.config.lambda_grid, dtype=np.float64)
    if delta is not None:
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        candidates = (sums - math.log(delta)) / lambdas
        best = int(np.argmin(candidates))
        epsilon = float(candidates[best])
    else:
        candidates = sums - lambdas * epsilon
        best = int(np.argmin(candidates))
        delta = min(math.exp(candidates[best]), 1.0)
    pairs = []
    if track == 'bdp':
        pairs = [(float(p), float(epsilon), delta / (1.0 - p)) for p in percentiles]
    return PrivacyGuarantee(float(epsilon), float(delta), track, int(ledger.config.lambda_grid[best]), pairs)


def _fmt(x):
    return re.sub(r'e([+-])0*(\d)', r'e\1\2', f"{x:g}").replace('e+', 'e')


@dataclass(frozen=True)
class PercentileBound:
    epsilon: float
    delta: float
    violating_mass: float
    statement: str


def markov_percentile(epsilon, delta_mu, delta_target) -> PercentileBound:
    """E_x[Δ(ε, x)] ≤ δ_μ ⇒ Pr_x[Δ(ε, x) > δ_target] ≤ δ_μ / δ_target (Markov)."""
    if not 0.0 < delta_mu < 1.0 or not 0.0 < delta_target < 1.0:
        raise ValueError("delta_mu and delta_target must lie in (0, 1)")
    if delta_target < delta_mu:
        raise ValueError(f"delta_target {delta_target} < delta_mu {delta_mu} gives a vacuous bound")
    # decimal quotient of the given values, rounded once
    mass = float(Decimal(repr(float(delta_mu))) / Decimal(repr(float(delta_target))))
    statement = (f"({_fmt(epsilon)}, {_fmt(delta_target)})-DP except ≤{_fmt(mass)} mass: "
                 f"holds for at least {_fmt(1.0 - mass)} of the data distribution")
    return PercentileBound(float(epsilon), float(delta_target), mass, statement)


def write_norm_log(samples: Sequence[GradientNormSample], path):
    width = max((len(s.norms) for s in samples), default=0)
    columns = ['iteration'] + [f'norm_{i + 1}' for i in range(width)]
    rows = [[s.iteration] + list(np.asarray(s.norms, dtype=np.float64)) for s in samples]
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)


def read_norm_log(path) -> List[GradientNormSample]:
    df = pd.read_csv(path, float_precision='round_trip')
    if 'iteration' not in df.columns:
        raise ValueError(f"{path}: norm log needs an 'iteration' column")
    norm_columns = [c for c in df.columns if c.startswith('norm_')]
    samples = []
    for _, row in df.iterrows():
        norms = row[norm_columns].to_numpy(dtype=np.float64)
        samples.append(GradientNormSample(norms[~np.isnan(norms)], int(row['iteration'])))
    return samples


def replay(samples: Sequence[GradientNormSample], config: AccountantConfig) -> PrivacyLedger:
    ledger = PrivacyLedger(config)
    wc = worst_case_costs(config)
    for sample in samples:
        ledger_update(ledger, cost_from_samples(sample, config), wc)
    return ledger
