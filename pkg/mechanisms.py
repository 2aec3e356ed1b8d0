import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import torch
from scipy.stats import norm

from utils.errors import PrivacyBoundWarning


@dataclass(frozen=True)
class MechanismParams:
    clip_norm: float            # C, L2 units of the gradient space
    noise_multiplier: float     # σ; per-coordinate noise stddev is C·σ

    def __post_init__(self):
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")
        if not self.noise_multiplier >= 0:
            raise ValueError(f"noise_multiplier must be nonnegative, got {self.noise_multiplier}")
        if math.isinf(self.clip_norm) and self.noise_multiplier > 0:
            raise ValueError("an unbounded clip_norm cannot be combined with noise")

    @property
    def noise_std(self):
        return 0.0 if self.noise_multiplier == 0 else self.clip_norm * self.noise_multiplier

    @property
    def private(self):
        return self.noise_multiplier > 0


def clip_to_norm(v, clip_norm):
    """v·min(1, C/‖v‖₂), post-checked so the result's norm never exceeds C."""
    if not clip_norm > 0:
        raise ValueError(f"clip_norm must be positive, got {clip_norm}")
    v = torch.as_tensor(v, dtype=torch.float64)
    length = float(torch.linalg.vector_norm(v))
    if length <= clip_norm:
        return v.clone()
    factor = clip_norm / length
    out = v * factor
    while float(torch.linalg.vector_norm(out)) > clip_norm:
        factor = math.nextafter(factor, 0.0)
        out = v * factor
    return out


def clip_rows(rows, clip_norm):
    """Row-wise clip_to_norm of an (n × P) tensor; returns (clipped rows, original norms)."""
    rows = torch.as_tensor(rows, dtype=torch.float64)
    norms = torch.linalg.vector_norm(rows, dim=1)
    factors = torch.clamp(clip_norm / norms, max=1.0)
    clipped = rows * factors.unsqueeze(1)
    over = (torch.linalg.vector_norm(clipped, dim=1) > clip_norm).nonzero().flatten()
    for i in over.tolist():
        clipped[i] = clip_to_norm(rows[i], clip_norm)
    return clipped, norms


def gaussian_mechanism(total, params: MechanismParams, generator: Optional[torch.Generator] = None):
    """total + z with z ~ N(0, C²σ² I), drawn from the given stream."""
    total = torch.as_tensor(total, dtype=torch.float64)
    if not params.private:
        return total.clone()
    noise = torch.randn(total.shape, generator=generator, dtype=torch.float64)
    return total + params.noise_std * noise


class Calibration(NamedTuple):
    sigma: float
    valid: bool
    warning: Optional[str]


def calibrate_sigma(epsilon, delta, clip_norm=1.0) -> Calibration:
    """Noise multiplier √(2 ln(1.25/δ))/ε of the classical Gaussian mechanism (C factored out)."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not clip_norm > 0:
        raise ValueError(f"clip_norm must be positive, got {clip_norm}")
    sigma = math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon
    message = None
    if epsilon > 1:
        message = f"the classical Gaussian bound is only proven for epsilon <= 1 (got {epsilon})"
        warnings.warn(message, PrivacyBoundWarning, stacklevel=2)
    return Calibration(sigma, message is None, message)


def privacy_loss(w, mean_a, mean_b, noise_std):
    """log N(w; mean_a, s) − log N(w; mean_b, s) for a 1-D Gaussian output."""
    if not noise_std > 0:
        raise ValueError(f"noise_std must be positive, got {noise_std}")
    return float(norm.logpdf(w, loc=mean_a, scale=noise_std) - norm.logpdf(w, loc=mean_b, scale=noise_std))
