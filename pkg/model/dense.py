import hashlib
import struct
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch.func import grad, vmap

from loss import get_loss, prepare_targets
from utils.errors import CheckpointError, ConfigError, DimensionError, NonFiniteLossError, NumericDivergence
from utils.weight_init import weight_init, zeros_init

SELU_ALPHA = 1.6732632423543772
SELU_SCALE = 1.0507009873554805


def selu(x):
    return SELU_SCALE * F.elu(x, alpha=SELU_ALPHA)


def identity(x):
    return x


ACTIVATIONS = {
    'selu': selu,
    'tanh': torch.tanh,
    'relu': F.relu,
    'identity': identity,
}
ACTIVATION_CODES = {'selu': 0, 'tanh': 1, 'relu': 2, 'identity': 3}
CODE_TO_ACTIVATION = {v: k for k, v in ACTIVATION_CODES.items()}

CHECKPOINT_MAGIC = b'BDPN'
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class DenseLayer:
    weight: torch.Tensor    # (rows = input width, cols = output width)
    bias: torch.Tensor      # (cols,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation: {self.activation}")


class DenseNetwork:
    """Ordered dense layers computing act(x·W + b); parameters flatten layer by layer as W then b."""

    def __init__(self, layers: Sequence[DenseLayer]):
        if not layers:
            raise DimensionError("a network needs at least one layer")
        checked = []
        for i, layer in enumerate(layers):
            weight = torch.as_tensor(layer.weight, dtype=torch.float64)
            bias = torch.as_tensor(layer.bias, dtype=torch.float64)
            if weight.dim() != 2 or bias.shape != (weight.shape[1],):
                raise DimensionError(
                    f"weight {tuple(weight.shape)} and bias {tuple(bias.shape)} do not match", layer=i)
            if i > 0 and weight.shape[0] != checked[-1].weight.shape[1]:
                raise DimensionError(
                    f"expects width {weight.shape[0]}, previous layer emits {checked[-1].weight.shape[1]}",
                    layer=i)
            checked.append(DenseLayer(weight, bias, layer.activation))
        self.layers = tuple(checked)

    @property
    def architecture(self):
        return tuple((l.weight.shape[0], l.weight.shape[1], l.activation) for l in self.layers)

    @property
    def input_dim(self):
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self):
        return self.layers[-1].weight.shape[1]

    @property
    def num_params(self):
        return sum(rows * cols + cols for rows, cols, _ in self.architecture)

    def flatten(self):
        return torch.cat([t for l in self.layers for t in (l.weight.reshape(-1), l.bias)])

    @classmethod
    def from_flat(cls, flat, architecture):
        flat = torch.as_tensor(flat, dtype=torch.float64)
        expected = sum(rows * cols + cols for rows, cols, _ in architecture)
        if flat.shape != (expected,):
            raise DimensionError(f"flat parameters have shape {tuple(flat.shape)}, expected ({expected},)")
        layers, offset = [], 0
        for rows, cols, activation in architecture:
            weight = flat[offset:offset + rows * cols].reshape(rows, cols).clone()
            offset += rows * cols
            bias = flat[offset:offset + cols].clone()
            offset += cols
            layers.append(DenseLayer(weight, bias, activation))
        return cls(layers)

    def with_params(self, flat):
        return DenseNetwork.from_flat(flat, self.architecture)

    def fingerprint(self):
        return hashlib.sha256(self.flatten().numpy().tobytes()).hexdigest()[:16]

    def __call__(self, batch):
        return forward(self, batch)


def build_network(sizes, hidden_activation='selu', output_activation='identity', generator=None):
    """Fresh network for widths `sizes` = (input, hidden..., output)."""
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise DimensionError(f"invalid layer sizes {list(sizes)}")
    layers = []
    for i, (rows, cols) in enumerate(zip(sizes[:-1], sizes[1:])):
        activation = output_activation if i == len(sizes) - 2 else hidden_activation
        weight = torch.empty(rows, cols, dtype=torch.float64)
        weight_init(weight, activation, generator=generator)
        layers.append(DenseLayer(weight, zeros_init(cols), activation))
    return DenseNetwork(layers)


def _as_batch(batch):
    batch = torch.as_tensor(batch, dtype=torch.float64)
    if batch.dim() == 1:
        batch = batch.unsqueeze(0)
    return batch.reshape(batch.shape[0], -1)


def apply_flat(params, inputs, architecture):
    """Functional forward over a flat parameter vector (the form torch.func differentiates)."""
    out, offset = inputs, 0
    for rows, cols, activation in architecture:
        weight = params[offset:offset + rows * cols].reshape(rows, cols)
        offset += rows * cols
        bias = params[offset:offset + cols]
        offset += cols
        out = ACTIVATIONS[activation](out @ weight + bias)
    return out


def forward(net: DenseNetwork, batch) -> torch.Tensor:
    out = _as_batch(batch)
    for i, layer in enumerate(net.layers):
        if out.shape[1] != layer.weight.shape[0]:
            raise DimensionError(f"input width {out.shape[1]} != {layer.weight.shape[0]}", layer=i)
        out = ACTIVATIONS[layer.activation](out @ layer.weight + layer.bias)
        if not torch.isfinite(out).all():
            raise NumericDivergence(f"non-finite activations in layer {i}")
    return out


def _example_loss(params, x, target, architecture, loss_fn):
    out = apply_flat(params, x.unsqueeze(0), architecture)
    return loss_fn(out, target.unsqueeze(0))


def _check_input(net, batch):
    batch = _as_batch(batch)
    if batch.shape[0] == 0:
        raise ValueError("batch must not be empty")
    if batch.shape[1] != net.input_dim:
        raise DimensionError(f"input width {batch.shape[1]} != {net.input_dim}", layer=0)
    return batch


def per_example_gradients(net: DenseNetwork, batch, labels, loss: str, chunk_size=64) -> torch.Tensor:
    """Exact gradient of each example's loss; row i of the (n × P) result belongs to example i."""
    batch = _check_input(net, batch)
    targets = prepare_targets(loss, labels, batch.shape[0], net.output_dim)
    fn = partial(_example_loss, architecture=net.architecture, loss_fn=get_loss(loss))
    params = net.flatten()

    losses = vmap(fn, in_dims=(None, 0, 0), chunk_size=chunk_size)(params, batch, targets)
    bad = (~torch.isfinite(losses)).nonzero()
    if len(bad):
        index = int(bad[0, 0])
        raise NonFiniteLossError(index, float(losses[index]))
    return vmap(grad(fn), in_dims=(None, 0, 0), chunk_size=chunk_size)(params, batch, targets)


def batch_gradient(net: DenseNetwork, batch, labels, loss: str) -> torch.Tensor:
    """Gradient of the mean loss over the whole batch."""
    batch = _check_input(net, batch)
    targets = prepare_targets(loss, labels, batch.shape[0], net.output_dim)
    loss_fn, architecture = get_loss(loss), net.architecture

    def mean_loss(params):
        return loss_fn(apply_flat(params, batch, architecture), targets)

    return grad(mean_loss)(net.flatten())


def mean_loss(net: DenseNetwork, batch, labels, loss: str) -> float:
    batch = _check_input(net, batch)
    targets = prepare_targets(loss, labels, batch.shape[0], net.output_dim)
    return float(get_loss(loss)(forward(net, batch), targets))


@dataclass(frozen=True)
class OptimizerConfig:
    rule: str = 'sgd'       # sgd | rmsprop
    lr: float = 0.01
    decay: float = 0.9
    eps: float = 1e-8

    def __post_init__(self):
        if self.rule not in ('sgd', 'rmsprop'):
            raise ConfigError(f"unsupported optimizer rule {self.rule!r}")
        if not self.lr > 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if not 0.0 <= self.decay < 1.0:
            raise ConfigError(f"decay must lie in [0, 1), got {self.decay}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")


def optimizer_step(net: DenseNetwork, gradient, config: OptimizerConfig, state=None):
    """One update; returns (new network, new state). `state` holds the rmsprop square average."""
    params = net.flatten()
    gradient = torch.as_tensor(gradient, dtype=torch.float64)
    if gradient.shape != params.shape:
        raise DimensionError(f"gradient has shape {tuple(gradient.shape)}, network has {params.numel()} params")
    state = dict(state or {})
    if config.rule == 'sgd':
        updated = params - config.lr * gradient
    else:
        square_avg = state.get('square_avg')
        if square_avg is None:
            square_avg = torch.zeros_like(params)
        square_avg = config.decay * square_avg + (1 - config.decay) * gradient ** 2
        updated = params - config.lr * gradient / torch.sqrt(square_avg + config.eps)
        state['square_avg'] = square_avg
    return net.with_params(updated), state


def clip_weights(net: DenseNetwork, bound: float) -> DenseNetwork:
    return net.with_params(net.flatten().clamp(-bound, bound))


def save_network(net: DenseNetwork, path):
    with open(path, 'wb') as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack('<II', CHECKPOINT_VERSION, len(net.layers)))
        for layer in net.layers:
            rows, cols = layer.weight.shape
            f.write(struct.pack('<IIB', rows, cols, ACTIVATION_CODES[layer.activation]))
            f.write(np.ascontiguousarray(layer.weight.numpy(), dtype='<f8').tobytes())
            f.write(np.ascontiguousarray(layer.bias.numpy(), dtype='<f8').tobytes())


def load_network(path) -> DenseNetwork:
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < 12 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a network checkpoint")
    version, count = struct.unpack_from('<II', data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    layers, offset = [], 12
    for i in range(count):
        if offset + 9 > len(data):
            raise CheckpointError(f"{path}: truncated header of layer {i}")
        rows, cols, code = struct.unpack_from('<IIB', data, offset)
        offset += 9
        if code not in CODE_TO_ACTIVATION:
            raise CheckpointError(f"{path}: unknown activation code {code} in layer {i}")
        size = 8 * (rows * cols + cols)
        if offset + size > len(data):
            raise CheckpointError(f"{path}: truncated payload of layer {i}")
        weight = np.frombuffer(data, dtype='<f8', count=rows * cols, offset=offset).reshape(rows, cols)
        bias = np.frombuffer(data, dtype='<f8', count=cols, offset=offset + 8 * rows * cols)
        offset += size
        layers.append(DenseLayer(torch.tensor(weight, dtype=torch.float64),
                                 torch.tensor(bias, dtype=torch.float64),
                                 CODE_TO_ACTIVATION[code]))
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return DenseNetwork(layers)
