"""
Dense feed-forward networks with exact gradients
Every trainable model in the package (encoders, decoders, classifier heads)
is a DenseNet. Inputs may be a single vector or a batch with one row per example.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import NumericError, ShapeError

ACTIVATIONS = ("relu", "identity", "softmax")


@dataclass
class DenseLayer:
    """One affine map followed by an activation"""

    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "relu"

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[0])


class DenseNet:
    """
    Ordered stack of DenseLayers

    Adjacent layers must chain, softmax may only be the last activation
    and all parameters must be finite.
    """

    def __init__(self, layers: Sequence[DenseLayer]):
        if not layers:
            raise ShapeError("DenseNet needs at least one layer")
        for k, layer in enumerate(layers):
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"Unknown activation '{layer.activation}' in layer {k}")
            if layer.bias.shape != (layer.out_dim,):
                raise ShapeError(f"Layer {k}: bias shape {layer.bias.shape} != ({layer.out_dim},)")
            if layer.activation == "softmax" and k != len(layers) - 1:
                raise ShapeError(f"Layer {k}: softmax is only allowed on the final layer")
            if k > 0 and layers[k - 1].out_dim != layer.in_dim:
                raise ShapeError(
                    f"Layer {k} expects {layer.in_dim} inputs but layer {k - 1} emits {layers[k - 1].out_dim}"
                )
            if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                raise NumericError(f"Layer {k} has non-finite parameters", tensor=f"{k}")
        self.layers: List[DenseLayer] = list(layers)

    @classmethod
    def build(
        cls,
        dims: Sequence[int],
        activations: Sequence[str],
        rng: Optional[np.random.Generator] = None,
    ) -> "DenseNet":
        """
        Create a network with Glorot-uniform weights and zero biases

        Args:
            dims: Layer widths including input, e.g. [32, 32, 16]
            activations: One activation per layer (len(dims) - 1 entries)
            rng: Random generator; None gives all-zero weights
        """
        if len(activations) != len(dims) - 1:
            raise ShapeError(f"{len(dims) - 1} layers need {len(dims) - 1} activations, got {len(activations)}")
        layers = []
        for fan_in, fan_out, activation in zip(dims[:-1], dims[1:], activations):
            if rng is None:
                weight = np.zeros((fan_out, fan_in))
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            layers.append(DenseLayer(weight=weight, bias=np.zeros(fan_out), activation=activation))
        return cls(layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> List[int]:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    @property
    def activations(self) -> List[str]:
        return [layer.activation for layer in self.layers]

    def named_parameters(self, prefix: str = "") -> Dict[str, np.ndarray]:
        """Parameters keyed '<prefix><k>.weight' / '<prefix><k>.bias' (live references)"""
        params = {}
        for k, layer in enumerate(self.layers):
            params[f"{prefix}{k}.weight"] = layer.weight
            params[f"{prefix}{k}.bias"] = layer.bias
        return params

    def load_parameters(self, params: Dict[str, np.ndarray], prefix: str = "") -> None:
        """Replace parameters from a dict produced by named_parameters (shapes must match)"""
        for k, layer in enumerate(self.layers):
            weight = np.asarray(params[f"{prefix}{k}.weight"], dtype=np.float64)
            bias = np.asarray(params[f"{prefix}{k}.bias"], dtype=np.float64)
            if weight.shape != layer.weight.shape or bias.shape != layer.bias.shape:
                raise ShapeError(f"Parameter shape mismatch in layer {prefix}{k}")
            layer.weight = weight
            layer.bias = bias

    def copy(self) -> "DenseNet":
        return DenseNet(
            [DenseLayer(layer.weight.copy(), layer.bias.copy(), layer.activation) for layer in self.layers]
        )

    def parameter_vector(self) -> np.ndarray:
        """All parameters flattened in layer order"""
        return np.concatenate([p.ravel() for p in self.named_parameters().values()])


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis with max-subtraction"""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "softmax":
        return softmax(z)
    return z


def _as_batch(x: np.ndarray, width: int, what: str) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != width:
        raise ShapeError(f"{what} has shape {x.shape}, expected last dimension {width}")
    return batch, single


def forward_with_cache(net: DenseNet, x: np.ndarray) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray, np.ndarray]]]:
    """
    Forward pass keeping (input, pre-activation, output) per layer for backward

    Returns:
        (output, cache) where output has the same rank as x
    """
    batch, single = _as_batch(x, net.input_dim, "Network input")
    cache = []
    a = batch
    for layer in net.layers:
        z = a @ layer.weight.T + layer.bias
        out = _activate(z, layer.activation)
        cache.append((a, z, out))
        a = out
    return (a[0] if single else a), cache


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Deterministic forward pass; x is (input_dim,) or (batch, input_dim)"""
    out, _ = forward_with_cache(net, x)
    return out


def backward(
    net: DenseNet,
    x: np.ndarray,
    upstream_grad: np.ndarray,
    cache: Optional[list] = None,
    prefix: str = "",
) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """
    Gradients of <upstream_grad, forward(net, x)> w.r.t. x and every parameter

    Args:
        net: Network
        x: Input used in the forward pass
        upstream_grad: Gradient w.r.t. the network output (same rank as x)
        cache: Optional cache from forward_with_cache(net, x)
        prefix: Key prefix for the returned parameter gradients

    Returns:
        (input_grad, param_grads) with parameter gradients summed over the batch
    """
    batch, single = _as_batch(x, net.input_dim, "Network input")
    upstream, _ = _as_batch(upstream_grad, net.output_dim, "Upstream gradient")
    if upstream.shape[0] != batch.shape[0]:
        raise ShapeError(f"Upstream batch {upstream.shape[0]} != input batch {batch.shape[0]}")
    if cache is None:
        _, cache = forward_with_cache(net, batch)

    grads: Dict[str, np.ndarray] = {}
    d_out = upstream
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        a_prev, z, out = cache[k]
        if layer.activation == "relu":
            dz = d_out * (z > 0.0)
        elif layer.activation == "softmax":
            dz = out * (d_out - np.sum(out * d_out, axis=-1, keepdims=True))
        else:
            dz = d_out
        grads[f"{prefix}{k}.weight"] = dz.T @ a_prev
        grads[f"{prefix}{k}.bias"] = dz.sum(axis=0)
        d_out = dz @ layer.weight

    ordered = {name: grads[name] for name in net.named_parameters(prefix)}
    return (d_out[0] if single else d_out), ordered
