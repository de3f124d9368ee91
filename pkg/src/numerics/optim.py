"""
Adam optimizer over named parameter dicts
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

import numpy as np

from src.errors import NumericError, ShapeError

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class AdamState:
    """Moment estimates and hyperparameters; moments start at zero with step_count 0"""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: Params = field(default_factory=dict)
    second_moment: Params = field(default_factory=dict)

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"Learning rate must be >= 0, got {self.lr}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError(f"Adam betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if self.eps <= 0:
            raise ValueError(f"Adam eps must be > 0, got {self.eps}")

    @classmethod
    def for_params(cls, params: Params, lr: float = 1e-4, **kwargs) -> "AdamState":
        """Zero-initialized state whose moment shapes match params exactly"""
        return cls(
            lr=lr,
            first_moment={name: np.zeros_like(value) for name, value in params.items()},
            second_moment={name: np.zeros_like(value) for name, value in params.items()},
            **kwargs,
        )


def adam_step(params: Params, grads: Params, state: AdamState) -> Tuple[Params, AdamState]:
    """
    One bias-corrected Adam update

    Args:
        params: Named parameters
        grads: Gradients with the same keys and shapes
        state: Current optimizer state (moments missing for a key start at zero)

    Returns:
        (updated params, updated state); inputs are not modified
    """
    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"Gradient for unknown parameter '{name}'")
        if grad.shape != params[name].shape:
            raise ShapeError(f"Gradient '{name}' has shape {grad.shape}, parameter has {params[name].shape}")
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"Non-finite gradient in tensor '{name}'", tensor=name)

    t = state.step_count + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t

    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for name, value in params.items():
        grad = grads.get(name)
        m = state.first_moment.get(name, np.zeros_like(value))
        v = state.second_moment.get(name, np.zeros_like(value))
        if grad is None:
            new_params[name], new_m[name], new_v[name] = value, m, v
            continue
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * (grad * grad)
        update = (state.lr / bc1) * m / (np.sqrt(v / bc2) + state.eps)
        new_params[name] = value - update
        new_m[name] = m
        new_v[name] = v

    return new_params, replace(state, step_count=t, first_moment=new_m, second_moment=new_v)
