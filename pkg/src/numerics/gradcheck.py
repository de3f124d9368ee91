"""
Central finite differences (test oracle for every analytic gradient)
"""

from typing import Callable, Dict

import numpy as np

Params = Dict[str, np.ndarray]


def finite_diff_grad(f: Callable[[Params], float], params: Params, h: float = 1e-5) -> Params:
    """
    Estimate df/dp for every coordinate of every named parameter

    Args:
        f: Scalar function of the full parameter dict
        params: Point at which to differentiate (left unchanged)
        h: Step size, > 0

    Returns:
        Dict of gradients keyed like params
    """
    if h <= 0:
        raise ValueError(f"Finite-difference step must be > 0, got {h}")
    work = {name: np.array(value, dtype=np.float64, copy=True) for name, value in params.items()}
    grads: Params = {}
    for name, value in work.items():
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        grad_flat = grad.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + h
            f_plus = f(work)
            flat[idx] = original - h
            f_minus = f(work)
            flat[idx] = original
            grad_flat[idx] = (f_plus - f_minus) / (2.0 * h)
        grads[name] = grad
    return grads


def relative_error(analytic: Params, numeric: Params, floor: float = 1e-8) -> float:
    """Largest per-tensor ||a - n|| / max(||a|| + ||n||, floor)"""
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = max(float(np.linalg.norm(a) + np.linalg.norm(n)), floor)
        worst = max(worst, float(np.linalg.norm(a - n)) / denom)
    return worst
