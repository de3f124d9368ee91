"""
Scalar losses and their gradients
"""

from typing import Optional, Tuple

import numpy as np

from src.errors import ShapeError

PROB_FLOOR = 1e-12


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean of squared element-wise differences"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"mse: shapes {a.shape} and {b.shape} differ")
    if a.size == 0:
        raise ShapeError("mse: empty input")
    diff = a - b
    return float(np.mean(diff * diff))


def mse_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise MSE for two (batch, n) matrices"""
    if a.shape != b.shape:
        raise ShapeError(f"mse_rows: shapes {a.shape} and {b.shape} differ")
    diff = a - b
    return np.mean(diff * diff, axis=-1)


def l2_norm(x: np.ndarray) -> Tuple[float, np.ndarray]:
    """Euclidean norm and its gradient (zero gradient at the origin)"""
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.sqrt(np.sum(x * x)))
    if norm == 0.0:
        return 0.0, np.zeros_like(x)
    return norm, x / norm


def nll_from_probs(
    probs: np.ndarray,
    targets: np.ndarray,
    class_weights: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """
    Weighted negative log-likelihood of softmax outputs, averaged over the batch

    Args:
        probs: (batch, classes) probabilities
        targets: (batch,) integer class indices
        class_weights: Optional (classes,) weights applied per target class

    Returns:
        (loss, gradient w.r.t. probs)
    """
    probs = np.atleast_2d(probs)
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if probs.shape[0] != targets.shape[0]:
        raise ShapeError(f"nll: {probs.shape[0]} rows but {targets.shape[0]} targets")
    rows = np.arange(targets.shape[0])
    weights = np.ones(targets.shape[0]) if class_weights is None else np.asarray(class_weights)[targets]
    picked = np.maximum(probs[rows, targets], PROB_FLOOR)
    n = targets.shape[0]
    loss = float(np.sum(-weights * np.log(picked)) / n)
    grad = np.zeros_like(probs)
    grad[rows, targets] = -weights / picked / n
    return loss, grad


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Binary cross-entropy on logits, averaged over every entry

    Returns:
        (loss, gradient w.r.t. logits)
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.shape != targets.shape:
        raise ShapeError(f"bce: shapes {logits.shape} and {targets.shape} differ")
    # log(1 + exp(-|x|)) + max(x, 0) - x*t
    loss = np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    sigmoid = np.exp(-np.logaddexp(0.0, -logits))
    return float(np.mean(loss)), (sigmoid - targets) / logits.size
