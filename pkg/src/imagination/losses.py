"""
Composite imagination loss
L_IMG = L_REC + alpha * L_REG (+ lambda_cat * weighted category NLL when the head is enabled)
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigError, InvariantError, ShapeError
from src.imagination.model import ImaginationModel
from src.models.schemas import Scene
from src.numerics.losses import l2_norm, mse, nll_from_probs
from src.numerics.network import backward, forward_with_cache

Params = Dict[str, np.ndarray]


def sample_negative(scene: Scene, i: int, rng: np.random.Generator) -> int:
    """Uniform draw among same-scene objects whose category differs from object i"""
    anchor = scene.objects[i].category
    candidates = [j for j, obj in enumerate(scene.objects) if obj.category != anchor]
    if not candidates:
        raise InvariantError(f"Scene {scene.scene_id}: no object of a different category than object {i}")
    return candidates[int(rng.integers(len(candidates)))]


def reconstruction_loss(
    v_i: np.ndarray,
    v_j: Optional[np.ndarray],
    v_tilde: np.ndarray,
    eta: float,
    variant: str = "triplet",
) -> Tuple[float, np.ndarray]:
    """
    Reconstruction term and its gradient w.r.t. v_tilde

    triplet:  max(0, eta + MSE(v_i, v~) - MSE(v_j, v~))
    flipped:  max(0, eta - MSE(v_i, v~) + MSE(v_j, v~))
    mse:      MSE(v_i, v~)  (v_j unused)
    """
    v_i = np.asarray(v_i, dtype=np.float64)
    v_tilde = np.asarray(v_tilde, dtype=np.float64)
    if v_i.shape != v_tilde.shape:
        raise ShapeError(f"reconstruction: shapes {v_i.shape} and {v_tilde.shape} differ")
    n = v_i.size
    grad_pos = 2.0 * (v_tilde - v_i) / n
    if variant == "mse":
        return mse(v_i, v_tilde), grad_pos
    if eta <= 0:
        raise ConfigError(f"eta must be > 0, got {eta}")
    v_j = np.asarray(v_j, dtype=np.float64)
    if v_j.shape != v_tilde.shape:
        raise ShapeError(f"reconstruction: shapes {v_j.shape} and {v_tilde.shape} differ")
    grad_neg = 2.0 * (v_tilde - v_j) / n
    if variant == "triplet":
        margin = eta + mse(v_i, v_tilde) - mse(v_j, v_tilde)
        grad = grad_pos - grad_neg
    elif variant == "flipped":
        margin = eta - mse(v_i, v_tilde) + mse(v_j, v_tilde)
        grad = grad_neg - grad_pos
    else:
        raise ConfigError(f"Unknown reconstruction variant '{variant}'")
    if margin <= 0.0:
        return 0.0, np.zeros_like(v_tilde)
    return float(margin), grad


def regularization_loss(z: np.ndarray, decoder_params: Params) -> float:
    """||z|| + ||theta|| with theta every decoder parameter flattened"""
    theta = np.concatenate([np.ravel(p) for p in decoder_params.values()]) if decoder_params else np.zeros(0)
    return l2_norm(z)[0] + l2_norm(theta)[0]


def inverse_frequency_weights(labels: Sequence[int], n_classes: int) -> np.ndarray:
    """Per-class weights 1/count normalized to mean 1 over present classes; absent classes get 0"""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes).astype(np.float64)
    weights = np.zeros(n_classes)
    present = counts > 0
    if not present.any():
        return weights
    weights[present] = 1.0 / counts[present]
    return weights / weights[present].mean()


def batch_imagination_loss(
    model: ImaginationModel,
    anchors: np.ndarray,
    negatives: Optional[np.ndarray],
    head_targets: Optional[np.ndarray] = None,
) -> Tuple[float, Params, np.ndarray]:
    """
    Mean composite loss over a batch and gradients for every model parameter

    Args:
        model: Imagination model
        anchors: (batch, d_O) perceptual vectors v_i
        negatives: (batch, d_O) negatives v_j (ignored for the mse variant)
        head_targets: (batch,) head class indices for the auxiliary loss, or None

    Returns:
        (loss, parameter gradients keyed like model.named_parameters(), per-row hinge-active mask)
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
    batch = anchors.shape[0]
    z, enc_cache = forward_with_cache(model.encoder, anchors)
    v_tilde, dec_cache = forward_with_cache(model.decoder, z)

    d_vt = np.zeros_like(v_tilde)
    active = np.zeros(batch, dtype=bool)
    rec_total = 0.0
    for b in range(batch):
        neg = None if negatives is None else negatives[b]
        loss_b, grad_b = reconstruction_loss(anchors[b], neg, v_tilde[b], model.eta, model.reconstruction)
        rec_total += loss_b
        active[b] = loss_b > 0.0
        d_vt[b] = grad_b / batch

    d_z, dec_grads = backward(model.decoder, z, d_vt, dec_cache, prefix="decoder.")

    decoder_params = model.decoder.named_parameters("decoder.")
    theta_names = list(decoder_params)
    theta = np.concatenate([decoder_params[name].ravel() for name in theta_names])
    theta_norm, theta_grad = l2_norm(theta)
    z_norms = np.linalg.norm(z, axis=1)
    reg = float(np.mean(z_norms)) + theta_norm
    loss = rec_total / batch + model.alpha * reg

    if model.alpha > 0:
        safe = np.where(z_norms > 0, z_norms, 1.0)[:, None]
        d_z = d_z + model.alpha * np.where(z_norms[:, None] > 0, z / safe, 0.0) / batch
        offset = 0
        for name in theta_names:
            size = decoder_params[name].size
            dec_grads[name] = dec_grads[name] + model.alpha * theta_grad[offset:offset + size].reshape(
                decoder_params[name].shape
            )
            offset += size

    grads: Params = {}
    if model.category_head is not None and head_targets is not None:
        probs, head_cache = forward_with_cache(model.category_head, z)
        nll, d_probs = nll_from_probs(probs, head_targets, model.class_weights)
        loss += model.lambda_cat * nll
        d_z_head, head_grads = backward(model.category_head, z, model.lambda_cat * d_probs, head_cache, prefix="head.")
        d_z = d_z + d_z_head
        grads.update(head_grads)
    elif model.category_head is not None:
        grads.update({name: np.zeros_like(p) for name, p in model.category_head.named_parameters("head.").items()})

    _, enc_grads = backward(model.encoder, anchors, d_z, enc_cache, prefix="encoder.")
    ordered = {**enc_grads, **dec_grads, **grads}
    return float(loss), {name: ordered[name] for name in model.named_parameters()}, active


def imagination_loss(
    model: ImaginationModel,
    scene: Scene,
    i: int,
    rng: np.random.Generator,
    negative: Optional[int] = None,
) -> Tuple[float, Params]:
    """
    L_IMG for object i of a scene with a sampled (or given) same-scene negative

    The auxiliary category term applies only when the head is enabled and the
    object's category is one of the head's classes.
    """
    j = sample_negative(scene, i, rng) if negative is None else negative
    v_i = scene.objects[i].v[None, :]
    v_j = scene.objects[j].v[None, :]
    targets = None
    category = scene.objects[i].category
    if model.category_head is not None and category in model.head_categories:
        targets = np.array([model.head_categories.index(category)])
    loss, grads, _ = batch_imagination_loss(model, v_i, v_j, targets)
    return loss, grads
