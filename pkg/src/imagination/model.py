"""
Imagination model: encoder E (v -> z) and its mirror decoder D (z -> v~)
Encoding consumes the perceptual vector only; category labels never enter encode().
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.config import RunConfig
from src.errors import ConfigError, ShapeError
from src.numerics.checkpoint import (
    Checkpoint,
    describe_net,
    load_checkpoint,
    restore_net,
    save_checkpoint,
)
from src.numerics.network import DenseNet, forward

logger = logging.getLogger(__name__)

RECONSTRUCTIONS = ("triplet", "flipped", "mse")
CHECKPOINT_KIND = "imagination"


class ImaginationModel:
    """
    Encoder/decoder pair with the hyperparameters of the composite loss

    Attributes:
        encoder: d_O -> hidden (relu) -> d_Z (identity)
        decoder: d_Z -> hidden (relu) -> d_O (identity)
        alpha: Weight of the regularizer
        eta: Triplet margin
        reconstruction: triplet | flipped | mse
        category_head: Optional d_Z -> |in-domain| softmax head (auxiliary loss)
        head_categories: Category id per head output
        class_weights: Per-class weights of the auxiliary loss (mean 1)
    """

    def __init__(
        self,
        encoder: DenseNet,
        decoder: DenseNet,
        alpha: float,
        eta: float,
        reconstruction: str = "triplet",
        category_head: Optional[DenseNet] = None,
        head_categories: Optional[Sequence[int]] = None,
        class_weights: Optional[np.ndarray] = None,
        lambda_cat: float = 0.1,
    ):
        if decoder.dims != list(reversed(encoder.dims)):
            raise ShapeError(f"Decoder dims {decoder.dims} do not mirror encoder dims {encoder.dims}")
        if alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {alpha}")
        if eta <= 0:
            raise ConfigError(f"eta must be > 0, got {eta}")
        if reconstruction not in RECONSTRUCTIONS:
            raise ConfigError(f"Unknown reconstruction '{reconstruction}'")
        if category_head is not None:
            if category_head.input_dim != encoder.output_dim:
                raise ShapeError("Category head input must match d_Z")
            if head_categories is None or len(head_categories) != category_head.output_dim:
                raise ShapeError("head_categories must name every category head output")
        self.encoder = encoder
        self.decoder = decoder
        self.alpha = float(alpha)
        self.eta = float(eta)
        self.reconstruction = reconstruction
        self.category_head = category_head
        self.head_categories: List[int] = list(head_categories or [])
        if category_head is not None and class_weights is None:
            class_weights = np.ones(category_head.output_dim)
        self.class_weights = None if class_weights is None else np.asarray(class_weights, dtype=np.float64)
        self.lambda_cat = float(lambda_cat)

    @classmethod
    def build(
        cls,
        d_o: int,
        hidden: int,
        d_z: int,
        alpha: float,
        eta: float,
        rng: Optional[np.random.Generator] = None,
        reconstruction: str = "triplet",
        head_categories: Optional[Sequence[int]] = None,
        class_weights: Optional[np.ndarray] = None,
        lambda_cat: float = 0.1,
    ) -> "ImaginationModel":
        """Fresh model; rng=None gives all-zero weights"""
        encoder = DenseNet.build([d_o, hidden, d_z], ["relu", "identity"], rng)
        decoder = DenseNet.build([d_z, hidden, d_o], ["relu", "identity"], rng)
        head = None
        if head_categories:
            head = DenseNet.build([d_z, len(head_categories)], ["softmax"], rng)
        return cls(encoder, decoder, alpha, eta, reconstruction, head, head_categories, class_weights, lambda_cat)

    @property
    def d_z(self) -> int:
        return self.encoder.output_dim

    @property
    def d_o(self) -> int:
        return self.encoder.input_dim

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {**self.encoder.named_parameters("encoder."), **self.decoder.named_parameters("decoder.")}
        if self.category_head is not None:
            params.update(self.category_head.named_parameters("head."))
        return params

    def load_parameters(self, params: Dict[str, np.ndarray]) -> None:
        self.encoder.load_parameters(params, "encoder.")
        self.decoder.load_parameters(params, "decoder.")
        if self.category_head is not None:
            self.category_head.load_parameters(params, "head.")

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.named_parameters().items()}

    def copy(self) -> "ImaginationModel":
        return ImaginationModel(
            self.encoder.copy(),
            self.decoder.copy(),
            self.alpha,
            self.eta,
            self.reconstruction,
            None if self.category_head is None else self.category_head.copy(),
            self.head_categories,
            None if self.class_weights is None else self.class_weights.copy(),
            self.lambda_cat,
        )

    def to_checkpoint(self, kind: str = CHECKPOINT_KIND) -> Checkpoint:
        meta = {
            "encoder": describe_net(self.encoder),
            "decoder": describe_net(self.decoder),
            "alpha": self.alpha,
            "eta": self.eta,
            "reconstruction": self.reconstruction,
            "lambda_cat": self.lambda_cat,
        }
        if self.category_head is not None:
            meta["head"] = describe_net(self.category_head)
            meta["head_categories"] = self.head_categories
            meta["class_weights"] = [float(w) for w in self.class_weights]
        return Checkpoint(kind=kind, meta=meta, arrays=self.snapshot())

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "ImaginationModel":
        if not checkpoint.kind.startswith(CHECKPOINT_KIND):
            raise ConfigError(f"Expected an imagination checkpoint, got kind '{checkpoint.kind}'")
        meta = checkpoint.meta
        head = None
        if "head" in meta:
            head = restore_net(meta["head"], checkpoint.arrays, "head.")
        return cls(
            restore_net(meta["encoder"], checkpoint.arrays, "encoder."),
            restore_net(meta["decoder"], checkpoint.arrays, "decoder."),
            meta["alpha"],
            meta["eta"],
            meta.get("reconstruction", "triplet"),
            head,
            meta.get("head_categories"),
            np.asarray(meta["class_weights"]) if "class_weights" in meta else None,
            meta.get("lambda_cat", 0.1),
        )

    def save(self, path: Union[str, Path], kind: str = CHECKPOINT_KIND) -> Path:
        return save_checkpoint(path, self.to_checkpoint(kind))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ImaginationModel":
        return cls.from_checkpoint(load_checkpoint(path))


def role_alpha(config: RunConfig, role: Optional[str] = None) -> float:
    """Regularization weight for the shared encoder or a role-specific one"""
    if role == "oracle":
        return config.oracle_alpha
    if role == "guesser":
        return config.guesser_alpha
    return config.alpha


def build_imagination(
    config: RunConfig,
    d_o: int,
    rng: np.random.Generator,
    role: Optional[str] = None,
    head_categories: Optional[Sequence[int]] = None,
    class_weights: Optional[np.ndarray] = None,
) -> ImaginationModel:
    """Model sized and parameterized from the run configuration"""
    use_head = config.aux_category_loss and head_categories
    return ImaginationModel.build(
        d_o=d_o,
        hidden=config.imagination_hidden,
        d_z=config.d_z,
        alpha=role_alpha(config, role),
        eta=config.eta,
        rng=rng,
        reconstruction=config.effective_reconstruction,
        head_categories=head_categories if use_head else None,
        class_weights=class_weights if use_head else None,
        lambda_cat=config.lambda_cat,
    )


def encode(model: ImaginationModel, v: np.ndarray) -> np.ndarray:
    """z = E(v); v is (d_O,) or (batch, d_O)"""
    return forward(model.encoder, v)


def decode(model: ImaginationModel, z: np.ndarray) -> np.ndarray:
    """v~ = D(z); output length is always d_O"""
    return forward(model.decoder, z)
