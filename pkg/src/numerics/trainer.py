"""
Shared training-loop plumbing: mini-batches, loss curves, early stopping
"""

import csv
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Union

import numpy as np
from tqdm import tqdm

from src.errors import TrainingError

logger = logging.getLogger(__name__)


def iterate_minibatches(n: int, batch_size: int, rng: Optional[np.random.Generator]) -> Iterator[np.ndarray]:
    """Yield index batches covering range(n); shuffled when rng is given"""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def progress(iterable: Iterable, desc: str, enabled: bool = False, total: Optional[int] = None) -> Iterable:
    """tqdm progress bar, off unless enabled"""
    return tqdm(iterable, desc=desc, total=total, disable=not enabled, leave=False)


def check_finite(value: float, epoch: int, what: str = "loss") -> None:
    if not math.isfinite(value):
        raise TrainingError(f"Training diverged: non-finite {what} at epoch {epoch}", epoch=epoch)


class TrainingHistory:
    """Per-epoch metric rows, written as CSV (one row per epoch run)"""

    def __init__(self, component: str):
        self.component = component
        self.rows: List[Dict[str, Any]] = []

    def add(self, epoch: int, **metrics: float) -> None:
        row = {"epoch": epoch, **metrics}
        self.rows.append(row)
        summary = ", ".join(f"{k}={v:.6f}" for k, v in metrics.items() if isinstance(v, float))
        logger.info(f"[{self.component}] epoch {epoch}: {summary}")

    def column(self, name: str) -> List[float]:
        return [row[name] for row in self.rows if name in row]

    def __len__(self) -> int:
        return len(self.rows)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fields: List[str] = []
        for row in self.rows:
            for key in row:
                if key not in fields:
                    fields.append(key)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return path


class EarlyStopping:
    """
    Track the best validation value and stop after `patience` epochs without improvement

    mode="min" for losses, "max" for accuracies. The snapshot of the best epoch is kept
    so training can restore the best checkpoint.
    """

    def __init__(self, patience: int, mode: str = "min"):
        if mode not in ("min", "max"):
            raise ValueError(f"mode must be 'min' or 'max', got {mode}")
        self.patience = patience
        self.mode = mode
        self.best_value: Optional[float] = None
        self.best_epoch: Optional[int] = None
        self.best_snapshot: Any = None
        self._bad_epochs = 0

    def _improved(self, value: float) -> bool:
        if self.best_value is None:
            return True
        return value < self.best_value if self.mode == "min" else value > self.best_value

    def update(self, epoch: int, value: float, snapshot: Any = None) -> bool:
        """Record an epoch; returns True when training should stop"""
        if self._improved(value):
            self.best_value = value
            self.best_epoch = epoch
            self.best_snapshot = snapshot
            self._bad_epochs = 0
            return False
        self._bad_epochs += 1
        return self.patience > 0 and self._bad_epochs >= self.patience
