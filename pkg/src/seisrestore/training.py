"""Losses, Adam, the LR/patience plateau schedule and the training loop.

One batch is all the patches of a single gather, gain-applied.  The
interpolation task trains with the masked squared error (loss restricted to
missing samples); denoising and the joint task use the plain squared error.
The batch loss is the mean over patches of the per-patch Frobenius-squared
error; validation reports the same quantity averaged over every validation
patch, and the returned model is the checkpoint with the minimum validation
loss.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParameterError
from .patches import PatchGrid, build_mask, extract
from .unet import UnetModel, unet_loss_and_gradients

TASKS = ("denoise", "interpolate", "joint")

PLATEAU_REL_IMPROVEMENT = 1e-6
LR_DECIMATION = 0.1
MAX_LR_DROPS = 2


def mse_loss(p, p_tilde) -> float:
    """Frobenius-squared error between two patches (or stacks of patches)."""
    p = np.asarray(p, dtype=np.float64)
    p_tilde = np.asarray(p_tilde, dtype=np.float64)
    if p.shape != p_tilde.shape:
        raise ParameterError(f"shape mismatch: {p.shape} vs {p_tilde.shape}")
    return float(np.sum((p - p_tilde) ** 2))


def masked_mse_loss(p, p_tilde, mask) -> float:
    """Squared error restricted to masked (missing) samples."""
    p = np.asarray(p, dtype=np.float64)
    p_tilde = np.asarray(p_tilde, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if p.shape != p_tilde.shape or p.shape != mask.shape:
        raise ParameterError("patch and mask shapes must agree")
    return float(np.sum(((p - p_tilde) * mask) ** 2))


class Adam:
    """Standard Adam with bias correction; state per named parameter."""

    def __init__(self, param_names, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: None for k in param_names}
        self.v = {k: None for k in param_names}

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for name, p in params.items():
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise ParameterError(f"non-finite gradient for {name}")
            if self.m[name] is None:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    task: str
    lr0: float = 0.01
    patience0: int = 10
    max_epochs: int = 100
    gain: float = 2000.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.lr0 > 0:
            raise ConfigError("lr0 must be positive")
        if self.patience0 < 1:
            raise ConfigError("patience0 must be >= 1")
        if self.gain == 0:
            raise ConfigError("gain must be nonzero")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    patience: int


@dataclass
class TrainResult:
    history: list
    best_epoch: int
    best_val_loss: float
    metadata: dict = field(default_factory=dict)


def _prepare_batches(pairs, grid: PatchGrid, gain, need_mask):
    """Pre-extract gain-applied (input, target, mask) stacks, one per gather."""
    batches = []
    for clean, corrupted, trace_mask in pairs:
        x = np.stack(extract(corrupted, grid)).astype(np.float32) * np.float32(gain)
        t = np.stack(extract(clean, grid)).astype(np.float32) * np.float32(gain)
        mask = None
        if need_mask:
            if trace_mask is None:
                raise ConfigError("interpolation training requires a trace mask per pair")
            mask = np.stack(
                [build_mask(trace_mask, grid, k) for k in range(grid.k)]
            ).astype(np.float32)
            mask = mask[:, None]
        batches.append((x[:, None], t[:, None], mask))
    return batches


def _validation_loss(model: UnetModel, batches) -> float:
    """Mean per-patch loss over all validation patches, in infer mode."""
    total = 0.0
    count = 0
    for x, t, mask in batches:
        y, _ = model.forward(x, mode="infer")
        if mask is not None:
            total += masked_mse_loss(t, y, mask)
        else:
            total += mse_loss(t, y)
        count += x.shape[0]
    return total / count


def train(model: UnetModel, train_pairs, val_pairs, grid: PatchGrid, cfg: TrainConfig):
    """Optimize ``model`` in place; returns a :class:`TrainResult`.

    ``train_pairs`` / ``val_pairs`` are sequences of
    ``(clean Gather, corrupted Gather, trace_mask or None)``.  On return the
    model carries the parameters of the epoch with minimum validation loss.
    """
    if not train_pairs or not val_pairs:
        raise ConfigError("training needs nonempty train and validation splits")
    need_mask = cfg.task == "interpolate"
    train_batches = _prepare_batches(train_pairs, grid, cfg.gain, need_mask)
    val_batches = _prepare_batches(val_pairs, grid, cfg.gain, need_mask)

    optimizer = Adam(model.parameters().keys(), cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(cfg.seed)
    lr = cfg.lr0
    patience = cfg.patience0
    lr_drops = 0
    plateau_count = 0
    best_val = np.inf
    best_epoch = -1
    best_state = None
    history = []

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_batches))
        epoch_loss = 0.0
        for step, idx in enumerate(order):
            x, t, mask = train_batches[idx]
            dropout_seed = int(
                np.random.SeedSequence([cfg.seed, epoch, step]).generate_state(1)[0]
            )
            loss, grads = unet_loss_and_gradients(model, x, t, mask, seed=dropout_seed)
            optimizer.step(model.parameters(), grads, lr)
            epoch_loss += loss
        train_loss = epoch_loss / len(train_batches)
        val_loss = _validation_loss(model, val_batches)
        history.append(EpochRecord(epoch, train_loss, val_loss, lr, patience))

        if val_loss <= best_val * (1.0 - PLATEAU_REL_IMPROVEMENT) or best_state is None:
            best_val = val_loss
            best_epoch = epoch
            best_state = model.snapshot()
            plateau_count = 0
        else:
            plateau_count += 1

        if plateau_count >= patience:
            if patience == 1 and lr_drops >= MAX_LR_DROPS:
                break
            lr *= LR_DECIMATION
            lr_drops += 1
            patience = max(1, patience // 2)
            plateau_count = 0

    model.load_state(best_state)
    metadata = {
        "task": cfg.task,
        "gain": cfg.gain,
        "validation_loss_form": "masked" if need_mask else "unmasked",
        "adam": {"beta1": cfg.beta1, "beta2": cfg.beta2, "eps": cfg.eps},
        "seed": cfg.seed,
        "best_epoch": best_epoch,
        "best_val_loss": best_val,
    }
    return TrainResult(history, best_epoch, best_val, metadata)


def write_history(history, path):
    """History CSV: epoch, train loss, validation loss, lr, patience."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "lr", "patience"])
        for rec in history:
            writer.writerow(
                [rec.epoch, repr(rec.train_loss), repr(rec.val_loss), repr(rec.lr), rec.patience]
            )
