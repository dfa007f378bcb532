"""Frame-wise training of the segmenter models.

Each epoch re-augments every trial (one mode drawn per trial), applies a
random 0-999 sample start shift, cuts disjoint one-second windows, and
minimizes class-weighted softmax cross-entropy with Adam. The parameters
with the best validation frame accuracy are kept; training stops early
after `patience` epochs without improvement.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .audio import SAMPLES_PER_MS, Waveform
from .augment import AugmentSpec, augment_wave
from .errors import DataError
from .models import ModelConfig, Segmenter
from .postproc import Segment
from .synth import Trial

logger = logging.getLogger(__name__)

TRAIN_LOG_HEADER = ["epoch", "train_loss", "val_loss", "val_frame_acc"]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    lr: float = 1e-4
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0
    augment: bool = True
    augment_spec: AugmentSpec = field(default_factory=AugmentSpec)
    window_ms: int = 1000
    class_weight_cap: float = 5.0
    shift_samples: int = 1000  # start offsets drawn from [0, shift_samples)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")


@dataclass
class TrainResult:
    model: Segmenter
    log: list[dict]
    best_epoch: int
    best_val_acc: float


def labels_for_midpoints(segments: list[Segment], midpoints_ms: np.ndarray) -> np.ndarray:
    """Label at each frame midpoint: the covering segment's class, else OTHER."""
    labels = np.zeros(len(midpoints_ms), dtype=np.int64)
    if not segments:
        return labels
    onsets = np.array([s.onset_ms for s in segments], dtype=np.float64)
    offsets = np.array([s.offset_ms for s in segments], dtype=np.float64)
    ids = np.array([s.label for s in segments], dtype=np.int64)
    idx = np.searchsorted(onsets, midpoints_ms, side="right") - 1
    valid = (idx >= 0) & (midpoints_ms < offsets[np.clip(idx, 0, None)])
    labels[valid] = ids[idx[valid]]
    return labels


def class_weights(trials: list[Trial], cap: float) -> np.ndarray:
    """Inverse-frequency weights over {other, vot, vowel}, capped."""
    counts = np.zeros(3, dtype=np.float64)
    for trial in trials:
        mids = np.arange(trial.wave.duration_ms) + 0.5
        labels = labels_for_midpoints(trial.segments, mids)
        counts += np.bincount(labels, minlength=3)
    total = counts.sum()
    weights = np.where(counts > 0, total / (3.0 * np.maximum(counts, 1.0)), cap)
    return np.minimum(weights, cap)


def _trial_windows(trial: Trial, window_samples: int, shift: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint full windows of the (shifted) trial plus midpoint-rule labels."""
    samples = trial.wave.samples[shift:]
    n_windows = len(samples) // window_samples
    if n_windows == 0:
        return (np.zeros((0, 1, window_samples), dtype=np.float32),
                np.zeros((0, window_samples // SAMPLES_PER_MS), dtype=np.int64))
    cropped = samples[:n_windows * window_samples]
    x = cropped.reshape(n_windows, 1, window_samples).astype(np.float32)
    frames_per_window = window_samples // SAMPLES_PER_MS
    shift_ms = shift / SAMPLES_PER_MS
    mids = shift_ms + np.arange(n_windows * frames_per_window) + 0.5
    y = labels_for_midpoints(trial.segments, mids).reshape(n_windows, frames_per_window)
    return x, y


def _epoch_dataset(trials: list[Trial], cfg: TrainConfig,
                   rng: np.random.Generator | None) -> tuple[np.ndarray, np.ndarray]:
    """Windows for one pass; rng enables augmentation + start shifts."""
    window_samples = cfg.window_ms * SAMPLES_PER_MS
    xs, ys = [], []
    for trial in trials:
        wave = trial.wave
        shift = 0
        if rng is not None:
            if cfg.augment:
                wave = augment_wave(wave, rng, cfg.augment_spec)
            shift = int(rng.integers(cfg.shift_samples))
        x, y = _trial_windows(Trial(trial.trial_id, wave, trial.segments), window_samples, shift)
        if len(x):
            xs.append(x)
            ys.append(y)
    if not xs:
        raise DataError("no usable training windows (are all trials shorter than one window?)")
    return np.concatenate(xs), np.concatenate(ys)


def _evaluate(model: Segmenter, x: np.ndarray, y: np.ndarray, batch_size: int,
              weights: np.ndarray) -> tuple[float, float]:
    total_loss, total_frames, correct = 0.0, 0, 0
    for lo in range(0, len(x), batch_size):
        xb, yb = x[lo:lo + batch_size], y[lo:lo + batch_size]
        logits = model.forward(xb, train=False)
        loss, _ = nn.softmax_cross_entropy(logits, yb, weights)
        n = yb.size
        total_loss += loss * n
        total_frames += n
        correct += int(np.sum(np.argmax(logits, axis=2) == yb))
    return total_loss / total_frames, correct / total_frames


def train_model(train_trials: list[Trial], val_trials: list[Trial],
                model_cfg: ModelConfig, cfg: TrainConfig) -> TrainResult:
    if not train_trials:
        raise DataError("empty training set")
    if not val_trials:
        raise DataError("empty validation set")

    model = Segmenter(model_cfg, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)  # augmentation, shifts, shuffling, dropout
    weights = class_weights(train_trials, cfg.class_weight_cap).astype(np.float64)
    logger.info("class weights (other, vot, vowel): %s", np.round(weights, 3))

    val_x, val_y = _epoch_dataset(val_trials, cfg, rng=None)
    adam = nn.init_adam(model.named_params(), lr=cfg.lr)

    log: list[dict] = []
    best_epoch, best_acc, best_snapshot = 0, -1.0, model.snapshot()
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        x, y = _epoch_dataset(train_trials, cfg, rng=rng)
        order = rng.permutation(len(x))
        epoch_loss, seen = 0.0, 0
        for lo in range(0, len(order), cfg.batch_size):
            sel = order[lo:lo + cfg.batch_size]
            loss, grads = model.loss_and_grads(x[sel], y[sel], weights, train=True, rng=rng)
            nn.adam_step(model.named_params(), grads, adam)
            epoch_loss += loss * y[sel].size
            seen += y[sel].size
        train_loss = epoch_loss / seen

        val_loss, val_acc = _evaluate(model, val_x, val_y, cfg.batch_size, weights)
        log.append({"epoch": epoch, "train_loss": train_loss,
                    "val_loss": val_loss, "val_frame_acc": val_acc})
        logger.info("epoch %d: train_loss=%.4f val_loss=%.4f val_acc=%.4f",
                    epoch, train_loss, val_loss, val_acc)

        if val_acc > best_acc:
            best_epoch, best_acc, best_snapshot = epoch, val_acc, model.snapshot()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break

    model.restore(best_snapshot)
    return TrainResult(model, log, best_epoch, best_acc)


def write_train_log(path, log: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAIN_LOG_HEADER)
        writer.writeheader()
        for row in log:
            writer.writerow({"epoch": row["epoch"],
                             "train_loss": f"{row['train_loss']:.10g}",
                             "val_loss": f"{row['val_loss']:.10g}",
                             "val_frame_acc": f"{row['val_frame_acc']:.10g}"})
