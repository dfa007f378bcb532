"""The two raw-waveform segmenter architectures.

Both take mono 16 kHz audio and emit one 3-class decision per 1 ms frame.
The "lstm" variant runs five conv blocks (conv + batchnorm + leaky ReLU +
dropout) into a two-layer bidirectional LSTM and two fully-connected
layers; the "cnn" variant runs ten conv blocks (the later ones dilated to
widen context) into the same two-layer head. The conv strides multiply to
16, which at 16 kHz pins the output grid to exactly one step per
millisecond.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .audio import MODEL_RATE_HZ, SAMPLES_PER_MS, Waveform, WindowPlan, cut_windows, resample, stitch_predictions
from .errors import ConfigError, DataError, InternalError

FRAMES_PER_SECOND = 1000
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    architecture: str = "lstm"
    conv_channels: tuple[int, ...] = (32, 64, 64, 128, 128)
    conv_kernels: tuple[int, ...] = (16, 5, 5, 3, 3)
    conv_strides: tuple[int, ...] = (4, 2, 2, 1, 1)
    conv_paddings: tuple[int, ...] = (6, 2, 2, 1, 1)
    conv_dilations: tuple[int, ...] = (1, 1, 1, 1, 1)
    lstm_hidden: int = 128
    lstm_layers: int = 2
    fc_hidden: int = 64
    n_classes: int = 3
    dropout_p: float = 0.1
    leaky_slope: float = 0.01
    frame_rate_ms: int = 1
    # Test-only escape hatch for scaled-down clones; the layer-count
    # invariants stay enforced for ordinary configs.
    allow_custom_shapes: bool = False

    @classmethod
    def lstm_default(cls) -> "ModelConfig":
        return cls()

    @classmethod
    def cnn_default(cls) -> "ModelConfig":
        return cls(
            architecture="cnn",
            conv_channels=(32, 64, 64, 128, 128, 128, 128, 256, 256, 256),
            conv_kernels=(16, 5, 5, 3, 3, 3, 3, 3, 3, 3),
            conv_strides=(4, 2, 2, 1, 1, 1, 1, 1, 1, 1),
            conv_paddings=(6, 2, 2, 2, 4, 8, 16, 32, 1, 1),
            conv_dilations=(1, 1, 1, 2, 4, 8, 16, 32, 1, 1),
            lstm_hidden=0,
            lstm_layers=0,
        )

    def validate(self) -> None:
        n = len(self.conv_channels)
        for name in ("conv_kernels", "conv_strides", "conv_paddings", "conv_dilations"):
            if len(getattr(self, name)) != n:
                raise ConfigError(f"{name} must have {n} entries to match conv_channels")
        stride_product = int(np.prod(self.conv_strides))
        if stride_product != SAMPLES_PER_MS:
            raise ConfigError(f"conv stride product must be {SAMPLES_PER_MS} "
                              f"(one frame per ms at {MODEL_RATE_HZ} Hz), got {stride_product}")
        if self.frame_rate_ms != 1:
            raise ConfigError("frame_rate_ms is fixed at 1")
        if self.architecture not in ("lstm", "cnn"):
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if not self.allow_custom_shapes:
            if self.architecture == "lstm" and (n != 5 or self.lstm_layers != 2):
                raise ConfigError(f"lstm architecture needs exactly 5 conv layers and 2 LSTM layers, "
                                  f"got {n} and {self.lstm_layers}")
            if self.architecture == "cnn" and (n != 10 or self.lstm_layers != 0):
                raise ConfigError(f"cnn architecture needs exactly 10 conv layers and no LSTM, "
                                  f"got {n} and {self.lstm_layers}")
        if self.architecture == "lstm" and self.lstm_hidden < 1:
            raise ConfigError("lstm architecture needs lstm_hidden >= 1")

    def receptive_field_samples(self) -> int:
        rf, jump = 1, 1
        for k, s, d in zip(self.conv_kernels, self.conv_strides, self.conv_dilations):
            rf += (d * (k - 1)) * jump
            jump *= s
        return rf

    def to_dict(self) -> dict:
        out = {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        coerced = {k: tuple(v) if isinstance(cls.__dataclass_fields__[k].default, tuple) else v
                   for k, v in data.items()}
        return cls(**coerced)


@dataclass
class FramePrediction:
    """Per-millisecond class decisions with the class probabilities behind them."""

    labels: np.ndarray  # (frames,) int8
    probs: np.ndarray   # (frames, n_classes) float32
    padded: bool = False

    def __len__(self) -> int:
        return len(self.labels)


class Segmenter:
    """One of the two architectures, instantiated with concrete parameters."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=np.float32):
        cfg.validate()
        self.cfg = cfg
        self.dtype = dtype
        rng = np.random.default_rng(seed)

        conv_layers: list[nn.Layer] = []
        in_ch = 1
        for ch, k, s, p, d in zip(cfg.conv_channels, cfg.conv_kernels, cfg.conv_strides,
                                  cfg.conv_paddings, cfg.conv_dilations):
            conv_layers += [
                nn.Conv1d(in_ch, ch, k, stride=s, padding=p, dilation=d, rng=rng, dtype=dtype),
                nn.BatchNorm1d(ch, dtype=dtype),
                nn.LeakyReLU(cfg.leaky_slope),
                nn.Dropout(cfg.dropout_p),
            ]
            in_ch = ch
        self.conv = nn.Sequential(conv_layers)

        head_layers: list[nn.Layer] = []
        feat = in_ch
        for layer_idx in range(cfg.lstm_layers):
            head_layers.append(nn.BiLSTM(feat, cfg.lstm_hidden, rng=rng, dtype=dtype))
            feat = 2 * cfg.lstm_hidden
            if layer_idx < cfg.lstm_layers - 1:
                head_layers.append(nn.Dropout(cfg.dropout_p))
        head_layers += [
            nn.Linear(feat, cfg.fc_hidden, rng=rng, dtype=dtype),
            nn.LeakyReLU(cfg.leaky_slope),
            nn.Dropout(cfg.dropout_p),
            nn.Linear(cfg.fc_hidden, cfg.n_classes, rng=rng, dtype=dtype),
        ]
        self.head = nn.Sequential(head_layers)
        self._frames = 0

    def named_params(self) -> dict[str, np.ndarray]:
        out = {f"conv.{k}": v for k, v in self.conv.named_params().items()}
        out.update({f"head.{k}": v for k, v in self.head.named_params().items()})
        return out

    def named_grads(self) -> dict[str, np.ndarray]:
        out = {f"conv.{k}": v for k, v in self.conv.named_grads().items()}
        out.update({f"head.{k}": v for k, v in self.head.named_grads().items()})
        return out

    def extra_state(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, seq in (("conv", self.conv), ("head", self.head)):
            for i, layer in enumerate(seq.layers):
                for k, v in layer.extra_state().items():
                    out[f"{prefix}.{i}.{k}"] = v
        return out

    def frame_count(self, n_samples: int) -> int:
        return n_samples // SAMPLES_PER_MS

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        """(batch, 1, samples) -> logits (batch, frames, n_classes)."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        frames = self.frame_count(x.shape[2])
        z = self.conv.forward(x, train=train, rng=rng)
        if z.shape[2] < frames:
            raise InternalError(f"conv stack produced {z.shape[2]} frames, expected >= {frames}")
        self._frames = frames
        self._conv_frames = z.shape[2]
        z = np.ascontiguousarray(z[:, :, :frames].transpose(0, 2, 1))
        return self.head.forward(z, train=train, rng=rng)

    def backward(self, dlogits: np.ndarray) -> None:
        dz = self.head.backward(dlogits)
        dz = np.ascontiguousarray(dz.transpose(0, 2, 1))
        if self._conv_frames > self._frames:
            pad = self._conv_frames - self._frames
            dz = np.pad(dz, ((0, 0), (0, 0), (0, pad)))
        self.conv.backward(dz)

    def loss_and_grads(self, x: np.ndarray, targets: np.ndarray,
                       class_weights: np.ndarray | None = None, train: bool = True,
                       rng: np.random.Generator | None = None) -> tuple[float, dict[str, np.ndarray]]:
        logits = self.forward(x, train=train, rng=rng)
        loss, dlogits = nn.softmax_cross_entropy(logits, targets, class_weights)
        self.backward(dlogits)
        return loss, self.named_grads()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in {**self.named_params(), **self.extra_state()}.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        live = {**self.named_params(), **self.extra_state()}
        for k, v in snapshot.items():
            live[k][...] = v


def build_model(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> Segmenter:
    return Segmenter(cfg, seed=seed, dtype=dtype)


def predict_window(model: Segmenter, window: Waveform) -> FramePrediction:
    """Per-frame labels for one analysis window (eval mode).

    Windows shorter than the receptive field are zero-padded on the right
    and flagged; predictions are still cropped to floor(samples / 16).
    """
    if window.sample_rate_hz != MODEL_RATE_HZ:
        raise ValueError(f"predict_window expects {MODEL_RATE_HZ} Hz audio")
    frames = len(window.samples) // SAMPLES_PER_MS
    if frames == 0:
        return FramePrediction(np.zeros(0, dtype=np.int8),
                               np.zeros((0, model.cfg.n_classes), dtype=np.float32), padded=False)
    samples = window.samples
    rf = model.cfg.receptive_field_samples()
    padded = len(samples) < rf
    if padded:
        samples = np.concatenate([samples, np.zeros(rf - len(samples))])
    logits = model.forward(samples[None, None, :], train=False)[0]
    probs = nn.softmax_probs(logits.astype(np.float64))[:frames]
    labels = np.argmax(probs, axis=1).astype(np.int8)
    return FramePrediction(labels, probs.astype(np.float32), padded=padded)


def predict_file(model: Segmenter, wave: Waveform, plan: WindowPlan | None = None) -> FramePrediction:
    """Resample, window, classify, and stitch a whole recording.

    Output length equals the model-rate waveform's duration_ms; when
    rounding puts duration_ms one past the last full frame, the final frame
    repeats the last prediction.
    """
    wave16 = resample(wave, MODEL_RATE_HZ)
    if len(wave16) == 0:
        return FramePrediction(np.zeros(0, dtype=np.int8),
                               np.zeros((0, model.cfg.n_classes), dtype=np.float32))
    duration_ms = wave16.duration_ms
    covered_ms = len(wave16.samples) // SAMPLES_PER_MS
    if covered_ms == 0:
        # Sub-frame audio: nothing to classify, call it background.
        labels = np.zeros(duration_ms, dtype=np.int8)
        probs = np.full((duration_ms, model.cfg.n_classes), 1.0 / model.cfg.n_classes, dtype=np.float32)
        return FramePrediction(labels, probs, padded=duration_ms > 0)

    preds = []
    any_padded = False
    for start_ms, window in cut_windows(wave16, plan):
        pred = predict_window(model, window)
        any_padded = any_padded or pred.padded
        preds.append((start_ms, pred))
    labels = stitch_predictions([(s, p.labels) for s, p in preds], covered_ms)
    probs = stitch_predictions([(s, p.probs) for s, p in preds], covered_ms)
    if duration_ms > covered_ms:
        labels = np.concatenate([labels, labels[-1:].repeat(duration_ms - covered_ms)])
        probs = np.concatenate([probs, np.repeat(probs[-1:], duration_ms - covered_ms, axis=0)])
    return FramePrediction(labels, probs, padded=any_padded)


def save_checkpoint(path, model: Segmenter, meta: dict | None = None) -> None:
    """Versioned .npz: architecture config as JSON plus flat named arrays."""
    header = {
        "format_version": CHECKPOINT_VERSION,
        "config": model.cfg.to_dict(),
        "meta": meta or {},
    }
    arrays = {f"param/{k}": v for k, v in model.named_params().items()}
    arrays.update({f"state/{k}": v for k, v in model.extra_state().items()})
    np.savez(path, __header__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> tuple[Segmenter, dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    try:
        with np.load(path) as data:
            header = json.loads(bytes(data["__header__"]).decode())
            if header.get("format_version") != CHECKPOINT_VERSION:
                raise DataError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
            cfg = ModelConfig.from_dict(header["config"])
            model = Segmenter(cfg, seed=0)
            live = {**{f"param/{k}": v for k, v in model.named_params().items()},
                    **{f"state/{k}": v for k, v in model.extra_state().items()}}
            stored = {k: data[k] for k in data.files if k != "__header__"}
            if set(stored) != set(live):
                raise DataError(f"{path}: checkpoint keys do not match architecture")
            for k, v in stored.items():
                if live[k].shape != v.shape:
                    raise DataError(f"{path}: shape mismatch for {k}: "
                                    f"{v.shape} stored vs {live[k].shape} expected")
                live[k][...] = v
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{path}: unreadable checkpoint ({exc})") from exc
    return model, header.get("meta", {})
