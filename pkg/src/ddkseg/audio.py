"""PCM WAV reading/writing, resampling, and analysis-window plumbing.

Audio is carried as float64 mono samples in [-1.0, 1.0). The model rate is
16 kHz: at that rate one 1 ms label frame corresponds to 16 samples, which
is what the rest of the pipeline assumes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import resample_kaiser
from .errors import InternalError, MalformedRiffError, UnsupportedEncodingError

MODEL_RATE_HZ = 16000
SAMPLES_PER_MS = MODEL_RATE_HZ // 1000
# Largest representable positive amplitude: int16 32767 scaled by 1/32768.
MAX_AMPLITUDE = 32767.0 / 32768.0


@dataclass(frozen=True)
class Waveform:
    """Mono audio: samples in [-1.0, 1.0) plus their sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and (samples.min() < -1.0 or samples.max() >= 1.0):
            raise ValueError("samples outside [-1.0, 1.0)")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_ms(self) -> int:
        return int(round(1000 * len(self.samples) / self.sample_rate_hz))


@dataclass(frozen=True)
class WindowPlan:
    """Fixed-length analysis windows with overlap, measured in milliseconds."""

    window_ms: int = 1000
    hop_ms: int = 800

    def __post_init__(self):
        if not 0 < self.hop_ms <= self.window_ms:
            raise ValueError(f"need 0 < hop_ms <= window_ms, got hop={self.hop_ms} window={self.window_ms}")

    def starts(self, total_ms: int) -> list[int]:
        """Window start offsets covering [0, total_ms).

        Starts advance by hop_ms; emission stops with the first window that
        reaches the end of the signal, so a signal no longer than one window
        yields exactly one start.
        """
        if total_ms <= 0:
            return []
        out = [0]
        while out[-1] + self.window_ms < total_ms:
            out.append(out[-1] + self.hop_ms)
        return out


def read_wav(path) -> Waveform:
    """Read a 16-bit PCM RIFF/WAVE file (mono or stereo; stereo is averaged)."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedRiffError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset:offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body = data[offset + 8:offset + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise MalformedRiffError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise MalformedRiffError(f"{path}: data chunk truncated")
            payload = body
        offset += 8 + chunk_size + (chunk_size & 1)  # chunks are word aligned

    if fmt is None or payload is None:
        raise MalformedRiffError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1 or bits != 16:
        raise UnsupportedEncodingError(
            f"{path}: only 16-bit integer PCM is supported (format={audio_format}, bits={bits})")
    if channels not in (1, 2):
        raise UnsupportedEncodingError(f"{path}: expected 1 or 2 channels, got {channels}")

    raw = np.frombuffer(payload[:len(payload) - len(payload) % (2 * channels)], dtype="<i2")
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    samples = np.asarray(raw, dtype=np.float64) / 32768.0
    return Waveform(samples, int(sample_rate))


def write_wav(path, wave: Waveform) -> None:
    """Write mono 16-bit PCM. read_wav(write_wav(w)) reproduces w's int16 payload."""
    ints = np.clip(np.round(wave.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, wave.sample_rate_hz,
        wave.sample_rate_hz * 2, 2, 16,
        b"data", len(payload),
    )
    Path(path).write_bytes(header + payload)


def resample(wave: Waveform, target_hz: int) -> Waveform:
    """Resample with the Kaiser-windowed sinc polyphase filter (identity when rates match)."""
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if wave.sample_rate_hz == target_hz:
        return Waveform(wave.samples.copy(), target_hz)
    y = resample_kaiser(wave.samples, wave.sample_rate_hz, target_hz)
    # Sinc ringing can overshoot full scale slightly; keep the invariant.
    np.clip(y, -1.0, MAX_AMPLITUDE, out=y)
    return Waveform(y, target_hz)


def cut_windows(wave: Waveform, plan: WindowPlan | None = None) -> list[tuple[int, Waveform]]:
    """Cut a model-rate waveform into (start_ms, window) pairs per the plan.

    Windows cover the whole signal; the last one may be shorter than
    window_ms.
    """
    if plan is None:
        plan = WindowPlan()
    if wave.sample_rate_hz != MODEL_RATE_HZ:
        raise ValueError(f"cut_windows expects {MODEL_RATE_HZ} Hz audio, got {wave.sample_rate_hz}")
    total_ms = wave.duration_ms
    out = []
    for start_ms in plan.starts(total_ms):
        lo = start_ms * SAMPLES_PER_MS
        hi = min((start_ms + plan.window_ms) * SAMPLES_PER_MS, len(wave.samples))
        out.append((start_ms, Waveform(wave.samples[lo:hi].copy(), MODEL_RATE_HZ)))
    return out


def stitch_predictions(windows: list[tuple[int, np.ndarray]], total_ms: int) -> np.ndarray:
    """Merge per-window 1 ms predictions into one sequence of total_ms frames.

    Each entry is (start_ms, per-frame array); arrays may be 1-D labels or
    2-D (frames, k) probabilities. In overlap regions each frame takes its
    row from the window whose center is nearest. Raises InternalError on
    any coverage gap.
    """
    if total_ms == 0:
        first = windows[0][1] if windows else np.zeros(0, dtype=np.int8)
        return np.zeros((0,) + first.shape[1:], dtype=first.dtype)
    if not windows:
        raise InternalError("no windows to stitch")
    windows = sorted(windows, key=lambda w: w[0])
    tail_shape = windows[0][1].shape[1:]
    out = np.zeros((total_ms,) + tail_shape, dtype=windows[0][1].dtype)
    # Frame t (center t + 0.5) takes its row from the containing window
    # whose center is nearest; ties keep the earlier window.
    best = np.full(total_ms, np.inf)
    for start, arr in windows:
        hi = min(start + len(arr), total_ms)
        if hi <= start:
            continue
        center = start + len(arr) / 2.0
        frames = np.arange(start, hi)
        dist = np.abs(frames + 0.5 - center)
        upd = dist < best[frames]
        sel = frames[upd]
        out[sel] = arr[sel - start]
        best[sel] = dist[upd]
    if np.isinf(best).any():
        raise InternalError(f"stitch left {int(np.sum(np.isinf(best)))} frames uncovered")
    return out
