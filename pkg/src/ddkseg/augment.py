"""Training-time waveform corruptions: SNR-controlled noise, band-reject
filtering, and a synthetic low-frequency noise source.

All functions preserve signal length and leave label timelines untouched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .audio import MAX_AMPLITUDE, Waveform
from .dsp import apply_fir, bandstop_fir, lowpass_fir

NOTCH_TAPS = 255


@dataclass(frozen=True)
class AugmentSpec:
    """Sampling ranges for the per-example augmentation draw."""

    snr_choices_db: tuple[float, ...] = (5.0, 10.0, 15.0)
    band_center_hz: tuple[float, float] = (500.0, 6000.0)
    band_width_hz: tuple[float, float] = (200.0, 1000.0)

    def modes(self) -> tuple[str, ...]:
        return ("clean",) + tuple(f"noise@{int(s)}dB" for s in self.snr_choices_db) + ("band-reject",)


def mix_noise(signal: Waveform, noise: Waveform, snr_db: float) -> Waveform:
    """Add noise scaled so 20*log10(rms_signal / rms_noise) equals snr_db.

    Noise shorter than the signal is tiled; longer noise is cropped. A
    silent signal is returned unchanged (with a warning) since no SNR can
    be defined for it.
    """
    if noise.sample_rate_hz != signal.sample_rate_hz:
        raise ValueError("signal and noise sample rates differ")
    sig = signal.samples
    rms_signal = float(np.sqrt(np.mean(sig * sig))) if sig.size else 0.0
    if rms_signal == 0.0:
        warnings.warn("mix_noise: silent signal, returning it unchanged")
        return signal
    n = noise.samples
    if len(n) < len(sig):
        n = np.tile(n, int(np.ceil(len(sig) / len(n))))
    n = n[:len(sig)]
    rms_noise = float(np.sqrt(np.mean(n * n)))
    if rms_noise == 0.0:
        return Waveform(sig.copy(), signal.sample_rate_hz)
    scale = rms_signal / (rms_noise * 10.0 ** (snr_db / 20.0))
    mixed = np.clip(sig + scale * n, -1.0, MAX_AMPLITUDE)
    return Waveform(mixed, signal.sample_rate_hz)


def band_reject(wave: Waveform, low_hz: float, high_hz: float) -> Waveform:
    """Remove [low_hz, high_hz] with a 255-tap linear-phase FIR notch."""
    nyquist = wave.sample_rate_hz / 2.0
    if not 0.0 < low_hz < high_hz < nyquist:
        raise ValueError(f"invalid band ({low_hz}, {high_hz}) Hz at fs={wave.sample_rate_hz}")
    h = bandstop_fir(NOTCH_TAPS, low_hz, high_hz, wave.sample_rate_hz)
    filtered = np.clip(apply_fir(wave.samples, h), -1.0, MAX_AMPLITUDE)
    return Waveform(filtered, wave.sample_rate_hz)


def synth_noise(kind: str, duration_s: float, seed: int, sample_rate_hz: int = 16000) -> Waveform:
    """Deterministic noise generator; 'broadband-lowpass' approximates
    HVAC / engine rumble (white noise lowpassed at 500 Hz, RMS 0.1)."""
    if kind != "broadband-lowpass":
        raise ValueError(f"unknown noise kind {kind!r}")
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    white = rng.standard_normal(n)
    h = lowpass_fir(NOTCH_TAPS, 500.0, sample_rate_hz)
    shaped = apply_fir(white, h)
    rms = float(np.sqrt(np.mean(shaped * shaped)))
    shaped *= 0.1 / rms
    return Waveform(np.clip(shaped, -1.0, MAX_AMPLITUDE), sample_rate_hz)


def augment_wave(wave: Waveform, rng: np.random.Generator, spec: AugmentSpec | None = None) -> Waveform:
    """Draw one augmentation mode uniformly and apply it."""
    spec = spec or AugmentSpec()
    modes = spec.modes()
    mode = modes[int(rng.integers(len(modes)))]
    if mode == "clean":
        return wave
    if mode == "band-reject":
        center = rng.uniform(*spec.band_center_hz)
        width = rng.uniform(*spec.band_width_hz)
        nyquist = wave.sample_rate_hz / 2.0
        low = max(50.0, center - width / 2.0)
        high = min(nyquist - 50.0, center + width / 2.0)
        return band_reject(wave, low, high)
    snr_db = float(mode.removeprefix("noise@").removesuffix("dB"))
    noise = synth_noise("broadband-lowpass", len(wave) / wave.sample_rate_hz + 1e-9,
                        seed=int(rng.integers(2 ** 63)), sample_rate_hz=wave.sample_rate_hz)
    return mix_noise(wave, noise, snr_db)
