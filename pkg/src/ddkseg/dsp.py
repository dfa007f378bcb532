"""Small FIR toolbox: Kaiser-windowed sinc design and zero-delay filtering.

Everything here works on plain float64 numpy arrays; the audio and
augmentation modules build their resampler / notch / noise-shaping filters
from these primitives so the package has no DSP dependency beyond numpy.
"""

from __future__ import annotations

import numpy as np


def lowpass_fir(num_taps: int, cutoff_hz: float, sample_rate_hz: float, beta: float = 6.0) -> np.ndarray:
    """Linear-phase lowpass prototype (window method, Kaiser window).

    num_taps should be odd so the filter has an integer group delay that
    apply_fir can remove exactly.
    """
    if num_taps < 3:
        raise ValueError(f"num_taps must be >= 3, got {num_taps}")
    if not 0.0 < cutoff_hz < sample_rate_hz / 2.0:
        raise ValueError(f"cutoff {cutoff_hz} Hz outside (0, Nyquist) at fs={sample_rate_hz}")
    center = (num_taps - 1) / 2.0
    m = np.arange(num_taps, dtype=np.float64) - center
    fc = cutoff_hz / sample_rate_hz  # cycles per sample
    h = 2.0 * fc * np.sinc(2.0 * fc * m)
    h *= np.kaiser(num_taps, beta)
    # Normalize DC gain to exactly 1.
    h /= h.sum()
    return h


def bandstop_fir(num_taps: int, low_hz: float, high_hz: float, sample_rate_hz: float,
                 beta: float = 6.0) -> np.ndarray:
    """Linear-phase band-reject filter: delta minus a windowed-sinc bandpass."""
    if num_taps % 2 == 0:
        raise ValueError("bandstop filters need an odd tap count")
    if not 0.0 < low_hz < high_hz < sample_rate_hz / 2.0:
        raise ValueError(f"invalid band ({low_hz}, {high_hz}) Hz at fs={sample_rate_hz}")
    h_low = lowpass_fir(num_taps, low_hz, sample_rate_hz, beta)
    h_high = lowpass_fir(num_taps, high_hz, sample_rate_hz, beta)
    h = h_low - h_high  # bandpass between low and high
    h *= -1.0
    h[(num_taps - 1) // 2] += 1.0
    return h


def apply_fir(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Filter x with an odd-length linear-phase FIR, compensating group delay.

    Output has the same length as x (edges see implicit zero padding).
    """
    if len(h) % 2 == 0:
        raise ValueError("apply_fir expects an odd-length filter")
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return x.copy()
    return np.convolve(x, h, mode="same")


def resample_kaiser(x: np.ndarray, source_hz: int, target_hz: int,
                    taps_per_phase: int = 64, beta: float = 8.6) -> np.ndarray:
    """Polyphase rational resampler with a Kaiser-windowed sinc prototype.

    The prototype lowpass cuts off at the smaller of the two Nyquist
    frequencies; group delay is compensated so y[n] is aligned with input
    position n * source / target. Output length is round(len(x) * target / source).
    """
    if source_hz <= 0 or target_hz <= 0:
        raise ValueError("sample rates must be positive")
    x = np.asarray(x, dtype=np.float64)
    if source_hz == target_hz:
        return x.copy()
    n_out = int(round(len(x) * target_hz / source_hz))
    if len(x) == 0 or n_out == 0:
        return np.zeros(0, dtype=np.float64)

    g = np.gcd(source_hz, target_hz)
    up = target_hz // g
    down = source_hz // g

    # Odd length makes the group delay an integer number of upsampled-grid
    # samples, so the output is exactly time aligned with the input.
    n_taps = taps_per_phase * up + 1
    center = (n_taps - 1) // 2
    # Cutoff at min(source, target)/2 expressed at the upsampled rate source*up.
    fc = 0.5 / max(up, down)
    m = np.arange(n_taps, dtype=np.float64) - center
    h = 2.0 * fc * np.sinc(2.0 * fc * m) * np.kaiser(n_taps, beta)
    h *= up  # compensate the zero insertion

    # y[n] = sum_t h[p + t*up] * x[q - t] where p, q locate the (delay
    # compensated) position n*down + center on the upsampled grid.
    pos = np.arange(n_out, dtype=np.int64) * down + center
    phase = pos % up
    base = pos // up

    pad = taps_per_phase + 1
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    y = np.empty(n_out, dtype=np.float64)
    for p in np.unique(phase):
        sel = np.flatnonzero(phase == p)
        taps = h[p::up]
        idx = base[sel][:, None] - np.arange(len(taps))[None, :] + pad
        y[sel] = np.take(xp, np.clip(idx, 0, len(xp) - 1)) @ taps
    return y
