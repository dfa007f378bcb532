import struct

import numpy as np
import pytest

from ddkseg.audio import (MODEL_RATE_HZ, Waveform, WindowPlan, cut_windows, read_wav, resample,
                          stitch_predictions, write_wav)
from ddkseg.errors import InternalError, MalformedRiffError, UnsupportedEncodingError


def make_wav_bytes(frames: bytes, channels=1, sample_rate=44100, bits=16, audio_format=1) -> bytes:
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(frames), b"WAVE",
        b"fmt ", 16, audio_format, channels, sample_rate,
        sample_rate * channels * bits // 8, channels * bits // 8, bits,
        b"data", len(frames))
    return header + frames


def test_read_wav_int16_scaling(tmp_path):
    path = tmp_path / "x.wav"
    path.write_bytes(make_wav_bytes(np.array([0, 16384, -32768], dtype="<i2").tobytes()))
    wave = read_wav(path)
    assert wave.sample_rate_hz == 44100
    np.testing.assert_array_equal(wave.samples, [0.0, 0.5, -1.0])


def test_read_wav_stereo_average(tmp_path):
    path = tmp_path / "st.wav"
    path.write_bytes(make_wav_bytes(np.array([1000, 3000], dtype="<i2").tobytes(), channels=2))
    wave = read_wav(path)
    np.testing.assert_array_equal(wave.samples, [2000 / 32768.0])


def test_read_wav_rejects_8bit(tmp_path):
    path = tmp_path / "e.wav"
    path.write_bytes(make_wav_bytes(b"\x00\x01\x02", bits=8))
    with pytest.raises(UnsupportedEncodingError):
        read_wav(path)


def test_read_wav_rejects_float_pcm(tmp_path):
    path = tmp_path / "f.wav"
    path.write_bytes(make_wav_bytes(b"\x00" * 8, audio_format=3, bits=16))
    with pytest.raises(UnsupportedEncodingError):
        read_wav(path)


def test_read_wav_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_wav(tmp_path / "nope.wav")


def test_read_wav_malformed(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"not a riff file at all")
    with pytest.raises(MalformedRiffError):
        read_wav(path)


def test_read_wav_truncated_data(tmp_path):
    good = make_wav_bytes(np.zeros(100, dtype="<i2").tobytes())
    path = tmp_path / "trunc.wav"
    path.write_bytes(good[:-50])
    with pytest.raises(MalformedRiffError):
        read_wav(path)


def test_wav_roundtrip_exact(tmp_path, rng):
    ints = rng.integers(-32768, 32768, size=1234).astype("<i2")
    path = tmp_path / "rt.wav"
    write_wav(path, Waveform(ints / 32768.0, 16000))
    back = read_wav(path)
    np.testing.assert_array_equal(np.round(back.samples * 32768).astype("<i2"), ints)
    assert back.sample_rate_hz == 16000


def test_waveform_invariants():
    with pytest.raises(ValueError):
        Waveform(np.array([1.0]), 16000)  # 1.0 excluded
    with pytest.raises(ValueError):
        Waveform(np.array([0.0]), 0)
    assert Waveform(np.zeros(16008), 16000).duration_ms == 1000
    assert Waveform(np.zeros(0), 16000).duration_ms == 0


def test_resample_identity_bit_exact(rng):
    wave = Waveform(rng.uniform(-0.5, 0.5, 1000), 16000)
    out = resample(wave, 16000)
    np.testing.assert_array_equal(out.samples, wave.samples)


def test_resample_length():
    wave = Waveform(np.zeros(44100), 44100)
    assert len(resample(wave, 16000)) == 16000
    assert len(resample(Waveform(np.zeros(8000), 8000), 16000)) == 16000


def test_resample_idempotent_at_fixed_rate(rng):
    wave = Waveform(rng.uniform(-0.5, 0.5, 4410), 44100)
    once = resample(wave, 16000)
    twice = resample(once, 16000)
    np.testing.assert_array_equal(once.samples, twice.samples)


def test_resample_sine_spectrum():
    # 1 kHz tone at 44.1 kHz -> 16 kHz: dominant bin at 1 kHz, sidebands
    # at least 40 dB down.
    n = 44100
    t = np.arange(n) / 44100.0
    wave = Waveform(0.5 * np.sin(2 * np.pi * 1000.0 * t), 44100)
    out = resample(wave, 16000).samples
    inner = out[2000:-2000] * np.hanning(len(out) - 4000)
    spec = np.abs(np.fft.rfft(inner))
    freqs = np.fft.rfftfreq(len(inner), 1 / 16000.0)
    peak = np.argmax(spec)
    assert abs(freqs[peak] - 1000.0) < 2.0
    # exclude the main lobe (+/- 40 Hz) and measure the worst sideband
    lobe = np.abs(freqs - freqs[peak]) < 40.0
    worst = spec[~lobe].max()
    assert 20 * np.log10(worst / spec[peak]) < -40.0


def test_resample_alignment_with_analytic_sine():
    # The polyphase filter is delay-compensated: output sample n should
    # match the source sine evaluated at n / target_rate.
    t = np.arange(44100) / 44100.0
    wave = Waveform(0.5 * np.sin(2 * np.pi * 440.0 * t), 44100)
    out = resample(wave, 16000).samples
    t16 = np.arange(len(out)) / 16000.0
    expected = 0.5 * np.sin(2 * np.pi * 440.0 * t16)
    np.testing.assert_allclose(out[200:-200], expected[200:-200], atol=5e-4)


def test_window_plan_starts():
    plan = WindowPlan(window_ms=1000, hop_ms=800)
    # Starts advance by the hop and stop with the first window reaching the
    # end of the signal.
    assert plan.starts(2500) == [0, 800, 1600]
    assert plan.starts(1000) == [0]
    assert plan.starts(600) == [0]
    assert plan.starts(0) == []
    with pytest.raises(ValueError):
        WindowPlan(window_ms=1000, hop_ms=1200)


@pytest.mark.parametrize("total,window,hop", [(2500, 1000, 800), (3100, 1000, 1000),
                                              (999, 1000, 500), (5000, 700, 300)])
def test_cut_windows_cover_signal(total, window, hop):
    wave = Waveform(np.zeros(total * 16), MODEL_RATE_HZ)
    wins = cut_windows(wave, WindowPlan(window, hop))
    starts = [s for s, _ in wins]
    assert starts[0] == 0
    assert all(b - a == hop for a, b in zip(starts, starts[1:]))
    covered = np.zeros(total, dtype=bool)
    for start, w in wins:
        covered[start:start + w.duration_ms] = True
    assert covered.all()
    assert starts[-1] + wins[-1][1].duration_ms == total


def test_cut_windows_empty():
    assert cut_windows(Waveform(np.zeros(0), MODEL_RATE_HZ)) == []


def test_stitch_identity_single_window():
    labels = np.array([0, 1, 2, 1, 0], dtype=np.int8)
    out = stitch_predictions([(0, labels)], 5)
    np.testing.assert_array_equal(out, labels)


def test_stitch_agreeing_overlap_invariant(rng):
    labels = rng.integers(0, 3, size=18).astype(np.int8)
    windows = [(0, labels[:10]), (8, labels[8:])]
    np.testing.assert_array_equal(stitch_predictions(windows, 18), labels)


def test_stitch_disagreement_goes_to_nearer_center():
    # Window A covers [0, 10) (center 5), window B covers [6, 16)
    # (center 11). Crossover at 8: frames 0-7 from A, 8-15 from B.
    a = np.zeros(10, dtype=np.int8)
    b = np.full(10, 2, dtype=np.int8)
    out = stitch_predictions([(0, a), (6, b)], 16)
    np.testing.assert_array_equal(out[:8], 0)
    np.testing.assert_array_equal(out[8:], 2)


def test_stitch_gap_raises():
    with pytest.raises(InternalError):
        stitch_predictions([(0, np.zeros(5, dtype=np.int8))], 10)


def test_stitch_probability_rows():
    probs_a = np.full((10, 3), 0.1, dtype=np.float32)
    probs_b = np.full((10, 3), 0.9, dtype=np.float32)
    out = stitch_predictions([(0, probs_a), (6, probs_b)], 16)
    assert out.shape == (16, 3)
    np.testing.assert_array_equal(out[:8], np.float32(0.1))
    np.testing.assert_array_equal(out[8:], np.float32(0.9))


def test_cut_then_stitch_recovers_frame_count(rng):
    wave = Waveform(rng.uniform(-0.5, 0.5, 3457 * 16), MODEL_RATE_HZ)
    wins = cut_windows(wave, WindowPlan())
    labeled = [(s, np.full(w.duration_ms, 1, dtype=np.int8)) for s, w in wins]
    out = stitch_predictions(labeled, 3457)
    assert len(out) == 3457
    assert (out == 1).all()
