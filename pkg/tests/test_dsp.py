import numpy as np
import pytest

from reverbkit.dsp import (AMPLITUDE_FLOOR, StftConfig, Waveform, fft,
                           log_amplitude, mel_filterbank, mel_spectrogram,
                           stft)


def test_fft_delta_is_constant():
    X = fft([1, 0, 0, 0], 4)
    assert np.allclose(X, np.ones(4))


def test_fft_constant_is_dc():
    X = fft([1, 1, 1, 1], 4)
    assert np.allclose(X, [4, 0, 0, 0])


def test_fft_roundtrip_and_parseval():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(64)
    X = fft(x, 64)
    back = fft(X, 64, inverse=True)
    assert np.max(np.abs(back.real - x)) <= 1e-9
    assert abs(np.sum(x**2) - np.sum(np.abs(X) ** 2) / 64) <= 1e-9 * np.sum(x**2)


@pytest.mark.parametrize("n", [1, 2, 8, 256, 4096, 65536])
def test_fft_roundtrip_many_sizes(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal(n)
    back = fft(fft(x, n), n, inverse=True)
    assert np.max(np.abs(back.real - x)) <= 1e-9


def test_fft_hermitian_symmetry():
    rng = np.random.default_rng(1)
    X = fft(rng.standard_normal(32), 32)
    assert np.allclose(X[1:], np.conj(X[1:][::-1]))


def test_fft_rejects_bad_sizes():
    with pytest.raises(ValueError):
        fft([1, 2, 3], 6)
    with pytest.raises(ValueError):
        fft([1, 2, 3, 4, 5], 4)


def test_fft_zero_pads():
    X = fft([1.0], 8)
    assert np.allclose(X, np.ones(8))


def test_stft_frame_count():
    cfg = StftConfig(fft_size=2048, frame_length=1200, frame_shift=288)
    w = Waveform(np.zeros(1200), 24000)
    assert stft(w, cfg).shape[0] == 1
    w = Waveform(np.zeros(1200 + 288 * 3 + 5), 24000)
    assert stft(w, cfg).shape[0] == 4


@pytest.mark.parametrize("n,length,shift", [(500, 100, 30), (1000, 256, 64),
                                            (4097, 512, 128)])
def test_frame_count_formula(n, length, shift):
    cfg = StftConfig(fft_size=512, frame_length=length, frame_shift=shift)
    w = Waveform(np.zeros(n), 8000)
    assert stft(w, cfg).shape[0] == (n - length) // shift + 1


def test_stft_zero_signal():
    cfg = StftConfig(fft_size=256, frame_length=200, frame_shift=50)
    spec = stft(Waveform(np.zeros(1000), 8000), cfg)
    assert np.all(spec == 0)


def test_stft_too_short_raises():
    cfg = StftConfig(fft_size=256, frame_length=200, frame_shift=50)
    with pytest.raises(ValueError):
        stft(Waveform(np.zeros(100), 8000), cfg)


def test_stft_sine_peak_at_bin():
    # bin-centered sine with rect window: sharp peak, neighbors far down
    cfg = StftConfig(fft_size=256, frame_length=256, frame_shift=64,
                     window="rect")
    fs = 8000
    k = 20
    t = np.arange(256)
    w = Waveform(np.sin(2 * np.pi * k * t / 256), fs)
    mag = np.abs(stft(w, cfg)[0, : cfg.n_bins])
    peak = mag[k]
    others = np.delete(mag, [k])
    assert peak / max(others.max(), 1e-30) >= 10 ** (40 / 20)


def test_log_amplitude_floor_and_values():
    cfg = StftConfig(fft_size=8, frame_length=8, frame_shift=4)
    zeros = np.zeros((3, 8), dtype=complex)
    las = log_amplitude(zeros, cfg)
    assert np.allclose(las.values, np.log(1e-5))
    assert las.values.shape == (3, 5)
    ones = np.ones((2, 8), dtype=complex)
    assert np.allclose(log_amplitude(ones, cfg).values, 0.0)
    assert np.allclose(log_amplitude(np.e * ones, cfg).values, 1.0)


def test_log_amplitude_monotone():
    cfg = StftConfig(fft_size=8, frame_length=8, frame_shift=4)
    lo = log_amplitude(np.full((1, 8), 0.5 + 0j), cfg).values
    hi = log_amplitude(np.full((1, 8), 2.0 + 0j), cfg).values
    assert np.all(hi > lo)
    assert np.all(lo >= np.log(AMPLITUDE_FLOOR))


def test_mel_zero_signal():
    cfg = StftConfig(fft_size=512, frame_length=400, frame_shift=96)
    mel = mel_spectrogram(Waveform(np.zeros(1000), 8000), cfg, 40)
    assert np.allclose(mel.values, np.log(1e-5))


def test_mel_filterbank_shape_and_coverage():
    fb = mel_filterbank(2048, 80, 24000)
    assert fb.shape == (80, 1025)
    assert np.all(fb.sum(axis=1) > 0)


def test_mel_too_many_filters():
    with pytest.raises(ValueError):
        mel_filterbank(8, 6, 8000)


def test_mel_log_linearity():
    cfg = StftConfig(fft_size=512, frame_length=400, frame_shift=96)
    rng = np.random.default_rng(3)
    w1 = Waveform(0.3 * rng.standard_normal(2000), 8000)
    w2 = Waveform(2.0 * w1.samples, 8000)
    m1 = mel_spectrogram(w1, cfg, 40).values
    m2 = mel_spectrogram(w2, cfg, 40).values
    above = m1 > np.log(AMPLITUDE_FLOOR) + 1.0
    assert np.allclose(m2[above] - m1[above], np.log(2.0))


def test_waveform_validation():
    with pytest.raises(ValueError):
        Waveform(np.array([1.0, np.inf]), 8000)
    with pytest.raises(ValueError):
        Waveform(np.array([]), 8000)
    with pytest.raises(ValueError):
        Waveform(np.zeros(4), 0)


def test_stft_config_validation():
    with pytest.raises(ValueError):
        StftConfig(fft_size=100, frame_length=50, frame_shift=10)
    with pytest.raises(ValueError):
        StftConfig(fft_size=64, frame_length=128, frame_shift=10)
    with pytest.raises(ValueError):
        StftConfig(fft_size=64, frame_length=32, frame_shift=64)
