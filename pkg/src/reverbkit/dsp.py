"""Spectral primitives: FFT, STFT, log amplitude spectra, mel features.

Everything here is a pure function of its inputs and runs in double
precision.  The FFT is an in-house vectorized radix-2 implementation so
results are bit-for-bit reproducible across installations.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

AMPLITUDE_FLOOR = 1e-5


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class Waveform:
    """A mono sample sequence with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("waveform must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class StftConfig:
    fft_size: int
    frame_length: int
    frame_shift: int
    window: str = "hann"

    def __post_init__(self):
        if not _is_pow2(self.fft_size):
            raise ValueError("fft_size must be a power of two")
        if self.frame_length > self.fft_size:
            raise ValueError("frame_length must not exceed fft_size")
        if self.frame_shift < 1 or self.frame_shift > self.frame_length:
            raise ValueError("frame_shift must be in [1, frame_length]")
        if self.window not in ("hann", "rect"):
            raise ValueError(f"unknown window {self.window!r}")

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    def n_frames(self, n_samples):
        if n_samples < self.frame_length:
            raise ValueError("signal shorter than one frame")
        return (n_samples - self.frame_length) // self.frame_shift + 1


# Analysis defaults: full scale follows the 24 kHz configuration
# (2048-point FFT, 50 ms frames, 12 ms shift); the 8 kHz desk config
# keeps the same ratios so tests run in seconds.
FULL_STFT_24K = StftConfig(fft_size=2048, frame_length=1200, frame_shift=288)
DESK_STFT_8K = StftConfig(fft_size=512, frame_length=400, frame_shift=96)


def default_stft_config(sample_rate):
    """Analysis config for a sample rate: 24 kHz full-scale, else desk-scale."""
    if sample_rate == 24000:
        return FULL_STFT_24K
    return DESK_STFT_8K


@dataclass
class LasFrames:
    """Log amplitude spectra, one row per frame, fft_size/2+1 bins."""

    values: np.ndarray
    config: StftConfig


@dataclass
class MelFrames:
    values: np.ndarray
    n_mel: int


@lru_cache(maxsize=64)
def _fft_plan(n):
    """Bit-reversal permutation and per-stage twiddle factors for size n."""
    levels = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(levels):
        rev = (rev << 1) | ((idx >> b) & 1)
    twiddles = []
    size = 2
    while size <= n:
        half = size // 2
        twiddles.append(np.exp(-2j * np.pi * np.arange(half) / size))
        size *= 2
    return rev, twiddles


def _fft_core(a, inverse):
    """Iterative radix-2 Cooley-Tukey along the last axis (length power of two)."""
    n = a.shape[-1]
    if n == 1:
        return a.copy()
    rev, twiddles = _fft_plan(n)
    a = np.ascontiguousarray(a[..., rev], dtype=np.complex128)
    lead = a.shape[:-1]
    size = 2
    for tw in twiddles:
        if inverse:
            tw = np.conj(tw)
        half = size // 2
        b = a.reshape(lead + (n // size, size))
        t = b[..., half:] * tw
        even = b[..., :half]
        lower = even + t
        b[..., half:] = even - t
        b[..., :half] = lower
        size *= 2
    if inverse:
        a = a / n
    return a


def fft(x, n, inverse=False):
    """FFT of x zero-padded to length n (power of two, n >= len(x)).

    Forward uses exp(-2*pi*i*k*m/n); inverse applies the 1/n factor.
    """
    x = np.asarray(x)
    if not _is_pow2(n):
        raise ValueError("transform size must be a power of two")
    if x.shape[-1] > n:
        raise ValueError("transform size smaller than the input")
    if x.shape[-1] < n:
        pad = [(0, 0)] * (x.ndim - 1) + [(0, n - x.shape[-1])]
        x = np.pad(x, pad)
    return _fft_core(x.astype(np.complex128, copy=False), inverse)


def _window(cfg):
    if cfg.window == "rect":
        return np.ones(cfg.frame_length)
    n = np.arange(cfg.frame_length)
    return 0.5 - 0.5 * np.cos(2 * np.pi * n / cfg.frame_length)


def frame_signal(samples, cfg):
    """Slice a signal into overlapping frames [n_frames, frame_length]."""
    n_frames = cfg.n_frames(len(samples))
    starts = np.arange(n_frames) * cfg.frame_shift
    return samples[starts[:, None] + np.arange(cfg.frame_length)]


def stft(w, cfg):
    """Windowed, zero-padded FFT per frame; returns [n_frames, fft_size] complex."""
    frames = frame_signal(w.samples, cfg) * _window(cfg)
    return fft(frames, cfg.fft_size)


def log_amplitude(spec, cfg):
    """Floored natural-log magnitudes over the fft_size/2+1 non-redundant bins."""
    mag = np.abs(spec[:, : cfg.n_bins])
    return LasFrames(np.log(np.maximum(mag, AMPLITUDE_FLOOR)), cfg)


def las(w, cfg=None):
    """Log amplitude spectra of a waveform under cfg (defaults per sample rate)."""
    if cfg is None:
        cfg = default_stft_config(w.sample_rate)
    return log_amplitude(stft(w, cfg), cfg)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(fft_size, n_mel, sample_rate):
    """Triangular filters on the HTK mel scale, 0 Hz to Nyquist; [n_mel, n_bins]."""
    n_bins = fft_size // 2 + 1
    if n_mel > n_bins:
        raise ValueError("more mel filters than spectral bins")
    freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mel + 2)
    hz_pts = mel_to_hz(mel_pts)
    fb = np.zeros((n_mel, n_bins))
    for m in range(n_mel):
        lo, ctr, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (freqs - lo) / max(ctr - lo, 1e-12)
        down = (hi - freqs) / max(hi - ctr, 1e-12)
        fb[m] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def mel_spectrogram(w, cfg, n_mel):
    """Floored log mel energies from magnitude spectra; [n_frames, n_mel]."""
    fb = mel_filterbank(cfg.fft_size, n_mel, w.sample_rate)
    mag = np.abs(stft(w, cfg)[:, : cfg.n_bins])
    mel = mag @ fb.T
    return MelFrames(np.log(np.maximum(mel, AMPLITUDE_FLOOR)), n_mel)
