"""Reverberant convolution and its gradient (adjoint) operators.

The forward path realizes r = d * h as a frequency-domain product with
enough zero padding that the product is *linear* convolution, then
truncates to the dry length T.  The gradients account for that
truncation exactly, which is what lets the RIR be trained jointly with
whatever produced the dry waveform.
"""

from dataclasses import dataclass

import numpy as np

from .dsp import Waveform, fft


@dataclass
class ConvGrad:
    grad_dry: np.ndarray
    grad_rir: np.ndarray


def _next_pow2(n):
    return 1 << (n - 1).bit_length()


def _as_array(x):
    a = x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)
    if a.size < 1:
        raise ValueError("empty input")
    return a


def convolve_direct(d, h):
    """Time-domain linear convolution truncated to the dry length."""
    dd = _as_array(d)
    hh = _as_array(h)
    out = np.convolve(dd, hh)[: len(dd)]
    if isinstance(d, Waveform):
        return Waveform(out, d.sample_rate)
    return out


def linear_conv_fft(a, b):
    """Full linear convolution of two 1-D arrays via zero-padded FFT."""
    n = _next_pow2(len(a) + len(b) - 1)
    c = fft(fft(a, n) * fft(b, n), n, inverse=True)
    return np.real(c[: len(a) + len(b) - 1])


def convolve_fft(d, h):
    """Frequency-domain implementation of convolve_direct (same contract)."""
    dd = _as_array(d)
    hh = _as_array(h)
    if not np.any(hh[1:]):  # pure direct path: keep the output sample-exact
        out = hh[0] * dd
    else:
        out = linear_conv_fft(dd, hh)[: len(dd)]
    if isinstance(d, Waveform):
        return Waveform(out, d.sample_rate)
    return out


def convolve_grad(d, h, grad_r):
    """Gradients of the truncated convolution w.r.t. both inputs.

    With r_t = sum_k h_k d_{t-k+1} (output truncated to T):
      grad_rir_k = sum_t grad_r_t d_{t-k+1}
      grad_dry_s = sum_t grad_r_t h_{t-s+1}
    Both are cross-correlations, computed here as FFT convolutions with
    a reversed second operand.
    """
    dd = _as_array(d)
    hh = _as_array(h)
    g = np.asarray(grad_r, dtype=np.float64)
    T, L = len(dd), len(hh)
    if len(g) != T:
        raise ValueError("grad_r length must match the dry length")
    # corr(g, d)[k] = conv(g, reverse(d))[T-1+k], k in [0, L)
    c = linear_conv_fft(g, dd[::-1])
    grad_rir = c[T - 1 : T - 1 + L].copy()
    if len(grad_rir) < L:  # L > T: positions beyond the signal get no gradient
        grad_rir = np.pad(grad_rir, (0, L - len(grad_rir)))
    c = linear_conv_fft(g, hh[::-1])
    grad_dry = c[L - 1 : L - 1 + T].copy()
    return ConvGrad(grad_dry=grad_dry, grad_rir=grad_rir)
