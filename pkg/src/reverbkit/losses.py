"""Training objectives and their analytic gradients.

Main objective: multi-resolution spectral distortion (MRSD) between the
rendered reverberant waveform and the natural reverberant waveform.
Secondary (multi-task) objective on the intermediate dry waveform:
LAS-MSE + waveform MSE + (1 - Pearson correlation).

Every loss returns (scalar, gradient w.r.t. the generated samples); the
gradients go through the STFT and the floored log analytically, with
zero gradient wherever the amplitude floor is active.
"""

from dataclasses import dataclass, field

import numpy as np

from .dsp import (AMPLITUDE_FLOOR, StftConfig, Waveform, _window,
                  default_stft_config, fft, frame_signal)

CORR_EPS = 1e-8


@dataclass(frozen=True)
class MrsdConfig:
    resolutions: tuple

    def __post_init__(self):
        if len(self.resolutions) < 1:
            raise ValueError("need at least one STFT resolution")


# Desk-scale resolutions for 8 kHz material; chosen short/medium/long so
# both temporal envelope and fine spectral structure are constrained.
DESK_MRSD = MrsdConfig((
    StftConfig(fft_size=512, frame_length=320, frame_shift=80),
    StftConfig(fft_size=128, frame_length=80, frame_shift=40),
    StftConfig(fft_size=1024, frame_length=640, frame_shift=160),
))


def _stft_frames(samples, cfg):
    win = _window(cfg)
    frames = frame_signal(samples, cfg) * win
    return fft(frames, cfg.fft_size), win


def _log_mag(spec, cfg):
    mag = np.abs(spec[:, : cfg.n_bins])
    floored = np.maximum(mag, AMPLITUDE_FLOOR)
    return np.log(floored), mag, floored


def _grad_through_stft(gspec, spec, cfg, win, n_samples):
    """Backpropagate a complex spectrum gradient to the input samples.

    gspec holds dL/dRe + i*dL/dIm for the first n_bins bins of each
    frame (bins above Nyquist carry no loss).  For a real input frame x,
    dL/dx = N * Re(ifft(g_full)).
    """
    n_frames = spec.shape[0]
    g_full = np.zeros((n_frames, cfg.fft_size), dtype=np.complex128)
    g_full[:, : cfg.n_bins] = gspec
    gframes = cfg.fft_size * np.real(fft(g_full, cfg.fft_size, inverse=True))
    gframes = gframes[:, : cfg.frame_length] * win
    grad = np.zeros(n_samples)
    for t in range(n_frames):
        s = t * cfg.frame_shift
        grad[s : s + cfg.frame_length] += gframes[t]
    return grad


def _spectral_mse(gen, ref, cfg):
    """Mean squared log-magnitude error at one resolution, with gradient."""
    spec_g, win = _stft_frames(gen, cfg)
    spec_r, _ = _stft_frames(ref, cfg)
    lg, mag_g, floored_g = _log_mag(spec_g, cfg)
    lr, _, _ = _log_mag(spec_r, cfg)
    diff = lg - lr
    n_elem = diff.size
    loss = float(np.mean(diff**2))
    # d loss / d|X| is zero where the floor clamps; elsewhere 2*diff/(n*|X|)
    active = mag_g > AMPLITUDE_FLOOR
    dmag = np.where(active, 2.0 * diff / (n_elem * floored_g), 0.0)
    safe = np.where(mag_g > 0, mag_g, 1.0)
    gspec = dmag * spec_g[:, : cfg.n_bins] / safe
    grad = _grad_through_stft(gspec, spec_g, cfg, win, len(gen))
    return loss, grad


def mrsd_loss(gen, ref, cfg=DESK_MRSD):
    """Multi-resolution spectral distortion; returns (loss, grad w.r.t. gen)."""
    g = gen.samples if isinstance(gen, Waveform) else np.asarray(gen, dtype=np.float64)
    r = ref.samples if isinstance(ref, Waveform) else np.asarray(ref, dtype=np.float64)
    if len(g) != len(r):
        raise ValueError("generated and reference lengths differ")
    total = 0.0
    grad = np.zeros(len(g))
    for res in cfg.resolutions:
        l, gr = _spectral_mse(g, r, res)
        total += l
        grad += gr
    return total, grad


def _pearson_loss(g, r):
    """1 - Pearson correlation with an epsilon-guarded denominator."""
    gc = g - g.mean()
    rc = r - r.mean()
    sgr = float(gc @ rc)
    sg = float(np.sqrt(gc @ gc))
    sr = float(np.sqrt(rc @ rc))
    denom = sg * sr + CORR_EPS
    rho = sgr / denom
    loss = 1.0 - rho
    if sg < CORR_EPS or sr < CORR_EPS:
        return loss, np.zeros_like(g)
    drho_dgc = rc / denom - sgr * sr * (gc / sg) / denom**2
    drho = drho_dgc - drho_dgc.mean()  # centering projection
    return loss, -drho


def secondary_dry_loss(gen_dry, ref_dry, las_cfg=None, weights=(1.0, 1.0, 1.0)):
    """LAS-MSE + waveform MSE + correlation loss on the dry branch."""
    g = gen_dry.samples if isinstance(gen_dry, Waveform) else np.asarray(gen_dry, dtype=np.float64)
    r = ref_dry.samples if isinstance(ref_dry, Waveform) else np.asarray(ref_dry, dtype=np.float64)
    if len(g) != len(r):
        raise ValueError("generated and reference lengths differ")
    if las_cfg is None:
        fs = gen_dry.sample_rate if isinstance(gen_dry, Waveform) else 8000
        las_cfg = default_stft_config(fs)
    w1, w2, w3 = weights
    las_l, las_g = _spectral_mse(g, r, las_cfg)
    diff = g - r
    wav_l = float(np.mean(diff**2))
    wav_g = 2.0 * diff / len(g)
    corr_l, corr_g = _pearson_loss(g, r)
    loss = w1 * las_l + w2 * wav_l + w3 * corr_l
    grad = w1 * las_g + w2 * wav_g + w3 * corr_g
    return loss, grad


def waveform_mse_loss(gen, ref):
    """Plain mean squared sample error; the phase-aware main-loss option."""
    g = gen.samples if isinstance(gen, Waveform) else np.asarray(gen, dtype=np.float64)
    r = ref.samples if isinstance(ref, Waveform) else np.asarray(ref, dtype=np.float64)
    if len(g) != len(r):
        raise ValueError("generated and reference lengths differ")
    diff = g - r
    return float(np.mean(diff**2)), 2.0 * diff / len(g)


def multitask_loss(main, secondary):
    """Sum of the main and secondary objectives: (loss, grad) pairs in, out.

    Gradients are w.r.t. different tensors (reverberant vs dry branch),
    so they are returned side by side rather than added.
    """
    main_l, main_g = main
    sec_l, sec_g = secondary
    return main_l + sec_l, main_g, sec_g
