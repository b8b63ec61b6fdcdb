"""Training loops for the reverberation models.

Three loops share the same skeleton: sample utterances, render the
reverberant output through the convolution module, evaluate the main
loss, push gradients back through the convolution (and, for UTV, through
the estimator network), and take an Adam step.  Minibatch selection is
derived statelessly from (seed, step) so a run can be checkpointed and
resumed bit-exactly.
"""

import json
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .convolve import convolve_fft, convolve_grad
from .dsp import Waveform, default_stft_config, las
from .estimator import UtvEstimatorParams, estimator_backward, estimator_forward
from .losses import DESK_MRSD, mrsd_loss, secondary_dry_loss, waveform_mse_loss
from .optim import AdamState, adam_step
from .rir import GtiRir, assemble
from .vocoder import ToyVocoderParams, sine_source, vocoder_backward, vocoder_forward


@dataclass
class TrainHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 4
    loss: str = "mrsd"  # or "wave"
    mrsd: object = DESK_MRSD
    secondary_weight: float = 1.0
    harmonics: int = 8
    source_amp: float = 0.3


@dataclass
class TrainReport:
    seed: int
    records: list = field(default_factory=list)
    wall_s: float = 0.0
    final_checksum: int = 0

    def log(self, step, main_loss, secondary_loss=None, wall_ms=0.0):
        if not np.isfinite(main_loss):
            raise ValueError(f"non-finite main loss at step {step}")
        self.records.append({
            "step": step,
            "main_loss": float(main_loss),
            "secondary_loss": None if secondary_loss is None else float(secondary_loss),
            "wall_ms": float(wall_ms),
        })

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for rec in self.records:
                f.write(json.dumps(rec) + "\n")


def params_checksum(params):
    """CRC32 over the raw bytes of all arrays, in sorted name order."""
    crc = 0
    for name in sorted(params):
        crc = zlib.crc32(np.ascontiguousarray(params[name]).tobytes(), crc)
    return crc


def _main_loss(hyper, gen, ref):
    if hyper.loss == "mrsd":
        return mrsd_loss(gen, ref, hyper.mrsd)
    if hyper.loss == "wave":
        return waveform_mse_loss(gen, ref)
    raise ValueError(f"unknown main loss {hyper.loss!r}")


def _batch_indices(seed, step, n, batch_size):
    rng = np.random.default_rng([seed, step])
    return rng.integers(0, n, size=min(batch_size, n))


def train_gti(dataset, rir_len, steps, hyper=None, seed=0,
              gti=None, adam=None, start_step=0, report=None):
    """Learn one shared RIR tail on (dry, reverberant) pairs."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    hyper = hyper or TrainHyper()
    fs = dataset[0].dry.sample_rate
    gti = gti or GtiRir.zeros(rir_len, fs)
    adam = adam or AdamState(lr=hyper.lr, beta1=hyper.beta1,
                             beta2=hyper.beta2, eps=hyper.eps)
    report = report or TrainReport(seed=seed)
    params = {"gti.tail": gti.tail}
    t0 = time.perf_counter()
    for step in range(start_step, start_step + steps):
        ts = time.perf_counter()
        idx = _batch_indices(seed, step, len(dataset), hyper.batch_size)
        h = assemble(gti.tail)
        total = 0.0
        grad = np.zeros_like(gti.tail)
        for i in idx:
            utt = dataset[i]
            r_hat = convolve_fft(utt.dry.samples, h)
            loss, grad_r = _main_loss(hyper, r_hat, utt.reverb.samples)
            cg = convolve_grad(utt.dry.samples, h, grad_r)
            total += loss
            grad += cg.grad_rir[1:]  # direct path is structural
        total /= len(idx)
        grad /= len(idx)
        adam_step(adam, params, {"gti.tail": grad})
        report.log(step, total, wall_ms=(time.perf_counter() - ts) * 1e3)
    report.wall_s += time.perf_counter() - t0
    report.final_checksum = params_checksum(params)
    return gti, adam, report


def reverb_las(dataset, cfg=None):
    """LAS of each utterance's natural reverberant waveform (estimator input)."""
    return [las(utt.reverb, cfg).values for utt in dataset]


def train_utv(dataset, params_init, steps, hyper=None, seed=0,
              adam=None, start_step=0, report=None, las_cache=None):
    """Train the per-utterance RIR predictor on (dry, reverberant) pairs."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    hyper = hyper or TrainHyper()
    params = params_init
    adam = adam or AdamState(lr=hyper.lr, beta1=hyper.beta1,
                             beta2=hyper.beta2, eps=hyper.eps)
    report = report or TrainReport(seed=seed)
    if las_cache is None:
        las_cache = reverb_las(dataset)
    pdict = params.as_dict("utv.")
    t0 = time.perf_counter()
    for step in range(start_step, start_step + steps):
        ts = time.perf_counter()
        idx = _batch_indices(seed, step, len(dataset), hyper.batch_size)
        total = 0.0
        acc = None
        for i in idx:
            utt = dataset[int(i)]
            tail, cache = estimator_forward(params, las_cache[int(i)])
            h = assemble(tail)
            r_hat = convolve_fft(utt.dry.samples, h)
            loss, grad_r = _main_loss(hyper, r_hat, utt.reverb.samples)
            cg = convolve_grad(utt.dry.samples, h, grad_r)
            grads, _ = estimator_backward(params, cache, cg.grad_rir[1:])
            total += loss
            gd = grads.as_dict("utv.")
            if acc is None:
                acc = gd
            else:
                for k in acc:
                    acc[k] += gd[k]
        total /= len(idx)
        for k in acc:
            acc[k] /= len(idx)
        adam_step(adam, pdict, acc)
        report.log(step, total, wall_ms=(time.perf_counter() - ts) * 1e3)
    report.wall_s += time.perf_counter() - t0
    report.final_checksum = params_checksum(pdict)
    return params, adam, report


def predict_rir_tail(params, las_values):
    """Inference-time tail prediction (no cache kept)."""
    tail, _ = estimator_forward(params, las_values)
    return tail


def utterance_sources(dataset, hyper, seed):
    """Deterministic sine-source excitation per utterance (from its F0 track)."""
    sources = []
    for i, utt in enumerate(dataset):
        if utt.f0 is None:
            raise ValueError(f"utterance {i} has no F0 track")
        sources.append(sine_source(utt.f0, hyper.harmonics, hyper.source_amp,
                                   seed=[seed, 7001, i]))
    return sources


def train_mt(dataset, vocoder_init, reverb_model, steps, hyper=None, seed=0,
             adam=None, start_step=0, report=None):
    """Joint vocoder + reverberation training with the optional dry-side task.

    reverb_model is either a GtiRir or UtvEstimatorParams.  The main loss
    acts on the rendered reverberant output; the secondary loss (scaled by
    hyper.secondary_weight) acts on the intermediate dry output only, so
    RIR parameters never receive gradient from it.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    hyper = hyper or TrainHyper()
    voc = vocoder_init
    is_utv = isinstance(reverb_model, UtvEstimatorParams)
    adam = adam or AdamState(lr=hyper.lr, beta1=hyper.beta1,
                             beta2=hyper.beta2, eps=hyper.eps)
    report = report or TrainReport(seed=seed)
    sources = utterance_sources(dataset, hyper, seed)
    las_cache = reverb_las(dataset) if is_utv else None
    pdict = {"voc.fir": voc.fir}
    if is_utv:
        pdict.update(reverb_model.as_dict("utv."))
    else:
        pdict["gti.tail"] = reverb_model.tail
    sec_cfg = default_stft_config(dataset[0].dry.sample_rate)
    t0 = time.perf_counter()
    for step in range(start_step, start_step + steps):
        ts = time.perf_counter()
        i = int(_batch_indices(seed, step, len(dataset), 1)[0])
        utt = dataset[i]
        dry_hat, vcache = vocoder_forward(voc, sources[i])
        if is_utv:
            tail, ecache = estimator_forward(reverb_model, las_cache[i])
        else:
            tail = reverb_model.tail
        h = assemble(tail)
        r_hat = convolve_fft(dry_hat.samples, h)
        main_l, grad_r = _main_loss(hyper, r_hat, utt.reverb.samples)
        sec_l, sec_g = 0.0, 0.0
        if hyper.secondary_weight != 0.0:
            sec_l, sec_g = secondary_dry_loss(dry_hat.samples, utt.dry.samples,
                                              las_cfg=sec_cfg)
        cg = convolve_grad(dry_hat.samples, h, grad_r)
        grad_dry = cg.grad_dry + hyper.secondary_weight * sec_g
        grad_fir, _ = vocoder_backward(voc, vcache, grad_dry)
        grads = {"voc.fir": grad_fir}
        if is_utv:
            egrads, _ = estimator_backward(reverb_model, ecache, cg.grad_rir[1:])
            grads.update(egrads.as_dict("utv."))
        else:
            grads["gti.tail"] = cg.grad_rir[1:]
        adam_step(adam, pdict, grads)
        voc.fir[0] = 1.0  # masked gradient keeps this exact; assert cheaply
        report.log(step, main_l, hyper.secondary_weight * sec_l,
                   wall_ms=(time.perf_counter() - ts) * 1e3)
    report.wall_s += time.perf_counter() - t0
    report.final_checksum = params_checksum(pdict)
    return voc, reverb_model, adam, report
