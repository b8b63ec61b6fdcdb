"""Adam on named parameter dicts, plus a finite-difference gradient checker."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Per-parameter moment accumulators and hyperparameters."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def state_dict(self):
        """Flat name->array view (for checkpointing)."""
        d = {"adam.step": np.array([float(self.step)])}
        for k, a in self.m.items():
            d[f"adam.m.{k}"] = a
        for k, a in self.v.items():
            d[f"adam.v.{k}"] = a
        return d

    def load_state_dict(self, d):
        self.step = int(d["adam.step"][0])
        for k in list(self.m):
            self.m[k] = d[f"adam.m.{k}"]
            self.v[k] = d[f"adam.v.{k}"]


def adam_step(state, params, grads):
    """One in-place Adam update over a dict of named arrays.

    Raises on non-finite gradients without touching the parameters.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in {name}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name in sorted(params):
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        m = state.m[name]
        v = state.v[name]
        m += (1.0 - state.beta1) * (g - m)
        v += (1.0 - state.beta2) * (g * g - v)
        params[name] -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def grad_check(loss_fn, params, eps=1e-6, tolerance=1e-5):
    """Central finite differences vs analytic gradients, per component.

    loss_fn(params_dict) must return (loss, grads_dict).  Relative error
    uses max(|analytic|, |numeric|, 1e-8) as the denominator.  Returns a
    report with the max relative error overall and per parameter group.
    """
    _, grads = loss_fn(params)
    groups = {}
    for name in sorted(params):
        p = params[name]
        analytic = grads[name]
        num = np.zeros_like(p)
        flat_p = p.ravel()
        flat_n = num.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + eps
            lp, _ = loss_fn(params)
            flat_p[i] = orig - eps
            lm, _ = loss_fn(params)
            flat_p[i] = orig
            flat_n[i] = (lp - lm) / (2.0 * eps)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(num)), 1e-8)
        rel = np.abs(analytic - num) / denom
        na = float(np.linalg.norm(analytic))
        nn = float(np.linalg.norm(num))
        cos = float(np.sum(analytic * num) / (na * nn)) if na > 0 and nn > 0 else 1.0
        groups[name] = {
            "max_rel_error": float(rel.max()) if rel.size else 0.0,
            "cosine": cos,
            "passed": bool(rel.max() <= tolerance) if rel.size else True,
        }
    max_err = max(g["max_rel_error"] for g in groups.values())
    return {
        "max_rel_error": max_err,
        "passed": all(g["passed"] for g in groups.values()),
        "groups": groups,
        "tolerance": tolerance,
    }
