"""Command-line surface: simulate, train, apply, evaluate, verify.

Configuration resolves in three layers: built-in defaults, then a JSON
file given with --config, then explicit flags.  The resolved config is
printed to stderr before the run; machine-readable results go to stdout.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import checks, simdata
from .convolve import convolve_fft
from .dsp import Waveform, default_stft_config, las
from .estimator import UtvEstimatorParams, estimator_forward
from .fileio import (load_checkpoint, read_rir, read_wav, save_checkpoint,
                     write_rir, write_wav)
from .losses import DESK_MRSD
from .optim import AdamState
from .rir import GtiRir, RoomSpec, estimate_t60, t60_error_stats
from .training import TrainHyper, train_gti, train_mt, train_utv
from .vocoder import ToyVocoderParams

DEFAULTS = {
    "simulate": {"utts": 200, "duration": 2.0, "fs": 8000, "rooms": None},
    "train-gti": {"rir_len": 256, "steps": 500, "loss": "mrsd", "lr": 1e-3,
                  "batch": 4, "split": "train"},
    "train-utv": {"rir_len": 256, "steps": 1000, "loss": "mrsd", "lr": 1e-3,
                  "hidden": 32, "channels": 32, "kernel": 11, "split": "train"},
    "train-mt": {"rir_len": 256, "steps": 1000, "loss": "mrsd", "lr": 1e-3,
                 "hidden": 32, "channels": 32, "kernel": 11,
                 "secondary_weight": 1.0, "fir_taps": 32, "split": "train"},
    "apply": {}, "t60": {}, "evaluate": {"split": "test_seen"}, "gradcheck": {},
}


def _build_parser():
    p = argparse.ArgumentParser(prog="reverbkit",
                                description="trainable reverberation toolkit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, help="JSON file overriding defaults")
    p.add_argument("--out", type=Path, default=Path("."))
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="build a synthetic dataset")
    s.add_argument("--rooms", type=Path, help="JSON room specs {seen:[],unseen:[]}")
    s.add_argument("--utts", type=int)
    s.add_argument("--duration", type=float)
    s.add_argument("--fs", type=int)

    for name in ("train-gti", "train-utv", "train-mt"):
        s = sub.add_parser(name, help=f"run {name.replace('-', ' ')}")
        s.add_argument("--manifest", type=Path, required=True)
        s.add_argument("--rir-len", dest="rir_len", type=int)
        s.add_argument("--steps", type=int)
        s.add_argument("--loss", choices=["mrsd", "wave"])
        s.add_argument("--lr", type=float)
        s.add_argument("--split")
        if name == "train-gti":
            s.add_argument("--batch", type=int)
        else:
            s.add_argument("--hidden", type=int)
            s.add_argument("--channels", type=int)
            s.add_argument("--kernel", type=int)
        if name == "train-mt":
            s.add_argument("--secondary-weight", dest="secondary_weight", type=float)
            s.add_argument("--fir-taps", dest="fir_taps", type=int)

    s = sub.add_parser("apply", help="convolve a dry file with an RIR model")
    s.add_argument("--dry", type=Path, required=True)
    s.add_argument("--rir", type=Path)
    s.add_argument("--ckpt", type=Path)
    s.add_argument("--las-source", dest="las_source", type=Path)
    s.add_argument("--out-wav", dest="out_wav", type=Path, required=True)

    s = sub.add_parser("t60", help="print the T60 of an RIR file in seconds")
    s.add_argument("--rir", type=Path, required=True)

    s = sub.add_parser("evaluate", help="T60 error statistics on a manifest")
    s.add_argument("--manifest", type=Path, required=True)
    s.add_argument("--model", type=Path, required=True,
                   help="a .rir file or a UTV checkpoint")
    s.add_argument("--split")
    s.add_argument("--plot-csv", dest="plot_csv", type=Path)

    s = sub.add_parser("gradcheck", help="verify every analytic gradient path")
    s.add_argument("--module", default="all",
                   choices=["all", "gti", "utv", "vocoder", "losses"])
    return p


def _resolve(args):
    cfg = dict(DEFAULTS.get(args.command, {}))
    if args.config:
        overlay = json.loads(args.config.read_text(encoding="utf-8"))
        cfg.update(overlay.get(args.command, overlay))
    for key, val in vars(args).items():
        if key in ("config", "command"):
            continue
        if val is not None:
            cfg[key] = val
    print(f"resolved config: {json.dumps({k: str(v) if isinstance(v, Path) else v for k, v in cfg.items()}, sort_keys=True)}",
          file=sys.stderr)
    return cfg


def _load_rooms(path):
    if path is None:
        return simdata.DESK_SEEN_ROOMS, simdata.DESK_UNSEEN_ROOMS
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    mk = lambda r: RoomSpec(r["room_id"], r["t60"], r.get("direct_to_reverb_db", 2.0),
                            r.get("onset_delay", 1), r["seed"])
    return [mk(r) for r in d["seen"]], [mk(r) for r in d.get("unseen", [])]


def _estimator_from_ckpt(ckpt):
    return UtvEstimatorParams.from_dict(ckpt, "utv.")


def _predict_rir_tail(params, wave):
    feats = las(wave).values
    tail, _ = estimator_forward(params, feats)
    return tail


def _cmd_simulate(cfg):
    seen, unseen = _load_rooms(cfg.get("rooms"))
    manifest = simdata.build_dataset(seen, unseen, cfg["utts"], cfg["duration"],
                                     cfg["fs"], cfg["out"], cfg["seed"])
    print(json.dumps({"out": str(cfg["out"]), "entries": len(manifest.entries)}))
    return 0


def _hyper(cfg):
    return TrainHyper(lr=cfg["lr"], loss=cfg["loss"],
                      batch_size=cfg.get("batch", 4),
                      secondary_weight=cfg.get("secondary_weight", 1.0))


def _train_common(cfg):
    manifest = simdata.load_manifest(cfg["manifest"])
    utts = simdata.load_utterances(manifest, splits=tuple(cfg["split"].split(",")))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return manifest, utts, out


def _cmd_train_gti(cfg):
    manifest, utts, out = _train_common(cfg)
    gti, adam, report = train_gti(utts, cfg["rir_len"], cfg["steps"],
                                  _hyper(cfg), seed=cfg["seed"])
    write_rir(out / "gti.rir", gti.as_rir())
    save_checkpoint(out / "gti.ckpt",
                    {"gti.tail": gti.tail, **adam.state_dict()})
    report.write_jsonl(out / "train_gti_report.jsonl")
    print(json.dumps({"rir": str(out / "gti.rir"),
                      "final_loss": report.records[-1]["main_loss"],
                      "checksum": report.final_checksum}))
    return 0


def _make_estimator(cfg, manifest, seed):
    input_dim = default_stft_config(manifest.sample_rate).n_bins
    return UtvEstimatorParams.init(input_dim, cfg["hidden"], cfg["channels"],
                                   cfg["kernel"], cfg["rir_len"] - 1, seed=seed)


def _cmd_train_utv(cfg):
    manifest, utts, out = _train_common(cfg)
    est = _make_estimator(cfg, manifest, cfg["seed"])
    est, adam, report = train_utv(utts, est, cfg["steps"], _hyper(cfg),
                                  seed=cfg["seed"])
    save_checkpoint(out / "utv.ckpt", {**est.as_dict("utv."), **adam.state_dict()})
    report.write_jsonl(out / "train_utv_report.jsonl")
    print(json.dumps({"ckpt": str(out / "utv.ckpt"),
                      "final_loss": report.records[-1]["main_loss"],
                      "checksum": report.final_checksum}))
    return 0


def _cmd_train_mt(cfg):
    manifest, utts, out = _train_common(cfg)
    est = _make_estimator(cfg, manifest, cfg["seed"])
    voc = ToyVocoderParams.identity(cfg["fir_taps"])
    voc, est, adam, report = train_mt(utts, voc, est, cfg["steps"],
                                      _hyper(cfg), seed=cfg["seed"])
    save_checkpoint(out / "mt.ckpt", {"voc.fir": voc.fir,
                                      **est.as_dict("utv."), **adam.state_dict()})
    report.write_jsonl(out / "train_mt_report.jsonl")
    print(json.dumps({"ckpt": str(out / "mt.ckpt"),
                      "final_loss": report.records[-1]["main_loss"],
                      "checksum": report.final_checksum}))
    return 0


def _cmd_apply(cfg):
    dry = read_wav(cfg["dry"])
    if cfg.get("rir"):
        coeffs = read_rir(cfg["rir"]).coefficients
    elif cfg.get("ckpt") and cfg.get("las_source"):
        params = _estimator_from_ckpt(load_checkpoint(cfg["ckpt"]))
        tail = _predict_rir_tail(params, read_wav(cfg["las_source"]))
        coeffs = np.concatenate(([1.0], tail))
    else:
        print("apply needs --rir, or --ckpt with --las-source", file=sys.stderr)
        return 2
    out = convolve_fft(dry, coeffs)
    write_wav(cfg["out_wav"], out, bit_depth=32)
    print(json.dumps({"out": str(cfg["out_wav"]), "samples": len(out)}))
    return 0


def _cmd_t60(cfg):
    h = read_rir(cfg["rir"])
    print(f"{estimate_t60(h):.6f}")
    return 0


def _cmd_evaluate(cfg):
    manifest = simdata.load_manifest(cfg["manifest"])
    model_path = Path(cfg["model"])
    utv_params = None
    fixed_t60 = None
    if model_path.suffix == ".rir":
        fixed_t60 = estimate_t60(read_rir(model_path))
    else:
        utv_params = _estimator_from_ckpt(load_checkpoint(model_path))
    splits = tuple(cfg["split"].split(","))
    rows = []
    for e in manifest.entries:
        if e["split"] not in splits:
            continue
        if fixed_t60 is not None:
            est = fixed_t60
        else:
            wave = read_wav(manifest.root / e["reverb_path"])
            tail = _predict_rir_tail(utv_params, wave)
            try:
                est = estimate_t60(np.concatenate(([1.0], tail)),
                                   manifest.sample_rate)
            except ValueError:
                est = None
        rows.append((e["utt_id"], e["room_id"], e["t60_truth"], est))
    by_room = {}
    for utt_id, room_id, truth, est in rows:
        by_room.setdefault(room_id, []).append((truth, est))
    room_stats = []
    pooled_est, pooled_truth = [], []
    for room_id in sorted(by_room):
        pairs = [(t, e) for t, e in by_room[room_id] if e is not None]
        failed = len(by_room[room_id]) - len(pairs)
        truth = by_room[room_id][0][0]
        stats = t60_error_stats([e for _, e in pairs], [t for t, _ in pairs]) \
            if pairs else {"mean": None, "median": None, "q1": None, "q3": None, "n": 0}
        room_stats.append({"room_id": room_id, "t60_truth": truth,
                           "mean_err": stats["mean"], "median_err": stats["median"],
                           "q1": stats["q1"], "q3": stats["q3"], "n": stats["n"],
                           "n_failed": failed})
        pooled_est += [e for _, e in pairs]
        pooled_truth += [t for t, _ in pairs]
    pooled = t60_error_stats(pooled_est, pooled_truth) if pooled_est else None
    print(json.dumps({"rooms": room_stats, "pooled": pooled}, indent=1))
    if cfg.get("plot_csv"):
        with open(cfg["plot_csv"], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["utt_id", "room_id", "t60_truth", "t60_est", "error"])
            for utt_id, room_id, truth, est in rows:
                w.writerow([utt_id, room_id, truth, est,
                            None if est is None else est - truth])
    return 0


def _cmd_gradcheck(cfg):
    module = cfg["module"]
    names = {"all": ["gti", "utv", "utv_conv", "vocoder", "mrsd", "secondary"],
             "gti": ["gti"], "utv": ["utv", "utv_conv"], "vocoder": ["vocoder"],
             "losses": ["mrsd", "secondary"]}[module]
    ok = True
    out = {}
    for name in names:
        report = checks.ALL_CHECKS[name]()
        out[name] = {"passed": report["passed"],
                     "max_rel_error": report["max_rel_error"],
                     "tolerance": report["tolerance"]}
        ok = ok and report["passed"]
    print(json.dumps({"passed": ok, "checks": out}, indent=1))
    return 0 if ok else 1


_COMMANDS = {
    "simulate": _cmd_simulate,
    "train-gti": _cmd_train_gti,
    "train-utv": _cmd_train_utv,
    "train-mt": _cmd_train_mt,
    "apply": _cmd_apply,
    "t60": _cmd_t60,
    "evaluate": _cmd_evaluate,
    "gradcheck": _cmd_gradcheck,
}


def run(argv):
    """Parse argv (without the program name) and run; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    cfg = _resolve(args)
    try:
        return _COMMANDS[args.command](cfg)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
