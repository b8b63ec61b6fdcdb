"""Deterministic multi-room dry/reverberant dataset synthesis.

Dry utterances are sine-source excitations shaped by one fixed
spectrally rich FIR; each is convolved with its room's synthetic RIR to
produce the reverberant side.  Everything derives from the top-level
seed, so a rebuild is byte-identical.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convolve import convolve_fft
from .dsp import Waveform
from .fileio import read_wav, write_wav
from .rir import RoomSpec, synth_rir
from .vocoder import F0Track, ToyVocoderParams, sine_source, vocoder_forward

SPLITS = ("train", "val", "test_seen", "test_unseen")


@dataclass
class Utterance:
    utt_id: str
    dry: Waveform
    reverb: Waveform
    f0: F0Track
    room_id: str
    t60_truth: float
    split: str


@dataclass
class DatasetManifest:
    entries: list
    rooms: dict  # room_id -> RoomSpec
    sample_rate: int
    root: Path = field(default=Path("."))

    def split(self, name):
        return [e for e in self.entries if e["split"] == name]


# Desk defaults mirroring the seen/unseen room structure: unseen T60s sit
# outside the seen range so generalization is actually tested.
DESK_SEEN_ROOMS = (
    RoomSpec("room_a", 0.10, 2.0, 1, 101),
    RoomSpec("room_b", 0.20, 2.0, 1, 102),
    RoomSpec("room_c", 0.30, 2.0, 1, 103),
    RoomSpec("room_d", 0.40, 2.0, 1, 104),
)
DESK_UNSEEN_ROOMS = (
    RoomSpec("room_u1", 0.15, 2.0, 1, 201),
    RoomSpec("room_u2", 0.50, 2.0, 1, 202),
)


def room_rir_length(t60, sample_rate):
    """Long enough for >= 30 dB of envelope decay (and T60 estimation)."""
    return max(256, int(np.ceil(0.5 * t60 * sample_rate)))


def gen_f0_track(seed, duration, fs, frame_shift):
    """Piecewise-smooth F0 random walk in [80, 300] Hz with voiced/unvoiced
    runs of at least 10 frames; deterministic from the seed."""
    n_frames = int(duration * fs) // frame_shift
    if n_frames < 2:
        raise ValueError("duration must cover at least two frames")
    rng = np.random.default_rng(seed)
    f0 = np.empty(n_frames)
    f0[0] = rng.uniform(120.0, 260.0)
    steps = rng.normal(0.0, 3.0, n_frames - 1)
    for t in range(1, n_frames):
        f0[t] = np.clip(f0[t - 1] + steps[t - 1], 80.0, 300.0)
    vuv = np.empty(n_frames, dtype=bool)
    pos = 0
    state = bool(rng.integers(0, 2))
    while pos < n_frames:
        run = int(rng.integers(10, 40))
        if n_frames - (pos + run) < 10:  # absorb a too-short final run
            run = n_frames - pos
        vuv[pos : pos + run] = state
        pos += run
        state = not state
    return F0Track(f0, vuv, frame_shift, fs)


def _rich_fir(n_taps=24, seed=12345):
    """Fixed spectrally rich shaping filter shared by every dry utterance."""
    rng = np.random.default_rng(seed)
    fir = np.zeros(n_taps)
    fir[0] = 1.0
    fir[1:] = 0.5 * rng.uniform(-1.0, 1.0, n_taps - 1) * (0.85 ** np.arange(1, n_taps))
    return ToyVocoderParams(fir)


def synth_dry(seed, duration, fs, frame_shift=96, harmonics=8, amp=0.3,
              shaping=None):
    """One deterministic dry utterance plus its F0 track."""
    track = gen_f0_track([seed, 1], duration, fs, frame_shift)
    source = sine_source(track, harmonics, amp, seed=[seed, 2])
    voc = shaping or _rich_fir()
    dry, _ = vocoder_forward(voc, source)
    return dry, track


def _f0_to_json(track):
    return {"f0": track.f0.tolist(), "vuv": track.vuv.astype(int).tolist(),
            "frame_shift": track.frame_shift, "sample_rate": track.sample_rate}


def _f0_from_json(d):
    return F0Track(np.array(d["f0"]), np.array(d["vuv"], dtype=bool),
                   d["frame_shift"], d["sample_rate"])


def build_dataset(rooms, unseen_rooms, n_utts, duration, fs, out_dir, seed,
                  n_unseen_utts=None, min_decay_db=0.0):
    """Write a dataset to out_dir and return its manifest.

    Seen-room utterances are split 90/5/5 (train/val/test_seen); a
    separate batch over the unseen rooms forms test_unseen.  Rooms are
    assigned round-robin.  Fully deterministic from the seed.
    """
    rooms = list(rooms)
    unseen_rooms = list(unseen_rooms)
    if not rooms:
        raise ValueError("need at least one seen room")
    if n_utts < len(rooms):
        raise ValueError("need at least one utterance per room")
    all_rooms = rooms + unseen_rooms
    ids = [r.room_id for r in all_rooms]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate room_ids")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rirs = {r.room_id: synth_rir(r, room_rir_length(r.t60, fs), fs,
                                 min_decay_db=min_decay_db) for r in all_rooms}
    if n_unseen_utts is None:
        n_unseen_utts = (max(1, n_utts // 10) * len(unseen_rooms)
                         if unseen_rooms else 0)

    n_train = int(round(n_utts * 0.90))
    n_val = int(round(n_utts * 0.05))
    splits = (["train"] * n_train + ["val"] * n_val
              + ["test_seen"] * (n_utts - n_train - n_val))

    entries = []

    def emit(utt_idx, room, split):
        utt_id = f"utt{utt_idx:04d}"
        dry, track = synth_dry([seed, utt_idx], duration, fs)
        reverb = convolve_fft(dry, rirs[room.room_id].coefficients)
        dry_path = f"{utt_id}_dry.wav"
        rev_path = f"{utt_id}_rev.wav"
        f0_path = f"{utt_id}_f0.json"
        write_wav(out / dry_path, dry, bit_depth=32)
        write_wav(out / rev_path, reverb, bit_depth=32)
        (out / f0_path).write_text(json.dumps(_f0_to_json(track)), encoding="utf-8")
        entries.append({
            "utt_id": utt_id, "dry_path": dry_path, "reverb_path": rev_path,
            "f0_path": f0_path, "room_id": room.room_id,
            "t60_truth": room.t60, "split": split,
        })

    for i in range(n_utts):
        emit(i, rooms[i % len(rooms)], splits[i])
    for j in range(n_unseen_utts):
        emit(n_utts + j, unseen_rooms[j % len(unseen_rooms)], "test_unseen")

    manifest = {
        "sample_rate": fs,
        "seed": seed,
        "duration": duration,
        "rooms": [{"room_id": r.room_id, "t60": r.t60,
                   "direct_to_reverb_db": r.direct_to_reverb_db,
                   "onset_delay": r.onset_delay, "seed": r.seed,
                   "seen": r in rooms} for r in all_rooms],
        "entries": entries,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return DatasetManifest(entries, {r.room_id: r for r in all_rooms}, fs, out)


def load_manifest(path):
    path = Path(path)
    d = json.loads(path.read_text(encoding="utf-8"))
    rooms = {r["room_id"]: RoomSpec(r["room_id"], r["t60"],
                                    r["direct_to_reverb_db"], r["onset_delay"],
                                    r["seed"]) for r in d["rooms"]}
    return DatasetManifest(d["entries"], rooms, d["sample_rate"], path.parent)


def load_utterances(manifest, splits=("train",)):
    """Materialize Utterance objects for the requested splits."""
    utts = []
    for e in manifest.entries:
        if e["split"] not in splits:
            continue
        dry = read_wav(manifest.root / e["dry_path"])
        reverb = read_wav(manifest.root / e["reverb_path"])
        f0 = _f0_from_json(json.loads(
            (manifest.root / e["f0_path"]).read_text(encoding="utf-8")))
        utts.append(Utterance(e["utt_id"], dry, reverb, f0, e["room_id"],
                              e["t60_truth"], e["split"]))
    return utts


def room_rirs(manifest, min_decay_db=0.0):
    """Regenerate every room's ground-truth RIR from the manifest."""
    return {rid: synth_rir(spec, room_rir_length(spec.t60, manifest.sample_rate),
                           manifest.sample_rate, min_decay_db=min_decay_db)
            for rid, spec in manifest.rooms.items()}
