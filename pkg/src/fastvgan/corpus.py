"""Corpus ingestion: manifest records and the content-addressed feature cache."""

from __future__ import annotations

import hashlib
import io
import json
import os
import zipfile
from dataclasses import dataclass

import numpy as np

from . import dsp
from .align import AlignmentError, PhonemeAlignment, read_alignment
from .features import UtteranceFeatures, extract_features

__all__ = [
    "ManifestError",
    "ManifestRecord",
    "Manifest",
    "read_manifest",
    "feature_key",
    "save_features",
    "load_features",
    "cache_path",
    "extract_record",
    "extract_corpus",
    "ExtractResult",
]

REQUIRED = ("utterance_id", "speaker_id", "wav_path", "alignment_path")
OPTIONAL = ("f0_path", "transcript")
CACHE_VERSION = "fastvgan-features-v1"
# alignments may end a little before or after the audio (window overhang, rounding)
ALIGNMENT_SLACK_SECONDS = 0.05
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRecord:
    utterance_id: str
    speaker_id: str
    wav_path: str
    alignment_path: str
    f0_path: str = ""
    transcript: str = ""
    line: int = 0


@dataclass(frozen=True)
class Manifest:
    records: tuple
    path: str = ""

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def speakers(self):
        return sorted({r.speaker_id for r in self.records})

    def by_id(self, utterance_id):
        for r in self.records:
            if r.utterance_id == utterance_id:
                return r
        raise KeyError(f"utterance {utterance_id!r} is not in manifest {self.path or '<memory>'}")


def read_manifest(path, check_paths=True):
    """Parse a tab-separated manifest; paths are relative to the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc.strerror}") from None
    if not lines:
        raise ManifestError(f"{path}: missing header line")
    header = lines[0].split("\t")
    missing = [c for c in REQUIRED if c not in header]
    if missing:
        raise ManifestError(f"{path}: header lacks column(s) {missing}")
    unknown = [c for c in header if c not in REQUIRED + OPTIONAL]
    if unknown:
        raise ManifestError(f"{path}: unknown column(s) {unknown}")
    records, seen, problems = [], {}, []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            problems.append(f"line {lineno}: {len(cells)} fields, header has {len(header)}")
            continue
        row = dict(zip(header, cells))
        if not row["utterance_id"] or not row["speaker_id"]:
            problems.append(f"line {lineno}: empty utterance_id or speaker_id")
            continue
        if row["utterance_id"] in seen:
            problems.append(
                f"line {lineno}: duplicate utterance_id {row['utterance_id']!r} (first on line {seen[row['utterance_id']]})"
            )
            continue
        seen[row["utterance_id"]] = lineno
        for col in ("wav_path", "alignment_path", "f0_path"):
            if row.get(col):
                row[col] = os.path.normpath(os.path.join(base, row[col]))
                if check_paths and not os.path.isfile(row[col]):
                    problems.append(f"line {lineno} ({row['utterance_id']}): {col} {row[col]} does not exist")
        records.append(
            ManifestRecord(
                row["utterance_id"], row["speaker_id"], row["wav_path"], row["alignment_path"],
                row.get("f0_path", ""), row.get("transcript", ""), lineno,
            )
        )
    if problems:
        raise ManifestError(f"{path}: " + "; ".join(problems))
    return Manifest(tuple(records), path)


# ---------------------------------------------------------------------------
# Feature files


def _file_digest(h, path):
    h.update(os.path.basename(path).encode() if path else b"")
    if path:
        with open(path, "rb") as f:
            h.update(hashlib.sha256(f.read()).digest())
    h.update(b"\0")


def feature_key(record, cfg):
    """Content hash of the record's inputs and the analysis settings."""
    h = hashlib.sha256(CACHE_VERSION.encode())
    h.update(json.dumps(cfg.to_dict(), sort_keys=True).encode())
    h.update(f"{record.utterance_id}\0{record.speaker_id}\0".encode())
    for p in (record.wav_path, record.alignment_path, record.f0_path):
        _file_digest(h, p)
    return h.hexdigest()


def cache_path(cache_dir, utterance_id):
    return os.path.join(cache_dir, f"{utterance_id}.npz")


def _npy_bytes(arr):
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def save_features(path, feats, key="", extra=None):
    """Write an ``.npz``-compatible archive with fixed timestamps (byte-reproducible)."""
    meta = {
        "utterance_id": feats.utterance_id,
        "speaker_id": feats.speaker_id,
        "key": key,
        "labels": list(feats.alignment.labels),
        "lengths": [int(n) for n in feats.alignment.lengths],
    }
    meta.update(extra or {})
    arrays = {
        "mel": feats.mel.astype(np.float64),
        "f0_hz": feats.f0_hz.astype(np.float64),
        "voiced": feats.voiced.astype(bool),
        "intensity": feats.intensity.astype(np.float64),
        "meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
    }
    tmp = path + ".tmp"
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as z:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(name + ".npy", date_time=_ZIP_DATE)
            info.external_attr = 0o644 << 16
            z.writestr(info, _npy_bytes(arrays[name]))
    os.replace(tmp, path)


def _read_meta(z):
    return json.loads(bytes(z["meta"]).decode())


def load_features(path):
    """Inverse of :func:`save_features`; returns ``(UtteranceFeatures, meta)``."""
    with np.load(path, allow_pickle=False) as z:
        meta = _read_meta(z)
        alignment = PhonemeAlignment(tuple(zip(meta["labels"], meta["lengths"])))
        feats = UtteranceFeatures(
            meta["utterance_id"], meta["speaker_id"], z["mel"], z["f0_hz"], z["voiced"], z["intensity"], alignment
        )
    return feats, meta


def _cached_key(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            return _read_meta(z).get("key")
    except (OSError, ValueError, KeyError, zipfile.BadZipFile):
        return None


def extract_record(record, cfg, inventory=None):
    """Features for one manifest record; raises ``ValueError`` naming the record."""
    wave = dsp.read_wav(record.wav_path)
    segments = read_alignment(record.alignment_path, inventory)
    if not segments:
        raise AlignmentError(f"{record.alignment_path}: no segments")
    end = segments[-1][2]
    if abs(end - wave.duration) > ALIGNMENT_SLACK_SECONDS:
        n_ali = int(round(end / cfg.hop_seconds))
        n_mel = dsp.n_frames(len(wave.samples), cfg)
        raise AlignmentError(
            f"alignment covers {end:.3f} s ({n_ali} frames) but audio lasts {wave.duration:.3f} s "
            f"({n_mel} mel frames)"
        )
    f0 = None
    if record.f0_path:
        f0 = dsp.read_f0_file(record.f0_path, dsp.n_frames(len(wave.samples), cfg))
    return extract_features(record.utterance_id, record.speaker_id, wave, segments, cfg, f0)


@dataclass
class ExtractResult:
    written: list
    skipped: list
    errors: list  # (utterance_id, line, message)

    @property
    def ok(self):
        return not self.errors


def extract_corpus(manifest, cfg, cache_dir, inventory=None, force=False):
    """Populate ``cache_dir``; up-to-date entries (same content key) are left untouched."""
    os.makedirs(cache_dir, exist_ok=True)
    result = ExtractResult([], [], [])
    for rec in manifest:
        path = cache_path(cache_dir, rec.utterance_id)
        try:
            key = feature_key(rec, cfg)
            if not force and os.path.exists(path) and _cached_key(path) == key:
                result.skipped.append(rec.utterance_id)
                continue
            feats = extract_record(rec, cfg, inventory)
            save_features(path, feats, key, {"transcript": rec.transcript})
            result.written.append(rec.utterance_id)
        except (OSError, ValueError) as exc:
            msg = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
            result.errors.append((rec.utterance_id, rec.line, msg))
    return result
