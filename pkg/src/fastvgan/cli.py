"""``fastvgan`` command line: extract | train | convert | eval.

Exit status is 0 on success, 1 for invalid input (bad flags, manifests,
configs, unknown speakers, missing files) and 2 for failures at run time.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import dsp
from .align import AlignmentError, PhonemeInventory, read_alignment
from .config import ConfigError, load_config
from .control import ProsodySpec, apply_prosody, speaker_prosody_stats, transfer_expressive_contours
from .corpus import ManifestError, cache_path, extract_corpus, extract_record, load_features, read_manifest
from .features import extract_features
from .evaluate import eval_conversion, write_report
from .model.checkpoint import CheckpointError
from .model.conditioning import ConditioningInputs, normalize_f0
from .train import Corpus, FastVGAN, TrainingError, train_loop

logger = logging.getLogger("fastvgan")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValueError):
    """Invalid user input detected by a command."""


# ---------------------------------------------------------------------------
# helpers


def _inventory(cfg):
    try:
        return PhonemeInventory.load(cfg.inventory)
    except OSError as exc:
        raise UsageError(f"cannot read phoneme inventory {cfg.inventory}: {exc.strerror}") from None


def _load_cached_corpus(manifest, cache_dir):
    feats, missing = [], []
    for rec in manifest:
        path = cache_path(cache_dir, rec.utterance_id)
        if not os.path.exists(path):
            missing.append(rec.utterance_id)
            continue
        feats.append(load_features(path)[0])
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise UsageError(
            f"{len(missing)} utterance(s) have no cached features in {cache_dir} ({shown}); run 'fastvgan extract' first"
        )
    return feats


def _load_system(path):
    if not path or not os.path.exists(path):
        raise UsageError(f"checkpoint {path!r} does not exist")
    return FastVGAN.load(path)


def _stats_for(system, speaker, fallback_features=None):
    if speaker is not None and speaker in system.speakers.stats:
        return system.speakers.stats[speaker]
    if fallback_features is None:
        raise UsageError(f"no prosody statistics stored for speaker {speaker!r}")
    logger.info("no stored statistics for %s; using the utterance's own", speaker or "the input")
    return speaker_prosody_stats([fallback_features], system.inventory)


def _write_array(path, arr):
    with open(path, "wb") as f:
        np.lib.format.write_array(f, np.ascontiguousarray(arr), allow_pickle=False)


# ---------------------------------------------------------------------------
# commands


def cmd_extract(args, cfg):
    manifest = read_manifest(args.manifest)
    inventory = _inventory(cfg) if os.path.exists(cfg.inventory) else None
    cache_dir = args.cache_dir or cfg.cache_dir
    result = extract_corpus(manifest, cfg.dsp, cache_dir, inventory, force=args.force)
    print(f"extract: {len(result.written)} written, {len(result.skipped)} up to date, {len(result.errors)} failed")
    for utt, line, msg in result.errors:
        print(f"  {utt} (manifest line {line}): {msg}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_INVALID


def cmd_train(args, cfg):
    manifest = read_manifest(args.manifest)
    if len(manifest) == 0:
        raise UsageError(f"manifest {args.manifest} has no records")
    inventory = _inventory(cfg)
    feats = _load_cached_corpus(manifest, args.cache_dir or cfg.cache_dir)
    tcfg = cfg.train
    if args.steps is not None:
        tcfg = replace(tcfg, steps=args.steps)
    if args.resume and not os.path.exists(args.resume):
        raise UsageError(f"checkpoint {args.resume!r} does not exist")
    corpus = Corpus(feats, inventory)
    written = train_loop(corpus, tcfg, args.out, resume=args.resume, gen_cfg=cfg.generator, disc_cfg=cfg.discriminator)
    for p in written:
        print(p)
    return EXIT_OK


def prosody_spec_from_args(args):
    try:
        return ProsodySpec(
            pitch_shift_semitones=args.pitch_shift,
            ambitus_factor=args.ambitus,
            vowel_duration_factor=args.vowel_rate,
            use_target_mean_f0=args.adapt_mean_f0,
            use_target_ambitus=args.adapt_ambitus,
            use_target_rate=args.adapt_rate,
        )
    except ValueError as exc:
        raise UsageError(f"invalid prosody flags: {exc}") from None


def conversion_inputs(args, cfg, system):
    """Conditioning inputs (before prosody transforms) and the source statistics."""
    target = args.target_speaker
    if target not in system.speakers.speakers:
        raise UsageError(f"unknown target speaker {target!r}; checkpoint has {system.speakers.speakers}")
    if args.contour_from:
        if not args.manifest:
            raise UsageError("--contour-from needs --manifest to look up the utterance")
        rec = read_manifest(args.manifest).by_id(args.contour_from)
        path = cache_path(args.cache_dir or cfg.cache_dir, rec.utterance_id)
        if os.path.exists(path):
            feats = load_features(path)[0]
        else:
            feats = extract_record(rec, cfg.dsp, system.inventory)
        src = _stats_for(system, feats.speaker_id, feats)
        return transfer_expressive_contours(feats, system.speakers, target, src.mean_logf0), src
    if not (args.wav and args.alignment):
        raise UsageError("convert needs --wav and --alignment (or --contour-from)")
    wave = dsp.read_wav(args.wav)
    segments = read_alignment(args.alignment, system.inventory)
    f0 = None
    if args.f0:
        f0 = dsp.read_f0_file(args.f0, dsp.n_frames(len(wave.samples), cfg.dsp))
    # without --source-speaker the input is treated as an unseen voice
    source = args.source_speaker
    feats = extract_features(os.path.basename(args.wav), source or "", wave, segments, cfg.dsp, f0)
    src = _stats_for(system, source, feats)
    inputs = ConditioningInputs(
        normalize_f0(feats.f0_hz, src.mean_logf0), feats.intensity, feats.alignment, target
    )
    return inputs, src


def cmd_convert(args, cfg):
    spec = prosody_spec_from_args(args)
    system = _load_system(args.checkpoint)
    inputs, src_stats = conversion_inputs(args, cfg, system)
    tgt_stats = _stats_for(system, args.target_speaker)
    inputs = apply_prosody(inputs, spec, system.inventory, src_stats, tgt_stats)
    mel, cond = system.synthesize(inputs, return_conditioning=True)
    if args.dump_conditioning:
        _write_array(args.dump_conditioning, cond)
    if args.out_mel:
        _write_array(args.out_mel, mel)
    if args.out_wav:
        wave = dsp.griffin_lim(dsp.MelSpectrogram(mel, cfg.dsp.hop_seconds, cfg.dsp.sample_rate), cfg.dsp,
                               iters=args.gl_iters or cfg.griffin_lim_iters)
        dsp.write_wav(args.out_wav, wave)
    print(f"convert: {inputs.n_frames} frames -> {args.target_speaker}")
    return EXIT_OK


def _load_mel(ref, cfg, cache_dir, manifest):
    """A log-mel from a ``.wav``/``.npy`` path or a cached utterance id."""
    if ref.endswith(".wav"):
        return dsp.mel_spectrogram(dsp.read_wav(ref), cfg.dsp).frames
    if ref.endswith(".npy"):
        return np.load(ref, allow_pickle=False)
    if manifest is not None:
        path = cache_path(cache_dir, manifest.by_id(ref).utterance_id)
        if os.path.exists(path):
            return load_features(path)[0].mel
    raise FileNotFoundError(ref)


def _read_pairs(path):
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f, delimiter="\t"))
    except OSError as exc:
        raise UsageError(f"cannot read pairs file {path}: {exc.strerror}") from None
    if rows and not {"pair_id", "source", "target", "reference"} <= set(rows[0]):
        raise UsageError(f"{path}: header needs pair_id, source, target, reference (and optionally converted)")
    return rows


def cmd_eval(args, cfg):
    rows = _read_pairs(args.pairs)
    if not rows:
        raise UsageError(f"{args.pairs}: no pairs to evaluate")
    base = os.path.dirname(os.path.abspath(args.pairs))
    manifest = read_manifest(args.manifest) if args.manifest else None
    cache_dir = args.cache_dir or cfg.cache_dir
    needs_model = any(not (r.get("converted") or "").strip() for r in rows)
    system = _load_system(args.checkpoint) if needs_model else None
    if needs_model and manifest is None:
        raise UsageError("pairs without a 'converted' entry need --manifest to find the source utterance")

    def resolve(p):
        return p if manifest is not None and not p.endswith((".wav", ".npy")) else os.path.join(base, p)

    pairs, problems = [], []
    for lineno, r in enumerate(rows, start=2):
        pid = r["pair_id"]
        try:
            ref_key = (r.get("reference") or "").strip()
            if not ref_key:
                raise FileNotFoundError("no reference")
            reference = _load_mel(resolve(ref_key), cfg, cache_dir, manifest)
            conv_key = (r.get("converted") or "").strip()
            if conv_key:
                converted = _load_mel(resolve(conv_key), cfg, cache_dir, manifest)
            else:
                converted = convert_cached(system, manifest, cache_dir, r["source"], r["target"])
        except (FileNotFoundError, KeyError) as exc:
            problems.append(f"line {lineno} pair {pid}: unpaired ({exc})")
            continue
        pairs.append((pid, r["source"], r["target"], converted, reference))
    if problems:
        raise UsageError("; ".join(problems))
    report = eval_conversion(pairs, n_bootstrap=args.n_bootstrap, seed=cfg.seed)
    os.makedirs(os.path.dirname(os.path.abspath(args.out_csv)), exist_ok=True)
    write_report(report, args.out_csv, args.out_report)
    sys.stdout.write(report.text())
    return EXIT_OK


def convert_cached(system, manifest, cache_dir, source_utt, target):
    """Generated mel for a cached manifest utterance voiced as ``target``."""
    rec = manifest.by_id(source_utt)
    path = cache_path(cache_dir, rec.utterance_id)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no cached features for {source_utt}; run 'fastvgan extract'")
    feats = load_features(path)[0]
    if target not in system.speakers.speakers:
        raise KeyError(f"unknown target speaker {target!r}")
    src = _stats_for(system, feats.speaker_id, feats)
    inputs = ConditioningInputs(normalize_f0(feats.f0_hz, src.mean_logf0), feats.intensity, feats.alignment, target)
    return system.synthesize(inputs)


# ---------------------------------------------------------------------------
# parser


def _positive(v):
    x = float(v)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return x


def _finite(v):
    x = float(v)
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {v}")
    return x


def build_parser():
    p = argparse.ArgumentParser(prog="fastvgan", description="Controllable GAN voice conversion on log-mel features.")
    p.add_argument("--config", help="JSON run configuration (defaults are used when omitted)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", help="cache mel/F0/intensity/alignment features per utterance")
    e.add_argument("--manifest", required=True)
    e.add_argument("--cache-dir")
    e.add_argument("--force", action="store_true", help="re-extract even up-to-date entries")

    t = sub.add_parser("train", help="train from cached features")
    t.add_argument("--manifest", required=True)
    t.add_argument("--cache-dir")
    t.add_argument("--out", required=True, help="directory for checkpoints and loss_log.csv")
    t.add_argument("--steps", type=int, help="overrides train.steps")
    t.add_argument("--resume", help="checkpoint to continue from")

    c = sub.add_parser("convert", help="voice an utterance as a target speaker")
    c.add_argument("--checkpoint", required=True)
    c.add_argument("--target-speaker", required=True)
    c.add_argument("--wav")
    c.add_argument("--alignment")
    c.add_argument("--f0", help="external 'hz flag' F0 file on the analysis frame grid")
    c.add_argument("--source-speaker", help="registered speaker whose statistics normalize the input "
                   "(default: statistics of the input utterance itself)")
    c.add_argument("--contour-from", metavar="UTTERANCE_ID", help="take contours and alignment from a manifest utterance")
    c.add_argument("--manifest")
    c.add_argument("--cache-dir")
    c.add_argument("--pitch-shift", type=_finite, default=0.0, metavar="SEMITONES")
    c.add_argument("--ambitus", type=_positive, default=1.0, metavar="FACTOR")
    c.add_argument("--vowel-rate", type=_positive, default=1.0, metavar="FACTOR", help="vowel duration factor")
    c.add_argument("--adapt-mean-f0", action=argparse.BooleanOptionalAction, default=True,
                   help="voice at the target's mean F0 (default); --no-adapt-mean-f0 keeps the source mean")
    c.add_argument("--adapt-ambitus", action="store_true", help="scale pitch range by target/source std ratio")
    c.add_argument("--adapt-rate", action="store_true", help="scale vowel durations by target/source rate ratio")
    c.add_argument("--out-wav")
    c.add_argument("--out-mel", help="generated log-mel as .npy (T x 80, float64)")
    c.add_argument("--dump-conditioning", metavar="PATH", help="assembled conditioning as .npy (T x 5 x C, float64)")
    c.add_argument("--gl-iters", type=int, help="Griffin-Lim iterations (overrides config)")

    v = sub.add_parser("eval", help="proxy speaker similarity with bootstrap CI")
    v.add_argument("--pairs", required=True, help="TSV: pair_id, source, target, reference[, converted]")
    v.add_argument("--checkpoint", help="used for pairs without a 'converted' entry")
    v.add_argument("--manifest")
    v.add_argument("--cache-dir")
    v.add_argument("--out-csv", required=True)
    v.add_argument("--out-report")
    v.add_argument("--n-bootstrap", type=int, default=1000)
    return p


COMMANDS = {"extract": cmd_extract, "train": cmd_train, "convert": cmd_convert, "eval": cmd_eval}

# ValueError covers malformed inputs (wav format, F0 files, prosody values)
_INVALID = (UsageError, ManifestError, ConfigError, AlignmentError, CheckpointError, KeyError, FileNotFoundError,
            ValueError)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        return COMMANDS[args.command](args, cfg)
    except _INVALID as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fastvgan {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingError, FloatingPointError, OSError, MemoryError) as exc:
        print(f"fastvgan {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
