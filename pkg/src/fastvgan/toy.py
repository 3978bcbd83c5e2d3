"""Synthetic vowel-like speech with exact phoneme alignments.

Used to build a small multi-speaker corpus on disk (wav files, alignment
files, inventory and manifest) so the full pipeline can be exercised without
any external data. Speakers differ in mean F0, pitch range, formant scaling
(vocal tract length), spectral tilt and speech rate.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .align import PhonemeInventory
from .dsp import Waveform, write_wav

__all__ = ["TOY_INVENTORY", "Voice", "TOY_VOICES", "synthesize_utterance", "make_toy_corpus"]

TOY_INVENTORY = PhonemeInventory(
    ("sil", "a", "e", "i", "o", "u", "m", "n", "s", "f"),
    frozenset({"a", "e", "i", "o", "u"}),
)

_FORMANTS = {
    "a": (730.0, 1090.0, 2440.0),
    "e": (530.0, 1840.0, 2480.0),
    "i": (300.0, 2290.0, 3010.0),
    "o": (570.0, 840.0, 2410.0),
    "u": (320.0, 870.0, 2240.0),
    "m": (280.0, 1300.0, 2300.0),
    "n": (280.0, 1700.0, 2600.0),
}
_VOICED_GAIN = {"m": 0.35, "n": 0.35}
_NOISE_BANDS = {"s": (3500.0, 7800.0, 0.12), "f": (1200.0, 7800.0, 0.06), "sil": (100.0, 7800.0, 0.002)}


@dataclass(frozen=True)
class Voice:
    name: str
    f0_hz: float
    range_semitones: float
    formant_scale: float
    tilt_db_per_octave: float
    vowel_seconds: float
    consonant_seconds: float = 0.07


TOY_VOICES = (
    Voice("spk_low", 110.0, 3.0, 1.0, -12.0, 0.13),
    Voice("spk_high", 215.0, 5.0, 1.18, -7.0, 0.085),
)


def _smooth(x, n):
    if n <= 1:
        return x
    k = np.hanning(n + 2)[1:-1]
    k /= k.sum()
    pad = np.pad(x, (n, n), mode="edge")
    return np.convolve(pad, k, mode="same")[n:-n]


def _random_phonemes(rng, n_syllables):
    vowels = ["a", "e", "i", "o", "u"]
    consonants = ["m", "n", "s", "f"]
    seq = []
    for _ in range(n_syllables):
        if rng.random() < 0.8:
            seq.append(consonants[rng.integers(len(consonants))])
        seq.append(vowels[rng.integers(len(vowels))])
    return seq


def synthesize_utterance(phonemes, voice, rng, sr=16000, lead=0.15, tail=0.15, min_seconds=1.8):
    """Render a phoneme sequence; returns ``(Waveform, [(label, start, end), ...])``."""
    durs = []
    for p in phonemes:
        base = voice.vowel_seconds if p in TOY_INVENTORY.vowels else voice.consonant_seconds
        durs.append(base * rng.uniform(0.8, 1.25))
    core = sum(durs)
    tail = max(tail, min_seconds - lead - core)
    labels = ["sil"] + list(phonemes) + ["sil"]
    durs = [lead] + durs + [tail]
    bounds = np.concatenate([[0.0], np.cumsum(durs)])
    bounds = np.round(bounds * sr) / sr
    n = int(round(bounds[-1] * sr))
    seg_idx = np.searchsorted(bounds[1:], (np.arange(n) + 0.5) / sr, side="right")
    seg_idx = np.minimum(seg_idx, len(labels) - 1)
    t = np.arange(n) / sr

    # pitch: declination plus a slow random contour
    phase = rng.uniform(0, 2 * np.pi)
    wobble = np.sin(2 * np.pi * rng.uniform(0.6, 1.4) * t + phase)
    semis = voice.range_semitones * (0.5 * wobble - 0.4 * (t / t[-1] - 0.5))
    f0 = voice.f0_hz * 2.0 ** (semis / 12.0)

    voiced_gain = np.array([
        1.0 if l in TOY_INVENTORY.vowels else _VOICED_GAIN.get(l, 0.0) for l in labels
    ])[seg_idx]
    voiced_gain = _smooth(voiced_gain, int(0.012 * sr))
    formants = np.array([_FORMANTS.get(l, _FORMANTS["a"]) for l in labels])[seg_idx]
    formants = np.stack([_smooth(formants[:, i], int(0.03 * sr)) for i in range(3)], axis=1)
    formants *= voice.formant_scale
    bandwidths = np.array([90.0, 120.0, 160.0]) * voice.formant_scale
    gains = np.array([1.0, 0.7, 0.35])

    signal = np.zeros(n)
    active = voiced_gain > 1e-4
    total_phase = 2 * np.pi * np.cumsum(f0) / sr
    n_harm = int(7800 // f0.min())
    for k in range(1, n_harm + 1):
        fk = k * f0
        ok = active & (fk < 7800)
        if not np.any(ok):
            continue
        env = np.zeros(n)
        for i in range(3):
            env += gains[i] * np.exp(-0.5 * ((fk - formants[:, i]) / bandwidths[i]) ** 2)
        env = (env + 0.02) * 10 ** (voice.tilt_db_per_octave / 20.0 * np.log2(fk / 100.0))
        signal[ok] += (env * np.sin(k * total_phase))[ok]
    signal *= voiced_gain

    spec_noise = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sr)
    for label, (lo, hi, gain) in _NOISE_BANDS.items():
        mask = np.array([l == label for l in labels])[seg_idx].astype(float)
        if not mask.any():
            continue
        band = np.fft.irfft(spec_noise * ((freqs >= lo) & (freqs <= hi)), n)
        band /= np.std(band) + 1e-12
        signal += gain * band * _smooth(mask, int(0.01 * sr))

    signal *= 0.5 / (np.max(np.abs(signal)) + 1e-12)
    segments = [(l, float(bounds[i]), float(bounds[i + 1])) for i, l in enumerate(labels)]
    return Waveform(signal, sr), segments


def make_toy_corpus(root, voices=TOY_VOICES, clips_per_speaker=10, seed=0, sr=16000):
    """Write a toy corpus under ``root``; returns the manifest path.

    Every speaker reads the same phoneme sequences, so utterance ``k`` of each
    speaker is a parallel pair.
    """
    os.makedirs(root, exist_ok=True)
    rng = np.random.default_rng(seed)
    scripts = [_random_phonemes(rng, int(rng.integers(5, 8))) for _ in range(clips_per_speaker)]
    inv_path = os.path.join(root, "inventory.txt")
    with open(inv_path, "w", encoding="utf-8") as f:
        f.write(TOY_INVENTORY.to_text())
    rows = ["utterance_id\tspeaker_id\twav_path\talignment_path\tf0_path\ttranscript"]
    for voice in voices:
        vdir = os.path.join(root, voice.name)
        os.makedirs(vdir, exist_ok=True)
        for k, script in enumerate(scripts):
            utt = f"{voice.name}_{k:03d}"
            wave, segments = synthesize_utterance(script, voice, rng, sr)
            wav_path = os.path.join(vdir, utt + ".wav")
            ali_path = os.path.join(vdir, utt + ".lab")
            write_wav(wav_path, wave)
            with open(ali_path, "w", encoding="utf-8") as f:
                for label, start, end in segments:
                    f.write(f"{start:.6f} {end:.6f} {label}\n")
            rows.append(
                "\t".join([utt, voice.name, os.path.relpath(wav_path, root), os.path.relpath(ali_path, root), "", " ".join(script)])
            )
    manifest = os.path.join(root, "manifest.tsv")
    with open(manifest, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")
    return manifest
