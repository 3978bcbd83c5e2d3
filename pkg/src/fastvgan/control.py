"""Inference-time prosody manipulation of conditioning inputs.

Contours here are normalized log-F0 (the speaker's global log-mean already
subtracted), so pitch shifts are additive and ambitus changes are a scaling
about zero, i.e. about the speaker's mean.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .align import PhonemeAlignment
from .model.conditioning import ConditioningInputs, normalize_f0

logger = logging.getLogger(__name__)

__all__ = [
    "ProsodySpec",
    "ProsodyStats",
    "pitch_shift",
    "ambitus_scale",
    "scale_vowel_durations",
    "resample_contours",
    "speaker_prosody_stats",
    "adapt_to_target",
    "apply_prosody",
    "transfer_expressive_contours",
    "round_half_away",
]

SEMITONE = math.log(2.0) / 12.0


@dataclass(frozen=True)
class ProsodySpec:
    pitch_shift_semitones: float = 0.0
    ambitus_factor: float = 1.0
    vowel_duration_factor: float = 1.0
    use_target_mean_f0: bool = True
    use_target_ambitus: bool = False
    use_target_rate: bool = False

    def __post_init__(self):
        for name in ("ambitus_factor", "vowel_duration_factor"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not math.isfinite(self.pitch_shift_semitones):
            raise ValueError("pitch_shift_semitones must be finite")


@dataclass(frozen=True)
class ProsodyStats:
    mean_logf0: float
    std_logf0: float
    vowel_rate: float  # mean frames per vowel

    def to_dict(self):
        return {"mean_logf0": self.mean_logf0, "std_logf0": self.std_logf0, "vowel_rate": self.vowel_rate}


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def pitch_shift(logf0_norm, semitones):
    return np.asarray(logf0_norm, dtype=np.float64) + semitones * SEMITONE


def ambitus_scale(logf0_norm, factor):
    """Scale deviations from the speaker mean by ``factor``."""
    if not factor > 0:
        raise ValueError(f"ambitus factor must be positive, got {factor}")
    return factor * np.asarray(logf0_norm, dtype=np.float64)


def scale_vowel_durations(a, inv, factor):
    """Stretch every vowel by ``factor`` (rounded half away from zero, at least 1 frame)."""
    if not factor > 0:
        raise ValueError(f"duration factor must be positive, got {factor}")
    return PhonemeAlignment(
        tuple(
            (label, max(1, int(round_half_away(n * factor)))) if inv.is_vowel(label) else (label, n)
            for label, n in a.entries
        )
    )


def resample_contours(f0_norm, intensity, old_t, new_t):
    """Linearly resample two frame contours from ``old_t`` to ``new_t`` frames."""
    f0_norm, intensity = np.asarray(f0_norm, float), np.asarray(intensity, float)
    if len(f0_norm) == 0 or len(intensity) == 0:
        raise ValueError("cannot resample an empty contour")
    if old_t < 1 or new_t < 1 or len(f0_norm) != old_t or len(intensity) != old_t:
        raise ValueError(f"contours of length {len(f0_norm)}/{len(intensity)} do not match old_t={old_t}")
    if new_t == old_t:
        return f0_norm.copy(), intensity.copy()
    if new_t == 1:
        pos = np.array([(old_t - 1) / 2.0])
    else:
        pos = np.arange(new_t) * (old_t - 1) / (new_t - 1)
    grid = np.arange(old_t)
    return np.interp(pos, grid, f0_norm), np.interp(pos, grid, intensity)


def speaker_prosody_stats(features, inventory):
    """Pooled log-F0 moments over voiced frames and mean frames per vowel.

    ``features`` is an iterable of :class:`~fastvgan.features.UtteranceFeatures`
    of one speaker.
    """
    logf0, vowel_lengths = [], []
    for f in features:
        logf0.append(np.log(f.f0_hz[f.voiced]))
        vowel_lengths += [n for label, n in f.alignment.entries if inventory.is_vowel(label)]
    logf0 = np.concatenate(logf0) if logf0 else np.zeros(0)
    if logf0.size == 0:
        raise ValueError("speaker has no voiced frames")
    rate = float(np.mean(vowel_lengths)) if vowel_lengths else float("nan")
    return ProsodyStats(float(np.mean(logf0)), float(np.std(logf0)), rate)


def _retime(inputs, alignment):
    new_t = alignment.total_frames
    f0, inten = resample_contours(inputs.f0_norm, inputs.intensity, inputs.n_frames, new_t)
    return ConditioningInputs(f0, inten, alignment, inputs.speaker_id)


def apply_prosody(inputs, spec, inventory, source_stats=None, target_stats=None):
    """Apply a :class:`ProsodySpec` to conditioning inputs.

    Order: ambitus scaling (user factor times the target/source std ratio when
    ``use_target_ambitus``), pitch shift, vowel-duration scaling (user factor
    times the target/source vowel-rate ratio when ``use_target_rate``), then
    contour resampling to the new length. With ``use_target_mean_f0`` off, the
    source's absolute mean pitch is kept by offsetting the normalized contour.
    """
    needs_stats = spec.use_target_ambitus or spec.use_target_rate or not spec.use_target_mean_f0
    if needs_stats and (source_stats is None or target_stats is None):
        raise ValueError("speaker adaptation needs both source and target prosody statistics")
    ambitus = spec.ambitus_factor
    if spec.use_target_ambitus:
        if source_stats.std_logf0 == 0:
            logger.warning("source log-F0 std is zero; skipping ambitus adaptation")
        else:
            ambitus *= target_stats.std_logf0 / source_stats.std_logf0
    rate = spec.vowel_duration_factor
    if spec.use_target_rate:
        rate *= target_stats.vowel_rate / source_stats.vowel_rate

    f0 = inputs.f0_norm
    if ambitus != 1.0:
        f0 = ambitus_scale(f0, ambitus)
    if spec.pitch_shift_semitones:
        f0 = pitch_shift(f0, spec.pitch_shift_semitones)
    if not spec.use_target_mean_f0:
        f0 = f0 + (source_stats.mean_logf0 - target_stats.mean_logf0)
    out = ConditioningInputs(f0, inputs.intensity, inputs.alignment, inputs.speaker_id)
    if rate != 1.0:
        out = _retime(out, scale_vowel_durations(out.alignment, inventory, rate))
    return out


def adapt_to_target(inputs, source_stats, target_stats, spec, inventory):
    """Target-speaker prosody adaptation (ambitus and/or speech rate).

    Mean-F0 adaptation is implicit: the contour is normalized by the source
    mean and decoded with the target's speaker vector.
    """
    return apply_prosody(inputs, spec, inventory, source_stats, target_stats)


def transfer_expressive_contours(features, speakers, target_speaker, source_mean_logf0):
    """Conditioning inputs from an (expressive) utterance, voiced as ``target_speaker``.

    Contours and alignment are passed through unchanged; only the speaker
    identity is replaced.
    """
    speakers.index(target_speaker)  # raises on unknown speakers
    return ConditioningInputs(
        normalize_f0(features.f0_hz, source_mean_logf0),
        features.intensity,
        features.alignment,
        target_speaker,
    )
