"""Per-utterance analysis bundle shared by training, control and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import dsp
from .align import PhonemeAlignment, encode_stream, to_frames

__all__ = ["UtteranceFeatures", "extract_features"]


@dataclass
class UtteranceFeatures:
    utterance_id: str
    speaker_id: str
    mel: np.ndarray  # (T, 80) log-mel
    f0_hz: np.ndarray  # (T,) interpolated, strictly positive
    voiced: np.ndarray  # (T,) bool
    intensity: np.ndarray  # (T,)
    alignment: PhonemeAlignment

    def __post_init__(self):
        t = self.mel.shape[0]
        lengths = {
            "f0": len(self.f0_hz),
            "voicing": len(self.voiced),
            "intensity": len(self.intensity),
            "alignment": self.alignment.total_frames,
        }
        bad = {k: v for k, v in lengths.items() if v != t}
        if bad:
            raise ValueError(f"{self.utterance_id}: frame counts {bad} differ from mel ({t})")

    @property
    def n_frames(self):
        return self.mel.shape[0]

    def log_f0(self):
        return np.log(self.f0_hz)

    def stream(self, inventory):
        return encode_stream(self.alignment, inventory)

    def with_(self, **changes):
        return replace(self, **changes)


def extract_features(utterance_id, speaker_id, wave, segments, cfg=dsp.DspConfig(), f0=None):
    """Analyse a waveform and frame its alignment segments.

    ``f0`` optionally overrides the built-in tracker with an external
    :class:`~fastvgan.dsp.F0Contour` on the same frame grid.
    """
    mel = dsp.mel_spectrogram(wave, cfg)
    t = mel.n_frames
    if f0 is None:
        f0 = dsp.estimate_f0(wave, cfg)
    elif len(f0) != t:
        raise ValueError(f"{utterance_id}: external F0 has {len(f0)} frames, mel has {t}")
    filled = dsp.interpolate_unvoiced(f0)
    alignment = to_frames(segments, cfg.hop_seconds, t)
    return UtteranceFeatures(
        utterance_id,
        speaker_id,
        mel.frames.astype(np.float64),
        filled.values_hz,
        filled.voiced,
        dsp.intensity(mel).values,
        alignment,
    )
