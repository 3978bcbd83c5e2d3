"""Building the generator's conditioning tensor from per-frame features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..align import PhonemeAlignment, encode_stream
from ..tensor import Tensor, as_tensor, concat
from .config import N_FREQ_ROWS, N_POSITIONAL

__all__ = [
    "ConditioningInputs",
    "normalize_f0",
    "embed_phonemes",
    "assemble",
    "condition_batch",
    "discriminator_conditioning",
    "synthesize",
]


@dataclass
class ConditioningInputs:
    """Everything the decoder is conditioned on, before learned embeddings."""

    f0_norm: np.ndarray
    intensity: np.ndarray
    alignment: PhonemeAlignment
    speaker_id: str

    def __post_init__(self):
        self.f0_norm = np.asarray(self.f0_norm, dtype=np.float64)
        self.intensity = np.asarray(self.intensity, dtype=np.float64)
        t = self.alignment.total_frames
        if len(self.f0_norm) != t or len(self.intensity) != t:
            raise ValueError(
                f"f0 ({len(self.f0_norm)}), intensity ({len(self.intensity)}) and "
                f"alignment ({t}) frame counts differ"
            )

    @property
    def n_frames(self):
        return len(self.f0_norm)


def normalize_f0(f0_hz, speaker_mean_logf0):
    """Log-F0 with the speaker's global log-mean removed."""
    f0_hz = np.asarray(getattr(f0_hz, "values_hz", f0_hz), dtype=np.float64)
    if np.any(f0_hz <= 0):
        raise ValueError("F0 must be positive everywhere; interpolate unvoiced frames first")
    return np.log(f0_hz) - speaker_mean_logf0


def embed_phonemes(stream, generator):
    """Learned phoneme embedding of a stream (or its ``(.., T, S+1)`` block)."""
    block = getattr(stream, "phoneme_block", stream)
    return generator.embed_phonemes(as_tensor(np.asarray(block, dtype=generator.dtype)))


def assemble(f0_norm, intensity, phoneme_emb, positional, speaker_vec):
    """Concatenate per-frame features and tile them over 5 frequency rows.

    Accepts unbatched ``(T, ...)`` or batched ``(B, T, ...)`` streams; the
    speaker vector is ``(D,)`` or ``(B, D)`` and is repeated over time.
    Channel order: f0 | intensity | phoneme embedding | positional | speaker.
    Returns a tensor of shape ``(B, T, 5, C)`` (``(T, 5, C)`` when unbatched).
    """
    emb = as_tensor(phoneme_emb)
    dtype = emb.dtype
    unbatched = emb.ndim == 2
    streams = {
        "f0_norm": as_tensor(np.asarray(getattr(f0_norm, "data", f0_norm), dtype=dtype)),
        "intensity": as_tensor(np.asarray(getattr(intensity, "data", intensity), dtype=dtype)),
        "phoneme_emb": emb,
        "positional": as_tensor(np.asarray(getattr(positional, "data", positional), dtype=dtype)),
    }
    spk = speaker_vec if isinstance(speaker_vec, Tensor) else as_tensor(np.asarray(speaker_vec, dtype=dtype))
    if unbatched:
        streams = {k: v.reshape((1,) + v.shape) for k, v in streams.items()}
        spk = spk.reshape(1, -1)
    b, t = streams["phoneme_emb"].shape[:2]
    for name, s in streams.items():
        if s.shape[:2] != (b, t):
            raise ValueError(f"stream {name!r} has shape {s.shape[:2]}, expected ({b}, {t})")
    if streams["positional"].shape[2] != N_POSITIONAL:
        raise ValueError(f"positional stream must have {N_POSITIONAL} channels")
    if spk.shape[0] != b:
        raise ValueError(f"speaker vectors for {spk.shape[0]} items, streams have {b}")
    d = spk.shape[1]
    parts = [
        streams["f0_norm"].reshape(b, t, 1),
        streams["intensity"].reshape(b, t, 1),
        streams["phoneme_emb"],
        streams["positional"],
        spk.reshape(b, 1, d).broadcast_to((b, t, d)),
    ]
    feats = concat(parts, axis=-1)
    c = feats.shape[-1]
    cond = feats.reshape(b, t, 1, c).broadcast_to((b, t, N_FREQ_ROWS, c))
    return cond.reshape(t, N_FREQ_ROWS, c) if unbatched else cond


def condition_batch(generator, speakers, f0_norm, intensity, stream_matrix, speaker_ids, n_symbols):
    """Differentiable conditioning for a batch of equal-length excerpts.

    ``stream_matrix`` is ``(B, T, S + 1 + 4)``, as produced by
    :func:`~fastvgan.align.encode_stream` and cropped.
    """
    stream_matrix = np.asarray(stream_matrix, dtype=generator.dtype)
    emb = generator.embed_phonemes(Tensor(stream_matrix[..., : n_symbols + 1]))
    return assemble(
        f0_norm, intensity, emb, stream_matrix[..., n_symbols + 1 :], speakers.lookup(speaker_ids)
    )


def discriminator_conditioning(f0_norm, stream_matrix, speaker_vecs, n_symbols):
    """``(B, T, 1 + S + D)``: normalized F0, phoneme one-hot, speaker vector."""
    f0_norm = np.asarray(f0_norm)
    b, t = f0_norm.shape
    onehot = np.asarray(stream_matrix)[..., :n_symbols]
    spk = np.broadcast_to(np.asarray(speaker_vecs)[:, None, :], (b, t, speaker_vecs.shape[-1]))
    return np.concatenate([f0_norm[..., None], onehot, spk], axis=-1)


def synthesize(generator, speakers, inputs, inventory, return_conditioning=False):
    """Generate a ``(T, 80)`` log-mel for one utterance's conditioning inputs."""
    stream = encode_stream(inputs.alignment, inventory)
    cond = condition_batch(
        generator,
        speakers,
        inputs.f0_norm[None],
        inputs.intensity[None],
        stream.frame_matrix[None],
        [inputs.speaker_id],
        len(inventory),
    )
    mel = generator.decode(cond).data[0].astype(np.float64)
    if return_conditioning:
        return mel, cond.data[0].astype(np.float64)
    return mel
