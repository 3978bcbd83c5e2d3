"""Phoneme alignments: parsing, frame quantization, frame-level encoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "AlignmentError",
    "PhonemeInventory",
    "PhonemeAlignment",
    "PhonemeFrameStream",
    "parse_alignment",
    "read_alignment",
    "to_frames",
    "encode_stream",
    "N_POSITIONAL",
]

N_POSITIONAL = 4
_TOL = 1e-6


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class PhonemeInventory:
    symbols: tuple
    vowels: frozenset = field(default_factory=frozenset)
    silence: str = "sil"

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "vowels", frozenset(self.vowels))
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("phoneme symbols must be unique")
        if self.silence not in self.symbols:
            raise ValueError(f"inventory lacks the silence symbol {self.silence!r}")
        if not self.vowels <= set(self.symbols):
            raise ValueError(f"vowels not in inventory: {sorted(self.vowels - set(self.symbols))}")

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, label):
        return label in self._index

    @cached_property
    def _index(self):
        return {s: i for i, s in enumerate(self.symbols)}

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise AlignmentError(f"unknown phoneme {label!r}") from None

    def is_vowel(self, label):
        return label in self.vowels

    @classmethod
    def from_text(cls, text, silence="sil"):
        """One symbol per line; a trailing ``\\tV`` marks a vowel."""
        symbols, vowels = [], set()
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            sym = parts[0].strip()
            symbols.append(sym)
            if len(parts) > 1 and parts[1].strip() == "V":
                vowels.add(sym)
        return cls(tuple(symbols), frozenset(vowels), silence)

    @classmethod
    def load(cls, path, silence="sil"):
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read(), silence)

    def to_text(self):
        return "".join(f"{s}\tV\n" if s in self.vowels else f"{s}\n" for s in self.symbols)


@dataclass(frozen=True)
class PhonemeAlignment:
    entries: tuple  # ((label, n_frames), ...)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((str(l), int(n)) for l, n in self.entries))
        for label, n in self.entries:
            if n < 1:
                raise AlignmentError(f"phoneme {label!r} has {n} frames; need at least 1")

    @property
    def total_frames(self):
        return sum(n for _, n in self.entries)

    @property
    def labels(self):
        return [l for l, _ in self.entries]

    @property
    def lengths(self):
        return [n for _, n in self.entries]

    def frame_labels(self):
        return [l for l, n in self.entries for _ in range(n)]


@dataclass
class PhonemeFrameStream:
    """``frame_matrix`` columns: one-hot | length scalar | 4 positional dims."""

    frame_matrix: np.ndarray
    n_symbols: int

    @property
    def onehot(self):
        return self.frame_matrix[:, : self.n_symbols]

    @property
    def length(self):
        return self.frame_matrix[:, self.n_symbols]

    @property
    def phoneme_block(self):
        """One-hot plus length scalar: the input of the phoneme embedding."""
        return self.frame_matrix[:, : self.n_symbols + 1]

    @property
    def positional(self):
        return self.frame_matrix[:, self.n_symbols + 1 :]

    @property
    def n_frames(self):
        return self.frame_matrix.shape[0]


def parse_alignment(text, inventory=None, silence="sil"):
    """Parse ``start end label`` lines into contiguous ``(label, start, end)`` segments.

    Gaps between segments (and before the first one) are filled with the
    silence label. Errors carry the offending line numbers.
    """
    if inventory is not None:
        silence = inventory.silence
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) != 3:
            raise AlignmentError(f"line {lineno}: expected 'start end label', got {line.strip()!r}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError:
            raise AlignmentError(f"line {lineno}: non-numeric time in {line.strip()!r}") from None
        label = parts[2]
        if not start < end:
            raise AlignmentError(f"line {lineno}: start {start} is not before end {end}")
        if inventory is not None and label not in inventory.symbols:
            raise AlignmentError(f"line {lineno}: unknown phoneme {label!r}")
        rows.append((lineno, label, start, end))

    segments = []
    prev_end, prev_line, prev_start = 0.0, None, None
    for lineno, label, start, end in rows:
        if prev_line is not None and start < prev_start:
            raise AlignmentError(f"line {lineno}: segments not sorted (starts before line {prev_line})")
        if start < prev_end - _TOL:
            raise AlignmentError(f"lines {prev_line} and {lineno} overlap ({start} < {prev_end})")
        if start > prev_end + _TOL:
            segments.append((silence, prev_end, start))
        else:
            start = prev_end  # absorb float jitter at shared boundaries
        segments.append((label, start, end))
        prev_end, prev_line, prev_start = end, lineno, start
    return segments


def read_alignment(path, inventory=None):
    with open(path, encoding="utf-8") as f:
        return parse_alignment(f.read(), inventory)


def to_frames(segments, hop_seconds, total_frames):
    """Quantize segment durations to frame counts summing to ``total_frames``.

    Durations in frames are rescaled to the utterance's frame count, floored,
    and the residual is handed out by largest remainder (ties go to later
    segments). Each segment keeps at least one frame.
    """
    segments = list(segments)
    if len(segments) > total_frames:
        raise AlignmentError(f"{len(segments)} segments do not fit in {total_frames} frames")
    if not segments:
        raise AlignmentError("empty alignment")
    ideal = np.array([(end - start) / hop_seconds for _, start, end in segments])
    ideal *= total_frames / ideal.sum()
    counts = np.maximum(np.floor(ideal + 1e-9).astype(int), 1)
    remainder = ideal - counts
    residual = total_frames - counts.sum()
    n = len(segments)
    # stable sort on reversed order => ties favour the rightmost segment
    order_desc = n - 1 - np.argsort(-remainder[::-1], kind="stable")
    while residual > 0:
        for i in order_desc[:residual]:
            counts[i] += 1
        residual = total_frames - counts.sum()
    while residual < 0:
        for i in order_desc[::-1]:
            if residual == 0:
                break
            if counts[i] > 1:
                counts[i] -= 1
                residual += 1
    return PhonemeAlignment(tuple((label, int(c)) for (label, _, _), c in zip(segments, counts)))


def _ramp(n):
    if n == 1:
        return np.zeros(1)
    return np.arange(n) / (n - 1)


def encode_stream(a, inv, length_norm=100.0, length_clip=2.0):
    """Frame-level augmented one-hot with phrase and phoneme cross-fades."""
    t_total = a.total_frames
    s = len(inv)
    mat = np.zeros((t_total, s + 1 + N_POSITIONAL))
    phrase = _ramp(t_total)
    mat[:, s + 1] = phrase
    mat[:, s + 2] = 1.0 - phrase
    t = 0
    for label, n in a.entries:
        rows = slice(t, t + n)
        mat[rows, inv.index(label)] = 1.0
        mat[rows, s] = min(n / length_norm, length_clip)
        local = _ramp(n)
        mat[rows, s + 3] = local
        mat[rows, s + 4] = 1.0 - local
        t += n
    return PhonemeFrameStream(mat, s)
