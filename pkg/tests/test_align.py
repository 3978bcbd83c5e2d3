"""Alignment parsing, frame quantization and the phoneme frame stream."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastvgan.align import (
    AlignmentError,
    PhonemeAlignment,
    PhonemeInventory,
    encode_stream,
    parse_alignment,
    to_frames,
)

INV = PhonemeInventory(("sil", "AH", "B", "IY"), frozenset({"AH", "IY"}))
HOP = 1 / 80


class TestInventory:
    def test_text_roundtrip(self):
        back = PhonemeInventory.from_text(INV.to_text())
        assert back == INV

    def test_vowel_marker(self):
        inv = PhonemeInventory.from_text("sil\na\tV\nm\n")
        assert inv.is_vowel("a") and not inv.is_vowel("m")

    def test_validation(self):
        with pytest.raises(ValueError, match="unique"):
            PhonemeInventory(("sil", "a", "a"))
        with pytest.raises(ValueError, match="silence"):
            PhonemeInventory(("a", "b"))
        with pytest.raises(ValueError, match="vowels"):
            PhonemeInventory(("sil", "a"), frozenset({"e"}))

    def test_unknown_index(self):
        with pytest.raises(AlignmentError, match="'Q'"):
            INV.index("Q")


class TestParseAlignment:
    def test_two_segments(self):
        segs = parse_alignment("0.0 0.5 sil\n0.5 0.7 AH\n", INV)
        assert segs == [("sil", 0.0, 0.5), ("AH", 0.5, 0.7)]

    def test_gap_filled_with_silence(self):
        segs = parse_alignment("0.0 0.5 sil\n0.5 0.7 AH\n0.9 1.0 B\n", INV)
        assert segs[2] == ("sil", 0.7, 0.9)
        assert len(segs) == 4

    def test_leading_gap(self):
        assert parse_alignment("0.2 0.4 AH\n")[0] == ("sil", 0.0, 0.2)

    def test_overlap_names_both_lines(self):
        with pytest.raises(AlignmentError, match="lines 1 and 2"):
            parse_alignment("0.0 0.5 sil\n0.4 0.7 AH\n", INV)

    def test_unsorted(self):
        with pytest.raises(AlignmentError, match="line 3"):
            parse_alignment("0.5 0.6 sil\n0.6 0.7 AH\n0.1 0.2 B\n", INV)

    def test_unknown_label_line(self):
        with pytest.raises(AlignmentError, match="line 2.*'ZZ'"):
            parse_alignment("0.0 0.5 sil\n0.5 0.7 ZZ\n", INV)

    def test_start_not_before_end(self):
        with pytest.raises(AlignmentError, match="line 1"):
            parse_alignment("0.5 0.5 sil\n")

    def test_malformed(self):
        with pytest.raises(AlignmentError, match="line 1"):
            parse_alignment("0.0 sil\n")

    def test_boundary_jitter_absorbed(self):
        segs = parse_alignment("0.0 0.5000001 sil\n0.5 0.7 AH\n")
        assert segs[1][1] == segs[0][2]


def _largest_remainder(ideal, total):
    """Independent Hamilton apportionment with a floor of one per item."""
    base = [max(1, int(np.floor(x))) for x in ideal]
    left = total - sum(base)
    rema = sorted(range(len(ideal)), key=lambda i: (-(ideal[i] - np.floor(ideal[i])), -i))
    for i in rema[:left]:
        base[i] += 1
    return base


class TestToFrames:
    def test_single_segment(self):
        assert to_frames([("AH", 0.0, 1.25)], HOP, 100).entries == (("AH", 100),)

    def test_exact_division(self):
        a = to_frames([("sil", 0.0, 0.5), ("AH", 0.5, 1.0)], HOP, 80)
        assert a.lengths == [40, 40]

    def test_rounding_residual(self):
        a = to_frames([("sil", 0, 0.333), ("AH", 0.333, 0.666), ("B", 0.666, 1.0)], HOP, 80)
        assert sum(a.lengths) == 80
        assert a.lengths == _largest_remainder([26.64, 26.64, 26.72], 80)

    def test_too_many_segments(self):
        with pytest.raises(AlignmentError):
            to_frames([("sil", 0, 0.1), ("AH", 0.1, 0.2), ("B", 0.2, 0.3)], HOP, 2)

    @given(
        durs=st.lists(st.floats(0.001, 0.5), min_size=1, max_size=30),
        extra=st.integers(0, 200),
    )
    @settings(max_examples=150, deadline=None)
    def test_total_exact(self, durs, extra):
        bounds = np.concatenate([[0.0], np.cumsum(durs)])
        segs = [("AH", float(bounds[i]), float(bounds[i + 1])) for i in range(len(durs))]
        total = len(durs) + extra
        a = to_frames(segs, HOP, total)
        assert a.total_frames == total
        assert min(a.lengths) >= 1

    @given(durs=st.lists(st.floats(0.05, 0.5), min_size=1, max_size=20))
    @settings(max_examples=80, deadline=None)
    def test_within_one_frame_of_ideal(self, durs):
        bounds = np.concatenate([[0.0], np.cumsum(durs)])
        segs = [("AH", float(bounds[i]), float(bounds[i + 1])) for i in range(len(durs))]
        total = int(round(bounds[-1] / HOP))
        if total < len(durs):
            return
        ideal = np.diff(bounds) / HOP * total / (bounds[-1] / HOP)
        a = to_frames(segs, HOP, total)
        assert np.all(np.abs(np.array(a.lengths) - ideal) < 1.0 + 1e-9)


class TestEncodeStream:
    def test_ramps_single_phoneme(self):
        s = encode_stream(PhonemeAlignment((("AH", 3),)), INV)
        np.testing.assert_allclose(s.positional[:, :2], [[0, 1], [0.5, 0.5], [1, 0]])
        np.testing.assert_allclose(s.positional[:, 2:], s.positional[:, :2])

    def test_length_scalar(self):
        s = encode_stream(PhonemeAlignment((("AH", 10), ("B", 300))), INV)
        np.testing.assert_allclose(s.length[:10], 0.1)
        np.testing.assert_allclose(s.length[10:], 2.0)  # clipped

    def test_per_phoneme_reset(self):
        s = encode_stream(PhonemeAlignment((("AH", 2), ("B", 2))), INV)
        np.testing.assert_allclose(s.positional[:, 2], [0, 1, 0, 1])
        np.testing.assert_allclose(s.positional[2, 2:], [0, 1])

    def test_single_frame_maps_to_zero_one(self):
        s = encode_stream(PhonemeAlignment((("AH", 1),)), INV)
        np.testing.assert_allclose(s.positional, [[0, 1, 0, 1]])

    def test_column_layout(self):
        s = encode_stream(PhonemeAlignment((("B", 2),)), INV)
        assert s.frame_matrix.shape == (2, len(INV) + 1 + 4)
        np.testing.assert_array_equal(s.onehot[:, INV.index("B")], 1)

    @given(lengths=st.lists(st.integers(1, 15), min_size=1, max_size=12), seed=st.integers(0, 1000))
    @settings(max_examples=60, deadline=None)
    def test_invariants(self, lengths, seed):
        r = np.random.default_rng(seed)
        labels = [INV.symbols[i] for i in r.integers(0, len(INV), len(lengths))]
        a = PhonemeAlignment(tuple(zip(labels, lengths)))
        s = encode_stream(a, INV)
        np.testing.assert_array_equal(s.onehot.sum(axis=1), 1)
        pos = s.positional
        assert np.all((pos >= 0) & (pos <= 1))
        np.testing.assert_allclose(pos[:, 0] + pos[:, 1], 1)
        np.testing.assert_allclose(pos[:, 2] + pos[:, 3], 1)
        assert np.all(np.diff(pos[:, 0]) >= 0)
        starts = np.cumsum([0] + lengths[:-1])
        np.testing.assert_array_equal(pos[starts, 2], 0)
        # phoneme ramp only drops at boundaries
        drops = np.nonzero(np.diff(pos[:, 2]) < 0)[0] + 1
        assert set(drops) <= set(starts)

    def test_inventory_permutation_permutes_columns(self):
        perm = PhonemeInventory(("IY", "B", "sil", "AH"), INV.vowels)
        a = PhonemeAlignment((("AH", 3), ("B", 2), ("sil", 1)))
        s1, s2 = encode_stream(a, INV), encode_stream(a, perm)
        order = [INV.index(sym) for sym in perm.symbols]
        np.testing.assert_array_equal(s2.onehot, s1.onehot[:, order])
        np.testing.assert_array_equal(s2.frame_matrix[:, 4:], s1.frame_matrix[:, 4:])

    def test_frame_labels(self):
        a = PhonemeAlignment((("AH", 2), ("B", 1)))
        assert a.frame_labels() == ["AH", "AH", "B"]
        with pytest.raises(AlignmentError):
            PhonemeAlignment((("AH", 0),))
