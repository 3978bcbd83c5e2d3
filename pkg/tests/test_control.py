"""Prosody manipulation: pitch, ambitus, durations, resampling, adaptation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastvgan.align import PhonemeAlignment
from fastvgan.control import (
    ProsodySpec,
    ProsodyStats,
    adapt_to_target,
    apply_prosody,
    ambitus_scale,
    pitch_shift,
    resample_contours,
    round_half_away,
    scale_vowel_durations,
    speaker_prosody_stats,
    transfer_expressive_contours,
)
from fastvgan.features import UtteranceFeatures
from fastvgan.model import ConditioningInputs, SpeakerTable, normalize_f0
from fastvgan.toy import TOY_INVENTORY as INV

finite = st.floats(-5, 5, allow_nan=False)
factors = st.floats(1 / 3, 3)


def _alignment(entries):
    return PhonemeAlignment(tuple(entries))


def _features(utt, spk, f0, alignment=None, voiced=None):
    t = len(f0)
    alignment = alignment or _alignment([("a", t)])
    return UtteranceFeatures(
        utt, spk, np.zeros((t, 80)), np.asarray(f0, float),
        np.ones(t, bool) if voiced is None else voiced, np.zeros(t), alignment,
    )


alignments = st.lists(
    st.tuples(st.sampled_from(INV.symbols), st.integers(1, 20)), min_size=1, max_size=15
).map(lambda e: _alignment(e))


# ---------------------------------------------------------------------------
# Spec
# ---------------------------------------------------------------------------


class TestProsodySpec:
    @pytest.mark.parametrize("kw", [{"ambitus_factor": 0}, {"vowel_duration_factor": -1},
                                    {"ambitus_factor": math.inf}, {"pitch_shift_semitones": math.nan}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ProsodySpec(**kw)


# ---------------------------------------------------------------------------
# Pitch and ambitus
# ---------------------------------------------------------------------------


class TestPitchShift:
    def test_octave(self):
        np.testing.assert_allclose(pitch_shift(np.zeros(4), 12), math.log(2), rtol=0, atol=1e-15)
        assert math.log(2) == pytest.approx(0.6931, abs=1e-4)

    def test_zero_identity(self):
        x = np.array([0.1, -0.3])
        np.testing.assert_array_equal(pitch_shift(x, 0), x)

    @given(st.lists(finite, min_size=1, max_size=30), st.floats(-24, 24))
    @settings(max_examples=50, deadline=None)
    def test_inverse(self, x, s):
        np.testing.assert_allclose(pitch_shift(pitch_shift(x, s), -s), x, atol=1e-12)


class TestAmbitus:
    def test_identity(self):
        x = np.array([0.2, -0.1, 0.4])
        np.testing.assert_array_equal(ambitus_scale(x, 1.0), x)

    def test_double(self):
        d = 0.3
        out = ambitus_scale([-d, 0, d], 2.0)
        np.testing.assert_allclose(out, [-2 * d, 0, 2 * d])
        assert np.std(out) == pytest.approx(2 * np.std([-d, 0, d]))

    def test_adaptation_matches_target_std(self):
        r = np.random.default_rng(3)
        x = r.standard_normal(200) * 0.15
        x -= x.mean()
        sigma_t = 0.27
        out = ambitus_scale(x, sigma_t / np.std(x))
        assert abs(np.std(out) - sigma_t) < 1e-6

    @pytest.mark.parametrize("f", [0.0, -1.0])
    def test_non_positive(self, f):
        with pytest.raises(ValueError):
            ambitus_scale([0.0], f)

    @given(st.lists(finite, min_size=1, max_size=30), st.floats(0.1, 4), st.floats(-12, 12))
    @settings(max_examples=50, deadline=None)
    def test_shift_scale_relation(self, x, factor, semis):
        # order matters: scale(shift(x)) = scale(x) + factor * shift
        lhs = ambitus_scale(pitch_shift(x, semis), factor)
        rhs = pitch_shift(ambitus_scale(x, factor), factor * semis)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


# ---------------------------------------------------------------------------
# Durations and resampling
# ---------------------------------------------------------------------------


class TestScaleVowelDurations:
    def test_identity(self):
        a = _alignment([("m", 7), ("a", 10), ("sil", 3)])
        assert scale_vowel_durations(a, INV, 1.0) == a

    def test_factor_two(self):
        a = _alignment([("m", 7), ("a", 10)])
        assert scale_vowel_durations(a, INV, 2.0).entries == (("m", 7), ("a", 20))

    def test_floor(self):
        assert scale_vowel_durations(_alignment([("e", 2)]), INV, 1 / 3).entries == (("e", 1),)

    def test_half_away(self):
        # 5 * 0.5 = 2.5 rounds up, not to even
        assert scale_vowel_durations(_alignment([("o", 5)]), INV, 0.5).lengths == [3]
        np.testing.assert_array_equal(round_half_away([0.5, 1.5, 2.5, -0.5]), [1, 2, 3, -1])

    def test_floor_breaks_round_trip_for_single_frames(self):
        a = _alignment([("a", 1)])
        back = scale_vowel_durations(scale_vowel_durations(a, INV, 1 / 3), INV, 3)
        assert back.lengths == [3]

    @given(alignments, factors)
    @settings(max_examples=80, deadline=None)
    def test_labels_and_consonants_preserved(self, a, f):
        out = scale_vowel_durations(a, INV, f)
        assert out.labels == a.labels
        cons = lambda al: sum(n for lab, n in al.entries if not INV.is_vowel(lab))  # noqa: E731
        assert cons(out) == cons(a)
        assert min(out.lengths) >= 1

    @given(alignments, factors)
    @settings(max_examples=80, deadline=None)
    def test_round_trip_within_one_frame(self, a, f):
        back = scale_vowel_durations(scale_vowel_durations(a, INV, f), INV, 1 / f)
        for (_, n0), (_, n1) in zip(a.entries, back.entries):
            # the 1-frame floor (not rounding) decides when n0 * f rounds to 0
            if n0 * f >= 0.5:
                assert abs(n1 - n0) <= 1


class TestResampleContours:
    def test_identity(self):
        f, i = resample_contours([1.0, 2.0, 4.0], [0.0, 1.0, 0.0], 3, 3)
        np.testing.assert_array_equal(f, [1, 2, 4])

    def test_midpoint(self):
        f, _ = resample_contours([0.0, 1.0], [0.0, 0.0], 2, 3)
        np.testing.assert_allclose(f, [0, 0.5, 1])

    def test_single_output(self):
        f, _ = resample_contours([0.0, 1.0, 4.0], [0.0, 0.0, 0.0], 3, 1)
        np.testing.assert_allclose(f, [1.0])

    def test_ramp_round_trip(self):
        ramp = np.linspace(-1, 2, 17)
        up, _ = resample_contours(ramp, ramp, 17, 53)
        back, _ = resample_contours(up, up, 53, 17)
        np.testing.assert_allclose(back, ramp, atol=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError, match="empty"):
            resample_contours([], [], 0, 3)
        with pytest.raises(ValueError):
            resample_contours([1.0, 2.0], [1.0, 2.0], 3, 4)

    @given(st.lists(finite, min_size=1, max_size=40), st.integers(1, 120))
    @settings(max_examples=80, deadline=None)
    def test_bounds(self, x, new_t):
        out, _ = resample_contours(x, x, len(x), new_t)
        assert len(out) == new_t
        assert out.min() >= min(x) - 1e-9 and out.max() <= max(x) + 1e-9


# ---------------------------------------------------------------------------
# Speaker statistics
# ---------------------------------------------------------------------------


class TestSpeakerStats:
    def test_constant(self):
        s = speaker_prosody_stats([_features("u", "s", np.full(10, 200.0))], INV)
        assert s.mean_logf0 == pytest.approx(math.log(200))
        assert s.std_logf0 == pytest.approx(0.0, abs=1e-12)

    def test_log_midpoint(self):
        feats = [_features("u1", "s", np.full(8, 100.0)), _features("u2", "s", np.full(8, 400.0))]
        assert speaker_prosody_stats(feats, INV).mean_logf0 == pytest.approx(math.log(200))

    def test_vowel_rate(self):
        al = _alignment([("a", 4), ("m", 3), ("e", 8)])
        s = speaker_prosody_stats([_features("u", "s", np.full(15, 120.0), al)], INV)
        assert s.vowel_rate == 6.0

    def test_unvoiced_only(self):
        with pytest.raises(ValueError, match="voiced"):
            speaker_prosody_stats([_features("u", "s", np.full(5, 100.0), voiced=np.zeros(5, bool))], INV)

    def test_toy_matches_pooled_oracle(self, toy_features):
        feats = [f for f in toy_features if f.speaker_id == "spk_high"]
        s = speaker_prosody_stats(feats, INV)
        pooled = []
        for f in feats:
            pooled += [math.log(f.f0_hz[t]) for t in range(f.n_frames) if f.voiced[t]]
        m = sum(pooled) / len(pooled)
        sd = math.sqrt(sum((v - m) ** 2 for v in pooled) / len(pooled))
        assert s.mean_logf0 == pytest.approx(m, abs=1e-9)
        assert s.std_logf0 == pytest.approx(sd, abs=1e-9)
        lengths = [n for f in feats for lab, n in f.alignment.entries if lab in INV.vowels]
        assert s.vowel_rate == pytest.approx(sum(lengths) / len(lengths))


# ---------------------------------------------------------------------------
# Adaptation
# ---------------------------------------------------------------------------


def _inputs(seed=0):
    r = np.random.default_rng(seed)
    al = _alignment([("sil", 4), ("m", 5), ("a", 9), ("n", 3), ("i", 7), ("sil", 2)])
    f0 = r.standard_normal(al.total_frames) * 0.1
    return ConditioningInputs(f0 - f0.mean(), r.standard_normal(al.total_frames), al, "src")


ALL_ON = ProsodySpec(use_target_ambitus=True, use_target_rate=True)


class TestAdapt:
    def test_identical_stats_identity(self):
        x = _inputs()
        s = ProsodyStats(5.0, 0.2, 8.0)
        out = adapt_to_target(x, s, s, ALL_ON, INV)
        np.testing.assert_array_equal(out.f0_norm, x.f0_norm)
        np.testing.assert_array_equal(out.intensity, x.intensity)
        assert out.alignment == x.alignment

    def test_ambitus_doubles_std(self):
        x = _inputs()
        out = adapt_to_target(x, ProsodyStats(5, 0.1, 8), ProsodyStats(5.5, 0.2, 8),
                              ProsodySpec(use_target_ambitus=True), INV)
        assert np.std(out.f0_norm) == pytest.approx(2 * np.std(x.f0_norm), rel=1e-12)
        assert out.n_frames == x.n_frames

    def test_rate_matches_duration_oracle(self):
        x = _inputs()
        out = adapt_to_target(x, ProsodyStats(5, 0.1, 6.0), ProsodyStats(5, 0.1, 9.0),
                              ProsodySpec(use_target_rate=True), INV)
        vowels = [n for lab, n in x.alignment.entries if lab in INV.vowels]
        growth = sum(int(math.floor(1.5 * n + 0.5)) - n for n in vowels)
        assert out.n_frames - x.n_frames == growth
        assert len(out.f0_norm) == len(out.intensity) == out.n_frames

    def test_order_ambitus_then_duration(self):
        x = _inputs()
        src, tgt = ProsodyStats(5, 0.1, 6.0), ProsodyStats(5, 0.3, 9.0)
        out = adapt_to_target(x, src, tgt, ALL_ON, INV)
        scaled = ambitus_scale(x.f0_norm, 3.0)
        new_al = scale_vowel_durations(x.alignment, INV, 1.5)
        exp, _ = resample_contours(scaled, x.intensity, x.n_frames, new_al.total_frames)
        np.testing.assert_allclose(out.f0_norm, exp, atol=1e-12)

    def test_zero_source_std_skips(self, caplog):
        x = _inputs()
        out = adapt_to_target(x, ProsodyStats(5, 0.0, 6), ProsodyStats(5, 0.3, 6),
                              ProsodySpec(use_target_ambitus=True), INV)
        np.testing.assert_array_equal(out.f0_norm, x.f0_norm)
        assert "skipping" in caplog.text

    def test_keep_source_mean(self):
        x = _inputs()
        out = apply_prosody(x, ProsodySpec(use_target_mean_f0=False), INV,
                            ProsodyStats(5.0, 0.1, 6), ProsodyStats(4.5, 0.1, 6))
        np.testing.assert_allclose(out.f0_norm, x.f0_norm + 0.5)

    def test_missing_stats(self):
        with pytest.raises(ValueError, match="statistics"):
            apply_prosody(_inputs(), ALL_ON, INV)

    def test_user_controls(self):
        x = _inputs()
        out = apply_prosody(x, ProsodySpec(pitch_shift_semitones=12, ambitus_factor=2.0), INV)
        np.testing.assert_allclose(out.f0_norm, 2 * x.f0_norm + math.log(2), atol=1e-12)


class TestTransferExpressive:
    def test_pass_through(self):
        r = np.random.default_rng(0)
        f = _features("e1", "spk_a", 150 * np.exp(0.2 * r.standard_normal(40)))
        table = SpeakerTable(["spk_a", "spk_b"], 8)
        out = transfer_expressive_contours(f, table, "spk_b", 5.0)
        np.testing.assert_array_equal(out.f0_norm, normalize_f0(f.f0_hz, 5.0))
        assert out.n_frames == f.n_frames
        assert out.speaker_id == "spk_b"
        assert out.alignment == f.alignment

    def test_same_speaker_matches_plain_resynthesis(self):
        f = _features("n1", "spk_a", np.full(12, 180.0))
        table = SpeakerTable(["spk_a"], 8)
        out = transfer_expressive_contours(f, table, "spk_a", 5.2)
        plain = ConditioningInputs(normalize_f0(f.f0_hz, 5.2), f.intensity, f.alignment, "spk_a")
        np.testing.assert_array_equal(out.f0_norm, plain.f0_norm)
        np.testing.assert_array_equal(out.intensity, plain.intensity)

    def test_unknown_speaker(self):
        f = _features("n1", "spk_a", np.full(4, 180.0))
        with pytest.raises(KeyError):
            transfer_expressive_contours(f, SpeakerTable(["spk_a"], 8), "nobody", 5.0)
