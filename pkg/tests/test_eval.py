"""Proxy speaker embedding, cosine scoring, bootstrap intervals and reports."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fastvgan.evaluate import (
    bootstrap_ci,
    cosine,
    eval_conversion,
    proxy_embedding,
    word_error_rate,
    write_report,
)

mels = arrays(np.float64, st.tuples(st.integers(2, 30), st.just(80)), elements=st.floats(-11, 4))


# ---------------------------------------------------------------------------
# Embedding
# ---------------------------------------------------------------------------


class TestProxyEmbedding:
    def test_constant(self):
        row = np.linspace(-5, 1, 80)
        e = proxy_embedding(np.tile(row, (9, 1)))
        assert e.shape == (160,)
        np.testing.assert_allclose(e[:80], row)
        np.testing.assert_allclose(e[80:], 0, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError, match="2 frames"):
            proxy_embedding(np.zeros((1, 80)))

    @given(mels, st.randoms(use_true_random=False))
    @settings(max_examples=40, deadline=None)
    def test_frame_order_invariant(self, m, r):
        perm = list(range(len(m)))
        r.shuffle(perm)
        np.testing.assert_allclose(proxy_embedding(m[perm]), proxy_embedding(m), atol=1e-9)

    @given(mels, st.floats(-3, 3))
    @settings(max_examples=40, deadline=None)
    def test_offset_moves_mean_block_only(self, m, c):
        a, b = proxy_embedding(m), proxy_embedding(m + c)
        np.testing.assert_allclose(b[:80], a[:80] + c, atol=1e-9)
        np.testing.assert_allclose(b[80:], a[80:], atol=1e-6)
        assert np.all(a[80:] >= 0)

    def test_toy_speaker_separation(self, toy_features):
        emb = {f.utterance_id: (f.speaker_id, proxy_embedding(f.mel)) for f in toy_features}
        same, cross = [], []
        keys = sorted(emb)
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                (sa, ea), (sb, eb) = emb[a], emb[b]
                (same if sa == sb else cross).append(cosine(ea, eb))
        assert np.mean(same) > np.mean(cross)


# ---------------------------------------------------------------------------
# Cosine
# ---------------------------------------------------------------------------


class TestCosine:
    def test_self(self, rng):
        x = rng.standard_normal(160)
        assert cosine(x, x) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_scale_invariant(self, rng):
        x = rng.standard_normal(10)
        assert cosine(x, 2 * x) == pytest.approx(1.0)
        assert cosine(x, -x) == pytest.approx(-1.0)

    def test_zero(self):
        with pytest.raises(ValueError, match="zero"):
            cosine(np.zeros(3), np.ones(3))


# ---------------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------------


class TestBootstrap:
    def test_degenerate(self):
        assert bootstrap_ci([0.7] * 12) == (0.7, 0.7)

    def test_deterministic(self, rng):
        s = rng.uniform(size=30)
        assert bootstrap_ci(s, seed=4) == bootstrap_ci(s, seed=4)
        assert bootstrap_ci(s, seed=4) != bootstrap_ci(s, seed=5)

    def test_binomial_oracle(self):
        s = np.array([0.0, 1.0] * 50)
        lo, hi = bootstrap_ci(s)
        assert lo < 0.5 < hi and hi - lo < 0.3
        # normal approximation of the mean of 100 fair coin flips
        half = 1.959964 * math.sqrt(0.25 / 100)
        assert lo == pytest.approx(0.5 - half, abs=0.03)
        assert hi == pytest.approx(0.5 + half, abs=0.03)

    def test_too_few(self):
        with pytest.raises(ValueError, match="2 scores"):
            bootstrap_ci([0.5])

    def test_narrows_with_sample_size(self):
        pool = np.random.default_rng(0).uniform(size=5000)
        r = np.random.default_rng(1)
        small = bootstrap_ci(r.choice(pool, 20), seed=0)
        large = bootstrap_ci(r.choice(pool, 200), seed=0)
        assert large[1] - large[0] < small[1] - small[0]

    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=40), st.integers(0, 99))
    @settings(max_examples=40, deadline=None)
    def test_brackets_mean(self, s, seed):
        lo, hi = bootstrap_ci(s, n=200, seed=seed)
        assert lo <= np.mean(s) + 1e-12 and np.mean(s) - 1e-12 <= hi


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


class TestEvalConversion:
    def _pairs(self, rng, n=4):
        out = []
        for i in range(n):
            m = rng.standard_normal((20, 80))
            out.append((f"p{i}", "a", "b", m, m))
        return out

    def test_identical_pairs(self, rng):
        rep = eval_conversion(self._pairs(rng))
        np.testing.assert_allclose(rep.scores, 1.0)
        assert rep.mean == pytest.approx(1.0)
        assert rep.ci[0] == pytest.approx(1.0) and rep.ci[1] == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(ValueError, match="no evaluation pairs"):
            eval_conversion([])

    def test_invariants(self, rng):
        pairs = [(f"p{i}", "a", "b", rng.standard_normal((10, 80)), rng.standard_normal((12, 80)) + 1)
                 for i in range(6)]
        rep = eval_conversion(pairs, n_bootstrap=300)
        assert rep.ci[0] <= rep.mean <= rep.ci[1]
        assert np.all((rep.scores >= -1) & (rep.scores <= 1))

    def test_report_files(self, rng, tmp_path):
        rep = eval_conversion(self._pairs(rng, 2))
        write_report(rep, tmp_path / "r.csv", tmp_path / "r.txt")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "pair_id,source,target,score"
        assert lines[1] == "p0,a,b,1.000000"
        assert lines[3] == "mean,ci_lo,ci_hi,n"
        assert lines[4] == "1.000000,1.000000,1.000000,2"
        assert "95% CI" in (tmp_path / "r.txt").read_text()

    def test_report_byte_identical(self, rng, tmp_path):
        pairs = [(f"p{i}", "a", "b", rng.standard_normal((10, 80)), rng.standard_normal((10, 80)))
                 for i in range(5)]
        for name in ("a.csv", "b.csv"):
            write_report(eval_conversion(pairs, seed=3), tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestWordErrorRate:
    def test_examples(self):
        assert word_error_rate("a b c", "a b c") == 0
        assert word_error_rate("a b c", "a x c") == pytest.approx(1 / 3)
        assert word_error_rate("a b", "a b c d") == 1.0
        assert word_error_rate("a b c d", "") == 1.0

    def test_empty_reference(self):
        with pytest.raises(ValueError):
            word_error_rate("", "a")
