"""Objective evaluation: proxy speaker embeddings, cosine similarity, bootstrap CIs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "proxy_embedding",
    "cosine",
    "bootstrap_ci",
    "EvalReport",
    "eval_conversion",
    "write_report",
    "word_error_rate",
]


def _frames(m):
    return np.asarray(getattr(m, "frames", m), dtype=np.float64)


def proxy_embedding(m):
    """Per-bin mean and std of a log-mel spectrogram over time (160-dim for 80 bins).

    A stand-in for a learned speaker verifier: captures the long-term spectral
    envelope and its variability, and nothing about frame order.
    """
    frames = _frames(m)
    if frames.ndim != 2 or frames.shape[0] < 2:
        raise ValueError(f"proxy embedding needs at least 2 frames, got shape {frames.shape}")
    return np.concatenate([frames.mean(axis=0), frames.std(axis=0)])


def cosine(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def bootstrap_ci(scores, n=1000, level=0.95, seed=0):
    """Percentile bootstrap interval for the mean of ``scores``."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise ValueError("bootstrap needs at least 2 scores")
    if np.all(scores == scores[0]):
        return float(scores[0]), float(scores[0])
    rng = np.random.default_rng(seed)
    means = scores[rng.integers(0, scores.size, size=(n, scores.size))].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    mean = scores.mean()
    return float(min(lo, mean)), float(max(hi, mean))


@dataclass
class EvalReport:
    pair_ids: list
    sources: list
    targets: list
    scores: np.ndarray
    mean: float
    ci: tuple
    n_bootstrap: int
    extras: dict = field(default_factory=dict)

    def summary(self):
        return f"{self.mean:.6f},{self.ci[0]:.6f},{self.ci[1]:.6f},{len(self.scores)}"

    def text(self):
        lo, hi = self.ci
        return (
            f"pairs: {len(self.scores)}\n"
            f"speaker similarity (proxy cosine): {self.mean:.4f}  95% CI [{lo:.4f}, {hi:.4f}]"
            f"  ({self.n_bootstrap} bootstrap resamples)\n"
        )


def eval_conversion(pairs, n_bootstrap=1000, level=0.95, seed=0):
    """Score ``(pair_id, source_name, target_name, converted_mel, reference_mel)`` tuples."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no evaluation pairs")
    ids, srcs, tgts, scores = [], [], [], []
    for pair_id, src, tgt, converted, reference in pairs:
        ids.append(pair_id)
        srcs.append(src)
        tgts.append(tgt)
        scores.append(cosine(proxy_embedding(converted), proxy_embedding(reference)))
    scores = np.array(scores)
    if len(scores) >= 2:
        ci = bootstrap_ci(scores, n_bootstrap, level, seed)
    else:
        ci = (float(scores[0]), float(scores[0]))
    return EvalReport(ids, srcs, tgts, scores, float(scores.mean()), ci, n_bootstrap)


def write_report(report, csv_path, text_path=None):
    """CSV of per-pair scores followed by ``mean,ci_lo,ci_hi,n`` summary rows."""
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["pair_id", "source", "target", "score"])
        for row in zip(report.pair_ids, report.sources, report.targets, report.scores):
            w.writerow([row[0], row[1], row[2], f"{row[3]:.6f}"])
        f.write("mean,ci_lo,ci_hi,n\n")
        f.write(report.summary() + "\n")
    if text_path:
        with open(text_path, "w", encoding="utf-8") as f:
            f.write(report.text())


def word_error_rate(reference, hypothesis):
    """Word-level Levenshtein distance over reference length.

    Convenience for externally produced transcripts only; no ASR is run here.
    """
    ref, hyp = reference.split(), hypothesis.split()
    if not ref:
        raise ValueError("empty reference transcript")
    d = np.arange(len(hyp) + 1)
    for i, r in enumerate(ref, 1):
        prev, d = d, np.empty_like(d)
        d[0] = i
        for j, h in enumerate(hyp, 1):
            d[j] = min(prev[j] + 1, d[j - 1] + 1, prev[j - 1] + (r != h))
    return d[-1] / len(ref)
