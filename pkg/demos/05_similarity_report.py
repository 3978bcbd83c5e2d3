"""
Speaker similarity with bootstrap intervals
===========================================

Scores toy recordings against each other with the mel-statistics proxy
embedding and reports the mean cosine with a percentile bootstrap interval.
"""

import os
import tempfile

from fastvgan import dsp
from fastvgan.evaluate import eval_conversion, write_report

root = os.path.join(tempfile.gettempdir(), "fastvgan_demo_corpus")
if not os.path.isdir(root):
    raise SystemExit("run 01_analysis_features.py first")


def mel(spk, k):
    return dsp.mel_spectrogram(dsp.read_wav(os.path.join(root, spk, f"{spk}_{k:03d}.wav"))).frames


# parallel scripts: take k of one speaker against take k of the other
same = [(f"s{k}", f"spk_low_{k:03d}", "spk_low", mel("spk_low", k), mel("spk_low", (k + 1) % 4)) for k in range(4)]
cross = [(f"x{k}", f"spk_low_{k:03d}", "spk_high", mel("spk_low", k), mel("spk_high", k)) for k in range(4)]
for name, pairs in (("same speaker", same), ("cross speaker", cross)):
    rep = eval_conversion(pairs, n_bootstrap=1000, seed=0)
    print(f"{name:14s}", rep.text().splitlines()[1])

out = os.path.join(tempfile.gettempdir(), "fastvgan_demo_report.csv")
write_report(eval_conversion(cross), out)
print(open(out).read())
