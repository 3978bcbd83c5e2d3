"""
Analysis features of a toy utterance
====================================

Generates the two-speaker toy corpus, then looks at what the model is
conditioned on: log-mel frames, the F0 track, intensity, and the phoneme
frame stream with its positional ramps.
"""

import os
import tempfile

import numpy as np

from fastvgan import dsp
from fastvgan.align import encode_stream, read_alignment
from fastvgan.features import extract_features
from fastvgan.toy import TOY_INVENTORY, make_toy_corpus

root = os.path.join(tempfile.gettempdir(), "fastvgan_demo_corpus")
manifest = make_toy_corpus(root, clips_per_speaker=4, seed=0)
print("toy corpus written to", root)

wav = os.path.join(root, "spk_low", "spk_low_000.wav")
lab = os.path.join(root, "spk_low", "spk_low_000.lab")
wave = dsp.read_wav(wav)
print(f"{len(wave.samples)} samples at {wave.sample_rate} Hz")

# 1024-point STFT, 800-sample window, 200-sample hop: 80 frames per second
feats = extract_features("spk_low_000", "spk_low", wave, read_alignment(lab, TOY_INVENTORY))
print("log-mel", feats.mel.shape, "range", feats.mel.min().round(2), feats.mel.max().round(2))

# voiced frames carry tracked pitch, the rest is log-linear interpolation
voiced = feats.f0_hz[feats.voiced]
print(f"F0: {feats.voiced.mean():.0%} voiced, median {np.median(voiced):.1f} Hz")
print("intensity (mean log-mel) first frames:", feats.intensity[:5].round(2))

# the phoneme stream: one-hot, a length scalar, and two complementary ramp pairs
stream = encode_stream(feats.alignment, TOY_INVENTORY)
print("alignment:", " ".join(f"{l}:{n}" for l, n in feats.alignment.entries))
print("frame matrix", stream.frame_matrix.shape)
print("positional dims of the first 4 frames:\n", stream.positional[:4].round(3))

# Griffin-Lim brings a mel back to audio (no neural vocoder is shipped)
back = dsp.griffin_lim(dsp.mel_spectrogram(wave), iters=30)
out = os.path.join(root, "spk_low_000_griffin_lim.wav")
dsp.write_wav(out, back)
print("Griffin-Lim resynthesis written to", out)
