"""
Prosody control at conversion time
==================================

Uses the checkpoint from ``03_train_toy.py``. The source utterance's
conditioning is edited before synthesis: pitch shift, pitch range,
vowel durations, and adaptation to the target speaker's statistics.
"""

import os
import tempfile

import numpy as np

from fastvgan import dsp
from fastvgan.align import read_alignment
from fastvgan.control import ProsodySpec, apply_prosody
from fastvgan.features import extract_features
from fastvgan.model import ConditioningInputs, normalize_f0
from fastvgan.train import FastVGAN

tmp = tempfile.gettempdir()
ckpt = os.path.join(tmp, "fastvgan_demo_run", "ckpt_300.fvg")
if not os.path.exists(ckpt):
    raise SystemExit("run 03_train_toy.py first")
system = FastVGAN.load(ckpt)
root = os.path.join(tmp, "fastvgan_demo_corpus")
DSP = dsp.DspConfig()

wave = dsp.read_wav(os.path.join(root, "spk_low", "spk_low_001.wav"))
segs = read_alignment(os.path.join(root, "spk_low", "spk_low_001.lab"), system.inventory)
feats = extract_features("spk_low_001", "spk_low", wave, segs)
src, tgt = system.speakers.stats["spk_low"], system.speakers.stats["spk_high"]
base = ConditioningInputs(normalize_f0(feats.f0_hz, src.mean_logf0), feats.intensity, feats.alignment, "spk_high")

variants = {
    "plain": ProsodySpec(),
    "octave_up": ProsodySpec(pitch_shift_semitones=12),
    "wide_range": ProsodySpec(ambitus_factor=2.0),
    "slow_vowels": ProsodySpec(vowel_duration_factor=2.0),
    "adapted": ProsodySpec(use_target_ambitus=True, use_target_rate=True),
}
for name, spec in variants.items():
    inputs = apply_prosody(base, spec, system.inventory, src, tgt)
    mel = system.synthesize(inputs)
    path = os.path.join(tmp, f"fastvgan_demo_{name}.wav")
    dsp.write_wav(path, dsp.griffin_lim(dsp.MelSpectrogram(mel, DSP.hop_seconds, DSP.sample_rate), iters=30))
    print(f"{name:12s} {inputs.n_frames:4d} frames, f0_norm std {np.std(inputs.f0_norm):.3f} -> {path}")
