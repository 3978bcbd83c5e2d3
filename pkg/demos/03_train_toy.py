"""
Training on the toy corpus
==========================

A reduced-width model trained for a few hundred steps with the same loop
the CLI uses. The full-size layout works the same way but takes several
seconds per step on a CPU.
"""

import csv
import os
import tempfile

from fastvgan import dsp
from fastvgan.align import read_alignment
from fastvgan.corpus import read_manifest
from fastvgan.features import extract_features
from fastvgan.model import DiscriminatorConfig, GeneratorConfig
from fastvgan.toy import TOY_INVENTORY, make_toy_corpus
from fastvgan.train import Corpus, TrainConfig, train_loop

root = os.path.join(tempfile.gettempdir(), "fastvgan_demo_corpus")
manifest = read_manifest(make_toy_corpus(root, clips_per_speaker=4, seed=0))
feats = [
    extract_features(r.utterance_id, r.speaker_id, dsp.read_wav(r.wav_path),
                     read_alignment(r.alignment_path, TOY_INVENTORY))
    for r in manifest
]
corpus = Corpus(feats, TOY_INVENTORY)
for spk, st in corpus.stats.items():
    print(f"{spk}: mean F0 {2.718281828 ** st.mean_logf0:.0f} Hz, log-F0 std {st.std_logf0:.3f}, "
          f"{st.vowel_rate:.1f} frames per vowel")

gen = GeneratorConfig(channels=(16,) * 5, input_channels=16, convs_per_block=1, d_ph=16, d_spk=8)
disc = DiscriminatorConfig(channels_2d=(8,) * 5, channels_1d=(16,) * 4)
cfg = TrainConfig(batch_size=2, excerpt_frames=32, lr=1e-3, steps=300, checkpoint_every=100)

out = os.path.join(tempfile.gettempdir(), "fastvgan_demo_run")
for path in train_loop(corpus, cfg, out, gen_cfg=gen, disc_cfg=disc):
    print("checkpoint", path)

with open(os.path.join(out, "loss_log.csv")) as f:
    rows = list(csv.DictReader(f))
for r in rows[::50] + [rows[-1]]:
    print(f"step {r['step']:>4}  d_loss {float(r['d_loss']):.3f}  g_rec {float(r['g_rec']):.3f}  "
          f"g_adv {float(r['g_adv']):.3f}")
