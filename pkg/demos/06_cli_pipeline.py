"""
The command line pipeline
=========================

extract, train, convert and eval driven through ``fastvgan.cli.main``,
exactly as the ``fastvgan`` console script would run them.
"""

import os
import tempfile

from fastvgan.cli import main
from fastvgan.config import Config
from fastvgan.model import DiscriminatorConfig, GeneratorConfig
from fastvgan.toy import make_toy_corpus
from fastvgan.train import TrainConfig

work = tempfile.mkdtemp(prefix="fastvgan_cli_")
manifest = make_toy_corpus(os.path.join(work, "corpus"), clips_per_speaker=4)
cfg = Config(
    generator=GeneratorConfig(channels=(8,) * 5, input_channels=8, convs_per_block=1, d_ph=8, d_spk=4),
    discriminator=DiscriminatorConfig(channels_2d=(4,) * 5, channels_1d=(8,) * 4),
    train=TrainConfig(batch_size=2, excerpt_frames=32, lr=1e-3, steps=20, checkpoint_every=10),
    inventory=os.path.join(work, "corpus", "inventory.txt"),
    cache_dir=os.path.join(work, "cache"),
    griffin_lim_iters=10,
)
conf = os.path.join(work, "config.json")
with open(conf, "w") as f:
    f.write(cfg.dumps())

run = os.path.join(work, "run")
wav = os.path.join(work, "corpus", "spk_low", "spk_low_000.wav")
lab = wav[:-4] + ".lab"
steps = [
    ["extract", "--manifest", manifest],
    ["extract", "--manifest", manifest],  # second pass finds everything up to date
    ["train", "--manifest", manifest, "--out", run],
    ["convert", "--checkpoint", os.path.join(run, "ckpt_20.fvg"), "--target-speaker", "spk_high",
     "--wav", wav, "--alignment", lab, "--source-speaker", "spk_low", "--adapt-ambitus",
     "--out-wav", os.path.join(work, "converted.wav")],
]
for argv in steps:
    print("$ fastvgan", " ".join(argv[:1]))
    assert main(["--config", conf] + argv) == 0

pairs = os.path.join(work, "pairs.tsv")
with open(pairs, "w") as f:
    f.write("pair_id\tsource\ttarget\treference\tconverted\n")
    for k in range(4):
        f.write(f"p{k}\tspk_low_{k:03d}\tspk_high\tspk_high_{k:03d}\t\n")
print("$ fastvgan eval")
assert main(["--config", conf, "eval", "--pairs", pairs, "--checkpoint", os.path.join(run, "ckpt_20.fvg"),
             "--manifest", manifest, "--out-csv", os.path.join(work, "report.csv")]) == 0
print("outputs in", work)
