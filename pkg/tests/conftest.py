import os

import numpy as np
import pytest

from fastvgan import dsp
from fastvgan.align import read_alignment
from fastvgan.corpus import read_manifest
from fastvgan.features import extract_features
from fastvgan.model.config import DiscriminatorConfig, GeneratorConfig
from fastvgan.toy import TOY_INVENTORY, make_toy_corpus

# Small layouts that keep unit tests of the training machinery fast while
# exercising the same code paths as the full-size model.
TINY_GEN = GeneratorConfig(channels=(8, 8, 8, 8, 8), input_channels=8, convs_per_block=1, d_ph=8, d_spk=4)
TINY_DISC = DiscriminatorConfig(channels_2d=(4, 4, 4, 4, 4), channels_1d=(8, 8, 8, 8))


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    make_toy_corpus(str(root), clips_per_speaker=10, seed=0)
    return str(root)


@pytest.fixture(scope="session")
def toy_manifest(toy_root):
    return read_manifest(os.path.join(toy_root, "manifest.tsv"))


@pytest.fixture(scope="session")
def toy_features(toy_manifest):
    out = []
    for rec in toy_manifest:
        wave = dsp.read_wav(rec.wav_path)
        segs = read_alignment(rec.alignment_path, TOY_INVENTORY)
        out.append(extract_features(rec.utterance_id, rec.speaker_id, wave, segs))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
