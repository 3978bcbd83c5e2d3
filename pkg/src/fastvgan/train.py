"""Joint least-squares adversarial training of the decoder and both discriminators."""

from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .align import PhonemeInventory
from .control import ProsodyStats, speaker_prosody_stats
from .model import (
    ConditioningInputs,
    Discriminator1D,
    Discriminator2D,
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
    SpeakerTable,
    condition_batch,
    discriminator_conditioning,
    load_checkpoint,
    normalize_f0,
    save_checkpoint,
    synthesize,
)
from .tensor import Adam, Tensor, mse, rmse

logger = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TrainingError",
    "Corpus",
    "Batch",
    "FastVGAN",
    "Trainer",
    "d_loss",
    "g_loss",
    "make_batch",
    "train_loop",
    "LOSS_LOG_HEADER",
    "checkpoint_name",
]

LOSS_LOG_HEADER = ["step", "d_loss", "g_rec", "g_adv", "seconds"]


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    lr: float = 1e-4
    steps: int = 1000
    seed: int = 0
    w_rec: float = 1.0
    w_gan: float = 0.5
    checkpoint_every: int = 500
    excerpt_frames: int = 128

    def __post_init__(self):
        if self.w_rec < 0 or self.w_gan < 0:
            raise ValueError("loss weights must be non-negative")
        if self.excerpt_frames < 16:
            raise ValueError("excerpt_frames must be at least 16")
        if self.batch_size < 1 or self.steps < 0 or self.checkpoint_every < 1:
            raise ValueError("batch_size and checkpoint_every must be >= 1, steps >= 0")


def checkpoint_name(step):
    return f"ckpt_{step}.fvg"


# ---------------------------------------------------------------------------
# Losses


def d_loss(real_scores, fake_scores):
    """Mean over branches of ``mse(real, 1) + mse(fake, 0)``."""
    terms = [mse(r, 1.0) + mse(f, 0.0) for r, f in zip(real_scores, fake_scores)]
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * (1.0 / len(terms))


def g_loss(fake_scores, generated, target, w_rec=1.0, w_gan=0.5):
    """Return ``(total, reconstruction, adversarial)`` generator losses."""
    rec = rmse(generated, target)
    advs = [mse(f, 1.0) for f in fake_scores]
    adv = advs[0]
    for a in advs[1:]:
        adv = adv + a
    adv = adv * (1.0 / len(advs))
    return rec * w_rec + adv * w_gan, rec, adv


# ---------------------------------------------------------------------------
# Data


class Corpus:
    """Extracted utterances plus the per-speaker statistics derived from them."""

    def __init__(self, features, inventory):
        self.features = list(features)
        self.inventory = inventory
        if not self.features:
            raise ValueError("empty corpus")
        ids = [f.utterance_id for f in self.features]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate utterance ids in corpus")
        self.speakers = sorted({f.speaker_id for f in self.features})
        self.stats = {
            s: speaker_prosody_stats([f for f in self.features if f.speaker_id == s], inventory)
            for s in self.speakers
        }
        self._streams = {}

    def __len__(self):
        return len(self.features)

    def by_id(self, utterance_id):
        for f in self.features:
            if f.utterance_id == utterance_id:
                return f
        raise KeyError(f"unknown utterance {utterance_id!r}")

    def stream(self, i):
        if i not in self._streams:
            self._streams[i] = self.features[i].stream(self.inventory).frame_matrix
        return self._streams[i]

    def f0_norm(self, i):
        f = self.features[i]
        return normalize_f0(f.f0_hz, self.stats[f.speaker_id].mean_logf0)

    def inputs(self, i, speaker_id=None):
        f = self.features[i]
        return ConditioningInputs(self.f0_norm(i), f.intensity, f.alignment, speaker_id or f.speaker_id)

    def validate(self, excerpt_frames):
        for f in self.features:
            for label in f.alignment.labels:
                self.inventory.index(label)
            if f.mel.shape[1] != 80:
                raise TrainingError(f"{f.utterance_id}: mel has {f.mel.shape[1]} bins, expected 80")
            if f.n_frames < excerpt_frames:
                raise TrainingError(
                    f"{f.utterance_id}: {f.n_frames} frames, shorter than the {excerpt_frames}-frame excerpt"
                )


@dataclass
class Batch:
    f0_norm: np.ndarray  # (B, T)
    intensity: np.ndarray  # (B, T)
    stream: np.ndarray  # (B, T, S + 5)
    target: np.ndarray  # (B, T, 80)
    speaker_ids: list = field(default_factory=list)

    def __post_init__(self):
        b, t = self.f0_norm.shape
        if self.target.shape[:2] != (b, t) or self.stream.shape[:2] != (b, t):
            raise ValueError("batch items must have matching conditioning and target lengths")


def make_batch(corpus, cfg, rng, dtype=np.float32):
    """Random fixed-length excerpts, one per batch slot."""
    n = cfg.excerpt_frames
    items = rng.integers(0, len(corpus), size=cfg.batch_size)
    f0, inten, streams, targets, spk = [], [], [], [], []
    for i in items:
        f = corpus.features[i]
        s = int(rng.integers(0, f.n_frames - n + 1))
        sl = slice(s, s + n)
        f0.append(corpus.f0_norm(i)[sl])
        inten.append(f.intensity[sl])
        streams.append(corpus.stream(i)[sl])
        targets.append(f.mel[sl])
        spk.append(f.speaker_id)
    return Batch(
        np.array(f0, dtype=dtype),
        np.array(inten, dtype=dtype),
        np.array(streams, dtype=dtype),
        np.array(targets, dtype=dtype),
        spk,
    )


# ---------------------------------------------------------------------------
# Model bundle


class FastVGAN:
    """Generator, speaker table and the two discriminators, with their metadata."""

    def __init__(self, inventory, speakers, gen_cfg=None, disc_cfg=None, seed=0, dtype=np.float32):
        self.inventory = inventory
        self.gen_cfg = gen_cfg or GeneratorConfig()
        self.disc_cfg = disc_cfg or DiscriminatorConfig()
        rng = np.random.default_rng(seed)
        n_sym = len(inventory)
        self.generator = Generator(n_sym + 1, self.gen_cfg, rng, dtype)
        self.speakers = SpeakerTable(speakers, self.gen_cfg.d_spk, rng, dtype)
        n_cond = 1 + n_sym + self.gen_cfg.d_spk
        self.d2 = Discriminator2D(n_cond, self.disc_cfg, rng, dtype)
        self.d1 = Discriminator1D(n_cond, self.disc_cfg, rng, dtype)

    @property
    def n_symbols(self):
        return len(self.inventory)

    def modules(self):
        return {"gen": self.generator, "spk": self.speakers, "d2": self.d2, "d1": self.d1}

    def generator_params(self):
        return self.generator.parameters() + self.speakers.parameters()

    def discriminator_params(self):
        return self.d2.parameters() + self.d1.parameters()

    def synthesize(self, inputs, return_conditioning=False):
        return synthesize(self.generator, self.speakers, inputs, self.inventory, return_conditioning)

    # -- (de)serialization -------------------------------------------------
    def arrays(self):
        out = {}
        for prefix, mod in self.modules().items():
            for name, p in mod.params.items():
                out[f"{prefix}/{name}"] = p.data
        return out

    def meta(self):
        return {
            "inventory": {
                "symbols": list(self.inventory.symbols),
                "vowels": sorted(self.inventory.vowels),
                "silence": self.inventory.silence,
            },
            "speakers": self.speakers.speakers,
            "speaker_stats": {k: v.to_dict() for k, v in self.speakers.stats.items()},
            "generator": _cfg_to_json(self.gen_cfg),
            "discriminator": _cfg_to_json(self.disc_cfg),
        }

    @classmethod
    def from_checkpoint_data(cls, arrays, meta):
        inv = meta["inventory"]
        inventory = PhonemeInventory(tuple(inv["symbols"]), frozenset(inv["vowels"]), inv["silence"])
        gen_cfg = GeneratorConfig(**_cfg_from_json(meta["generator"]))
        disc_cfg = DiscriminatorConfig(**_cfg_from_json(meta["discriminator"]))
        system = cls(inventory, meta["speakers"], gen_cfg, disc_cfg)
        for prefix, mod in system.modules().items():
            for name, p in mod.params.items():
                key = f"{prefix}/{name}"
                if key not in arrays:
                    raise ValueError(f"checkpoint lacks parameter {key!r}")
                if arrays[key].shape != p.shape:
                    raise ValueError(f"checkpoint parameter {key!r} has shape {arrays[key].shape}, expected {p.shape}")
                p.data = arrays[key].astype(p.dtype)
        system.speakers.stats = {k: ProsodyStats(**v) for k, v in meta.get("speaker_stats", {}).items()}
        return system

    @classmethod
    def load(cls, path):
        arrays, meta = load_checkpoint(path)
        return cls.from_checkpoint_data(arrays, meta)


def _cfg_to_json(cfg):
    return {k: [list(x) if isinstance(x, tuple) else x for x in v] if isinstance(v, tuple) else v
            for k, v in asdict(cfg).items()}


def _cfg_from_json(d):
    def tup(v):
        return tuple(tup(x) for x in v) if isinstance(v, list) else v

    return {k: tup(v) for k, v in d.items()}


# ---------------------------------------------------------------------------
# Training


class Trainer:
    """Owns the optimizers and performs alternating D/G updates."""

    def __init__(self, system, cfg):
        self.system = system
        self.cfg = cfg
        self.opt_g = Adam(system.generator_params(), lr=cfg.lr)
        self.opt_d = Adam(system.discriminator_params(), lr=cfg.lr)
        self.step_index = 0
        self.rng = np.random.default_rng(cfg.seed)

    def _set_trainable(self, generator, discriminators):
        s = self.system
        s.generator.set_requires_grad(generator)
        s.speakers.set_requires_grad(generator)
        s.d2.set_requires_grad(discriminators)
        s.d1.set_requires_grad(discriminators)

    def _fail(self, term, exc):
        raise TrainingError(f"step {self.step_index + 1}: non-finite {term} ({exc})") from exc

    def train_step(self, batch):
        s, cfg = self.system, self.cfg
        n_sym = s.n_symbols

        self._set_trainable(True, False)
        try:
            cond = condition_batch(
                s.generator, s.speakers, batch.f0_norm, batch.intensity, batch.stream, batch.speaker_ids, n_sym
            )
            fake = s.generator.decode(cond)
        except FloatingPointError as exc:
            self._fail("generator output", exc)
        spk = s.speakers.table.data[[s.speakers.index(x) for x in batch.speaker_ids]]
        dcond = discriminator_conditioning(batch.f0_norm, batch.stream, spk, n_sym).astype(batch.target.dtype)
        heads = (s.d2, s.d1)

        # discriminator phase: generator output detached
        self._set_trainable(False, True)
        fake_detached = Tensor(fake.data)
        try:
            ld = d_loss([d(batch.target, dcond) for d in heads], [d(fake_detached, dcond) for d in heads])
            ld.backward()
        except FloatingPointError as exc:
            self._fail("d_loss", exc)
        if any(p.grad is not None for p in s.generator_params()):
            raise TrainingError("generator received gradients during the discriminator phase")
        self.opt_d.step()
        self.opt_d.zero_grad()

        # generator phase: discriminators frozen
        self._set_trainable(True, False)
        try:
            lg, rec, adv = g_loss([d(fake, dcond) for d in heads], fake, batch.target, cfg.w_rec, cfg.w_gan)
            lg.backward()
        except FloatingPointError as exc:
            self._fail("g_loss", exc)
        if any(p.grad is not None for p in s.discriminator_params()):
            raise TrainingError("discriminators received gradients during the generator phase")
        self.opt_g.step()
        self.opt_g.zero_grad()
        s.speakers.project_unit_norm()
        self._set_trainable(True, True)

        self.step_index += 1
        return {
            "step": self.step_index,
            "d_loss": float(ld.data),
            "g_loss": float(lg.data),
            "g_rec": float(rec.data),
            "g_adv": float(adv.data),
        }

    # -- checkpoints -------------------------------------------------------
    def save(self, path):
        arrays = self.system.arrays()
        for group, opt in (("g", self.opt_g), ("d", self.opt_d)):
            for p_name, p in zip(self._names(group), opt.params):
                arrays[f"adam_m/{p_name}"] = p.m
                arrays[f"adam_v/{p_name}"] = p.v
        meta = self.system.meta()
        meta.update(
            step=self.step_index,
            adam_steps={"g": self.opt_g.params[0].step, "d": self.opt_d.params[0].step},
            rng_state=self.rng.bit_generator.state,
            train=asdict(self.cfg),
        )
        save_checkpoint(path, arrays, meta)

    def _names(self, group):
        mods = ("gen", "spk") if group == "g" else ("d2", "d1")
        return [f"{m}/{n}" for m in mods for n in self.system.modules()[m].params]

    @classmethod
    def load(cls, path, cfg=None):
        arrays, meta = load_checkpoint(path)
        system = FastVGAN.from_checkpoint_data(arrays, meta)
        cfg = cfg or TrainConfig(**meta["train"])
        trainer = cls(system, cfg)
        for group, opt in (("g", trainer.opt_g), ("d", trainer.opt_d)):
            for p_name, p in zip(trainer._names(group), opt.params):
                p.m = arrays[f"adam_m/{p_name}"].astype(p.dtype)
                p.v = arrays[f"adam_v/{p_name}"].astype(p.dtype)
                p.step = meta["adam_steps"][group]
        trainer.step_index = meta["step"]
        trainer.rng.bit_generator.state = meta["rng_state"]
        return trainer


def _read_log(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def train_loop(corpus, cfg, out_dir, resume=None, system=None, gen_cfg=None, disc_cfg=None):
    """Run training, writing ``ckpt_{step}.fvg`` files and ``loss_log.csv`` to ``out_dir``.

    With ``resume`` (a checkpoint path) training continues from the saved
    step up to ``cfg.steps``; loss-log rows past that step are discarded.
    Returns the list of checkpoint paths written.
    """
    corpus.validate(cfg.excerpt_frames)
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "loss_log.csv")
    if resume:
        trainer = Trainer.load(resume, cfg)
        missing = set(corpus.speakers) - set(trainer.system.speakers.speakers)
        if missing:
            raise TrainingError(f"corpus speakers {sorted(missing)} are not in the checkpoint")
        rows = _read_log(log_path) if os.path.exists(log_path) else [LOSS_LOG_HEADER]
        rows = [rows[0]] + [r for r in rows[1:] if int(r[0]) <= trainer.step_index]
        with open(log_path, "w", newline="") as f:
            csv.writer(f).writerows(rows)
        offset = float(rows[-1][4]) if len(rows) > 1 else 0.0
    else:
        if system is None:
            system = FastVGAN(corpus.inventory, corpus.speakers, gen_cfg, disc_cfg, seed=cfg.seed)
        system.speakers.stats = dict(corpus.stats)
        trainer = Trainer(system, cfg)
        with open(log_path, "w", newline="") as f:
            csv.writer(f).writerow(LOSS_LOG_HEADER)
        offset = 0.0

    written = []
    if not resume:
        path = os.path.join(out_dir, checkpoint_name(0))
        trainer.save(path)
        written.append(path)
    start = time.perf_counter()
    with open(log_path, "a", newline="") as f:
        writer = csv.writer(f)
        while trainer.step_index < cfg.steps:
            batch = make_batch(corpus, cfg, trainer.rng)
            report = trainer.train_step(batch)
            elapsed = offset + time.perf_counter() - start
            writer.writerow([report["step"], f"{report['d_loss']:.6f}", f"{report['g_rec']:.6f}",
                             f"{report['g_adv']:.6f}", f"{elapsed:.3f}"])
            f.flush()
            if report["step"] % 50 == 0:
                logger.info("step %d d=%.4f rec=%.4f adv=%.4f", report["step"], report["d_loss"],
                            report["g_rec"], report["g_adv"])
            if report["step"] % cfg.checkpoint_every == 0 or report["step"] == cfg.steps:
                path = os.path.join(out_dir, checkpoint_name(report["step"]))
                trainer.save(path)
                written.append(path)
    return written
