"""Generator (decoder), the two conditioned discriminators, and the speaker table."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..tensor import (
    Parameter,
    Tensor,
    as_tensor,
    concat,
    conv1d,
    conv2d,
    conv2d_transposed,
    leaky_relu,
    residual_block,
    swish,
)
from .config import N_FREQ_ROWS, N_MELS, DiscriminatorConfig, GeneratorConfig

__all__ = ["Generator", "Discriminator2D", "Discriminator1D", "SpeakerTable", "Module"]


class Module:
    """Named, ordered collection of parameters."""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.params = OrderedDict()

    def _add(self, name, shape, rng, fan_in=None, zero=False):
        if zero:
            data = np.zeros(shape)
        else:
            limit = np.sqrt(6.0 / fan_in)  # He-uniform
            data = rng.uniform(-limit, limit, size=shape)
        p = Parameter(data.astype(self.dtype), name=name)
        self.params[name] = p
        return p

    def parameters(self):
        return list(self.params.values())

    def n_parameters(self):
        return sum(p.size for p in self.params.values())

    def set_requires_grad(self, flag):
        for p in self.params.values():
            p.requires_grad = flag
            if not flag:
                p.grad = None

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def _conv(self, name, kshape, rng, fan_in=None, n_out=None):
        kt, kf, cin, cout = kshape
        self._add(f"{name}.w", kshape, rng, fan_in or kt * kf * cin)
        self._add(f"{name}.b", (n_out or cout,), rng, zero=True)

    def _w(self, name):
        return self.params[f"{name}.w"], self.params[f"{name}.b"]


class SpeakerTable(Module):
    """Learnable unit-norm speaker vectors plus per-speaker prosody statistics."""

    def __init__(self, speakers, dim=32, rng=None, dtype=np.float32):
        super().__init__(dtype)
        speakers = list(speakers)
        if len(set(speakers)) != len(speakers):
            raise ValueError("speaker ids must be unique")
        rng = np.random.default_rng(0) if rng is None else rng
        self.ids = {s: i for i, s in enumerate(speakers)}
        self.stats = {}
        table = self._add("speaker.embedding", (len(speakers), dim), rng, zero=True)
        table.data[...] = rng.standard_normal(table.shape)
        self.project_unit_norm()

    @property
    def table(self):
        return self.params["speaker.embedding"]

    @property
    def speakers(self):
        return list(self.ids)

    def index(self, speaker):
        try:
            return self.ids[speaker]
        except KeyError:
            raise KeyError(f"unknown speaker {speaker!r}; known: {sorted(self.ids)}") from None

    def lookup(self, speakers):
        """Rows for a list of speaker ids as a differentiable ``(B, D)`` tensor."""
        return self.table.take_rows([self.index(s) for s in speakers])

    def speaker_vector(self, speaker):
        return self.table.data[self.index(speaker)].copy()

    def project_unit_norm(self):
        t = self.table.data
        t /= np.linalg.norm(t, axis=1, keepdims=True)


class Generator(Module):
    """Fully convolutional decoder from conditioning features to log-mel frames.

    Parameters
    ----------
    n_phoneme_inputs : int
        Width of the one-hot + length block fed to the phoneme-embedding conv
        (number of inventory symbols + 1).
    cfg : GeneratorConfig
    rng : numpy Generator, optional
    dtype : numpy dtype
        ``float32`` for training, ``float64`` for gradient checks.
    """

    def __init__(self, n_phoneme_inputs, cfg=None, rng=None, dtype=np.float32):
        super().__init__(dtype)
        self.cfg = cfg = cfg or GeneratorConfig()
        rng = np.random.default_rng(0) if rng is None else rng
        self.n_phoneme_inputs = n_phoneme_inputs
        kt, kf = cfg.base_kernel

        k = cfg.phoneme_kernel
        self._add("phoneme.w", (k, n_phoneme_inputs, cfg.d_ph), rng, k * n_phoneme_inputs)
        self._add("phoneme.b", (cfg.d_ph,), rng, zero=True)
        self._conv("input", (kt, kf, cfg.cond_channels, cfg.input_channels), rng)
        prev = cfg.input_channels
        for i, (c, stride) in enumerate(zip(cfg.channels, cfg.strides)):
            tk = cfg.transposed_kernel(stride)
            # Transposed kernel is stored (kt, kf, out, in); fan-in per output is in * kt*kf / stride area.
            fan = prev * (tk[0] // stride[0]) * (tk[1] // stride[1])
            self._conv(f"block{i}.up", (tk[0], tk[1], c, prev), rng, fan_in=fan, n_out=c)
            for j in range(cfg.convs_per_block):
                self._conv(f"block{i}.conv{j}", (kt, kf, c, c), rng)
            for j in range(cfg.resblocks_per_block):
                self._conv(f"block{i}.res{j}.a", (kt, kf, c, c), rng)
                self._conv(f"block{i}.res{j}.b", (kt, kf, c, c), rng)
            prev = c
        self._conv("output", (1, 1, prev, 1), rng)

    def embed_phonemes(self, phoneme_block):
        """``(B, T, S+1)`` one-hot + length block -> ``(B, T, d_ph)`` embedding."""
        return conv1d(phoneme_block, self.params["phoneme.w"], self.params["phoneme.b"])

    def decode(self, cond):
        """``(B, T, 5, C_in)`` conditioning tensor -> ``(B, T, 80)`` log-mel."""
        cond = as_tensor(cond)
        cfg = self.cfg
        if cond.ndim != 4 or cond.shape[2] != N_FREQ_ROWS or cond.shape[3] != cfg.cond_channels:
            raise ValueError(
                f"conditioning must be (B, T, {N_FREQ_ROWS}, {cfg.cond_channels}), got {cond.shape}"
            )
        h = swish(conv2d(cond, *self._w("input")))
        for i, stride in enumerate(cfg.strides):
            h = swish(conv2d_transposed(h, *self._w(f"block{i}.up"), stride=stride))
            for j in range(cfg.convs_per_block):
                h = swish(conv2d(h, *self._w(f"block{i}.conv{j}")))
            for j in range(cfg.resblocks_per_block):
                h = residual_block(h, *self._w(f"block{i}.res{j}.a"), *self._w(f"block{i}.res{j}.b"))
        out = conv2d(h, *self._w("output"))
        return out.reshape(out.shape[0], out.shape[1], out.shape[2])


def _broadcast_freq(cond, n_freq):
    """``(B, T, C)`` -> ``(B, T, n_freq, C)``."""
    b, t, c = cond.shape
    return cond.reshape(b, t, 1, c).broadcast_to((b, t, n_freq, c))


class Discriminator2D(Module):
    """Time-frequency patch discriminator; conditioning is broadcast over frequency."""

    def __init__(self, n_cond, cfg=None, rng=None, dtype=np.float32):
        super().__init__(dtype)
        self.cfg = cfg = cfg or DiscriminatorConfig()
        rng = np.random.default_rng(1) if rng is None else rng
        kt, kf = cfg.kernel_2d
        prev = 1 + n_cond
        for i, c in enumerate(cfg.channels_2d):
            self._conv(f"d2.conv{i}", (kt, kf, prev, c), rng)
            prev = c
        self.n_cond = n_cond

    def __call__(self, mel, cond):
        mel, cond = as_tensor(mel), as_tensor(cond)
        b, t, f = mel.shape
        h = concat([mel.reshape(b, t, f, 1), _broadcast_freq(cond, f)], axis=-1)
        n = len(self.cfg.channels_2d)
        for i, stride in enumerate(self.cfg.strides_2d):
            h = conv2d(h, *self._w(f"d2.conv{i}"), stride=tuple(stride))
            if i < n - 1:
                h = leaky_relu(h, self.cfg.slope)
        return h


class Discriminator1D(Module):
    """Per-frame discriminator treating the mel bins as feature channels."""

    def __init__(self, n_cond, cfg=None, rng=None, dtype=np.float32):
        super().__init__(dtype)
        self.cfg = cfg = cfg or DiscriminatorConfig()
        rng = np.random.default_rng(2) if rng is None else rng
        prev = N_MELS + n_cond
        for i, (c, k) in enumerate(zip(cfg.channels_1d, cfg.kernels_1d)):
            self._add(f"d1.conv{i}.w", (k, prev, c), rng, k * prev)
            self._add(f"d1.conv{i}.b", (c,), rng, zero=True)
            prev = c
        self.n_cond = n_cond

    def __call__(self, mel, cond):
        h = concat([as_tensor(mel), as_tensor(cond)], axis=-1)
        n = len(self.cfg.channels_1d)
        for i in range(n):
            h = conv1d(h, *self._w(f"d1.conv{i}"))
            if i < n - 1:
                h = leaky_relu(h, self.cfg.slope)
        return h
