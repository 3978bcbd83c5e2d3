"""Waveform analysis and resynthesis.

STFT and log-mel analysis, frame intensity, a YIN-style F0 tracker, log-domain
interpolation across unvoiced frames and Griffin-Lim inversion. Every frame-level
quantity produced here shares one frame grid: frame ``t`` spans samples
``[t*hop, t*hop + win)`` and there is no centre padding.
"""

from __future__ import annotations

import logging
import wave
from dataclasses import asdict, dataclass

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "DspConfig",
    "Waveform",
    "MelSpectrogram",
    "F0Contour",
    "IntensityContour",
    "mel_filterbank",
    "mel_center_frequencies",
    "stft",
    "n_frames",
    "mel_spectrogram",
    "intensity",
    "estimate_f0",
    "interpolate_unvoiced",
    "griffin_lim",
    "read_wav",
    "write_wav",
    "read_f0_file",
    "write_f0_file",
]


@dataclass(frozen=True)
class DspConfig:
    sample_rate: int = 16000
    fft_size: int = 1024
    win_size: int = 800
    hop_size: int = 200
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0
    mel_floor: float = 1e-5
    f0_min: float = 60.0
    f0_max: float = 500.0
    f0_threshold: float = 0.15

    def __post_init__(self):
        if not self.fft_size >= self.win_size >= self.hop_size > 0:
            raise ValueError("need fft_size >= win_size >= hop_size > 0")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ValueError("mel range must satisfy 0 <= fmin < fmax <= sample_rate/2")

    @property
    def hop_seconds(self):
        return self.hop_size / self.sample_rate

    @property
    def frame_rate(self):
        return self.sample_rate / self.hop_size

    def to_dict(self):
        return asdict(self)


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


@dataclass
class MelSpectrogram:
    """``frames`` is a ``(T, n_mels)`` matrix of natural-log mel magnitudes."""

    frames: np.ndarray
    hop_seconds: float
    sample_rate: int

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ValueError(f"mel frames must be (T>=1, n_mels), got {self.frames.shape}")

    @property
    def n_frames(self):
        return self.frames.shape[0]


@dataclass
class F0Contour:
    values_hz: np.ndarray
    voiced: np.ndarray

    def __post_init__(self):
        self.values_hz = np.asarray(self.values_hz, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if self.values_hz.shape != self.voiced.shape:
            raise ValueError("F0 values and voicing mask must have equal length")
        if np.any(self.values_hz[self.voiced] <= 0):
            raise ValueError("voiced frames must have positive F0")

    def __len__(self):
        return len(self.values_hz)


@dataclass
class IntensityContour:
    values: np.ndarray

    def __len__(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# Analysis


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_center_frequencies(cfg=DspConfig()):
    """Centre frequency in Hz of every mel band (HTK mel scale)."""
    pts = np.linspace(_hz_to_mel(cfg.fmin), _hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    return _mel_to_hz(pts[1:-1])


def mel_filterbank(cfg=DspConfig()):
    """Triangular ``(n_mels, fft_size//2 + 1)`` filterbank with unit peaks."""
    edges = _mel_to_hz(np.linspace(_hz_to_mel(cfg.fmin), _hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    freqs = np.fft.rfftfreq(cfg.fft_size, 1.0 / cfg.sample_rate)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    if np.any(fb.sum(axis=1) <= 0):
        raise ValueError("mel filterbank has empty bands; increase fft_size or narrow the mel range")
    return fb


def _window(cfg):
    return np.hanning(cfg.win_size + 1)[:-1]  # periodic Hann


def n_frames(n_samples, cfg=DspConfig()):
    return max(0, (n_samples - cfg.win_size) // cfg.hop_size + 1)


def _frame(x, cfg):
    t = n_frames(len(x), cfg)
    idx = np.arange(cfg.win_size)[None, :] + cfg.hop_size * np.arange(t)[:, None]
    return x[idx]


def _check_waveform(w, cfg):
    if len(w.samples) == 0:
        raise ValueError("empty waveform")
    if w.sample_rate != cfg.sample_rate:
        raise ValueError(f"waveform sample rate {w.sample_rate} Hz does not match config {cfg.sample_rate} Hz")
    if len(w.samples) < cfg.win_size:
        raise ValueError(
            f"waveform of {len(w.samples)} samples is shorter than one {cfg.win_size}-sample window"
        )


def stft(samples, cfg=DspConfig()):
    """Complex ``(T, fft_size//2 + 1)`` STFT of a 1-D signal, Hann-windowed."""
    frames = _frame(np.asarray(samples, dtype=np.float64), cfg) * _window(cfg)
    return np.fft.rfft(frames, n=cfg.fft_size, axis=1)


def mel_spectrogram(w, cfg=DspConfig()):
    _check_waveform(w, cfg)
    mag = np.abs(stft(w.samples, cfg))
    mel = mag @ mel_filterbank(cfg).T
    return MelSpectrogram(np.log(np.maximum(cfg.mel_floor, mel)), cfg.hop_seconds, cfg.sample_rate)


def intensity(m):
    """Mean log-mel energy of each frame."""
    return IntensityContour(np.mean(m.frames, axis=1))


# ---------------------------------------------------------------------------
# F0


def _cmnd(frames, tau_max):
    """Cumulative-mean-normalized difference function for each row of ``frames``.

    The difference function integrates over the first ``W = len - tau_max``
    samples of every frame, so all lags see the same number of terms.
    """
    n, length = frames.shape
    w = length - tau_max
    x = frames
    nfft = 1 << int(np.ceil(np.log2(length + w)))
    fx = np.fft.rfft(x, nfft)
    fh = np.fft.rfft(x[:, :w], nfft)
    # cross-correlation r[tau] = sum_j x[j] x[j+tau], j < w
    corr = np.fft.irfft(np.conj(fh) * fx, nfft)[:, : tau_max + 1]
    sq = np.concatenate([np.zeros((n, 1)), np.cumsum(x * x, axis=1)], axis=1)
    energy0 = sq[:, w][:, None]
    taus = np.arange(tau_max + 1)
    energy_tau = sq[:, taus + w] - sq[:, taus]
    diff = np.maximum(energy0 + energy_tau - 2.0 * corr, 0.0)
    diff[:, 0] = 0.0
    cum = np.cumsum(diff[:, 1:], axis=1)
    cmnd = np.ones_like(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        cmnd[:, 1:] = np.where(cum > 0, diff[:, 1:] * taus[1:] / cum, 1.0)
    return cmnd


def estimate_f0(w, cfg=DspConfig(), threshold=None):
    """YIN-style F0 track on the mel frame grid.

    A frame is voiced when the cumulative-mean-normalized difference dips
    below ``threshold`` within the lag range implied by ``[f0_min, f0_max]``.
    The chosen lag is the first such dip followed down to its local minimum,
    refined by parabolic interpolation.
    """
    threshold = cfg.f0_threshold if threshold is None else threshold
    if not 0 < cfg.f0_min < cfg.f0_max < cfg.sample_rate / 2:
        raise ValueError(f"invalid F0 search range [{cfg.f0_min}, {cfg.f0_max}] Hz")
    _check_waveform(w, cfg)
    tau_min = int(np.floor(cfg.sample_rate / cfg.f0_max))
    tau_max = int(np.ceil(cfg.sample_rate / cfg.f0_min))
    if tau_max + 2 >= cfg.win_size:
        raise ValueError("analysis window too short for the lowest F0 in the search range")

    frames = _frame(w.samples, cfg)
    frames = frames - frames.mean(axis=1, keepdims=True)
    cmnd = _cmnd(frames, tau_max)
    energy = np.mean(frames * frames, axis=1)

    n = len(frames)
    values = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    for i in range(n):
        if energy[i] < 1e-10:
            continue
        d = cmnd[i]
        below = np.nonzero(d[tau_min : tau_max] < threshold)[0]
        if len(below) == 0:
            continue
        tau = tau_min + below[0]
        while tau + 1 < tau_max and d[tau + 1] < d[tau]:
            tau += 1
        a, b, c = d[tau - 1], d[tau], d[tau + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom > 0 else 0.0
        values[i] = cfg.sample_rate / (tau + np.clip(shift, -1, 1))
        voiced[i] = True
    return F0Contour(values, voiced)


def interpolate_unvoiced(f):
    """Fill unvoiced frames linearly in log-Hz; the voicing mask is kept as is."""
    if not np.any(f.voiced):
        raise ValueError("cannot interpolate a fully unvoiced F0 contour")
    idx = np.nonzero(f.voiced)[0]
    logf = np.interp(np.arange(len(f)), idx, np.log(f.values_hz[idx]))
    return F0Contour(np.exp(logf), f.voiced.copy())


# ---------------------------------------------------------------------------
# Resynthesis


def _istft(spec, cfg, length):
    frames = np.fft.irfft(spec, n=cfg.fft_size, axis=1)[:, : cfg.win_size]
    win = _window(cfg)
    out = np.zeros(length)
    norm = np.zeros(length)
    for t, frame in enumerate(frames):
        s = t * cfg.hop_size
        out[s : s + cfg.win_size] += frame * win
        norm[s : s + cfg.win_size] += win * win
    nz = norm > 1e-8
    out[nz] /= norm[nz]
    return out


def griffin_lim(m, cfg=DspConfig(), iters=60):
    """Invert a log-mel spectrogram to audio.

    Linear magnitudes come from the filterbank pseudo-inverse, clipped at 0;
    phase starts at zero and is refined by ``iters`` Griffin-Lim iterations,
    so the result is deterministic.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    fb = mel_filterbank(cfg)
    inv = np.linalg.pinv(fb)
    if not np.all(np.isfinite(inv)) or np.linalg.matrix_rank(fb) < fb.shape[0]:
        logger.warning("mel filterbank pseudo-inverse is degenerate; reconstruction will be approximate")
        inv = np.nan_to_num(inv)
    mag = np.maximum(0.0, np.exp(np.asarray(m.frames, dtype=np.float64)) @ inv.T)
    length = (m.n_frames - 1) * cfg.hop_size + cfg.win_size
    spec = mag.astype(np.complex128)
    x = _istft(spec, cfg, length)
    for _ in range(iters - 1):
        rebuilt = stft(x, cfg)
        phase = np.exp(1j * np.angle(rebuilt))
        x = _istft(mag * phase, cfg, length)
    return Waveform(np.clip(x, -1.0, 1.0), cfg.sample_rate)


# ---------------------------------------------------------------------------
# File formats


def read_wav(path):
    """Read a 16-bit PCM mono RIFF file into a :class:`Waveform` in [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as f:
            if f.getnchannels() != 1:
                raise ValueError(f"{path}: expected mono audio, got {f.getnchannels()} channels")
            if f.getsampwidth() != 2:
                raise ValueError(f"{path}: expected 16-bit PCM, got {8 * f.getsampwidth()}-bit samples")
            if f.getcomptype() != "NONE":
                raise ValueError(f"{path}: compressed WAV ({f.getcomptype()}) is not supported")
            rate = f.getframerate()
            raw = f.readframes(f.getnframes())
    except wave.Error as exc:
        raise ValueError(f"{path}: not a PCM WAV file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return Waveform(samples, rate)


def write_wav(path, w):
    ints = np.round(np.clip(w.samples, -1.0, 32767 / 32768) * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(int(w.sample_rate))
        f.writeframes(ints.tobytes())


def read_f0_file(path, expected_frames=None):
    """Parse ``hz voiced_flag`` lines into an :class:`F0Contour`."""
    values, voiced = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'hz voiced_flag', got {line.strip()!r}")
            hz, flag = float(parts[0]), int(parts[1])
            if flag not in (0, 1) or hz < 0 or (flag == 1 and hz <= 0):
                raise ValueError(f"{path}:{lineno}: invalid F0 entry {line.strip()!r}")
            values.append(hz)
            voiced.append(bool(flag))
    if expected_frames is not None and len(values) != expected_frames:
        raise ValueError(f"{path}: {len(values)} F0 frames, mel analysis has {expected_frames}")
    return F0Contour(np.array(values), np.array(voiced, dtype=bool))


def write_f0_file(path, f):
    with open(path, "w", encoding="utf-8") as out:
        for hz, v in zip(f.values_hz, f.voiced):
            out.write(f"{hz if v else 0.0:.6f} {int(v)}\n")
