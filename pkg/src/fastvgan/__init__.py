"""Controllable GAN voice conversion on log-mel features, built on a small numpy autodiff."""

from .align import PhonemeAlignment, PhonemeInventory, encode_stream, parse_alignment, to_frames
from .config import Config, load_config
from .control import ProsodySpec, adapt_to_target, ambitus_scale, apply_prosody, pitch_shift, scale_vowel_durations
from .dsp import DspConfig, MelSpectrogram, Waveform, griffin_lim, mel_spectrogram
from .evaluate import bootstrap_ci, cosine, eval_conversion, proxy_embedding
from .features import UtteranceFeatures, extract_features
from .train import Corpus, FastVGAN, TrainConfig, Trainer, train_loop

__version__ = "0.1.0"
