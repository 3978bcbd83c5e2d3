"""Conditioning assembly, generator, discriminators and checkpoints."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .conditioning import (
    ConditioningInputs,
    assemble,
    condition_batch,
    discriminator_conditioning,
    embed_phonemes,
    normalize_f0,
    synthesize,
)
from .config import N_FREQ_ROWS, N_MELS, DiscriminatorConfig, GeneratorConfig, ModelConfig
from .networks import Discriminator1D, Discriminator2D, Generator, Module, SpeakerTable

__all__ = [
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "ConditioningInputs",
    "assemble",
    "condition_batch",
    "discriminator_conditioning",
    "embed_phonemes",
    "normalize_f0",
    "synthesize",
    "N_FREQ_ROWS",
    "N_MELS",
    "DiscriminatorConfig",
    "GeneratorConfig",
    "ModelConfig",
    "Discriminator1D",
    "Discriminator2D",
    "Generator",
    "Module",
    "SpeakerTable",
]
