from __future__ import annotations

from dataclasses import dataclass, field

N_MELS = 80
N_FREQ_ROWS = 5
N_POSITIONAL = 4


@dataclass(frozen=True)
class GeneratorConfig:
    """Decoder layout: one entry of ``channels``/``strides`` per block."""

    channels: tuple = (160, 144, 128, 112, 96)
    strides: tuple = ((1, 2), (1, 2), (1, 2), (1, 2), (1, 1))
    base_kernel: tuple = (3, 3)
    input_channels: int = 160
    convs_per_block: int = 3
    resblocks_per_block: int = 1
    d_spk: int = 32
    d_ph: int = 64
    phoneme_kernel: int = 3

    def __post_init__(self):
        if len(self.channels) != len(self.strides):
            raise ValueError("channels and strides must have one entry per block")
        up = 1
        for _, sf in self.strides:
            up *= sf
        if N_FREQ_ROWS * up != N_MELS:
            raise ValueError(f"frequency upsampling {N_FREQ_ROWS}x{up} does not reach {N_MELS} bins")

    @property
    def cond_channels(self):
        """f0 + intensity + phoneme embedding + positional + speaker."""
        return 1 + 1 + self.d_ph + N_POSITIONAL + self.d_spk

    def transposed_kernel(self, stride):
        return (self.base_kernel[0] * stride[0], self.base_kernel[1] * stride[1])

    def time_receptive_radius(self):
        """Frames of context one output frame sees on either side of itself.

        The phoneme-embedding conv sits in front of the decoder and is not
        counted here. Every other layer has time stride 1, so radii add up.
        """
        if any(st != 1 for st, _ in self.strides):
            raise ValueError("receptive radius is only defined for time stride 1")
        r = self.base_kernel[0] // 2  # input conv
        for stride in self.strides:
            r += self.transposed_kernel(stride)[0] // 2
            r += self.convs_per_block * (self.base_kernel[0] // 2)
            r += self.resblocks_per_block * 2 * (self.base_kernel[0] // 2)
        return r


@dataclass(frozen=True)
class DiscriminatorConfig:
    channels_2d: tuple = (80, 100, 200, 300, 100)
    strides_2d: tuple = ((2, 2), (1, 2), (1, 1), (1, 1), (1, 1))
    kernel_2d: tuple = (3, 3)
    channels_1d: tuple = (128, 128, 512, 128)
    kernels_1d: tuple = (3, 3, 3, 1)
    slope: float = 0.2


@dataclass(frozen=True)
class ModelConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
