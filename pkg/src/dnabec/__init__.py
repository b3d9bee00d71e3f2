"""Random linear coding over the BEC multi-draw shuffling-sampling (DNA storage) channel."""

from .channel import (
    ChannelParams,
    ReadPool,
    Regime,
    SamplingDistribution,
    Strand,
    capacity,
    gamma,
    p_eff,
    regime,
    transmit,
)
from .codec import Codebook, DecodeResult, DecodeStatus, build_codebook, encode, exhaustive_decode, genie_decode
from .errors import ConfigError

__all__ = [
    "ChannelParams",
    "Codebook",
    "ConfigError",
    "DecodeResult",
    "DecodeStatus",
    "ReadPool",
    "Regime",
    "SamplingDistribution",
    "Strand",
    "build_codebook",
    "capacity",
    "encode",
    "exhaustive_decode",
    "gamma",
    "genie_decode",
    "p_eff",
    "regime",
    "transmit",
]
