"""Shift-merge steganographic codec over autoregressive token channels."""

from .bitstream import (
    BitString,
    FramedMessage,
    RepeatingBits,
    bits_to_fraction,
    deframe,
    frame_message,
    materialize_pointer,
)
from .channel import (
    ChannelSource,
    MarkovChannel,
    QuantizedDistribution,
    ScriptedChannel,
    TokenDistribution,
    UniformChannel,
    ZipfChannel,
    quantize,
    synthetic_channel,
    top_k_truncate,
)
from .codec import CodecSession, Settings, StepOutcome, decode, encode
from .container import StegoContainer
from .errors import ShimerError
from .intervals import Dyadic, Interval, StepCase, StepKind, compose, extract_prefix, shift_and_classify
from .prg import InjectedUniforms, PrgStream, StegoKey, keygen, padding_bit
from .reorder import Permutation, apply_permutation, reorder

__version__ = "0.1.0"

__all__ = [
    "BitString",
    "FramedMessage",
    "RepeatingBits",
    "bits_to_fraction",
    "deframe",
    "frame_message",
    "materialize_pointer",
    "ChannelSource",
    "MarkovChannel",
    "QuantizedDistribution",
    "ScriptedChannel",
    "TokenDistribution",
    "UniformChannel",
    "ZipfChannel",
    "quantize",
    "synthetic_channel",
    "top_k_truncate",
    "CodecSession",
    "Settings",
    "StepOutcome",
    "decode",
    "encode",
    "StegoContainer",
    "ShimerError",
    "Dyadic",
    "Interval",
    "StepCase",
    "StepKind",
    "compose",
    "extract_prefix",
    "shift_and_classify",
    "InjectedUniforms",
    "PrgStream",
    "StegoKey",
    "keygen",
    "padding_bit",
    "Permutation",
    "apply_permutation",
    "reorder",
    "__version__",
]
