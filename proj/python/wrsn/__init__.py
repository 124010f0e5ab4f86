"""Wireless rechargeable sensor network simulator and charging policies."""

from ._core import (
    CheckpointError,
    Environment,
    FormatError,
    GenerationError,
    evaluate,
    generate_instance,
    generate_set,
    load_checkpoint,
    receive_energy,
    spearman,
    train,
    transmit_energy,
)

__all__ = [
    "CheckpointError",
    "Environment",
    "FormatError",
    "GenerationError",
    "evaluate",
    "generate_instance",
    "generate_set",
    "load_checkpoint",
    "receive_energy",
    "spearman",
    "train",
    "transmit_energy",
]
