"""Desk-scale simulator of proton spin-state teleportation through an EPR pair."""

from .quantum import (
    BellOutcome,
    ChannelSpec,
    DensityOperator,
    bell_measure,
    chsh,
    correlation,
    fidelity,
    make_channel,
    make_pure,
    make_singlet,
    measure_spin,
    teleport,
    tensor,
)

__version__ = "0.1.0"
