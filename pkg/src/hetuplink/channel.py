"""Sectored antenna gain distribution, path loss, and fading samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .scenario import AntennaParams, ChannelParams, LinkState

__all__ = ["GainAtom", "PathLoss", "gain_distribution", "path_loss", "sample_fading"]


@dataclass(frozen=True)
class GainAtom:
    """One of the four interferer antenna-gain levels and its probability."""

    gain: float
    probability: float


@dataclass(frozen=True)
class PathLoss:
    state: LinkState
    value: float


def gain_distribution(antenna: AntennaParams) -> Tuple[GainAtom, ...]:
    """Antenna-gain distribution seen from an interfering UE.

    Beam directions are independent and uniform, so the main lobe of each
    side is met with probability beamwidth/(2*pi).  Atoms are ordered
    (M_b*M_u, M_b*m_u, m_b*M_u, m_b*m_u); the last probability is defined
    as one minus the others so the four sum to 1 exactly.
    """
    qb = antenna.beamwidth_bs / (2.0 * math.pi)
    qu = antenna.beamwidth_ue / (2.0 * math.pi)
    p1 = qb * qu
    p2 = qb * (1.0 - qu)
    p3 = (1.0 - qb) * qu
    p4 = 1.0 - p1 - p2 - p3
    return (
        GainAtom(antenna.main_lobe_bs * antenna.main_lobe_ue, p1),
        GainAtom(antenna.main_lobe_bs * antenna.side_lobe_ue, p2),
        GainAtom(antenna.side_lobe_bs * antenna.main_lobe_ue, p3),
        GainAtom(antenna.side_lobe_bs * antenna.side_lobe_ue, p4),
    )


def path_loss(r, state: LinkState, channel: ChannelParams):
    """kappa_s * r^alpha_s.  r = 0 is rejected (singular received power)."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("distance must be positive")
    value = channel.kappa(state) * arr ** channel.alpha(state)
    if arr.ndim == 0:
        return PathLoss(state=state, value=float(value))
    return PathLoss(state=state, value=value)


def sample_fading(state: LinkState, channel: ChannelParams, rng, size=None):
    """Unit-mean power fading: exponential for shape 1, else gamma with the
    tier-wide integer Nakagami shape of the link state."""
    shape = channel.nakagami(state)
    if shape == 1:
        return rng.exponential(1.0, size=size)
    return rng.gamma(shape, 1.0 / shape, size=size)
