"""Photodiode voltages, sign digitisation and discriminator readout.

Outcomes are encoded as small integers (+1, -1, 0 for no outcome) so that
whole runs can be handled as int8 arrays; :class:`Outcome` names them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .optics import PortIntensities

__all__ = [
    "Outcome",
    "DetectorConfig",
    "HomodyneReading",
    "MisconfiguredDetector",
    "voltages",
    "read_homodyne",
    "digitize",
    "digitize_with_coin",
    "discriminate",
]


class Outcome(enum.IntEnum):
    MINUS = -1
    NONE = 0
    PLUS = 1


class MisconfiguredDetector(RuntimeError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    gain: float = 1.0
    noise_sigma: float = 0.0
    discriminator_threshold: float | None = None
    # discriminate on readings minus their common mean instead of raw voltages
    subtract_pedestal: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.gain) and self.gain > 0):
            raise ValueError("gain > 0")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError("noise_sigma >= 0")
        t = self.discriminator_threshold
        if t is not None and not (np.isfinite(t) and t >= 0):
            raise ValueError("discriminator_threshold >= 0")


class HomodyneReading(NamedTuple):
    v_reflected: np.ndarray | float
    v_transmitted: np.ndarray | float

    @property
    def v_diff(self):
        return self.v_reflected - self.v_transmitted


def voltages(intensities: PortIntensities, cfg: DetectorConfig, z_reflected=0.0, z_transmitted=0.0):
    """Noisy voltages given standard-normal deviates for each photodiode."""
    refl, trans = intensities
    v_r = cfg.gain * np.asarray(refl, dtype=float) + cfg.noise_sigma * np.asarray(z_reflected)
    v_t = cfg.gain * np.asarray(trans, dtype=float) + cfg.noise_sigma * np.asarray(z_transmitted)
    return HomodyneReading(v_r, v_t)


def read_homodyne(intensities: PortIntensities, cfg: DetectorConfig, rng: np.random.Generator) -> HomodyneReading:
    shape = np.shape(intensities[0])
    z_r = rng.standard_normal(shape)
    z_t = rng.standard_normal(shape)
    reading = voltages(intensities, cfg, z_r, z_t)
    if not shape:
        return HomodyneReading(float(reading.v_reflected), float(reading.v_transmitted))
    return reading


def digitize_with_coin(v_diff, coin):
    """Sign of ``v_diff``; exact zeros resolved by ``coin < 0.5`` -> PLUS."""
    v = np.asarray(v_diff, dtype=float)
    tie = np.where(np.asarray(coin) < 0.5, 1, -1)
    return np.where(v > 0, 1, np.where(v < 0, -1, tie)).astype(np.int8)


def digitize(v_diff, rng: np.random.Generator):
    """+1 for positive, -1 for negative difference voltage; fair coin at 0."""
    out = digitize_with_coin(v_diff, rng.random(np.shape(v_diff)))
    return Outcome(int(out)) if out.ndim == 0 else out


def discriminate(reading: HomodyneReading, cfg: DetectorConfig):
    """Two-discriminator readout.

    PLUS when only the reflected port reaches the threshold, MINUS when only
    the transmitted port does. Neither or both firing gives NONE.
    """
    t = cfg.discriminator_threshold
    if t is None:
        raise MisconfiguredDetector("discriminate() needs discriminator_threshold")
    v_r = np.asarray(reading.v_reflected, dtype=float)
    v_t = np.asarray(reading.v_transmitted, dtype=float)
    if cfg.subtract_pedestal:
        pedestal = 0.5 * (v_r + v_t)
        v_r, v_t = v_r - pedestal, v_t - pedestal
    fire_r = v_r >= t
    fire_t = v_t >= t
    out = np.where(fire_r & ~fire_t, 1, np.where(fire_t & ~fire_r, -1, 0)).astype(np.int8)
    return Outcome(int(out)) if out.ndim == 0 else out
