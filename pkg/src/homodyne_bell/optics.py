"""Classical wave optics of a lossless 50-50 homodyne beamsplitter.

Everything here is a pure function of real amplitudes and phases and works
element-wise on numpy arrays. Intensities are field-squared and carry no
units; detector gain is applied downstream.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "PortIntensities",
    "reduce_phase",
    "check_amplitude",
    "output_intensities",
    "homodyne_difference",
    "real_wave_oracle",
]


class PortIntensities(NamedTuple):
    reflected: np.ndarray | float
    transmitted: np.ndarray | float


def reduce_phase(x):
    """Map phase(s) onto the half-open interval (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    # in-range values pass through untouched so reduction is idempotent
    r = np.where((x > -np.pi) & (x <= np.pi), x, np.pi - np.mod(np.pi - x, 2.0 * np.pi))
    return float(r) if np.ndim(r) == 0 else r


def check_amplitude(value, name: str = "amplitude"):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and >= 0")
    return value


def output_intensities(E, E_L, theta) -> PortIntensities:
    """Cycle-averaged intensities at the two beamsplitter output ports.

    ``theta`` is the phase of the local oscillator relative to the test beam.
    A quarter-wave delay is picked up on each reflection, so the cross term
    appears as ``2 E E_L sin(theta)`` with opposite signs at the two ports.
    """
    E = np.asarray(E, dtype=float)
    E_L = np.asarray(E_L, dtype=float)
    pedestal = E * E + E_L * E_L
    cross = 2.0 * E * E_L * np.sin(theta)
    # clip guards the sub-ulp negatives that can appear when E == E_L, sin = +-1
    reflected = np.maximum(0.5 * (pedestal + cross), 0.0)
    transmitted = np.maximum(0.5 * (pedestal - cross), 0.0)
    if reflected.ndim == 0:
        return PortIntensities(float(reflected), float(transmitted))
    return PortIntensities(reflected, transmitted)


def homodyne_difference(E, E_L, theta):
    """Reflected minus transmitted intensity, ``2 E E_L sin(theta)``."""
    out = 2.0 * np.asarray(E, dtype=float) * np.asarray(E_L, dtype=float) * np.sin(theta)
    return float(out) if np.ndim(out) == 0 else out


def real_wave_oracle(E: float, E_L: float, theta: float, n_samples: int = 64) -> float:
    """Intensity difference from explicitly sampled real-valued waves.

    Independent of :func:`homodyne_difference`: the two output fields

        E_r(phi) = (-E sin(phi) + E_L cos(phi + theta)) / sqrt(2)
        E_t(phi) = ( E cos(phi) - E_L sin(phi + theta)) / sqrt(2)

    are evaluated at ``n_samples`` equally spaced points over one period and
    their squares averaged. The factor 2 undoes the 1/2 cycle average of a
    squared cosine, so the result is directly comparable to the closed form.
    """
    if n_samples < 8 or n_samples % 4:
        raise ValueError("n_samples must be >= 8 and a multiple of 4")
    phi = 2.0 * np.pi * np.arange(n_samples) / n_samples
    s = 1.0 / np.sqrt(2.0)
    e_r = s * (-E * np.sin(phi) + E_L * np.cos(phi + theta))
    e_t = s * (E * np.cos(phi) - E_L * np.sin(phi + theta))
    return float(2.0 * (np.mean(e_r * e_r) - np.mean(e_t * e_t)))
