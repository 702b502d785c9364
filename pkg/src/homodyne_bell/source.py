"""Down-converted pulse pairs, tap splitting and event-ready detection."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .optics import check_amplitude, reduce_phase
from .streams import ALPHA, AMPLITUDE, N_SLOTS, OMEGA, _HALF_ULP

__all__ = [
    "AlphaMode",
    "AmplitudeMode",
    "SourceConfig",
    "PairEvent",
    "TapResult",
    "draw_pairs",
    "generate_pair",
    "tap_split",
    "event_ready",
]


class AlphaMode(str, enum.Enum):
    BINARY = "binary"
    UNIFORM = "uniform"
    FIXED = "fixed"


class AmplitudeMode(str, enum.Enum):
    RAYLEIGH = "rayleigh"
    FIXED = "fixed"


@dataclass(frozen=True)
class SourceConfig:
    """OPA source and event-ready tap parameters.

    ``alpha_fixed`` is only consulted when ``alpha_mode`` is ``fixed``.
    ``amplitude_mode="fixed"`` pins every pulse amplitude to
    ``amplitude_scale`` instead of drawing it from a Rayleigh law.
    """

    omega0: float = 1.0
    sigma_omega: float = 0.0
    amplitude_scale: float = 1.0
    amplitude_mode: AmplitudeMode = AmplitudeMode.RAYLEIGH
    alpha_mode: AlphaMode = AlphaMode.BINARY
    alpha_fixed: float = 0.0
    tap_reflectance: float = 0.1
    pd_threshold: float = 0.0
    pd_efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha_mode", AlphaMode(self.alpha_mode))
        object.__setattr__(self, "amplitude_mode", AmplitudeMode(self.amplitude_mode))
        object.__setattr__(self, "alpha_fixed", reduce_phase(self.alpha_fixed))
        if not (np.isfinite(self.omega0) and self.omega0 > 0):
            raise ValueError("omega0 > 0")
        if not (np.isfinite(self.sigma_omega) and self.sigma_omega >= 0):
            raise ValueError("sigma_omega >= 0")
        if not (np.isfinite(self.amplitude_scale) and self.amplitude_scale > 0):
            raise ValueError("amplitude_scale > 0")
        if not 0.0 < self.tap_reflectance < 1.0:
            raise ValueError("tap_reflectance in (0,1)")
        if not (np.isfinite(self.pd_threshold) and self.pd_threshold >= 0):
            raise ValueError("pd_threshold >= 0")
        if not 0.0 <= self.pd_efficiency <= 1.0:
            raise ValueError("pd_efficiency in [0,1]")


@dataclass(frozen=True)
class PairEvent:
    """One pulse pair. Both arms share ``alpha`` and ``omega`` by construction,
    and carry the same amplitude."""

    alpha: float
    omega: float
    amplitude: float

    @property
    def amp_a(self) -> float:
        return self.amplitude

    @property
    def amp_b(self) -> float:
        return self.amplitude


@dataclass(frozen=True)
class TapResult:
    tapped_intensity: float
    main_amplitude: float


def draw_pairs(cfg: SourceConfig, u: np.ndarray):
    """Vectorised pair generation from trial rows ``u`` (shape (n, 16)).

    Returns ``(alpha, omega, amplitude)`` arrays.
    """
    u_alpha = u[:, ALPHA]
    if cfg.alpha_mode is AlphaMode.BINARY:
        alpha = np.where(u_alpha < 0.5, 0.0, np.pi)
    elif cfg.alpha_mode is AlphaMode.UNIFORM:
        alpha = reduce_phase(2.0 * np.pi * u_alpha)
    else:
        alpha = np.full(len(u), cfg.alpha_fixed)

    if cfg.sigma_omega == 0:
        omega = np.full(len(u), float(cfg.omega0))
    else:
        # inverse CDF of Normal(omega0, sigma) truncated to omega > 0
        lo = ndtr(-cfg.omega0 / cfg.sigma_omega)
        q = lo + (u[:, OMEGA] + _HALF_ULP) * (1.0 - lo)
        omega = cfg.omega0 + cfg.sigma_omega * ndtri(q)
        omega = np.maximum(omega, np.finfo(float).tiny)

    if cfg.amplitude_mode is AmplitudeMode.FIXED:
        amplitude = np.full(len(u), float(cfg.amplitude_scale))
    else:
        amplitude = cfg.amplitude_scale * np.sqrt(-2.0 * np.log1p(-u[:, AMPLITUDE]))
    return alpha, omega, amplitude


def generate_pair(cfg: SourceConfig, rng: np.random.Generator) -> PairEvent:
    """Draw a single pair from ``rng`` (consumes one 16-slot trial row)."""
    alpha, omega, amplitude = draw_pairs(cfg, rng.random((1, N_SLOTS)))
    return PairEvent(float(alpha[0]), float(omega[0]), float(amplitude[0]))


def tap_split(amp, r: float):
    """Split a field at the unbalanced tap; returns (tapped intensity, main amplitude)."""
    if not 0.0 < r < 1.0:
        raise ValueError("tap_reflectance in (0,1)")
    check_amplitude(amp)
    amp_arr = np.asarray(amp, dtype=float)
    tapped = r * amp_arr * amp_arr
    main = amp_arr * np.sqrt(1.0 - r)
    if np.ndim(amp) == 0:
        return TapResult(float(tapped), float(main))
    return TapResult(tapped, main)


def ready_from_uniform(tapped_intensity, cfg: SourceConfig, u):
    return (np.asarray(tapped_intensity) >= cfg.pd_threshold) & (np.asarray(u) < cfg.pd_efficiency)


def event_ready(tapped_intensity, cfg: SourceConfig, rng: np.random.Generator):
    """Threshold test on the tapped intensity plus an efficiency coin."""
    u = rng.random(np.shape(tapped_intensity))
    ready = ready_from_uniform(tapped_intensity, cfg, u)
    return bool(ready) if np.ndim(ready) == 0 else ready

