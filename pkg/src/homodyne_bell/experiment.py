"""End-to-end trials: pair -> tap -> event-ready -> homodyne -> outcome.

A run is computed in vectorised chunks straight from the per-trial streams
of :mod:`homodyne_bell.streams`, so ``run_trial`` on trial ``i``'s own stream
reproduces row ``i`` of ``run_experiment`` exactly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple

import numpy as np

from .detector import DetectorConfig, HomodyneReading, Outcome, digitize_with_coin, discriminate, voltages
from .optics import output_intensities, reduce_phase
from .source import PairEvent, SourceConfig, draw_pairs, ready_from_uniform, tap_split
from .streams import CHOICE, N_SLOTS, NOISE, PD, TIE, _check_seed, to_normal, trial_uniforms

__all__ = [
    "ChannelSetting",
    "Selection",
    "SettingsSchedule",
    "ExperimentConfig",
    "TrialRecord",
    "TrialSet",
    "ScanResult",
    "effective_phase",
    "run_trial",
    "run_experiment",
    "scan_phase",
]

CHUNK = 1 << 16


@dataclass(frozen=True)
class ChannelSetting:
    theta_set: float
    path_delay: float = 0.0
    lo_amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta_set", reduce_phase(self.theta_set))
        if not np.isfinite(self.path_delay):
            raise ValueError("path_delay must be finite")
        if not (np.isfinite(self.lo_amplitude) and self.lo_amplitude > 0):
            raise ValueError("lo_amplitude > 0")


class Selection(str, enum.Enum):
    RANDOM = "random"
    FIXED = "fixed"
    SCAN = "scan"


@dataclass(frozen=True)
class SettingsSchedule:
    """The four CHSH settings and how they are assigned to trials.

    Index 0 on a side is the unprimed setting, index 1 the primed one. In
    ``scan`` mode the pair ``fixed_pair`` is used throughout and the
    ``scan_channel`` phase is swept linearly from ``scan_start`` to
    ``scan_end`` across the trials of the run. ``drift_rate_a``/``_b`` add
    ``rate * trial_id`` to every path delay on that side (slow thermal drift).
    """

    a: ChannelSetting
    a_prime: ChannelSetting
    b: ChannelSetting
    b_prime: ChannelSetting
    selection: Selection = Selection.RANDOM
    fixed_pair: tuple[int, int] = (0, 0)
    scan_channel: str = "A"
    scan_start: float = 0.0
    scan_end: float = 2.0 * np.pi
    drift_rate_a: float = 0.0
    drift_rate_b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "selection", Selection(self.selection))
        pair = tuple(int(i) for i in self.fixed_pair)
        if len(pair) != 2 or any(i not in (0, 1) for i in pair):
            raise ValueError("fixed_pair entries in {0,1}")
        object.__setattr__(self, "fixed_pair", pair)
        channel = str(self.scan_channel).upper()
        if channel not in ("A", "B"):
            raise ValueError("scan_channel in {A,B}")
        object.__setattr__(self, "scan_channel", channel)

    def side(self, channel: str) -> tuple[ChannelSetting, ChannelSetting]:
        return (self.a, self.a_prime) if channel == "A" else (self.b, self.b_prime)


@dataclass(frozen=True)
class ExperimentConfig:
    settings: SettingsSchedule
    source: SourceConfig = field(default_factory=SourceConfig)
    detector_a: DetectorConfig = field(default_factory=DetectorConfig)
    detector_b: DetectorConfig = field(default_factory=DetectorConfig)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    setting_a_index: int
    setting_b_index: int
    ready_a: bool
    ready_b: bool
    reading_a: HomodyneReading
    reading_b: HomodyneReading
    outcome_a: Outcome
    outcome_b: Outcome
    # diagnostics only; estimators never look at these
    alpha: float
    omega: float


_COLUMNS = (
    "trial_id", "setting_a_index", "setting_b_index", "theta_a", "theta_b",
    "ready_a", "ready_b", "v_r_a", "v_t_a", "v_r_b", "v_t_b",
    "outcome_a", "outcome_b", "alpha", "omega", "amplitude",
)


@dataclass(frozen=True, eq=False)
class TrialSet:
    """Columnar record of a run. ``theta_a``/``theta_b`` are the applied
    (nominal) phase settings, which only vary per trial in scan mode."""

    columns: dict
    config: ExperimentConfig
    seed: int

    def __len__(self) -> int:
        return len(self.columns["trial_id"])

    def __getattr__(self, name):
        try:
            return self.__dict__["columns"][name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def v_diff_a(self) -> np.ndarray:
        return self.columns["v_r_a"] - self.columns["v_t_a"]

    @property
    def v_diff_b(self) -> np.ndarray:
        return self.columns["v_r_b"] - self.columns["v_t_b"]

    def record(self, i: int) -> TrialRecord:
        c = self.columns
        return TrialRecord(
            trial_id=int(c["trial_id"][i]),
            setting_a_index=int(c["setting_a_index"][i]),
            setting_b_index=int(c["setting_b_index"][i]),
            ready_a=bool(c["ready_a"][i]),
            ready_b=bool(c["ready_b"][i]),
            reading_a=HomodyneReading(float(c["v_r_a"][i]), float(c["v_t_a"][i])),
            reading_b=HomodyneReading(float(c["v_r_b"][i]), float(c["v_t_b"][i])),
            outcome_a=Outcome(int(c["outcome_a"][i])),
            outcome_b=Outcome(int(c["outcome_b"][i])),
            alpha=float(c["alpha"][i]),
            omega=float(c["omega"][i]),
        )

    def __iter__(self) -> Iterator[TrialRecord]:
        return (self.record(i) for i in range(len(self)))

    def equals(self, other: "TrialSet") -> bool:
        return self.seed == other.seed and all(
            np.array_equal(self.columns[k], other.columns[k]) for k in _COLUMNS
        )


def effective_phase(setting: ChannelSetting, pair: PairEvent) -> float:
    """Phase of the LO relative to the test pulse at the homodyne beamsplitter."""
    return reduce_phase(setting.theta_set + pair.omega * setting.path_delay - pair.alpha)


def _arm(theta_set, path_delay, lo_amp, alpha, omega, main_amp, det: DetectorConfig, z_r, z_t, coin):
    theta = reduce_phase(theta_set + omega * path_delay - alpha)
    reading = voltages(output_intensities(main_amp, lo_amp, theta), det, z_r, z_t)
    if det.discriminator_threshold is None:
        outcome = digitize_with_coin(reading.v_diff, coin)
    else:
        outcome = discriminate(reading, det)
    return reading, outcome


def _side_arrays(settings: tuple[ChannelSetting, ChannelSetting], index, drift_rate, trial_id):
    theta = np.where(index == 0, settings[0].theta_set, settings[1].theta_set)
    delay = np.where(index == 0, settings[0].path_delay, settings[1].path_delay) + drift_rate * trial_id
    lo = np.where(index == 0, settings[0].lo_amplitude, settings[1].lo_amplitude)
    return theta, delay, lo


def _simulate(cfg: ExperimentConfig, u: np.ndarray, trial_id: np.ndarray, n_total: int, forced=None):
    sched = cfg.settings
    n = len(u)
    alpha, omega, amplitude = draw_pairs(cfg.source, u)
    tap = tap_split(amplitude, cfg.source.tap_reflectance)

    if forced is not None:
        idx = (np.full(n, forced[0], dtype=np.int8), np.full(n, forced[1], dtype=np.int8))
    elif sched.selection is Selection.RANDOM:
        idx = tuple((u[:, CHOICE[k]] >= 0.5).astype(np.int8) for k in (0, 1))
    else:
        idx = tuple(np.full(n, sched.fixed_pair[k], dtype=np.int8) for k in (0, 1))

    cols = {"trial_id": trial_id, "setting_a_index": idx[0], "setting_b_index": idx[1]}
    for k, (name, det, drift) in enumerate(
        (("a", cfg.detector_a, sched.drift_rate_a), ("b", cfg.detector_b, sched.drift_rate_b))
    ):
        channel = name.upper()
        theta, delay, lo = _side_arrays(sched.side(channel), idx[k], drift, trial_id)
        if sched.selection is Selection.SCAN and forced is None and channel == sched.scan_channel:
            theta = _scan_grid(sched, n_total)[trial_id]
        ready = ready_from_uniform(tap.tapped_intensity, cfg.source, u[:, PD[k]])
        z_r, z_t = to_normal(u[:, NOISE[k][0]]), to_normal(u[:, NOISE[k][1]])
        reading, outcome = _arm(theta, delay, lo, alpha, omega, tap.main_amplitude, det, z_r, z_t, u[:, TIE[k]])
        cols[f"theta_{name}"] = np.asarray(theta, dtype=float)
        cols[f"ready_{name}"] = ready
        cols[f"v_r_{name}"] = reading.v_reflected
        cols[f"v_t_{name}"] = reading.v_transmitted
        cols[f"outcome_{name}"] = outcome
    cols["alpha"] = alpha
    cols["omega"] = omega
    cols["amplitude"] = amplitude
    return cols


def _scan_grid(sched: SettingsSchedule, n: int) -> np.ndarray:
    # unreduced on purpose: a scan over several periods keeps its abscissa
    return np.linspace(sched.scan_start, sched.scan_end, n)


def run_trial(cfg: ExperimentConfig, setting_indices: tuple[int, int], rng: np.random.Generator, trial_id: int = 0) -> TrialRecord:
    """One trial at the given (A, B) setting indices, drawing one 16-slot row from ``rng``.

    Pass ``streams.trial_generator(seed, i)`` to replay trial ``i`` of a run.
    """
    u = rng.random((1, N_SLOTS))
    ts = np.array([trial_id], dtype=np.int64)
    cols = _simulate(cfg, u, ts, 1, forced=tuple(setting_indices))
    return TrialSet(cols, cfg, 0).record(0)


def run_experiment(cfg: ExperimentConfig, n_trials: int, seed: int) -> TrialSet:
    """Run ``n_trials`` independent trials; identical inputs give identical output."""
    if n_trials < 1:
        raise ValueError("n_trials >= 1")
    seed = _check_seed(seed)
    if cfg.settings.selection is Selection.SCAN and n_trials < 2:
        raise ValueError("scan mode needs n_trials >= 2")
    parts = []
    for start in range(0, n_trials, CHUNK):
        count = min(CHUNK, n_trials - start)
        u = trial_uniforms(seed, start, count)
        parts.append(_simulate(cfg, u, np.arange(start, start + count, dtype=np.int64), n_trials))
    cols = {k: np.concatenate([p[k] for p in parts]) for k in _COLUMNS}
    return TrialSet(cols, cfg, seed)


class ScanResult(NamedTuple):
    theta: np.ndarray
    v_diff: np.ndarray
    alpha: np.ndarray


def scan_phase(cfg: ExperimentConfig, channel: str, start: float, end: float, n_steps: int, seed: int) -> ScanResult:
    """Sweep one channel's LO phase linearly, one fresh pulse per step."""
    if n_steps < 2:
        raise ValueError("n_steps >= 2")
    settings = replace(
        cfg.settings, selection=Selection.SCAN, scan_channel=channel, scan_start=start, scan_end=end
    )
    ts = run_experiment(replace(cfg, settings=settings), n_steps, seed)
    name = settings.scan_channel.lower()
    return ScanResult(ts.columns[f"theta_{name}"], getattr(ts, f"v_diff_{name}"), ts.alpha)
