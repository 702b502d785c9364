"""Closed-form predictions of the binary-phase model and the estimators
applied to simulated coincidence data."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats as _st

from .optics import reduce_phase

__all__ = [
    "UndefinedAngle",
    "EmptyDenominator",
    "analytic_singles",
    "analytic_coincidence",
    "analytic_correlation",
    "TallyRow",
    "CoincidenceTally",
    "tally",
    "correlation_fair",
    "correlation_fair_error",
    "correlation_postselected",
    "correlation_postselected_error",
    "Estimator",
    "ChshResult",
    "chsh",
    "chsh_from_tally",
    "visibility",
    "Histogram",
    "diff_histogram",
    "arcsine_bin_probabilities",
    "arcsine_chisquare",
    "readiness_independence",
    "discriminator_outcomes_exact",
    "postselected_correlation_quadrature",
]

_ANGLE_TOL = 1e-12


class UndefinedAngle(ValueError):
    """Outcome probabilities are undefined at integer multiples of pi."""


class EmptyDenominator(ZeroDivisionError):
    pass


def _step(delta: float) -> float:
    d = reduce_phase(delta)
    if abs(d) < _ANGLE_TOL or abs(d - np.pi) < _ANGLE_TOL:
        raise UndefinedAngle(f"phase difference {delta!r} is a multiple of pi")
    return 1.0 if d > 0 else 0.0


def analytic_singles(theta: float, alpha: float) -> tuple[float, float]:
    """Noise-free ``(p_minus, p_plus)`` for one arm at LO phase ``theta``."""
    p_plus = _step(theta - alpha)
    return 1.0 - p_plus, p_plus


def analytic_coincidence(theta_a: float, theta_b: float) -> tuple[float, float, float, float]:
    """``(P++, P+-, P-+, P--)`` averaged over alpha in {0, pi} with equal weight."""
    out = np.zeros(4)
    for alpha in (0.0, np.pi):
        ma, pa = analytic_singles(theta_a, alpha)
        mb, pb = analytic_singles(theta_b, alpha)
        out += 0.5 * np.array([pa * pb, pa * mb, ma * pb, ma * mb])
    return tuple(float(x) for x in out)


def analytic_correlation(theta_a: float, theta_b: float) -> float:
    pp, pm, mp, mm = analytic_coincidence(theta_a, theta_b)
    return pp + mm - pm - mp


class TallyRow(NamedTuple):
    n_ready: int
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    n_trials: int = 0

    @property
    def n_observed(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm


@dataclass(frozen=True)
class CoincidenceTally:
    """Counts per setting pair, each a (2, 2) int array indexed [i_a, i_b].

    Outcome counts only include trials where both event-ready detectors
    fired and both arms produced an outcome.
    """

    n_trials: np.ndarray
    n_ready: np.ndarray
    n_pp: np.ndarray
    n_pm: np.ndarray
    n_mp: np.ndarray
    n_mm: np.ndarray

    def row(self, i: int, j: int) -> TallyRow:
        return TallyRow(
            int(self.n_ready[i, j]), int(self.n_pp[i, j]), int(self.n_pm[i, j]),
            int(self.n_mp[i, j]), int(self.n_mm[i, j]), int(self.n_trials[i, j]),
        )

    def __add__(self, other: "CoincidenceTally") -> "CoincidenceTally":
        return CoincidenceTally(*(getattr(self, f) + getattr(other, f) for f in self.__dataclass_fields__))


def tally(trials) -> CoincidenceTally:
    """Count a :class:`~homodyne_bell.experiment.TrialSet` by setting pair."""
    ia = np.asarray(trials.setting_a_index, dtype=np.intp)
    ib = np.asarray(trials.setting_b_index, dtype=np.intp)
    flat = 2 * ia + ib
    both = np.asarray(trials.ready_a) & np.asarray(trials.ready_b)
    oa = np.asarray(trials.outcome_a)
    ob = np.asarray(trials.outcome_b)

    def count(mask):
        return np.bincount(flat[mask], minlength=4).reshape(2, 2)

    return CoincidenceTally(
        n_trials=count(np.ones_like(both)),
        n_ready=count(both),
        n_pp=count(both & (oa == 1) & (ob == 1)),
        n_pm=count(both & (oa == 1) & (ob == -1)),
        n_mp=count(both & (oa == -1) & (ob == 1)),
        n_mm=count(both & (oa == -1) & (ob == -1)),
    )


def correlation_fair(row: TallyRow) -> float:
    """Outcome-product average over all event-ready pairs; missing outcomes count as 0."""
    if row.n_ready <= 0:
        raise EmptyDenominator("no event-ready pairs for this setting pair")
    return (row.n_pp + row.n_mm - row.n_pm - row.n_mp) / row.n_ready


def correlation_fair_error(row: TallyRow) -> float:
    # products take values in {-1, 0, 1}; with no nulls this is sqrt((1-E^2)/N)
    e = correlation_fair(row)
    var = max(row.n_observed / row.n_ready - e * e, 0.0)
    return float(np.sqrt(var / row.n_ready))


def correlation_postselected(row: TallyRow) -> float:
    """Outcome-product average over observed coincidences only."""
    n = row.n_observed
    if n <= 0:
        raise EmptyDenominator("no observed coincidences for this setting pair")
    return (row.n_pp + row.n_mm - row.n_pm - row.n_mp) / n


def correlation_postselected_error(row: TallyRow) -> float:
    e = correlation_postselected(row)
    return float(np.sqrt(max(1.0 - e * e, 0.0) / row.n_observed))


class Estimator(str, enum.Enum):
    FAIR = "fair"
    POSTSELECTED = "postselected"


_PAIR_NAMES = {"ab": (0, 0), "ab'": (0, 1), "a'b": (1, 0), "a'b'": (1, 1)}


def _minus_index(minus) -> tuple[int, int]:
    if isinstance(minus, str):
        try:
            return _PAIR_NAMES[minus]
        except KeyError:
            raise ValueError(f"unknown setting pair {minus!r}; use one of {sorted(_PAIR_NAMES)}") from None
    i, j = (int(k) for k in minus)
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError("setting pair indices in {0,1}")
    return i, j


def _signs(minus) -> np.ndarray:
    signs = np.ones((2, 2))
    signs[_minus_index(minus)] = -1.0
    return signs


def chsh(e_ab: float, e_abp: float, e_apb: float, e_apbp: float, minus="ab'") -> float:
    """CHSH combination; by default ``E(a,b) - E(a,b') + E(a',b) + E(a',b')``."""
    e = np.array([[e_ab, e_abp], [e_apb, e_apbp]], dtype=float)
    if np.any(np.abs(e) > 1.0):
        raise ValueError("correlations must lie in [-1, 1]")
    return float(np.sum(_signs(minus) * e))


@dataclass(frozen=True)
class ChshResult:
    e_values: np.ndarray  # (2, 2), [i_a, i_b]
    e_errors: np.ndarray
    s: float
    s_error: float
    estimator: Estimator
    minus: tuple[int, int] = (0, 1)


def chsh_from_tally(t: CoincidenceTally, estimator=Estimator.FAIR, minus="ab'") -> ChshResult:
    """CHSH value with binomial errors on each E added in quadrature."""
    estimator = Estimator(estimator)
    if estimator is Estimator.FAIR:
        corr, err = correlation_fair, correlation_fair_error
    else:
        corr, err = correlation_postselected, correlation_postselected_error
    e = np.empty((2, 2))
    de = np.empty((2, 2))
    for i in (0, 1):
        for j in (0, 1):
            row = t.row(i, j)
            e[i, j] = corr(row)
            de[i, j] = err(row)
    s = chsh(e[0, 0], e[0, 1], e[1, 0], e[1, 1], minus=minus)
    return ChshResult(e, de, s, float(np.sqrt(np.sum(de**2))), estimator, _minus_index(minus))


def visibility(rates) -> float:
    """``(max - min) / (max + min)`` of a coincidence-rate curve.

    ``rates`` is either a 1-d sequence of rates or (x, rate) pairs.
    """
    r = np.asarray(rates, dtype=float)
    if r.ndim == 2:
        r = r[:, 1]
    hi, lo = float(np.max(r)), float(np.min(r))
    if hi + lo <= 0:
        raise ValueError("degenerate curve: max + min = 0")
    return (hi - lo) / (hi + lo)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    x_max: float
    # fraction of samples with |x| > x_max / 2
    tail_fraction: float


def diff_histogram(values, n_bins: int, range: tuple[float, float] | None = None) -> Histogram:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty input")
    if n_bins < 2:
        raise ValueError("n_bins >= 2")
    lo, hi = range if range is not None else (float(x.min()), float(x.max()))
    if hi == lo:
        # all samples equal: a single occupied bin, others empty
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    x_max = float(np.max(np.abs(x)))
    tail = float(np.mean(np.abs(x) > 0.5 * x_max))
    return Histogram(edges, counts, int(counts.sum()), x_max, tail)


def arcsine_bin_probabilities(edges, amplitude: float) -> np.ndarray:
    """Probability of each bin under ``amplitude * sin(theta)``, theta uniform."""
    e = np.clip(np.asarray(edges, dtype=float) / amplitude, -1.0, 1.0)
    cdf = 0.5 + np.arcsin(e) / np.pi
    return np.diff(cdf)


def arcsine_chisquare(hist: Histogram, amplitude: float, min_expected: float = 5.0):
    """Pearson chi-square of a histogram against the arcsine law.

    Expected counts are renormalised to the histogram total (the bins need
    not cover the full support) and bins with fewer than ``min_expected``
    expected counts are merged into their neighbour. Returns
    ``scipy.stats.chisquare``'s result.
    """
    p = arcsine_bin_probabilities(hist.edges, amplitude)
    expected = hist.total * p / p.sum()
    obs, exp = _merge_small(hist.counts.astype(float), expected, min_expected)
    return _st.chisquare(obs, exp)


def _merge_small(obs, exp, floor):
    o_out, e_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= floor:
            o_out.append(o_acc)
            e_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 and e_out:
        o_out[-1] += o_acc
        e_out[-1] += e_acc
    return np.array(o_out), np.array(e_out)


def readiness_independence(trials):
    """Chi-square test that (ready_a, ready_b) is independent of the setting pair.

    Returns ``scipy.stats.chi2_contingency``'s result for the 4 x 4 table
    (setting pair x readiness pattern); empty rows/columns are dropped.
    """
    pair = 2 * np.asarray(trials.setting_a_index, dtype=np.intp) + np.asarray(trials.setting_b_index)
    pattern = 2 * np.asarray(trials.ready_a, dtype=np.intp) + np.asarray(trials.ready_b)
    table = np.zeros((4, 4), dtype=np.int64)
    np.add.at(table, (pair, pattern), 1)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    return _st.chi2_contingency(table)


def discriminator_outcomes_exact(x, E: float, E_L: float, gain: float, threshold: float) -> np.ndarray:
    """Noise-free discriminator outcome as a function of ``x = sin(theta)``.

    The port voltages are ``gain * (P +/- D x)`` with pedestal
    ``P = (E^2 + E_L^2) / 2`` and ``D = E E_L``; solving the firing
    conditions for ``x`` gives PLUS iff ``x >= c`` and ``x > -c``, MINUS iff
    ``x <= -c`` and ``x < c``, with ``c = (threshold/gain - P) / D``.
    """
    x = np.asarray(x, dtype=float)
    c = (threshold / gain - 0.5 * (E * E + E_L * E_L)) / (E * E_L)
    plus = (x >= c) & (x > -c)
    minus = (x <= -c) & (x < c)
    return plus.astype(np.int8) - minus.astype(np.int8)


def postselected_correlation_quadrature(
    theta_a: float,
    theta_b: float,
    E: float,
    E_L: tuple[float, float] | float,
    gain: tuple[float, float] | float,
    threshold: tuple[float, float] | float,
    n_points: int = 10_000,
) -> tuple[float, float]:
    """Post-selected E and the coincidence probability, by midpoint
    quadrature over a uniformly distributed hidden phase.

    Independent of the simulator: no random numbers, no voltages, only the
    solved threshold conditions of :func:`discriminator_outcomes_exact`.
    """
    el = np.broadcast_to(np.asarray(E_L, dtype=float), (2,))
    g = np.broadcast_to(np.asarray(gain, dtype=float), (2,))
    t = np.broadcast_to(np.asarray(threshold, dtype=float), (2,))
    alpha = 2.0 * np.pi * (np.arange(n_points) + 0.5) / n_points
    oa = discriminator_outcomes_exact(np.sin(theta_a - alpha), E, el[0], g[0], t[0]).astype(float)
    ob = discriminator_outcomes_exact(np.sin(theta_b - alpha), E, el[1], g[1], t[1]).astype(float)
    prod = oa * ob
    p_coinc = float(np.mean(np.abs(prod)))
    if p_coinc == 0:
        raise EmptyDenominator("no coincidences at this threshold")
    return float(np.mean(prod)) / p_coinc, p_coinc
