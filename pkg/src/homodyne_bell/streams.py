"""Counter-addressed random streams, one per trial.

Trial ``i`` of a run seeded with ``seed`` owns the Philox stream keyed by
``seed`` and started at block counter ``4 * i``. Each Philox block yields four
64-bit words, so a trial's 16 uniforms occupy exactly four blocks and a batch
draw of ``n`` rows is bit-identical to drawing every trial on its own. Any
split of a run into chunks, in any order or in parallel, reproduces the
sequential result.

Slot layout of a trial row (one uniform each):

    0 alpha          5 noise A reflected    9  tie coin A     13-15 reserved
    1 omega          6 noise A transmitted  10 tie coin B
    2 amplitude      7 noise B reflected    11 setting choice A
    3 PD_A Bernoulli 8 noise B transmitted  12 setting choice B
    4 PD_B Bernoulli
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

N_SLOTS = 16
_BLOCKS_PER_TRIAL = N_SLOTS // 4

ALPHA, OMEGA, AMPLITUDE = 0, 1, 2
PD = (3, 4)
NOISE = ((5, 6), (7, 8))
TIE = (9, 10)
CHOICE = (11, 12)

# half an ulp of the 53-bit uniform grid; keeps inverse-CDF inputs off 0
_HALF_ULP = 2.0 ** -54

MAX_SEED = 2**64 - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def trial_generator(seed: int, trial_id: int) -> np.random.Generator:
    """Generator positioned at the start of one trial's stream."""
    bitgen = np.random.Philox(key=_check_seed(seed), counter=_BLOCKS_PER_TRIAL * int(trial_id))
    return np.random.Generator(bitgen)


def trial_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform rows for trials ``start .. start+count-1``, shape (count, 16)."""
    return trial_generator(seed, start).random((count, N_SLOTS))


def to_normal(u):
    """Standard normal deviates by inversion of slot uniforms."""
    return ndtri(np.asarray(u) + _HALF_ULP)
