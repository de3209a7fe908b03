"""Event-driven simulation of a delayed renewal process.

A path starts from a unit of age ``b``: the first epoch is the remaining life
``theta_1 ~ F_b`` and later gaps are i.i.d. ``F``. From the epochs we read the
backward time ``B_t`` (age), the forward time ``D_t`` (remaining life) and the
count ``R_t`` of epochs in ``[0, t]``. All three are piecewise linear in
``t``, so they are computed exactly from the epoch array.

Every path ``i`` draws its uniforms from its own stream derived from
``(seed, i)``, one uniform per epoch in order. :func:`generate_path` and the
vectorised :func:`simulate_recurrence` therefore agree bitwise.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from . import _rng
from .laws import LifetimeLaw, residual

__all__ = [
    "SimulationFault",
    "RenewalPath",
    "RecurrenceReadout",
    "RecurrenceSample",
    "MeanEstimate",
    "generate_path",
    "readout",
    "simulate_recurrence",
    "estimate_forward_mean",
    "write_path_csv",
    "write_readout_csv",
]

Z95 = 1.959963984540054
CHUNK = 2048


class SimulationFault(RuntimeError):
    """Two epochs coincided (a zero-length gap), which has probability zero."""


@dataclass(frozen=True)
class RenewalPath:
    """Epochs of one delayed renewal process up to ``horizon``.

    ``epochs`` is increasing and its last entry is the first epoch beyond
    ``horizon``, so forward times are defined everywhere on ``[0, horizon]``.
    """

    initial_age: float
    lifetime_law: LifetimeLaw
    epochs: np.ndarray
    horizon: float

    @property
    def delay_law(self):
        return residual(self.lifetime_law, self.initial_age)

    @property
    def gaps(self) -> np.ndarray:
        """Inter-renewal intervals ``zeta_2, zeta_3, ...`` (the delay excluded)."""
        return np.diff(self.epochs)


@dataclass(frozen=True)
class RecurrenceReadout:
    t: float
    backward: float
    forward: float
    count: int


@dataclass(frozen=True)
class RecurrenceSample:
    """``B_t``, ``D_t``, ``R_t`` for many paths; arrays of shape ``(n_paths, len(t))``."""

    t: np.ndarray
    backward: np.ndarray
    forward: np.ndarray
    count: np.ndarray


@dataclass(frozen=True)
class MeanEstimate:
    """Sample mean with its standard error and 95% half-width."""

    mean: float
    stderr: float
    n: int

    @property
    def ci(self) -> float:
        return Z95 * self.stderr


def _blocks(stream) -> Iterator[np.ndarray]:
    if isinstance(stream, np.random.Generator):
        while True:
            yield stream.random(64)
    else:
        it = iter(stream)
        while True:
            block = np.fromiter(itertools.islice(it, 64), dtype=float)
            if block.size == 0:
                return
            yield block


def generate_path(b: float, law: LifetimeLaw, horizon: float, stream) -> RenewalPath:
    """Grow epochs by inverse-CDF draws until the first epoch beyond ``horizon``.

    Parameters
    ----------
    b : float
        Initial age; requires ``F(b) < 1``.
    law : LifetimeLaw
        Inter-renewal law ``F``.
    horizon : float
        Positive time horizon.
    stream : numpy.random.Generator or iterable of float
        Source of uniforms, one per epoch. Uniforms are transformed in array
        blocks, the same way :func:`simulate_recurrence` does, so the two agree
        to the last bit.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    delay = residual(law, b)
    epochs: list[float] = []
    t = math.nan
    for block in _blocks(stream):
        if not epochs:
            first = float(np.asarray(delay.inverse_cdf(block[:1]))[0])
            gaps = np.asarray(law.inverse_cdf(block[1:]))
            t = first
            epochs.append(t)
            if t > horizon:
                break
        else:
            gaps = np.asarray(law.inverse_cdf(block))
        for gap in gaps:
            if gap <= 0.0:
                raise SimulationFault(f"zero-length gap after epoch {t}")
            t += float(gap)
            epochs.append(t)
            if t > horizon:
                break
        if t > horizon:
            break
    else:
        raise ValueError("uniform stream ran out before the horizon")
    return RenewalPath(float(b), law, np.asarray(epochs), float(horizon))


def _read(b, epochs, t):
    k = np.searchsorted(epochs, t, side="right")
    padded = np.concatenate([[np.nan], epochs])
    before = k == 0
    last = padded[k]
    backward = np.where(before, b + t, t - last)
    forward = epochs[np.minimum(k, len(epochs) - 1)] - t
    return backward, forward, k


def readout(path: RenewalPath, t: float) -> RecurrenceReadout:
    """``B_t``, ``D_t`` and ``R_t`` at time ``t`` in ``[0, horizon]``."""
    if not 0.0 <= t <= path.horizon:
        raise ValueError(f"t={t} outside [0, {path.horizon}]")
    backward, forward, k = _read(path.initial_age, path.epochs, float(t))
    return RecurrenceReadout(float(t), float(backward), float(forward), int(k))


def _initial_block(law, t_max):
    # expected epoch count plus four standard deviations (renewal CLT)
    mean = law.mean
    n = t_max / mean
    cv = math.sqrt(max(law.moment(2.0) / mean**2 - 1.0, 0.0))
    return int(n + 4.0 * cv * math.sqrt(n + 1.0) + 8)


def _simulate_chunk(law, delay, b, t, seed, first, count, block):
    gens = [_rng.stream(seed, _rng.PATHS, i) for i in range(first, first + count)]
    u = np.stack([g.random(block) for g in gens])
    epochs = np.cumsum(np.concatenate([delay.inverse_cdf(u[:, :1]), law.inverse_cdf(u[:, 1:])], axis=1), axis=1)
    t_max = t[-1] if t.size else 0.0
    short = np.flatnonzero(epochs[:, -1] <= t_max)
    while short.size:
        extra = np.stack([gens[i].random(block) for i in short])
        more = law.inverse_cdf(extra)
        grown = np.full((count, epochs.shape[1] + block), np.inf)
        grown[:, : epochs.shape[1]] = epochs
        # accumulate from the last epoch so sums match scalar left-to-right addition
        grown[short, epochs.shape[1]:] = np.cumsum(np.concatenate([epochs[short, -1:], more], axis=1), axis=1)[:, 1:]
        epochs = grown
        short = np.flatnonzero(epochs[:, -1] <= t_max)
    with np.errstate(invalid="ignore"):  # inf padding
        gaps = np.diff(epochs, axis=1)
    if np.any(gaps <= 0):
        raise SimulationFault("zero-length gap in a simulated path")
    k = np.sum(epochs[:, :, None] <= t[None, None, :], axis=1)
    padded = np.concatenate([np.full((count, 1), np.nan), epochs], axis=1)
    last = np.take_along_axis(padded, k, axis=1)
    nxt = np.take_along_axis(epochs, np.minimum(k, epochs.shape[1] - 1), axis=1)
    backward = np.where(k == 0, b + t[None, :], t[None, :] - last)
    return backward, nxt - t[None, :], k


def simulate_recurrence(law: LifetimeLaw, b: float, t, n_paths: int, seed: int) -> RecurrenceSample:
    """Read ``B_t``, ``D_t``, ``R_t`` at times ``t`` on ``n_paths`` independent paths.

    Path ``i`` uses the stream ``(seed, i)`` exactly as :func:`generate_path`
    would, so any single row can be replayed on its own.
    """
    t = np.sort(np.atleast_1d(np.asarray(t, dtype=float)))
    if np.any(t < 0):
        raise ValueError("query times must be nonnegative")
    delay = residual(law, b)
    block = _initial_block(law, float(t[-1]))
    out = [np.empty((n_paths, t.size)) for _ in range(2)] + [np.empty((n_paths, t.size), dtype=np.int64)]
    for first in range(0, n_paths, CHUNK):
        count = min(CHUNK, n_paths - first)
        parts = _simulate_chunk(law, delay, float(b), t, seed, first, count, block)
        for arr, part in zip(out, parts):
            arr[first:first + count] = part
    return RecurrenceSample(t, *out)


def estimate_forward_mean(law: LifetimeLaw, b: float, t: float, n_paths: int, seed: int) -> MeanEstimate:
    """Monte Carlo ``E D_t`` with its standard error."""
    if not t > 0:
        raise ValueError("t must be positive")
    d = simulate_recurrence(law, b, [t], n_paths, seed).forward[:, 0]
    return MeanEstimate(float(np.mean(d)), float(np.std(d, ddof=1) / math.sqrt(d.size)), d.size)


def write_path_csv(path: RenewalPath, fh) -> None:
    """Write ``index,epoch`` rows (index 1 is ``theta_1``)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "epoch"])
    for i, e in enumerate(path.epochs, start=1):
        w.writerow([i, repr(float(e))])


def write_readout_csv(path: RenewalPath, times: Iterable[float], fh) -> None:
    """Write ``t,B,D,R`` rows for the given query times."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "B", "D", "R"])
    for t in times:
        r = readout(path, t)
        w.writerow([repr(r.t), repr(r.backward), repr(r.forward), r.count])
