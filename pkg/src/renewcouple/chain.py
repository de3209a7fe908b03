"""Successful coupling of two backward renewal processes.

Two renewal processes with common lifetime law ``F`` start from ages ``b1``
and ``b2``. They run independently until both have renewed at least once.
From then on every renewal epoch ``T`` of either process is examined; the
process renewing at ``T`` is the *leader* and the other one, with forward time
``D``, is *lagging*. The leader's next interval ``zeta`` is drawn from ``F``.

If ``D <= R`` and ``zeta > D`` (the window), the leader is still alive when
the lagging process renews at ``T + D``, with age ``beta = D``. Its remaining
life then has law ``F_beta`` exactly, so ``zeta`` is discarded and the two
next intervals are drawn jointly from the coupled pair of ``(F_beta, F)``
(three uniforms). With probability ``kappa(F_beta, F)`` they coincide and both
processes renew together at ``tau``; afterwards they share every epoch.
Otherwise the leader keeps ``zeta`` and we move to the next epoch.

Each process still has i.i.d. ``F`` gaps, so each marginal is an ordinary
delayed renewal process.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .laws import LifetimeLaw, UnsupportedAgeError, residual, stationary_backward
from .lemma import decompose, sample_coupled
from .renewal import RenewalPath, _read

__all__ = [
    "CouplingConfigError",
    "CouplingConfig",
    "Attempt",
    "CouplingRun",
    "TauSample",
    "run_coupling",
    "sample_tau",
]

MAX_ATTEMPTS = 10_000
WINDOW_KNOTS = 512


class CouplingConfigError(ValueError):
    """Invalid threshold, ages or attempt budget."""


@dataclass(frozen=True)
class CouplingConfig:
    """Inputs of one coupling experiment.

    ``R=None`` asks :func:`renewcouple.bounds.optimize_R` for a threshold
    (with ``alpha``) when the config is built through :meth:`resolved`.
    """

    law: LifetimeLaw
    b1: float
    b2: float
    R: float | None = None
    max_attempts: int = MAX_ATTEMPTS
    seed: int = 0
    alpha: float = 1.0
    window_knots: int = WINDOW_KNOTS

    def resolved(self) -> "CouplingConfig":
        """Validated copy with ``R`` filled in."""
        from .bounds import check_R, lorden_theta, optimize_R

        for b in (self.b1, self.b2):
            try:
                residual(self.law, b)
            except UnsupportedAgeError as exc:
                raise CouplingConfigError(str(exc)) from None
        if not self.max_attempts >= 1:
            raise CouplingConfigError("max_attempts must be positive")
        R = self.R
        if R is None:
            R, _ = optimize_R(self.law, self.alpha, self.b1)
        try:
            check_R(self.law, R, lorden_theta(self.law))
        except ValueError as exc:
            raise CouplingConfigError(str(exc)) from None
        return CouplingConfig(self.law, float(self.b1), float(self.b2), float(R), int(self.max_attempts),
                              int(self.seed), self.alpha, self.window_knots)


@dataclass(frozen=True)
class Attempt:
    """One examined renewal epoch.

    ``beta``, ``kappa`` and ``coupled`` are ``None`` when the window did not
    open (no lemma draw happened).
    """

    leader: int
    epoch: float
    D: float
    zeta: float
    window: bool
    coupled: bool | None = None
    beta: float | None = None
    kappa: float | None = None


@dataclass
class CouplingRun:
    """Outcome of one run.

    ``epochs[j]`` lists process ``j``'s renewal epochs (``theta_1`` first);
    after ``tau`` both lists continue with the same values.
    """

    b: tuple[float, float]
    tau: float
    coupled: bool
    attempts: int
    attempt_log: list[Attempt]
    epochs: tuple[list[float], list[float]]
    law: LifetimeLaw = field(repr=False)

    def path(self, j: int, horizon: float | None = None) -> RenewalPath:
        """Process ``j`` (0 or 1) as a :class:`RenewalPath`."""
        ep = np.asarray(self.epochs[j])
        if horizon is None:
            horizon = float(np.nextafter(ep[-1], -np.inf))
        return RenewalPath(self.b[j], self.law, ep, float(horizon))

    def backward(self, t) -> np.ndarray:
        """``B_t`` of both processes at times ``t``; shape ``(len(t), 2)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([_read(self.b[j], np.asarray(self.epochs[j]), t)[0] for j in (0, 1)], axis=1)

    def merged_suffix_identical(self) -> bool:
        """Both epoch lists agree bitwise from ``tau`` on."""
        if not self.coupled:
            return False
        tails = []
        for ep in self.epochs:
            a = np.asarray(ep)
            k = int(np.searchsorted(a, self.tau, side="left"))
            if k == a.size or a[k] != self.tau:
                return False
            tails.append(a[k:])
        return tails[0].shape == tails[1].shape and bool(np.all(tails[0] == tails[1]))


def run_coupling(cfg: CouplingConfig, run: int = 0, horizon: float | None = None,
                 streams=None, keep_log: bool = True) -> CouplingRun:
    """Simulate the coupled pair until the processes renew together.

    Parameters
    ----------
    cfg : CouplingConfig
        Must have ``R`` set (see :meth:`CouplingConfig.resolved`).
    run : int
        Run index; the three streams come from ``(cfg.seed, run)``.
    horizon : float, optional
        Extend the epoch lists (shared after coupling) beyond this time.
    streams : tuple of numpy.random.Generator, optional
        Override the ``(process 1, process 2, lemma)`` streams.
    keep_log : bool
        Record every attempt; turn off for large batches.
    """
    if cfg.R is None:
        raise CouplingConfigError("R is unset; call cfg.resolved() first")
    law, R = cfg.law, cfg.R
    g = list(_rng.run_streams(cfg.seed, run) if streams is None else streams)
    delay = (residual(law, cfg.b1), residual(law, cfg.b2))
    ep = ([float(delay[0].inverse_cdf(g[0].random()))], [float(delay[1].inverse_cdf(g[1].random()))])
    log: list[Attempt] = []
    attempts = 0
    tau = math.nan

    def grow(j):
        gap = float(law.inverse_cdf(g[j].random()))
        ep[j].append(ep[j][-1] + gap)

    # independent growth until both have renewed at or after T1
    T1 = max(ep[0][-1], ep[1][-1])
    lag = 0 if ep[0][-1] < T1 else 1
    while ep[lag][-1] < T1:
        grow(lag)
    coupled = ep[0][-1] == ep[1][-1]
    while not coupled and attempts < cfg.max_attempts:
        leader = 0 if ep[0][-1] < ep[1][-1] else 1
        lag = 1 - leader
        T = ep[leader][-1]
        s = ep[lag][-1]
        D = s - T
        zeta = float(law.inverse_cdf(g[leader].random()))
        attempts += 1
        if D <= R and zeta > D:
            dec = decompose(residual(law, D), law, n_knots=cfg.window_knots)
            u = g[2].random(3)
            pair = sample_coupled(dec, u[0], u[1], u[2])
            ep[leader].append(s + pair.value1)
            ep[lag].append(s + pair.value2)
            if keep_log:
                log.append(Attempt(leader, T, D, zeta, True, pair.coupled, D, dec.kappa))
        else:
            ep[leader].append(T + zeta)
            if keep_log:
                log.append(Attempt(leader, T, D, zeta, False))
        coupled = ep[0][-1] == ep[1][-1]
    if coupled:
        tau = ep[0][-1]
        if horizon is not None:
            while ep[0][-1] <= horizon:
                gap = float(law.inverse_cdf(g[0].random()))
                nxt = ep[0][-1] + gap
                ep[0].append(nxt)
                ep[1].append(nxt)
    elif horizon is not None:
        for j in (0, 1):
            while ep[j][-1] <= horizon:
                grow(j)
    return CouplingRun((cfg.b1, cfg.b2), tau, coupled, attempts, log, ep, law)


@dataclass(frozen=True)
class TauSample:
    """``n_runs`` coupling times (``nan`` where the attempt budget ran out).

    ``backward`` holds ``B_t`` of both processes at ``t`` when requested,
    shape ``(n_runs, len(t), 2)``.
    """

    tau: np.ndarray
    attempts: np.ndarray
    coupled: np.ndarray
    b2: np.ndarray
    windows: np.ndarray
    identical_after_tau: np.ndarray
    t: np.ndarray | None = None
    backward: np.ndarray | None = None
    runs: list | None = None

    @property
    def n_failed(self) -> int:
        return int(np.sum(~self.coupled))

    def survival(self, t) -> np.ndarray:
        """Empirical ``P{tau > t}``; uncoupled runs count as ``tau = inf``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tau = np.where(self.coupled, self.tau, np.inf)
        return np.mean(tau[:, None] > t[None, :], axis=0)


def _stationary_ages(law, seed, n):
    u = _rng.stream(seed, _rng.STATIONARY_AGES).random(n)
    return np.asarray(stationary_backward(law).inverse_cdf(u), dtype=float).reshape(n)


def sample_tau(cfg: CouplingConfig, n_runs: int, stationary_b2: bool = False, t=None,
               threads: int = 1, keep_runs: bool = False) -> TauSample:
    """Independent runs ``0 .. n_runs-1`` of :func:`run_coupling`.

    With ``stationary_b2`` the second age of run ``i`` is drawn from the
    stationary backward law (its own stream), so the sample realises the
    average over the equilibrium start. ``t`` requests readouts of both
    backward processes. ``keep_runs`` retains every :class:`CouplingRun`.
    Results do not depend on ``threads``.
    """
    cfg = cfg.resolved()
    b2 = _stationary_ages(cfg.law, cfg.seed, n_runs) if stationary_b2 else np.full(n_runs, cfg.b2)
    tq = None if t is None else np.atleast_1d(np.asarray(t, dtype=float))
    horizon = None if tq is None else float(np.max(tq))
    tau = np.empty(n_runs)
    attempts = np.empty(n_runs, dtype=np.int64)
    windows = np.empty(n_runs, dtype=np.int64)
    coupled = np.empty(n_runs, dtype=bool)
    same = np.empty(n_runs, dtype=bool)
    back = None if tq is None else np.empty((n_runs, tq.size, 2))
    runs = [None] * n_runs if keep_runs else None

    def one(i):
        c = cfg if not stationary_b2 else CouplingConfig(cfg.law, cfg.b1, float(b2[i]), cfg.R, cfg.max_attempts,
                                                          cfg.seed, cfg.alpha, cfg.window_knots)
        r = run_coupling(c, run=i, horizon=horizon)
        tau[i] = r.tau
        attempts[i] = r.attempts
        windows[i] = sum(a.window for a in r.attempt_log)
        coupled[i] = r.coupled
        same[i] = r.merged_suffix_identical()
        if back is not None:
            back[i] = r.backward(tq)
        if runs is not None:
            runs[i] = r

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(n_runs)))
    else:
        for i in range(n_runs):
            one(i)
    return TauSample(tau, attempts, coupled, b2, windows, same, tq, back, runs)
