"""Monte Carlo estimates of the quantities the bounds control.

* :func:`lorden_check`: ``E D_t`` against Lorden's ``Theta``.
* :func:`tv_binned`: plug-in L1 distance between the law of ``B_t`` and the
  stationary law on a fixed bin algebra. It is a lower bound on the true
  total variation, up to sampling noise.
* :func:`tv_coupling_tail`: ``2 P{tau > t}`` from coupled runs with the second
  age drawn from the stationary law, an upper bound on the total variation.

Together the two estimates bracket the total variation distance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _rng
from .bounds import lorden_theta
from .chain import MAX_ATTEMPTS, CouplingConfig, TauSample, sample_tau
from .laws import LifetimeLaw, stationary_backward
from .renewal import Z95, MeanEstimate, estimate_forward_mean, simulate_recurrence

__all__ = [
    "TVCurveEstimate",
    "LordenReport",
    "stationary_bins",
    "tv_binned",
    "tv_binned_curve",
    "tv_coupling_tail",
    "lorden_check",
    "wilson_interval",
    "isotonic_nonincreasing",
]

N_PATHS = 100_000
BINS = 128
N_BOOT = 200
TOP_QUANTILE = 0.999


def wilson_interval(k, n: int, z: float = Z95) -> tuple[np.ndarray, np.ndarray]:
    """Wilson score interval for ``k`` successes out of ``n``."""
    k = np.asarray(k, dtype=float)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # the endpoints are exactly 0 and 1 at k = 0 and k = n; avoid rounding residue
    lo = np.where(k <= 0, 0.0, np.maximum(centre - half, 0.0))
    hi = np.where(k >= n, 1.0, np.minimum(centre + half, 1.0))
    return lo, hi


def isotonic_nonincreasing(y, weights=None) -> np.ndarray:
    """Least-squares nonincreasing fit (pool-adjacent-violators)."""
    return np.asarray(optimize.isotonic_regression(np.asarray(y, dtype=float), weights=weights,
                                                   increasing=False).x)


@dataclass(frozen=True)
class TVCurveEstimate:
    """Total-variation estimates on a time grid.

    ``ci_halfwidth`` is symmetric; ``noise_floor`` (binned method only) is
    the sampling bias bound already folded into it.
    """

    t_grid: np.ndarray
    tv_hat: np.ndarray
    ci_halfwidth: np.ndarray
    method: str
    n_paths: int
    bins: int | None = None
    noise_floor: np.ndarray | None = None
    n_failed: int = 0

    def isotonic(self) -> np.ndarray:
        """Nonincreasing projection of ``tv_hat`` (the coupling tail must decrease)."""
        return isotonic_nonincreasing(self.tv_hat)


def stationary_bins(law: LifetimeLaw, bins: int = BINS) -> tuple[np.ndarray, np.ndarray]:
    """Edges of ``bins`` equal cells on ``[0, q_0.999]`` plus a tail cell, and their stationary masses."""
    stat = stationary_backward(law)
    top = float(stat.inverse_cdf(TOP_QUANTILE))
    edges = np.append(np.linspace(0.0, top, int(bins) + 1), np.inf)
    cdf = np.asarray(stat.cdf(edges[:-1]))
    masses = np.diff(np.append(cdf, 1.0))
    return edges, masses


def _binned(samples, edges, masses, rng, n_boot):
    n = samples.size
    counts = np.histogram(samples, bins=edges)[0]
    p_hat = counts / n
    tv = float(np.sum(np.abs(p_hat - masses)))
    boot = rng.multinomial(n, p_hat, size=n_boot) / n
    sd = float(np.std(np.sum(np.abs(boot - masses), axis=1), ddof=1))
    # E|p_hat - p| <= sqrt(p (1 - p) / n): the plug-in statistic sits above the
    # binned distance by at most this much on average
    floor = float(np.sum(np.sqrt(p_hat * (1.0 - p_hat) / n)))
    return tv, sd, floor


def tv_binned_curve(law: LifetimeLaw, b1: float, t_grid, n_paths: int = N_PATHS, bins: int = BINS,
                    seed: int = 0, n_boot: int = N_BOOT) -> TVCurveEstimate:
    """:func:`tv_binned` at every ``t`` of ``t_grid`` from one set of paths."""
    t = np.asarray(t_grid, dtype=float)
    edges, masses = stationary_bins(law, bins)
    sample = simulate_recurrence(law, b1, t, n_paths, seed)
    order = np.argsort(t)
    tv, ci, floors = np.empty(t.size), np.empty(t.size), np.empty(t.size)
    for col, i in enumerate(order):
        rng = _rng.stream(seed, _rng.BOOTSTRAP, i)
        v, sd, floor = _binned(sample.backward[:, col], edges, masses, rng, n_boot)
        tv[i], ci[i], floors[i] = v, Z95 * sd + floor, floor
    return TVCurveEstimate(t, tv, ci, "binned-L1", int(n_paths), int(bins), floors)


def tv_binned(law: LifetimeLaw, b1: float, t: float, n_paths: int = N_PATHS, bins: int = BINS,
              seed: int = 0, n_boot: int = N_BOOT) -> TVCurveEstimate:
    """Binned L1 distance between the law of ``B_t`` (from age ``b1``) and the stationary law.

    ``sum_cells |empirical mass - stationary mass|`` over ``bins`` equal cells
    on ``[0, q_0.999]`` plus one tail cell. The half-width combines a
    multinomial bootstrap (``n_boot`` resamples) with the sampling bias bound
    ``sum sqrt(p (1 - p) / n)``.
    """
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    return tv_binned_curve(law, b1, [t], n_paths, bins, seed, n_boot)


def tv_coupling_tail(law: LifetimeLaw, b1: float, alpha: float, t_grid, n_runs: int = N_PATHS,
                     seed: int = 0, R: float | None = None, max_attempts: int = MAX_ATTEMPTS,
                     threads: int = 1, sample: TauSample | None = None) -> TVCurveEstimate:
    """``2 P{tau > t}`` with the second age drawn from the stationary law, with Wilson intervals.

    ``alpha`` only matters when ``R`` is left to the optimiser. A precomputed
    ``sample`` (from :func:`sample_tau` with ``stationary_b2=True``) may be
    passed to reuse runs.
    """
    t = np.asarray(t_grid, dtype=float)
    if sample is None:
        cfg = CouplingConfig(law, b1, 0.0, R, max_attempts, seed, alpha)
        sample = sample_tau(cfg, n_runs, stationary_b2=True, threads=threads)
    n = sample.tau.size
    surv = sample.survival(t)
    lo, hi = wilson_interval(np.rint(surv * n), n)
    half = 2.0 * np.maximum(hi - surv, surv - lo)
    return TVCurveEstimate(t, 2.0 * surv, half, "coupling-tail", int(n), n_failed=sample.n_failed)


@dataclass(frozen=True)
class LordenReport:
    """Empirical ``E D_t`` against ``Theta`` and the equilibrium mean ``E zeta^2 / (2 E zeta)``."""

    t: float
    estimate: MeanEstimate
    theta: float
    equilibrium_mean: float

    @property
    def holds(self) -> bool:
        """``E D_t <= Theta + 3 sigma``."""
        return self.estimate.mean <= self.theta + 3.0 * self.estimate.stderr


def lorden_check(law: LifetimeLaw, b1: float, t: float, n_paths: int = N_PATHS, seed: int = 0) -> LordenReport:
    """Estimate ``E D_t`` from age ``b1`` and compare with Lorden's bound."""
    if not t > 0:
        raise ValueError("t must be positive")
    est = estimate_forward_mean(law, b1, t, n_paths, seed)
    eq = law.moment(2.0) / (2.0 * law.mean)
    return LordenReport(float(t), est, lorden_theta(law), eq)
