"""Constants of the polynomial convergence-rate bound for the backward renewal time.

Given a lifetime law ``F`` and a threshold ``R > Theta``:

* ``Theta = E zeta^2 / E zeta`` (Lorden's bound on ``E D_t``),
* ``pi_R = 1 - Theta / R`` (Markov: ``P{D_t <= R} >= pi_R``),
* ``P_R = pi_R (1 - F(R))``,
* ``kappa_R = inf_{a in [0, R]} kappa(F_a, F)``,
* ``q_R = 1 - kappa_R P_R``, an upper bound on the per-attempt failure probability,
* ``K1 = sum (n+2)^(alpha-1) q_R^(n-1)`` and ``K2 = sum (n+2)^alpha q_R^(n-1)``.

Then ``E tau^alpha <= K1 (E theta1^alpha + E theta2^alpha) + K2 E zeta^alpha``
and, averaging the second age over the stationary law,
``||P_t - P||_TV <= 2 K(alpha, b1) / t^alpha``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, special

from .laws import (
    DEFAULT_KNOTS,
    LifetimeLaw,
    UnsupportedAgeError,
    common_part_with_error,
    residual,
)

__all__ = [
    "BoundConfigError",
    "BoundSet",
    "KappaR",
    "SERIES_TOL",
    "lorden_theta",
    "kappa_R",
    "kappa_R_detail",
    "series_constants",
    "tau_moment_bound",
    "stationary_averaged_K",
    "tv_bound_curve",
    "tv_bound_from_K",
    "optimize_R",
    "default_R_range",
    "bound_set",
]

SERIES_TOL = 1e-12
KAPPA_GRID = 257
R_GRID = 64
PROFILE_POINTS = 513
EDGE_MASS = 1e-9  # bounded supports: keep F(R) <= 1 - EDGE_MASS


class BoundConfigError(ValueError):
    """Infeasible ``alpha`` or ``R`` for the given law."""


def lorden_theta(law: LifetimeLaw) -> float:
    """``Theta = E zeta^2 / E zeta``, Lorden's uniform bound on the mean forward time."""
    return law.moment(2.0) / law.mean


def check_alpha(law: LifetimeLaw, alpha: float, extra: float = 1.0) -> None:
    """Require ``1 <= alpha <= kappa_max - extra``."""
    if not alpha >= 1.0:
        raise BoundConfigError(f"alpha={alpha} must be at least 1")
    if alpha + extra > law.kappa_max:
        raise BoundConfigError(
            f"alpha={alpha} needs moments of order {alpha + extra}, but {law} only has order {law.kappa_max}"
        )


def check_R(law: LifetimeLaw, R: float, theta: float | None = None) -> None:
    theta = lorden_theta(law) if theta is None else theta
    if not R > theta:
        raise BoundConfigError(f"R={R} must exceed Theta={theta:.6g}")
    if not float(law.sf(R)) > 0.0:
        raise BoundConfigError(f"F(R) = 1 at R={R}")


@dataclass(frozen=True)
class KappaR:
    """``kappa_R`` with its provenance: raw minimum, minimiser and the error subtracted."""

    value: float
    raw: float
    argmin: float
    error: float


def _kappa_at(law, a, n_knots):
    k, err = common_part_with_error(residual(law, a), law, n_knots)
    return k, err


def kappa_R_detail(law: LifetimeLaw, R: float, grid: int = KAPPA_GRID, n_knots: int = DEFAULT_KNOTS) -> KappaR:
    """Worst-case common part ``inf_{a in [0,R]} kappa(F_a, F)``, conservatively rounded down.

    A grid scan locates the minimum; golden-section search refines it between
    the neighbouring grid points. The reported value subtracts the quadrature
    error estimate so it stays a lower bound.
    """
    R = float(R)
    if R < 0:
        raise BoundConfigError("R must be nonnegative")
    if not float(law.sf(R)) > 0.0:
        raise UnsupportedAgeError(f"F(R) = 1 at R={R}")
    ages = np.linspace(0.0, R, max(int(grid), 2)) if R > 0 else np.zeros(1)
    vals, errs = np.empty(ages.size), np.empty(ages.size)
    for i, a in enumerate(ages):
        vals[i], errs[i] = _kappa_at(law, a, n_knots)
    i = int(np.argmin(vals))
    best, best_a, best_err = vals[i], ages[i], errs[i]
    if 0 < i < ages.size - 1 and vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
        memo = {}

        def f(a):
            a = min(max(a, ages[i - 1]), ages[i + 1])
            if a not in memo:
                memo[a] = _kappa_at(law, a, n_knots)
            return memo[a][0]

        try:
            a_star = float(optimize.golden(f, brack=(ages[i - 1], ages[i], ages[i + 1]), tol=1e-8))
            if f(a_star) < best:
                best, best_a = f(a_star), a_star
                best_err = memo[min(max(a_star, ages[i - 1]), ages[i + 1])][1]
        except (ValueError, RuntimeError):
            pass
    err = max(best_err, float(np.max(errs)))
    return KappaR(value=float(max(best - err, 0.0)), raw=float(best), argmin=float(best_a), error=err)


def kappa_R(law: LifetimeLaw, R: float, grid: int = KAPPA_GRID, n_knots: int = DEFAULT_KNOTS) -> float:
    """Conservative ``kappa_R``; see :func:`kappa_R_detail`."""
    return kappa_R_detail(law, R, grid, n_knots).value


def _em_tail(beta, q, a):
    """``sum_{n >= a} (n+2)^beta q^(n-1)`` by Euler-Maclaurin; accurate when ``-log q`` is small.

    The integral is an upper incomplete gamma function; the correction terms
    use ``B2`` and ``B4``. The next term is below ``1e-12`` of the tail once
    ``a > 50 (beta + 1)`` and ``-log q <= 1e-3``.
    """
    lam = -math.log(q)
    y = a + 2.0
    integral = q**-3.0 * special.gamma(beta + 1.0) * special.gammaincc(beta + 1.0, lam * y) / lam ** (beta + 1.0)
    f = y**beta * q ** (a - 1.0)
    g1 = beta / y - lam
    g2 = -beta / y**2
    g3 = 2.0 * beta / y**3
    d1 = f * g1
    d3 = f * (g3 + 3.0 * g1 * g2 + g1**3)
    return integral + f / 2.0 - d1 / 12.0 + d3 / 720.0


def series_constants(alpha: float, q: float, tol: float = SERIES_TOL) -> tuple[float, float]:
    """``K1 = sum (n+2)^(alpha-1) q^(n-1)`` and ``K2 = sum (n+2)^alpha q^(n-1)``, ``n >= 1``.

    Terms are summed in blocks until a ratio-test bound certifies both tails
    below ``tol`` times the partial sums: once ``r = (1 + 1/(n+2))^alpha q < 1``
    every later ratio is at most ``r``, so the tail after term ``n`` is at most
    ``term_n r / (1 - r)``. When ``q`` is so close to 1 that this would take
    more than ``2^16`` terms, the terms vary slowly and the remaining tail is
    summed by Euler-Maclaurin instead.
    """
    alpha, q = float(alpha), float(q)
    if not 0.0 <= q < 1.0:
        raise BoundConfigError(f"q={q} must lie in [0, 1)")
    if not alpha >= 1.0:
        raise BoundConfigError(f"alpha={alpha} must be at least 1")
    if q == 0.0:
        return 3.0 ** (alpha - 1.0), 3.0**alpha
    blocks1, blocks2 = [], []
    start, size = 1, 256
    while True:
        n = np.arange(start, start + size, dtype=float)
        geo = q ** (n - 1.0)
        t1 = (n + 2.0) ** (alpha - 1.0) * geo
        t2 = t1 * (n + 2.0)
        blocks1.append(math.fsum(t1))
        blocks2.append(math.fsum(t2))
        last = n[-1]
        r = (1.0 + 1.0 / (last + 2.0)) ** alpha * q
        if r < 1.0:
            s1, s2 = math.fsum(blocks1), math.fsum(blocks2)
            tail = r / (1.0 - r)
            if t1[-1] * tail <= tol * s1 and t2[-1] * tail <= tol * s2:
                return s1, s2
        start += size
        if start > 1 << 16 and -math.log(q) <= 1e-3 and start > 50 * (alpha + 1.0):
            return (math.fsum(blocks1) + _em_tail(alpha - 1.0, q, start),
                    math.fsum(blocks2) + _em_tail(alpha, q, start))
        size = min(2 * size, 1 << 16)


def _probabilities(law, R, kR, theta):
    pi_R = 1.0 - theta / R
    P_R = pi_R * float(law.sf(R))
    q_R = 1.0 - kR * P_R
    return pi_R, P_R, q_R


def tau_moment_bound(law: LifetimeLaw, alpha: float, R: float, b1: float, b2: float,
                     kappa: float | None = None, tol: float = SERIES_TOL) -> float:
    """``K1 (E theta1(b1)^alpha + E theta1(b2)^alpha) + K2 E zeta^alpha``.

    ``theta1(b)`` is the remaining life at age ``b``, so its moments are those
    of ``residual(F, b)``. Pass ``kappa`` to reuse a precomputed ``kappa_R``.
    """
    check_alpha(law, alpha)
    theta = lorden_theta(law)
    check_R(law, R, theta)
    kR = kappa_R(law, R) if kappa is None else kappa
    _, _, q = _probabilities(law, R, kR, theta)
    K1, K2 = series_constants(alpha, q, tol)
    m1 = residual(law, b1).moment(alpha)
    m2 = residual(law, b2).moment(alpha)
    return K1 * (m1 + m2) + K2 * law.moment(alpha)


def _K(law, alpha, b1, K1, K2):
    overshoot = law.moment(alpha + 1.0) / ((alpha + 1.0) * law.mean)
    return K1 * residual(law, b1).moment(alpha) + K2 * law.moment(alpha) + K1 * overshoot


def stationary_averaged_K(law: LifetimeLaw, alpha: float, R: float, b1: float,
                          kappa: float | None = None, tol: float = SERIES_TOL) -> float:
    """``K(alpha, b1)``: the moment bound with the second age drawn from the stationary law.

    The stationary average of ``E theta1(b2)^alpha`` equals
    ``E zeta^(alpha+1) / ((alpha+1) E zeta)``, the equilibrium-overshoot moment.
    """
    check_alpha(law, alpha)
    theta = lorden_theta(law)
    check_R(law, R, theta)
    kR = kappa_R(law, R) if kappa is None else kappa
    _, _, q = _probabilities(law, R, kR, theta)
    K1, K2 = series_constants(alpha, q, tol)
    return _K(law, alpha, b1, K1, K2)


def tv_bound_from_K(K: float, alpha: float, t) -> np.ndarray:
    """``min(2, 2 K / t^alpha)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    with np.errstate(over="ignore"):
        return np.minimum(2.0, 2.0 * K / t**alpha)


def tv_bound_curve(law: LifetimeLaw, alpha: float, R: float, b1: float, t_grid) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(t, min(2, 2 K(alpha, b1) / t^alpha))``."""
    t = np.asarray(t_grid, dtype=float)
    return t, tv_bound_from_K(stationary_averaged_K(law, alpha, R, b1), alpha, t)


def default_R_range(law: LifetimeLaw) -> tuple[float, float]:
    """``(1.001 Theta, upper)``, with ``upper`` the ``1 - 1e-6`` quantile, kept inside bounded supports."""
    theta = lorden_theta(law)
    hi = float(law.inverse_sf(1e-6))
    return theta * 1.001, hi


def _feasible_range(law, R_range):
    theta = lorden_theta(law)
    lo, hi = default_R_range(law) if R_range is None else map(float, R_range)
    if math.isfinite(law.support[1]):
        hi = min(hi, float(law.inverse_cdf(1.0 - EDGE_MASS)))
    lo = max(lo, theta * (1.0 + 1e-9))
    if not lo < hi:
        raise BoundConfigError(f"empty feasible R range for {law}: need Theta={theta:.6g} < R < {hi:.6g}")
    return lo, hi


def optimize_R(law: LifetimeLaw, alpha: float, b1: float, R_range=None, grid: int = R_GRID,
               profile_points: int = PROFILE_POINTS, tol: float = SERIES_TOL) -> tuple[float, float]:
    """Grid search (log-spaced) for the ``R`` minimising ``K(alpha, b1)``.

    ``kappa(F_a, F)`` is tabulated once on a shared age grid; ``kappa_R`` at
    each candidate is the running minimum of that profile up to ``R``. The
    returned ``K_star`` is recomputed at ``R_star`` with the full
    :func:`kappa_R` search.
    """
    check_alpha(law, alpha)
    theta = lorden_theta(law)
    lo, hi = _feasible_range(law, R_range)
    Rs = np.geomspace(lo, hi, int(grid))
    ages = np.union1d(np.linspace(0.0, hi, int(profile_points)), Rs)
    low = np.empty(ages.size)
    for i, a in enumerate(ages):
        k, err = _kappa_at(law, a, DEFAULT_KNOTS)
        low[i] = k - err
    running = np.minimum.accumulate(low)
    Ks = np.empty(Rs.size)
    for j, R in enumerate(Rs):
        kR = max(float(running[np.searchsorted(ages, R, side="right") - 1]), 0.0)
        _, _, q = _probabilities(law, R, kR, theta)
        Ks[j] = _K(law, alpha, b1, *series_constants(alpha, q, tol)) if q < 1.0 else math.inf
    j = int(np.argmin(Ks))
    R_star = float(Rs[j])
    return R_star, stationary_averaged_K(law, alpha, R_star, b1, tol=tol)


@dataclass(frozen=True)
class BoundSet:
    """Every constant of the bound for one ``(F, alpha, R, b1)``."""

    law: str
    alpha: float
    R: float
    theta: float
    pi_R: float
    P_R: float
    kappa_R: float
    q_R: float
    K1: float
    K2: float
    K_of_alpha_b1: float
    b1: float
    series_tolerance: float
    R_optimized: bool = False
    b2: float | None = None
    varpi: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def curve(self, t) -> np.ndarray:
        return tv_bound_from_K(self.K_of_alpha_b1, self.alpha, t)

    def format(self) -> str:
        rows = [
            ("law", self.law),
            ("alpha", self.alpha),
            ("b1", self.b1),
            ("R_star (optimized)" if self.R_optimized else "R", self.R),
            ("Theta", self.theta),
            ("pi_R", self.pi_R),
            ("P_R", self.P_R),
            ("kappa_R", self.kappa_R),
            ("q_R", self.q_R),
            ("K1", self.K1),
            ("K2", self.K2),
            ("K(alpha,b1)", self.K_of_alpha_b1),
            ("series_tolerance", self.series_tolerance),
        ]
        if self.b2 is not None:
            rows += [("b2", self.b2), ("varpi", self.varpi)]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v if isinstance(v, str) else format(v, '.10g')}" for k, v in rows)


def bound_set(law: LifetimeLaw, alpha: float, b1: float = 0.0, R: float | None = None,
              b2: float | None = None, R_range=None, grid: int = R_GRID, tol: float = SERIES_TOL) -> BoundSet:
    """Assemble a :class:`BoundSet`; ``R=None`` picks ``R`` with :func:`optimize_R`."""
    check_alpha(law, alpha)
    residual(law, b1)  # fail fast on an inadmissible age
    theta = lorden_theta(law)
    optimized = R is None
    if optimized:
        R, _ = optimize_R(law, alpha, b1, R_range, grid, tol=tol)
    R = float(R)
    check_R(law, R, theta)
    kR = kappa_R(law, R)
    pi_R, P_R, q_R = _probabilities(law, R, kR, theta)
    K1, K2 = series_constants(alpha, q_R, tol)
    varpi = None
    if b2 is not None:
        varpi = tau_moment_bound(law, alpha, R, b1, b2, kappa=kR, tol=tol)
    return BoundSet(
        law=str(law), alpha=float(alpha), R=R, theta=theta, pi_R=pi_R, P_R=P_R,
        kappa_R=kR, q_R=q_R, K1=K1, K2=K2, K_of_alpha_b1=_K(law, alpha, b1, K1, K2),
        b1=float(b1), series_tolerance=tol, R_optimized=optimized,
        b2=None if b2 is None else float(b2), varpi=varpi,
    )
