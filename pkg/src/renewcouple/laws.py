"""Lifetime distributions and the laws derived from them.

Every law here is absolutely continuous on a subset of ``[0, inf)`` and exposes
the same vectorised surface: ``cdf``, ``sf``, ``pdf``, ``inverse_cdf``,
``inverse_sf``, ``moment`` and ``partial_mean`` (``E min(zeta, s)``).

Built-in families: :class:`Exponential`, :class:`Gamma`, :class:`Weibull`,
:class:`Pareto`, :class:`Uniform` and finite :class:`Mixture`. From a lifetime
law we derive the overshoot (:class:`ResidualLaw`, the remaining life at age
``a``) and the equilibrium law of the backward recurrence time
(:class:`StationaryBackwardLaw`). :func:`common_part` integrates the minimum of
two densities.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from ._numeric import expand_upper, solve_increasing

__all__ = [
    "DomainError",
    "InfiniteMomentError",
    "UnsupportedAgeError",
    "DistSpecError",
    "LifetimeLaw",
    "Exponential",
    "Gamma",
    "Weibull",
    "Pareto",
    "Uniform",
    "Mixture",
    "ResidualLaw",
    "StationaryBackwardLaw",
    "OverlapTable",
    "cdf",
    "inverse_cdf",
    "moment",
    "residual",
    "stationary_backward",
    "common_part",
    "common_part_with_error",
    "overlap_table",
    "parse_law",
]

TAIL_MASS = 1e-10
DEFAULT_KNOTS = 4096
_GL5 = np.polynomial.legendre.leggauss(5)
_GL3 = np.polynomial.legendre.leggauss(3)


class DomainError(ValueError):
    """Argument outside the domain of an operation (e.g. a quantile level >= 1)."""


class InfiniteMomentError(ArithmeticError):
    """Requested moment diverges for this law."""


class UnsupportedAgeError(ValueError):
    """Age ``a`` with ``F(a) = 1``: no residual lifetime exists."""


class DistSpecError(ValueError):
    """Malformed distribution spec string."""


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check_levels(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0.0) & (u < 1.0))):
        raise DomainError("quantile level must lie in [0, 1)")
    return u


def _fmt(v):
    return repr(float(v))


class LifetimeLaw:
    """Base class for nonnegative, absolutely continuous lifetime laws.

    Subclasses provide ``_cdf``, ``_sf``, ``_pdf``, ``_isf`` and ``_ppf`` for
    points inside the support plus ``support``. Closed-form ``moment`` and
    ``partial_mean`` overrides are optional; the defaults integrate the
    survival function.
    """

    #: largest moment order guaranteed finite
    kappa_max: float = math.inf

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density may jump."""
        lo, hi = self.support
        return (lo,) if math.isinf(hi) else (lo, hi)

    # vectorised public surface -------------------------------------------
    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        with np.errstate(all="ignore"):
            inner = self._cdf(np.clip(s, lo, hi if math.isfinite(hi) else None))
        return _out(np.where(s < lo, 0.0, np.where(s >= hi, 1.0, inner)))

    def sf(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        with np.errstate(all="ignore"):
            inner = self._sf(np.clip(s, lo, hi if math.isfinite(hi) else None))
        return _out(np.where(s < lo, 1.0, np.where(s >= hi, 0.0, inner)))

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        inside = (s >= lo) & (s < hi)
        with np.errstate(all="ignore"):
            inner = self._pdf(np.where(inside, s, lo))
        return _out(np.where(inside, inner, 0.0))

    def inverse_cdf(self, u):
        """Generalised inverse ``inf{x : F(x) >= u}`` for ``u`` in ``[0, 1)``."""
        if isinstance(u, float):
            # scalar fast path: simulation loops call this once per epoch
            if not 0.0 <= u < 1.0:
                raise DomainError("quantile level must lie in [0, 1)")
            return self.support[0] if u == 0.0 else float(self._ppf(u))
        u = _check_levels(u)
        with np.errstate(all="ignore"):
            x = self._ppf(u)
        return _out(np.where(u == 0.0, self.support[0], x))

    def inverse_sf(self, p):
        """Inverse survival function for ``p`` in ``(0, 1]``; accurate deep in the tail."""
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0.0) & (p <= 1.0))):
            raise DomainError("tail probability must lie in (0, 1]")
        with np.errstate(all="ignore"):
            x = self._isf(p)
        return _out(np.where(p == 1.0, self.support[0], x))

    def moment(self, k: float) -> float:
        """Raw moment ``E zeta**k`` by quadrature of ``k s**(k-1) (1 - F(s))``."""
        k = float(k)
        if k <= 0:
            raise DomainError("moment order must be positive")
        return _sf_moment(self, k)

    def partial_mean(self, s):
        """``E min(zeta, s) = int_0^s (1 - F(u)) du``."""
        s = np.asarray(s, dtype=float)
        flat = np.atleast_1d(s)
        vals = np.array(
            [integrate.quad(self.sf, 0.0, x, points=self._inner_points(0.0, x), limit=200)[0]
             if x > 0 else 0.0 for x in flat.ravel()]
        )
        return _out(vals.reshape(s.shape))

    @property
    def mean(self) -> float:
        return self.moment(1.0)

    def _inner_points(self, a, b):
        pts = [p for p in self.breakpoints() if a < p < b]
        return pts or None

    # default element-wise implementations --------------------------------
    def _cdf(self, s):
        return 1.0 - self._sf(s)

    def _sf(self, s):
        return 1.0 - self._cdf(s)

    def _ppf(self, u):
        return self._isf(1.0 - u)


def _sf_moment(law, k):
    lo, hi = law.support

    def integrand(s):
        return k * s ** (k - 1.0) * law.sf(s)

    pts = [p for p in law.breakpoints() if p > 0.0 and math.isfinite(p)]
    total = 0.0
    # integrate [0, lo] analytically: sf == 1 there
    if lo > 0:
        total += lo**k
    start = max(lo, 0.0)
    if math.isfinite(hi):
        inner = [p for p in pts if start < p < hi] or None
        val, _ = integrate.quad(integrand, start, hi, points=inner, epsrel=1e-11, epsabs=0.0, limit=400)
        return total + val
    # split at a few quantiles so quad sees the bulk before the infinite tail
    cuts = sorted({start, *[float(law.inverse_sf(p)) for p in (0.5, 1e-2, 1e-4, 1e-8)], *pts})
    cuts = [c for c in cuts if c >= start]
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            val, _ = integrate.quad(integrand, a, b, epsrel=1e-11, epsabs=0.0, limit=400)
            total += val
    val, _ = integrate.quad(integrand, cuts[-1], math.inf, epsrel=1e-11, epsabs=0.0, limit=400)
    if not math.isfinite(val):
        raise InfiniteMomentError(f"moment of order {k} diverges")
    return total + val


# --------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class Exponential(LifetimeLaw):
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    @property
    def support(self):
        return 0.0, math.inf

    def _cdf(self, s):
        return -np.expm1(-self.rate * s)

    def _sf(self, s):
        return np.exp(-self.rate * s)

    def _pdf(self, s):
        return self.rate * np.exp(-self.rate * s)

    def _ppf(self, u):
        return -np.log1p(-u) / self.rate

    def _isf(self, p):
        return -np.log(p) / self.rate

    def moment(self, k):
        if k <= 0:
            raise DomainError("moment order must be positive")
        return math.gamma(k + 1.0) / self.rate**k

    def partial_mean(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        return _out(-np.expm1(-self.rate * s) / self.rate)

    def __str__(self):
        return f"exp(rate={_fmt(self.rate)})"


@dataclass(frozen=True)
class Gamma(LifetimeLaw):
    shape: float = 2.0
    rate: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be positive")

    @property
    def support(self):
        return 0.0, math.inf

    def _cdf(self, s):
        return special.gammainc(self.shape, self.rate * s)

    def _sf(self, s):
        return special.gammaincc(self.shape, self.rate * s)

    def _pdf(self, s):
        k, r = self.shape, self.rate
        logp = (k - 1.0) * np.log(s) + k * math.log(r) - r * s - special.gammaln(k)
        out = np.exp(logp)
        if k == 1.0:
            out = np.where(s == 0, r, out)
        return out

    def _ppf(self, u):
        return special.gammaincinv(self.shape, u) / self.rate

    def _isf(self, p):
        return special.gammainccinv(self.shape, p) / self.rate

    def moment(self, k):
        if k <= 0:
            raise DomainError("moment order must be positive")
        return math.exp(special.gammaln(self.shape + k) - special.gammaln(self.shape)) / self.rate**k

    def partial_mean(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        k, r = self.shape, self.rate
        x = r * s
        return _out(s * special.gammaincc(k, x) + (k / r) * special.gammainc(k + 1.0, x))

    def __str__(self):
        return f"gamma(shape={_fmt(self.shape)},rate={_fmt(self.rate)})"


@dataclass(frozen=True)
class Weibull(LifetimeLaw):
    shape: float = 1.5
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("shape and scale must be positive")

    @property
    def support(self):
        return 0.0, math.inf

    def _cdf(self, s):
        return -np.expm1(-((s / self.scale) ** self.shape))

    def _sf(self, s):
        return np.exp(-((s / self.scale) ** self.shape))

    def _pdf(self, s):
        k, lam = self.shape, self.scale
        z = s / lam
        return (k / lam) * z ** (k - 1.0) * np.exp(-(z**k))

    def _ppf(self, u):
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def _isf(self, p):
        return self.scale * (-np.log(p)) ** (1.0 / self.shape)

    def moment(self, k):
        if k <= 0:
            raise DomainError("moment order must be positive")
        return self.scale**k * math.gamma(1.0 + k / self.shape)

    def partial_mean(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        k, lam = self.shape, self.scale
        z = (s / lam) ** k
        a = 1.0 + 1.0 / k
        return _out(s * np.exp(-z) + lam * math.gamma(a) * special.gammainc(a, z))

    def __str__(self):
        return f"weibull(shape={_fmt(self.shape)},scale={_fmt(self.scale)})"


@dataclass(frozen=True)
class Pareto(LifetimeLaw):
    """Pareto (type I) law on ``[xm, inf)`` with tail index ``alpha``.

    Moments exist for orders below ``alpha``; ``kappa_max`` is the largest
    integer strictly below it. ``alpha <= 2`` is rejected because the coupling
    bounds need a finite second moment.
    """

    xm: float = 1.0
    alpha: float = 3.0

    def __post_init__(self):
        if not self.xm > 0:
            raise ValueError("xm must be positive")
        if not self.alpha > 2:
            raise ValueError("tail index must exceed 2 (finite second moment required)")

    @property
    def kappa_max(self):
        return float(math.ceil(self.alpha) - 1)

    @property
    def support(self):
        return self.xm, math.inf

    def _cdf(self, s):
        return -np.expm1(self.alpha * np.log(self.xm / s))

    def _sf(self, s):
        return (self.xm / s) ** self.alpha

    def _pdf(self, s):
        return self.alpha * self.xm**self.alpha / s ** (self.alpha + 1.0)

    def _ppf(self, u):
        return self.xm * np.exp(-np.log1p(-u) / self.alpha)

    def _isf(self, p):
        return self.xm * p ** (-1.0 / self.alpha)

    def moment(self, k):
        if k <= 0:
            raise DomainError("moment order must be positive")
        if k >= self.alpha:
            raise InfiniteMomentError(f"Pareto moment of order {k} diverges (alpha={self.alpha})")
        return self.alpha * self.xm**k / (self.alpha - k)

    def partial_mean(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        a, xm = self.alpha, self.xm
        with np.errstate(divide="ignore"):
            tail = xm + xm * (1.0 - (xm / np.maximum(s, xm)) ** (a - 1.0)) / (a - 1.0)
        return _out(np.where(s < xm, s, tail))

    def __str__(self):
        return f"pareto(xm={_fmt(self.xm)},alpha={_fmt(self.alpha)})"


@dataclass(frozen=True)
class Uniform(LifetimeLaw):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi) or not math.isfinite(self.hi):
            raise ValueError("need 0 <= lo < hi < inf")

    @property
    def support(self):
        return self.lo, self.hi

    def _cdf(self, s):
        return (s - self.lo) / (self.hi - self.lo)

    def _sf(self, s):
        return (self.hi - s) / (self.hi - self.lo)

    def _pdf(self, s):
        return np.full_like(s, 1.0 / (self.hi - self.lo))

    def _ppf(self, u):
        return self.lo + u * (self.hi - self.lo)

    def _isf(self, p):
        return self.hi - p * (self.hi - self.lo)

    def moment(self, k):
        if k <= 0:
            raise DomainError("moment order must be positive")
        a, b = self.lo, self.hi
        return (b ** (k + 1.0) - a ** (k + 1.0)) / ((k + 1.0) * (b - a))

    def partial_mean(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        a, b = self.lo, self.hi
        mid = a + ((b - a) ** 2 - (b - np.clip(s, a, b)) ** 2) / (2.0 * (b - a))
        return _out(np.where(s < a, s, mid))

    def __str__(self):
        return f"uniform(lo={_fmt(self.lo)},hi={_fmt(self.hi)})"


@dataclass(frozen=True)
class Mixture(LifetimeLaw):
    """Finite mixture ``sum_i w_i F_i``; weights are normalised on construction."""

    weights: tuple[float, ...]
    components: tuple[LifetimeLaw, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        comps = tuple(self.components)
        if len(w) != len(comps) or not comps:
            raise ValueError("need one weight per component")
        if any(not x > 0 for x in w):
            raise ValueError("mixture weights must be positive")
        total = math.fsum(w)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {total}, expected 1")
        object.__setattr__(self, "weights", tuple(x / total for x in w))
        object.__setattr__(self, "components", comps)

    @property
    def kappa_max(self):
        return min(c.kappa_max for c in self.components)

    @property
    def support(self):
        return min(c.support[0] for c in self.components), max(c.support[1] for c in self.components)

    def breakpoints(self):
        return tuple(sorted({p for c in self.components for p in c.breakpoints()}))

    def _mix(self, name, s):
        return sum(w * np.asarray(getattr(c, name)(s)) for w, c in zip(self.weights, self.components))

    def _cdf(self, s):
        return self._mix("cdf", s)

    def _sf(self, s):
        return self._mix("sf", s)

    def _pdf(self, s):
        return self._mix("pdf", s)

    def _ppf(self, u):
        qs = np.stack([np.asarray(c.inverse_cdf(u)) for c in self.components])
        lo = np.nextafter(qs.min(axis=0), -np.inf)
        hi = qs.max(axis=0)
        return solve_increasing(lambda x: self._mix("cdf", x), lambda x: self._mix("pdf", x), u, lo, hi)

    def _isf(self, p):
        qs = np.stack([np.asarray(c.inverse_sf(p)) for c in self.components])
        lo = np.nextafter(qs.min(axis=0), -np.inf)
        hi = qs.max(axis=0)
        # solve on the survival side: -sf is increasing
        return solve_increasing(lambda x: -self._mix("sf", x), lambda x: self._mix("pdf", x), -p, lo, hi)

    def moment(self, k):
        return math.fsum(w * c.moment(k) for w, c in zip(self.weights, self.components))

    def partial_mean(self, s):
        return _out(self._mix("partial_mean", s))

    def __str__(self):
        parts = ";".join(f"w={_fmt(w)},{c}" for w, c in zip(self.weights, self.components))
        return f"mix({parts})"


# --------------------------------------------------------------------------
# derived laws


@dataclass(frozen=True)
class ResidualLaw(LifetimeLaw):
    """Remaining lifetime at age ``age``: ``F_a(s) = (F(a+s) - F(a)) / (1 - F(a))``."""

    base: LifetimeLaw
    age: float
    _sf_age: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = float(self.age)
        object.__setattr__(self, "age", a)
        tail = float(self.base.sf(a))
        if not (a >= 0.0) or not tail > 0.0:
            raise UnsupportedAgeError(f"age {a} is not admissible: F(a) = 1 for {self.base}")
        object.__setattr__(self, "_sf_age", tail)

    @property
    def kappa_max(self):
        return self.base.kappa_max

    @property
    def support(self):
        lo, hi = self.base.support
        return max(lo - self.age, 0.0), hi - self.age

    def breakpoints(self):
        pts = {max(p - self.age, 0.0) for p in self.base.breakpoints()}
        return tuple(sorted(pts | {self.support[0]}))

    def _sf(self, s):
        return np.asarray(self.base.sf(self.age + s)) / self._sf_age

    def _cdf(self, s):
        a = self.age
        return (np.asarray(self.base.cdf(a + s)) - float(self.base.cdf(a))) / self._sf_age

    def _pdf(self, s):
        # s inside our support puts age + s inside the base support
        return np.asarray(self.base._pdf(self.age + s)) / self._sf_age

    def _isf(self, p):
        return np.maximum(np.asarray(self.base.inverse_sf(p * self._sf_age)) - self.age, 0.0)

    def _ppf(self, u):
        base_u = float(self.base.cdf(self.age)) + u * self._sf_age
        # deep in the tail the survival side is the accurate one
        via_sf = self._isf(1.0 - u)
        with np.errstate(all="ignore"):
            via_cdf = np.asarray(self.base.inverse_cdf(np.minimum(base_u, np.nextafter(1.0, 0.0)))) - self.age
        use_cdf = base_u < 0.5
        return np.maximum(np.where(use_cdf, via_cdf, via_sf), 0.0)

    def partial_mean(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        a = self.age
        # int_0^s sf(a+u) du / sf(a)
        pm = np.asarray(self.base.partial_mean(a + s)) - float(self.base.partial_mean(a))
        return _out(pm / self._sf_age)

    def __str__(self):
        return f"residual({self.base},age={_fmt(self.age)})"


@dataclass(frozen=True)
class StationaryBackwardLaw(LifetimeLaw):
    """Equilibrium law of the backward recurrence time, density ``(1 - F(s)) / E zeta``."""

    base: LifetimeLaw
    base_mean: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = self.base.moment(1.0)
        if not math.isfinite(m):
            raise InfiniteMomentError("stationary law needs a finite mean")
        object.__setattr__(self, "base_mean", m)

    @property
    def kappa_max(self):
        return self.base.kappa_max - 1.0

    @property
    def support(self):
        return 0.0, self.base.support[1]

    def breakpoints(self):
        pts = {p for p in self.base.breakpoints()} | {0.0}
        return tuple(sorted(pts))

    def _cdf(self, s):
        return np.asarray(self.base.partial_mean(s)) / self.base_mean

    def _sf(self, s):
        return 1.0 - self._cdf(s)

    def _pdf(self, s):
        return np.asarray(self.base.sf(s)) / self.base_mean

    def _solve(self, target_cdf):
        hi_sup = self.support[1]
        if math.isfinite(hi_sup):
            hi = np.full_like(target_cdf, hi_sup)
        else:
            hi = expand_upper(self._cdf, target_cdf, self.base_mean)
        lo = np.full_like(target_cdf, -1e-300)
        return solve_increasing(self._cdf, self._pdf, target_cdf, lo, hi)

    def _ppf(self, u):
        return self._solve(u)

    def _isf(self, p):
        return self._solve(1.0 - p)

    def moment(self, k):
        """``E zeta**(k+1) / ((k+1) E zeta)``: stationary backward moments."""
        if k <= 0:
            raise DomainError("moment order must be positive")
        return self.base.moment(k + 1.0) / ((k + 1.0) * self.base_mean)

    def __str__(self):
        return f"stationary({self.base})"


# --------------------------------------------------------------------------
# module-level operations


def cdf(law, s):
    return law.cdf(s)


def inverse_cdf(law, u):
    return law.inverse_cdf(u)


def moment(law, k):
    return law.moment(k)


def residual(law: LifetimeLaw, a: float):
    """Law of the remaining lifetime at age ``a``.

    The exponential law is memoryless, so it is returned unchanged; likewise
    ``a == 0`` when ``F(0) == 0``. Keeping these as the *same object* lets
    :func:`common_part` recognise exact equality and return 1 without
    quadrature.
    """
    a = float(a)
    if not a >= 0.0:
        raise UnsupportedAgeError("age must be nonnegative")
    if float(law.sf(a)) <= 0.0:
        raise UnsupportedAgeError(f"F({a}) = 1 for {law}")
    if isinstance(law, Exponential):
        return law
    if a == 0.0 and float(law.cdf(0.0)) == 0.0:
        return law
    if isinstance(law, ResidualLaw):
        return residual(law.base, law.age + a)
    return ResidualLaw(law, a)


def stationary_backward(law: LifetimeLaw):
    """Equilibrium backward-recurrence law; exponential laws map to themselves."""
    if isinstance(law, Exponential):
        return law
    return StationaryBackwardLaw(law)


# --------------------------------------------------------------------------
# common part of two densities


@dataclass
class OverlapTable:
    """Per-interval integrals of two densities and of their pointwise minimum.

    ``mass_min[i]``, ``mass1[i]``, ``mass2[i]`` integrate ``min(psi1, psi2)``,
    ``psi1``, ``psi2`` over ``[knots[i], knots[i+1]]``; ``*_left``/``*_right``
    hold one-sided density values at the interval ends.
    """

    knots: np.ndarray
    mass_min: np.ndarray
    mass1: np.ndarray
    mass2: np.ndarray
    min_left: np.ndarray
    min_right: np.ndarray
    d1_left: np.ndarray
    d1_right: np.ndarray
    d2_left: np.ndarray
    d2_right: np.ndarray
    kappa: float
    error: float
    crossings: tuple[float, ...]


@functools.lru_cache(maxsize=256)
def _effective_upper(law):
    hi = law.support[1]
    if math.isfinite(hi):
        return hi
    return float(law.inverse_sf(TAIL_MASS))


def _knot_grid(psi1, psi2, n_knots):
    lo1, lo2 = psi1.support[0], psi2.support[0]
    lo = min(lo1, lo2)
    top = max(_effective_upper(psi1), _effective_upper(psi2))
    n_lin = n_knots // 2
    n_geo = (n_knots - n_lin) // 2
    parts = [np.linspace(lo, top, n_lin)]
    for start in {lo1, lo2}:
        span = top - start
        if span > 0:
            parts.append(start + np.geomspace(span * 1e-9, span, n_geo))
    bps = [p for law in (psi1, psi2) for p in law.breakpoints() if lo <= p <= top]
    parts.append(np.asarray(bps, dtype=float))
    return np.unique(np.concatenate(parts)), top


def _crossings(psi1, psi2, knots):
    """Sign changes of ``psi1 - psi2`` on the knots, refined by vectorised Illinois steps."""
    def diff(x):
        with np.errstate(invalid="ignore", over="ignore"):
            d = np.asarray(psi1.pdf(x)) - np.asarray(psi2.pdf(x))
        d[np.isnan(d)] = 0.0
        return d

    d = diff(knots)
    sd = np.sign(d)
    idx = np.flatnonzero(sd[:-1] * sd[1:] < 0)
    if idx.size == 0:
        return ()
    a, b = knots[idx].copy(), knots[idx + 1].copy()
    fa, fb = d[idx].copy(), d[idx + 1].copy()
    side = np.zeros(idx.size)
    for _ in range(100):
        tol = np.maximum(1e-13, 4 * np.finfo(float).eps * np.abs(b))
        if np.all(b - a <= tol):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            c = b - fb * (b - a) / (fb - fa)
        mid = 0.5 * (a + b)
        c = np.where(np.isfinite(c) & (c > a) & (c < b), c, mid)
        fc = diff(c)
        left = np.sign(fc) == np.sign(fa)
        # Illinois: halve the retained end's value when the same side repeats
        fb = np.where(~left & (side < 0), fb, np.where(left & (side > 0), 0.5 * fb, fb))
        fa = np.where(~left & (side < 0), 0.5 * fa, fa)
        a, fa = np.where(left, c, a), np.where(left, fc, fa)
        b, fb = np.where(left, b, c), np.where(left, fb, fc)
        side = np.where(left, 1.0, -1.0)
        hit = fc == 0
        a, b = np.where(hit, c, a), np.where(hit, c, b)
    return tuple(float(x) for x in 0.5 * (a + b))


def overlap_table(psi1, psi2, n_knots: int = DEFAULT_KNOTS) -> OverlapTable:
    """Tabulate the common part of two densities on an adaptive knot grid.

    Knots: a linear grid plus geometric grids anchored at each lower support
    end (``n_knots`` in total), every density breakpoint, and every crossing
    of the two densities found by sign-change scanning then root refinement.
    Between knots ``min(psi1, psi2)`` is smooth, so a 5-point Gauss rule is
    used; the 3-point rule supplies the error estimate. Gauss nodes are
    interior, so density jumps sitting on knots are never sampled. Infinite supports are
    cut at the ``1 - 1e-10`` quantile of the heavier tail; the cut mass is
    added to ``error``.
    """
    knots, top = _knot_grid(psi1, psi2, n_knots)
    cross = _crossings(psi1, psi2, knots)
    if cross:
        knots = np.unique(np.concatenate([knots, cross]))
    a, b = knots[:-1], knots[1:]
    h = b - a
    x5, w5 = _GL5
    x3, w3 = _GL3
    mid, half = 0.5 * (a + b), 0.5 * h
    eps = h * 1e-9
    pts = np.concatenate([
        (mid[:, None] + half[:, None] * x5).ravel(),
        (mid[:, None] + half[:, None] * x3).ravel(),
        a + eps,
        b - eps,
    ])
    n = len(a)
    with np.errstate(invalid="ignore"):
        p1 = np.asarray(psi1.pdf(pts))
        p2 = np.asarray(psi2.pdf(pts))
        lo_ = np.minimum(p1, p2)
    cut5, cut3 = 5 * n, 8 * n
    m1 = half * (p1[:cut5].reshape(n, 5) @ w5)
    m2 = half * (p2[:cut5].reshape(n, 5) @ w5)
    mmin = half * (lo_[:cut5].reshape(n, 5) @ w5)
    mmin3 = half * (lo_[cut5:cut3].reshape(n, 3) @ w3)
    l1, l2 = p1[cut3:cut3 + n], p2[cut3:cut3 + n]
    r1, r2 = p1[cut3 + n:], p2[cut3 + n:]
    tail = min(float(psi1.sf(top)), float(psi2.sf(top)))
    kappa = float(np.sum(mmin))
    error = float(np.sum(np.abs(mmin - mmin3))) + tail
    return OverlapTable(
        knots=knots,
        mass_min=mmin,
        mass1=m1,
        mass2=m2,
        min_left=np.minimum(l1, l2),
        min_right=np.minimum(r1, r2),
        d1_left=l1,
        d1_right=r1,
        d2_left=l2,
        d2_right=r2,
        kappa=min(kappa, 1.0),
        error=error,
        crossings=cross,
    )


def _disjoint(psi1, psi2):
    (a1, b1), (a2, b2) = psi1.support, psi2.support
    return b1 <= a2 or b2 <= a1


def common_part_with_error(psi1, psi2, n_knots: int = DEFAULT_KNOTS) -> tuple[float, float]:
    """``(kappa, error bound)``; exact ``(1, 0)`` for equal laws, ``(0, 0)`` for disjoint supports."""
    if psi1 == psi2:
        return 1.0, 0.0
    if _disjoint(psi1, psi2):
        return 0.0, 0.0
    table = overlap_table(psi1, psi2, n_knots)
    return table.kappa, table.error


def common_part(psi1, psi2, n_knots: int = DEFAULT_KNOTS) -> float:
    """``int min(psi1(u), psi2(u)) du``, the probability mass two laws share."""
    return common_part_with_error(psi1, psi2, n_knots)[0]


# --------------------------------------------------------------------------
# spec strings

_FAMILIES = {
    "exp": (Exponential, ("rate",)),
    "exponential": (Exponential, ("rate",)),
    "gamma": (Gamma, ("shape", "rate")),
    "weibull": (Weibull, ("shape", "scale")),
    "pareto": (Pareto, ("xm", "alpha")),
    "uniform": (Uniform, ("lo", "hi")),
}

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


def parse_law(text: str) -> LifetimeLaw:
    """Parse ``exp(rate=1)``, ``gamma(shape=2,rate=1)``, ``mix(w=0.3,exp(rate=1);w=0.7,...)``."""
    parser = _SpecParser(text)
    law = parser.law()
    parser.skip_ws()
    if parser.pos != len(parser.text):
        parser.fail("trailing characters")
    return law


class _SpecParser:
    def __init__(self, text):
        if not isinstance(text, str):
            raise DistSpecError("distribution spec must be a string")
        self.text = text
        self.pos = 0

    def fail(self, msg):
        raise DistSpecError(f"bad distribution spec {self.text!r} at column {self.pos}: {msg}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch):
        self.skip_ws()
        if not self.text.startswith(ch, self.pos):
            self.fail(f"expected {ch!r}")
        self.pos += len(ch)

    def name(self):
        self.skip_ws()
        m = re.compile(r"[A-Za-z_][A-Za-z_0-9]*").match(self.text, self.pos)
        if not m:
            self.fail("expected a name")
        self.pos = m.end()
        return m.group(0).lower()

    def number(self):
        self.skip_ws()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            self.fail("expected a number")
        self.pos = m.end()
        return float(m.group(0))

    def law(self):
        fam = self.name()
        self.expect("(")
        if fam in ("mix", "mixture"):
            weights, comps = [], []
            while True:
                key = self.name()
                if key != "w":
                    self.fail("mixture entries start with w=")
                self.expect("=")
                weights.append(self.number())
                self.expect(",")
                comps.append(self.law())
                self.skip_ws()
                if self.text.startswith(";", self.pos):
                    self.pos += 1
                    continue
                break
            self.expect(")")
            return self._build(Mixture, weights=tuple(weights), components=tuple(comps))
        if fam not in _FAMILIES:
            self.fail(f"unknown family {fam!r}")
        cls, names = _FAMILIES[fam]
        kwargs = {}
        self.skip_ws()
        if not self.text.startswith(")", self.pos):
            while True:
                key = self.name()
                if key not in names:
                    self.fail(f"{fam} has no parameter {key!r} (expected {', '.join(names)})")
                if key in kwargs:
                    self.fail(f"duplicate parameter {key!r}")
                self.expect("=")
                kwargs[key] = self.number()
                self.skip_ws()
                if self.text.startswith(",", self.pos):
                    self.pos += 1
                    continue
                break
        self.expect(")")
        return self._build(cls, **kwargs)

    def _build(self, cls, **kwargs):
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise DistSpecError(f"bad distribution spec {self.text!r}: {exc}") from None
