"""Small numerical kernels shared by the law and lemma modules."""
from __future__ import annotations

import numpy as np

XTOL = 1e-12

_GL5_X, _GL5_W = np.polynomial.legendre.leggauss(5)
_GL3_X, _GL3_W = np.polynomial.legendre.leggauss(3)


def gauss_legendre(f, a, b, rule=5):
    """Integrate ``f`` over each interval ``[a_i, b_i]`` with a fixed Gauss rule.

    Open rules never evaluate ``f`` at the interval ends, which is what we want
    when the ends sit on density jumps.
    """
    x, w = (_GL5_X, _GL5_W) if rule == 5 else (_GL3_X, _GL3_W)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * x
    return half * (f(nodes) @ w)


def _tol(x, xtol=XTOL):
    return np.maximum(xtol, 4.0 * np.spacing(np.abs(x)))


def solve_increasing(f, df, target, lo, hi, xtol=XTOL, maxiter=200, x0=None):
    """Vectorised generalised inverse of a nondecreasing ``f`` on ``[lo, hi]``.

    Returns ``x`` within ``xtol`` of the smallest point with ``f(x) >= target``,
    certified so that ``f(x) >= target`` up to a few ulps of rounding in ``f``. Newton steps are used when they stay
    inside the bracket, bisection otherwise. Assumes
    ``f(lo) < target <= f(hi)``.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.asarray(x0, dtype=float), lo, hi)
    done = np.zeros(target.shape, dtype=bool)
    ftol = 4.0 * np.spacing(np.maximum(np.abs(target), 1.0))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(maxiter):
            fx = f(x) - target
            above = fx >= 0
            hi = np.where(above & ~done, x, hi)
            lo = np.where(~above & ~done, x, lo)
            xn = x - fx / df(x)
            bad = ~((xn >= lo) & (xn <= hi))
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            tol = _tol(x, xtol)
            # |fx| at rounding level: f cannot resolve x any further
            flat = np.abs(fx) <= ftol
            conv = (np.abs(xn - x) <= tol) | (hi - lo <= tol) | flat
            x = np.where(done, x, xn)
            done |= conv
            if done.all():
                break
        ok = f(x) >= target - ftol
        if not ok.all():
            up = np.minimum(x + 2.0 * _tol(x, xtol), hi)
            x = np.where(ok, x, np.where(f(up) >= target - ftol, up, hi))
    return x


def expand_upper(f, target, start):
    """Double ``start`` until ``f(start) >= target`` everywhere (unbounded supports)."""
    hi = np.broadcast_to(np.asarray(start, dtype=float), np.shape(target)).copy()
    hi = np.where(hi > 0, hi, 1.0)
    for _ in range(2100):
        short = f(hi) < target
        if not np.any(short):
            return hi
        hi = np.where(short, 2.0 * hi, hi)
    raise ArithmeticError("could not bracket the quantile")


class HermiteCDF:
    """Monotone piecewise-cubic CDF through tabulated values and slopes.

    ``left_slope[i]`` and ``right_slope[i]`` are the one-sided densities at the
    two ends of interval ``i``; slopes are clamped (Fritsch-Carlson) so the
    interpolant stays nondecreasing.
    """

    def __init__(self, knots, values, left_slope, right_slope):
        x = np.asarray(knots, dtype=float)
        v = np.clip(np.maximum.accumulate(np.asarray(values, dtype=float)), 0.0, 1.0)
        h = np.diff(x)
        dv = np.diff(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            secant = np.where(h > 0, dv / h, 0.0)
        cap = 3.0 * secant
        m0 = np.array(left_slope, dtype=float)
        m1 = np.array(right_slope, dtype=float)
        m0[np.isnan(m0)] = 0.0
        m1[np.isnan(m1)] = 0.0
        self.x = x
        self.v = v
        self.h = h
        self.m0 = np.clip(m0, 0.0, cap)
        self.m1 = np.clip(m1, 0.0, cap)

    @property
    def support(self):
        first = np.searchsorted(self.v, 0.0, side="right") - 1
        last = np.searchsorted(self.v, self.v[-1], side="left")
        return float(self.x[max(first, 0)]), float(self.x[last])

    def _locate(self, s):
        i = np.searchsorted(self.x, s, side="right") - 1
        return np.clip(i, 0, len(self.h) - 1)

    def _eval(self, i, t):
        h = self.h[i]
        t2 = t * t
        t3 = t2 * t
        return (
            self.v[i] * (2 * t3 - 3 * t2 + 1)
            + self.v[i + 1] * (-2 * t3 + 3 * t2)
            + h * self.m0[i] * (t3 - 2 * t2 + t)
            + h * self.m1[i] * (t3 - t2)
        )

    def _deriv(self, i, t):
        h = self.h[i]
        t2 = t * t
        dv = self.v[i + 1] - self.v[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                dv * (6 * t - 6 * t2) / h
                + self.m0[i] * (3 * t2 - 4 * t + 1)
                + self.m1[i] * (3 * t2 - 2 * t)
            )
        return np.where(h > 0, out, 0.0)

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        i = self._locate(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(np.where(self.h[i] > 0, (s - self.x[i]) / self.h[i], 1.0), 0.0, 1.0)
        out = self._eval(i, t)
        out = np.where(s < self.x[0], self.v[0], out)
        return np.where(s >= self.x[-1], self.v[-1], out)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        i = self._locate(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(np.where(self.h[i] > 0, (s - self.x[i]) / self.h[i], 1.0), 0.0, 1.0)
        out = self._deriv(i, t)
        return np.where((s < self.x[0]) | (s >= self.x[-1]), 0.0, np.maximum(out, 0.0))

    def inverse(self, u):
        """Generalised inverse ``inf{s: cdf(s) >= u}``."""
        u = np.asarray(u, dtype=float)
        j = np.searchsorted(self.v, u, side="left")
        j = np.clip(j, 1, len(self.x) - 1)
        i = j - 1
        lo = np.zeros_like(u)
        hi = np.ones_like(u)

        def f(t):
            return self._eval(i, t)

        def df(t):
            return self._deriv(i, t) * self.h[i]

        with np.errstate(divide="ignore", invalid="ignore"):
            xtol = np.where(self.h[i] > 0, XTOL / self.h[i], 1.0)
            dv = self.v[i + 1] - self.v[i]
            t0 = np.where(dv > 0, (u - self.v[i]) / dv, 0.5)
        t = solve_increasing(f, df, u, lo, hi, xtol=np.minimum(xtol, 1e-3), x0=t0)
        out = self.x[i] + t * self.h[i]
        at_zero = u <= self.v[0]
        return np.where(at_zero, self.support[0], out)

    def inverse_scalar(self, u: float) -> float:
        """Scalar :meth:`inverse` in plain floats (no array overhead)."""
        if u <= self.v[0]:
            return self.support[0]
        j = int(np.searchsorted(self.v, u, side="left"))
        i = min(max(j, 1), len(self.x) - 1) - 1
        x0, h = float(self.x[i]), float(self.h[i])
        if h <= 0.0:
            return x0
        v0, v1 = float(self.v[i]), float(self.v[i + 1])
        m0, m1 = float(self.m0[i]) * h, float(self.m1[i]) * h
        dv = v1 - v0
        a3 = 2 * v0 - 2 * v1 + m0 + m1
        a2 = -3 * v0 + 3 * v1 - 2 * m0 - m1
        lo, hi = 0.0, 1.0
        t = (u - v0) / dv if dv > 0 else 0.5
        tol = max(XTOL / h, 1e-16)
        ftol = 4 * float(np.spacing(max(u, 1.0)))
        for _ in range(100):
            f = ((a3 * t + a2) * t + m0) * t + v0 - u
            if f >= 0:
                hi = t
            else:
                lo = t
            if hi - lo <= tol:
                t = hi
                break
            d = (3 * a3 * t + 2 * a2) * t + m0
            tn = t - f / d if d > 0 else 0.5 * (lo + hi)
            if not lo < tn < hi:
                tn = 0.5 * (lo + hi)
            if abs(tn - t) <= tol:
                t = tn
                if ((a3 * t + a2) * t + m0) * t + v0 - u < -ftol:
                    up = min(t + 2 * tol, hi)
                    t = up if ((a3 * up + a2) * up + m0) * up + v0 - u >= -ftol else hi
                break
            t = tn
        return x0 + t * h
