"""Coupling two laws through their common part ("lemma about three uniforms").

Given laws with densities ``psi1``, ``psi2`` and common part ``kappa``, write
each as a mixture ``Psi_j = kappa * Psi_common + (1 - kappa) * Psi_rest_j``.
Drawing ``u1 < kappa`` selects the shared branch, where both outputs are the
same draw ``Psi_common^{-1}(u2)``; otherwise each side takes
``Psi_rest_j^{-1}(u3)``. Marginals are exact and the outputs coincide with
probability ``kappa``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numeric import HermiteCDF
from .laws import DEFAULT_KNOTS, _disjoint, overlap_table

__all__ = [
    "NoOverlapError",
    "TabulatedLaw",
    "CommonDecomposition",
    "CoupledPair",
    "decompose",
    "sample_coupled",
    "sample_coupled_many",
]

KAPPA_ONE = 1e-12


class NoOverlapError(ValueError):
    """The two laws share no mass, so they cannot be coupled."""


class TabulatedLaw:
    """A law known through a monotone cubic CDF on a knot grid."""

    def __init__(self, table: HermiteCDF):
        self._t = table

    @property
    def support(self):
        return self._t.support

    def cdf(self, s):
        return _scalar(self._t.cdf(s))

    def pdf(self, s):
        return _scalar(self._t.pdf(s))

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~((u >= 0.0) & (u < 1.0))):
            raise ValueError("quantile level must lie in [0, 1)")
        if u.ndim == 0:
            return self._t.inverse_scalar(float(u))
        return self._t.inverse(u)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class CommonDecomposition:
    """``Psi_j = kappa * common + (1 - kappa) * rest[j]`` for ``j = 0, 1``.

    ``rest`` is ``None`` when ``kappa`` is within ``1e-12`` of one: that branch
    is then never taken.
    """

    kappa: float
    common_law: object
    residual_laws: tuple | None
    laws: tuple


@dataclass(frozen=True)
class CoupledPair:
    value1: float
    value2: float
    coupled: bool


def _decompose_identical(psi1, psi2):
    return CommonDecomposition(kappa=1.0, common_law=psi1, residual_laws=None, laws=(psi1, psi2))


def decompose(psi1, psi2, n_knots: int = DEFAULT_KNOTS) -> CommonDecomposition:
    """Split two laws into their common part and the two leftovers.

    Raises
    ------
    NoOverlapError
        If the common part is zero.
    """
    if psi1 == psi2:
        return _decompose_identical(psi1, psi2)
    if _disjoint(psi1, psi2):
        raise NoOverlapError(f"{psi1} and {psi2} have disjoint supports")
    tab = overlap_table(psi1, psi2, n_knots)
    kappa = tab.kappa
    if kappa <= 0.0:
        raise NoOverlapError(f"{psi1} and {psi2} have disjoint densities")
    knots = tab.knots
    cum_min = np.concatenate([[0.0], np.cumsum(tab.mass_min)])
    common = HermiteCDF(knots, cum_min / kappa, tab.min_left / kappa, tab.min_right / kappa)
    if 1.0 - kappa <= KAPPA_ONE:
        return CommonDecomposition(kappa=kappa, common_law=TabulatedLaw(common), residual_laws=None,
                                   laws=(psi1, psi2))
    rests = []
    for mass, left, right in ((tab.mass1, tab.d1_left, tab.d1_right), (tab.mass2, tab.d2_left, tab.d2_right)):
        # integrate (psi_j - min) directly: increments are nonnegative node by node
        extra = np.maximum(mass - tab.mass_min, 0.0)
        cum = np.concatenate([[0.0], np.cumsum(extra)])
        total = cum[-1]
        scale = total if total > 0 else 1.0
        rests.append(HermiteCDF(knots, cum / scale,
                                np.maximum(left - tab.min_left, 0.0) / scale,
                                np.maximum(right - tab.min_right, 0.0) / scale))
    return CommonDecomposition(
        kappa=kappa,
        common_law=TabulatedLaw(common),
        residual_laws=(TabulatedLaw(rests[0]), TabulatedLaw(rests[1])),
        laws=(psi1, psi2),
    )


def sample_coupled(dec: CommonDecomposition, u1: float, u2: float, u3: float) -> CoupledPair:
    """Map three uniforms to a coupled pair; deterministic in ``(u1, u2, u3)``."""
    if u1 < dec.kappa or dec.residual_laws is None:
        v = float(dec.common_law.inverse_cdf(u2))
        return CoupledPair(v, v, True)
    r1, r2 = dec.residual_laws
    return CoupledPair(float(r1.inverse_cdf(u3)), float(r2.inverse_cdf(u3)), False)


def sample_coupled_many(dec: CommonDecomposition, u1, u2, u3):
    """Vectorised :func:`sample_coupled`; returns ``(value1, value2, coupled)`` arrays."""
    u1, u2, u3 = (np.asarray(u, dtype=float) for u in (u1, u2, u3))
    shared = (u1 < dec.kappa) | (dec.residual_laws is None)
    v1 = np.empty_like(u1)
    v2 = np.empty_like(u1)
    if np.any(shared):
        c = np.asarray(dec.common_law.inverse_cdf(u2[shared]))
        v1[shared] = c
        v2[shared] = c
    rest = ~shared
    if np.any(rest):
        r1, r2 = dec.residual_laws
        v1[rest] = r1.inverse_cdf(u3[rest])
        v2[rest] = r2.inverse_cdf(u3[rest])
    return v1, v2, shared
