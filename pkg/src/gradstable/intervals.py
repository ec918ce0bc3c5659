"""Vectorised interval evaluation of polynomials over boxes.

Every floating-point result is pushed one ulp outward with ``np.nextafter``,
which dominates the half-ulp error of a correctly rounded IEEE operation, so
the returned enclosure is sound for the box given.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .poly import Polynomial

_NEG_INF = -np.inf
_POS_INF = np.inf


def _down(x):
    return np.nextafter(x, _NEG_INF)


def _up(x):
    return np.nextafter(x, _POS_INF)


def fraction_interval(c: Fraction) -> tuple[float, float]:
    """Tightest float interval containing the rational ``c``."""
    f = float(c)
    if Fraction(f) == c:
        return f, f
    if Fraction(f) < c:
        return f, float(np.nextafter(f, _POS_INF))
    return float(np.nextafter(f, _NEG_INF)), f


def _pow_nonneg(a: np.ndarray, e: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds of a**e for a >= 0 (arrays)."""
    lo = a.copy()
    hi = a.copy()
    for _ in range(e - 1):
        lo = np.maximum(_down(lo * a), 0.0)
        hi = _up(hi * a)
    return lo, hi


def interval_power(lo: np.ndarray, hi: np.ndarray, e: int) -> tuple[np.ndarray, np.ndarray]:
    if e == 0:
        return np.ones_like(lo), np.ones_like(hi)
    if e == 1:
        return lo, hi
    alo = np.abs(lo)
    ahi = np.abs(hi)
    plo_l, plo_h = _pow_nonneg(alo, e)
    phi_l, phi_h = _pow_nonneg(ahi, e)
    if e % 2 == 1:
        # monotone: sign(lo)*|lo|^e .. sign(hi)*|hi|^e
        out_lo = np.where(lo >= 0, plo_l, -plo_h)
        out_hi = np.where(hi >= 0, phi_h, -phi_l)
        return out_lo, out_hi
    straddle = (lo <= 0) & (hi >= 0)
    out_lo = np.where(straddle, 0.0, np.minimum(plo_l, phi_l))
    out_hi = np.maximum(plo_h, phi_h)
    return out_lo, out_hi


def interval_mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _down(lo), _up(hi)


class IntervalEvaluator:
    """Sound enclosure of a fixed polynomial over many axis-aligned boxes.

    With ``centered`` the natural enclosure is intersected with the
    mean-value form f(c) + grad f(box) . (box - c), which is much tighter on
    small boxes away from critical points.
    """

    def __init__(self, p: Polynomial, centered: bool = False):
        self.p = p
        self.n = p.n_vars
        self.terms = [(exp, fraction_interval(c)) for exp, c in p.sorted_terms()]
        self.partials = [IntervalEvaluator(p.diff(i)) for i in range(self.n)] if centered else None

    def __call__(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out_lo, out_hi = self.natural(lo, hi)
        if self.partials is None:
            return out_lo, out_hi
        c = 0.5 * (lo + hi)
        mlo, mhi = self.natural(c, c)
        for i, dp in enumerate(self.partials):
            glo, ghi = dp.natural(lo, hi)
            dlo = _down(lo[:, i] - c[:, i])
            dhi = _up(hi[:, i] - c[:, i])
            tlo, thi = interval_mul(glo, ghi, dlo, dhi)
            mlo = _down(mlo + tlo)
            mhi = _up(mhi + thi)
        return np.maximum(out_lo, mlo), np.minimum(out_hi, mhi)

    def natural(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        m = lo.shape[0]
        total_lo = np.zeros(m)
        total_hi = np.zeros(m)
        cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        for exp, (clo, chi) in self.terms:
            tlo = np.full(m, clo)
            thi = np.full(m, chi)
            for j, e in enumerate(exp):
                if not e:
                    continue
                key = (j, e)
                if key not in cache:
                    cache[key] = interval_power(lo[:, j], hi[:, j], e)
                plo, phi = cache[key]
                tlo, thi = interval_mul(tlo, thi, plo, phi)
            total_lo = _down(total_lo + tlo)
            total_hi = _up(total_hi + thi)
        return total_lo, total_hi
