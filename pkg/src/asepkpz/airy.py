"""Airy function Ai and its derivative, evaluated without scipy.

Power series near the origin, the standard asymptotic expansions in the two
tails. The series is summed in ``np.longdouble``: in plain double its cancellation
costs about 1e-11 near the negative switch point. Switch points were picked
where both branches stay below roughly 1e-13 absolute error on x86 (80-bit
long double). Where long double is just double the error near x = -7.5
grows to about 1e-11.
"""
from __future__ import annotations

import math

import numpy as np

X_MAX = 40.0
SWITCH_POS = 5.5
SWITCH_NEG = -7.5

# series accumulated in extended precision; the constants carry 30 digits
_LD = np.longdouble
_C1 = _LD("0.355028053887817239260063186004")  # Ai(0)
_C2 = _LD("0.258819403792806798405183560189")  # -Ai'(0)

_N_SERIES = 90
_N_ASY = 40


def _asy_coefficients(n):
    u = np.empty(n)
    for k in range(n):
        u[k] = math.exp(math.lgamma(3 * k + 0.5) - k * math.log(54.0)
                        - math.lgamma(k + 1) - math.lgamma(k + 0.5))
    v = u.copy()
    k = np.arange(1, n)
    v[1:] = -(6 * k + 1) / (6 * k - 1) * u[1:]
    return u, v


_U, _V = _asy_coefficients(_N_ASY)


def _maclaurin(x):
    # Ai = c1 f - c2 g, f = sum a_k x^{3k}, g = sum b_k x^{3k+1}
    x = x.astype(_LD)
    x3 = x ** 3
    tf = np.ones_like(x)
    tg = x.copy()
    tfp = x * x / 2.0
    tgp = np.ones_like(x)
    f, g, fp, gp = tf.copy(), tg.copy(), tfp.copy(), tgp.copy()
    for k in range(1, _N_SERIES):
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        tgp = tgp * x3 / ((3 * k - 2) * (3 * k))
        if k > 1:
            tfp = tfp * x3 / ((3 * k - 1) * (3 * k - 3))
        f += tf
        g += tg
        gp += tgp
        if k > 1:
            fp += tfp
        small = np.abs(tf) + np.abs(tg) + np.abs(tfp) + np.abs(tgp)
        if np.all(small < 1e-21 * (np.abs(f) + np.abs(g))):
            break
    return (_C1 * f - _C2 * g).astype(np.float64), (_C1 * fp - _C2 * gp).astype(np.float64)


def _truncated_sums(coef, zinv, signs):
    """Terms signs[k] coef[k] zinv^k, zeroed from the point where they stop shrinking."""
    k = np.arange(coef.size)
    terms = signs[None, :] * coef[None, :] * zinv[:, None] ** k[None, :]
    mag = np.abs(terms)
    stop = np.zeros_like(mag, dtype=bool)
    stop[:, 1:] = (mag[:, 1:] > mag[:, :-1]) | (mag[:, :-1] < 1e-17)
    stop = np.logical_or.accumulate(stop, axis=1)
    return np.where(stop, 0.0, terms)


def _asy_positive(x):
    z = (2.0 / 3.0) * x ** 1.5
    zi = 1.0 / z
    alt = (-1.0) ** np.arange(_N_ASY)
    s = _truncated_sums(_U, zi, alt).sum(axis=1)
    sp = _truncated_sums(_V, zi, alt).sum(axis=1)
    pref = np.exp(-z) / (2.0 * math.sqrt(math.pi))
    return pref * s / x ** 0.25, -pref * sp * x ** 0.25


def _asy_negative(x):
    y = -x
    z = (2.0 / 3.0) * y ** 1.5
    zi = 1.0 / z
    k = np.arange(_N_ASY)
    sign = np.where((k // 2) % 2 == 0, 1.0, -1.0)
    tu = _truncated_sums(_U, zi, sign)
    tv = _truncated_sums(_V, zi, sign)
    even = (k % 2 == 0)[None, :]
    P, Q = np.where(even, tu, 0).sum(axis=1), np.where(~even, tu, 0).sum(axis=1)
    Pp, Qp = np.where(even, tv, 0).sum(axis=1), np.where(~even, tv, 0).sum(axis=1)
    th = z - math.pi / 4
    c, s = np.cos(th), np.sin(th)
    ai = (c * P + s * Q) / (math.sqrt(math.pi) * y ** 0.25)
    aip = y ** 0.25 / math.sqrt(math.pi) * (s * Pp - c * Qp)
    return ai, aip


def airy(x):
    """Return ``(Ai(x), Ai'(x))`` for scalar or array ``x`` with ``|x| <= 40``."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > X_MAX):
        raise ValueError(f"airy supports |x| <= {X_MAX}")
    ai = np.empty_like(arr)
    aip = np.empty_like(arr)
    mid = (arr >= SWITCH_NEG) & (arr <= SWITCH_POS)
    pos = arr > SWITCH_POS
    neg = arr < SWITCH_NEG
    for mask, fn in ((mid, _maclaurin), (pos, _asy_positive), (neg, _asy_negative)):
        if np.any(mask):
            a, b = fn(arr[mask])
            ai[mask] = a
            aip[mask] = b
    if scalar:
        return float(ai[0]), float(aip[0])
    return ai, aip
