"""Modified Bessel functions K0 and K1 of real positive argument.

Two regimes:

* ``x <= 2``: the ascending series with the ``ln(x/2)`` term,
* ``x > 2``: Steed's continued fraction (CF2) for the exponentially
  scaled pair ``e^x K0``, ``e^x K1``.

Both reach full double precision on ``[1e-12, 700]``.  Above 700 the
result underflows and 0 is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061

X_MIN = 1e-12
X_UNDERFLOW = 700.0
_SERIES_CUT = 2.0
_EPS = np.finfo(float).eps
_N_SERIES = 30
_CF_MAXIT = 2000


class BesselDomainError(ValueError):
    """Argument outside the supported domain (non-positive or non-finite)."""


@dataclass(frozen=True)
class BesselEval:
    value: float
    abs_error_bound: float


def _check(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise BesselDomainError("argument must be finite")
    if np.any(x <= 0.0):
        raise BesselDomainError("argument must be strictly positive")
    return x


def _series(x):
    """Ascending series for x <= 2; returns (K0, K1, magnitude of summed terms)."""
    t = 0.25 * x * x
    lg = np.log(0.5 * x) + EULER_GAMMA
    i0 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    term0 = np.ones_like(x)  # t^k / (k!)^2
    term1 = np.ones_like(x)  # t^k / (k! (k+1)!)
    harm = 0.0  # H_k
    for k in range(_N_SERIES):
        if k > 0:
            term0 = term0 * t / (k * k)
            term1 = term1 * t / (k * (k + 1))
            harm += 1.0 / k
        i0 += term0
        s0 += harm * term0
        i1 += term1
        # psi(k+1) + psi(k+2) + 2*gamma = H_k + H_{k+1}
        s1 += (2.0 * harm + 1.0 / (k + 1)) * term1
    i1 *= 0.5 * x
    k0 = -lg * i0 + s0
    # K1 = 1/x + ln(x/2) I1 - (x/4) sum (psi(k+1)+psi(k+2)) t^k/(k!(k+1)!)
    k1 = 1.0 / x + lg * i1 - 0.25 * x * s1
    scale = np.abs(lg) * i0 + s0
    return k0, k1, scale


def _steed_scaled(x):
    """Steed's CF2 for nu = 0; returns (e^x K0, e^x K1)."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, _CF_MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = np.where(active, (b * d - 1.0) * delh, 0.0)
        h = h + delh
        dels = q * delh
        s = s + dels
        active &= np.abs(dels) >= _EPS * np.abs(s)
        if not active.any():
            break
    else:  # pragma: no cover - CF2 converges in < 100 steps for x > 2
        raise RuntimeError("Steed continued fraction did not converge")
    h = a1 * h
    k0s = np.sqrt(np.pi / (2.0 * x)) / s
    k1s = k0s * (x + 0.5 - h) / x
    return k0s, k1s


def _k0k1(x):
    x = _check(x)
    k0 = np.zeros_like(x)
    k1 = np.zeros_like(x)
    err0 = np.zeros_like(x)
    err1 = np.zeros_like(x)
    lo = x <= _SERIES_CUT
    mid = (x > _SERIES_CUT) & (x <= X_UNDERFLOW)
    if lo.any():
        a, b, scale = _series(x[lo])
        k0[lo], k1[lo] = a, b
        err0[lo] = 8 * _EPS * scale
        err1[lo] = 8 * _EPS * (np.abs(b) + scale)
    if mid.any():
        xm = x[mid]
        a, b = _steed_scaled(xm)
        e = np.exp(-xm)
        k0[mid], k1[mid] = a * e, b * e
        err0[mid] = 16 * _EPS * k0[mid]
        err1[mid] = 16 * _EPS * k1[mid]
    # x > 700: underflow, left at 0 with error bound below the smallest normal
    err0[x > X_UNDERFLOW] = 1e-300
    err1[x > X_UNDERFLOW] = 1e-300
    return k0, k1, err0, err1


def _out(v, scalar):
    return float(v) if scalar else v


def bessel_k0(x):
    """K0(x) for scalar or array ``x > 0``; 0 beyond x = 700."""
    scalar = np.ndim(x) == 0
    k0, _, _, _ = _k0k1(np.atleast_1d(x))
    return _out(k0[0], True) if scalar else k0


def bessel_k1(x):
    """K1(x) for scalar or array ``x > 0``; 0 beyond x = 700."""
    scalar = np.ndim(x) == 0
    _, k1, _, _ = _k0k1(np.atleast_1d(x))
    return _out(k1[0], True) if scalar else k1


def bessel_k0_eval(x: float) -> BesselEval:
    _, _, err, _ = _k0k1(np.atleast_1d(x))
    return BesselEval(bessel_k0(x), float(err[0]))


def bessel_k1_eval(x: float) -> BesselEval:
    _, _, _, err = _k0k1(np.atleast_1d(x))
    return BesselEval(bessel_k1(x), float(err[0]))


def bessel_k0_scaled(x):
    """e^x K0(x), finite for all x > 0 (no underflow cut)."""
    x = np.atleast_1d(_check(x))
    out = np.empty_like(x)
    lo = x <= _SERIES_CUT
    if lo.any():
        out[lo] = _series(x[lo])[0] * np.exp(x[lo])
    if (~lo).any():
        out[~lo] = _steed_scaled(x[~lo])[0]
    return out


def small_x_k0(x: float) -> float:
    """Leading logarithmic law -ln(x/2) - gamma."""
    return -math.log(0.5 * x) - EULER_GAMMA
