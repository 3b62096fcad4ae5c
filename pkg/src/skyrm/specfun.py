"""Modified Bessel functions K0/K1/K2, Lambert W, and the tail integral.

These are the scalar ingredients of the closed-form energy formulas: the
truncated profile carries a K1 tail, the optimal truncation scale is a
Lambert-W expression, and the anisotropy logarithm comes from the integral
``mu_integral``.  K0/K1 are implemented directly (power series below r = 2,
a Steed-type continued fraction above) so the same code runs inside numba
kernels; accuracy is checked in the tests against the integral
representation, mpmath, and scipy.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import integrate

from ._accel import njit, use_numba

__all__ = [
    "EULER_GAMMA",
    "Branch",
    "bessel_k",
    "euler_gamma",
    "lambert_w",
    "mu_integral",
]

EULER_GAMMA = 0.5772156649015329

_SERIES_TERMS = 24
_CF_MAX_ITER = 400
_CF_EPS = 1e-16


def euler_gamma() -> float:
    """Euler–Mascheroni constant as a float64."""
    return EULER_GAMMA


@njit(cache=True)
def _k01_scalar(x):
    """(K0(x), K1(x)) for a single x > 0.

    Power series for x < 2, continued fraction (Lentz form) for x >= 2.
    Underflows to (0.0, 0.0) once exp(-x) is zero.
    """
    if x < 2.0:
        q = 0.25 * x * x
        lg = math.log(0.5 * x)
        # I0, I1 and the companion log-free sums, by term recurrences.
        t = 1.0  # q^k / (k!)^2
        u = 1.0  # q^k / (k! (k+1)!)
        i0 = 1.0
        i1s = 1.0  # I1 = (x/2) * i1s
        s0 = 0.0  # sum t_k H_k, k >= 1
        s1 = 1.0 - 2.0 * EULER_GAMMA  # sum u_k (2 H_k + 1/(k+1) - 2 gamma)
        hk = 0.0
        for k in range(1, _SERIES_TERMS):
            t *= q / (k * k)
            u *= q / (k * (k + 1))
            hk += 1.0 / k
            i0 += t
            i1s += u
            s0 += t * hk
            s1 += u * (2.0 * hk + 1.0 / (k + 1) - 2.0 * EULER_GAMMA)
        k0 = -(lg + EULER_GAMMA) * i0 + s0
        k1 = 1.0 / x + lg * (0.5 * x) * i1s - 0.25 * x * s1
        return k0, k1
    ex = math.exp(-x)
    if ex == 0.0:
        return 0.0, 0.0
    # Continued fraction CF2 at order 0 (a1 = 1/4), Thompson–Barnett style.
    a1 = 0.25
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a = -a1
    c = a1
    qs = a1
    s = 1.0 + qs * delh
    for i in range(2, _CF_MAX_ITER):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        qs += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = qs * delh
        s += dels
        if abs(dels / s) < _CF_EPS:
            break
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * ex / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


@njit(cache=True)
def _k01_loop(x, k0, k1):
    for i in range(x.size):
        a, b = _k01_scalar(x[i])
        k0[i] = a
        k1[i] = b


def _k01_numpy(x):
    """Vectorized twin of _k01_scalar for 1-d positive arrays."""
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    small = x < 2.0
    if small.any():
        xs = x[small]
        q = 0.25 * xs * xs
        lg = np.log(0.5 * xs)
        t = np.ones_like(xs)
        u = np.ones_like(xs)
        i0 = np.ones_like(xs)
        i1s = np.ones_like(xs)
        s0 = np.zeros_like(xs)
        s1 = np.full_like(xs, 1.0 - 2.0 * EULER_GAMMA)
        hk = 0.0
        for k in range(1, _SERIES_TERMS):
            t = t * (q / (k * k))
            u = u * (q / (k * (k + 1)))
            hk += 1.0 / k
            i0 += t
            i1s += u
            s0 += t * hk
            s1 += u * (2.0 * hk + 1.0 / (k + 1) - 2.0 * EULER_GAMMA)
        k0[small] = -(lg + EULER_GAMMA) * i0 + s0
        k1[small] = 1.0 / xs + lg * (0.5 * xs) * i1s - 0.25 * xs * s1
    big = ~small
    if big.any():
        xb = x[big]
        ex = np.exp(-xb)
        a1 = 0.25
        b = 2.0 * (1.0 + xb)
        d = 1.0 / b
        h = d.copy()
        delh = d.copy()
        q1 = np.zeros_like(xb)
        q2 = np.ones_like(xb)
        a = -a1
        c = np.full_like(xb, a1)
        qs = np.full_like(xb, a1)
        s = 1.0 + qs * delh
        for i in range(2, _CF_MAX_ITER):
            a -= 2.0 * (i - 1)
            c = -a * c / i
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            qs = qs + c * qnew
            b = b + 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h += delh
            dels = qs * delh
            s += dels
            if np.max(np.abs(dels / s)) < _CF_EPS:
                break
        hf = a1 * h
        kb0 = np.sqrt(np.pi / (2.0 * xb)) * ex / s
        k0[big] = kb0
        k1[big] = kb0 * (xb + 0.5 - hf) / xb
    return k0, k1


def bessel_k(order: int, r):
    """K_order(r) for order 0, 1, or 2; r may be a scalar or an array.

    Parameters
    ----------
    order : int
        0, 1, or 2.  K2 is formed from the recurrence K2 = K0 + 2 K1 / r.
    r : float or array_like
        Strictly positive argument(s).

    Returns
    -------
    float or ndarray matching the input shape.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1, or 2, got {order}")
    arr = np.asarray(r, dtype=float)
    if arr.size == 0:
        return arr.copy()
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("bessel_k requires finite r > 0")
    flat = np.ascontiguousarray(arr.reshape(-1))
    if use_numba():
        k0 = np.empty_like(flat)
        k1 = np.empty_like(flat)
        _k01_loop(flat, k0, k1)
    else:
        k0, k1 = _k01_numpy(flat)
    if order == 0:
        out = k0
    elif order == 1:
        out = k1
    else:
        out = k0 + 2.0 * k1 / flat
    out = out.reshape(arr.shape)
    if np.isscalar(r) or arr.ndim == 0:
        return float(out)
    return out


class Branch(enum.Enum):
    """Real branches of the Lambert W function."""

    PRINCIPAL = 0
    MINUS_ONE = -1


_INV_E = math.exp(-1.0)


def _halley(w: float, x: float) -> float:
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            return w
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            return w
    return w


def lambert_w(branch: Branch, x: float) -> float:
    """Real Lambert W: the solution w of w e^w = x on the requested branch.

    PRINCIPAL covers x >= -1/e (w >= -1); MINUS_ONE covers -1/e <= x < 0
    (w <= -1).  Halley iteration from a branch-appropriate seed; near the
    branch point the Puiseux series in sqrt(2(ex+1)) seeds instead.
    """
    if isinstance(branch, int):
        branch = Branch(branch)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("lambert_w requires finite x")
    p2 = 2.0 * (math.e * x + 1.0)
    if p2 < -1e-12:
        raise ValueError(f"x = {x} is below the branch point -1/e")
    p2 = max(p2, 0.0)
    if branch is Branch.PRINCIPAL:
        if p2 <= 1e-8:
            p = math.sqrt(p2)
            return -1.0 + p - p2 / 3.0 + 11.0 * p * p2 / 72.0
        if x < -0.25:
            p = math.sqrt(p2)
            w = -1.0 + p - p2 / 3.0 + 11.0 * p * p2 / 72.0
        elif x <= math.e:
            w = math.log1p(x) if x > -0.2 else x
        else:
            lx = math.log(x)
            w = lx - math.log(lx)
        return _halley(w, x)
    if x >= 0.0:
        raise ValueError("MINUS_ONE branch requires -1/e <= x < 0")
    if p2 <= 1e-8:
        p = math.sqrt(p2)
        return -1.0 - p - p2 / 3.0 - 11.0 * p * p2 / 72.0
    if x > -0.27:
        lx = math.log(-x)
        w = lx - math.log(-lx)
    else:
        p = math.sqrt(p2)
        w = -1.0 - p - p2 / 3.0 - 11.0 * p * p2 / 72.0
    return _halley(w, x)


def mu_integral(mu: float) -> float:
    """Integral of mu r^3/(1 + mu r^2) K1(r)^2 over r in (0, inf).

    Grows like log(sqrt(mu)) for large mu; this is the source of the
    anisotropy logarithm of the truncated profile.  Adaptive quadrature,
    split at the inner scale 1/sqrt(mu); absolute accuracy ~1e-11.
    """
    mu = float(mu)
    if mu <= 0.0:
        raise ValueError("mu_integral requires mu > 0")

    def f(r):
        _, k1 = _k01_scalar(r)
        return mu * r**3 / (1.0 + mu * r * r) * k1 * k1

    cuts = sorted({0.0, min(1.0 / math.sqrt(mu), 1.0), 1.0, 5.0, 20.0, 60.0})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
        total += v
    return total
