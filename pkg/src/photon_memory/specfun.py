"""Bessel-type functions needed by the medium kernels.

J1, I0 and I1 are thin wrappers over the Cephes implementations in
``scipy.special`` with domain checks; the half-integer K recurrence and the
regularised kernel shape are evaluated here.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "bessel_j1",
    "bessel_i0",
    "bessel_i1",
    "bessel_i0e",
    "bessel_i1e",
    "bessel_k_half",
    "phi_shape",
    "PHI_SERIES_SWITCH",
]

PHI_SERIES_SWITCH = 1e-4


def _nonnegative(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} requires x >= 0")
    return arr


def _out(arr, x):
    return float(arr) if np.ndim(x) == 0 else arr


def bessel_j1(x):
    """Bessel function of the first kind, order one, on ``x >= 0``."""
    arr = _nonnegative(x, "bessel_j1")
    return _out(special.j1(arr), x)


def bessel_i0(x):
    """Modified Bessel function I0; use :func:`bessel_i0e` beyond x ~ 30."""
    arr = _nonnegative(x, "bessel_i0")
    return _out(special.i0(arr), x)


def bessel_i1(x):
    arr = _nonnegative(x, "bessel_i1")
    return _out(special.i1(arr), x)


def bessel_i0e(x):
    """Exponentially scaled ``exp(-x) I0(x)``."""
    arr = _nonnegative(x, "bessel_i0e")
    return _out(special.i0e(arr), x)


def bessel_i1e(x):
    """Exponentially scaled ``exp(-x) I1(x)``."""
    arr = _nonnegative(x, "bessel_i1e")
    return _out(special.i1e(arr), x)


def bessel_k_half(m: int, x, scaled: bool = False):
    """Modified Bessel function of the second kind of order ``m - 1/2``.

    Starts from the closed forms of K_{1/2} and K_{3/2} and runs the upward
    recurrence ``K_{v+1} = K_{v-1} + (2v/x) K_v``, which is stable for K.
    With ``scaled=True`` the result is multiplied by ``exp(x)``.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"order index m must be an integer >= 1, got {m}")
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0):
        raise DomainError("bessel_k_half requires x > 0")
    base = np.sqrt(np.pi / (2.0 * arr))
    if not scaled:
        base = base * np.exp(-arr)
    k_prev = base
    if m == 1:
        return _out(k_prev, x)
    k_cur = base * (1.0 + 1.0 / arr)
    for j in range(2, int(m)):
        # k_cur holds K_{j-1/2}
        k_prev, k_cur = k_cur, k_prev + (2.0 * j - 1.0) / arr * k_cur
    return _out(k_cur, x)


def phi_shape(u):
    """Regularised kernel shape ``J1(2 sqrt(u)) / sqrt(u)``; equals 1 at u = 0.

    Below ``PHI_SERIES_SWITCH`` the first four terms of the power series
    ``sum (-u)^k / (k! (k+1)!)`` are used.
    """
    arr = np.atleast_1d(_nonnegative(u, "phi_shape"))
    small = arr < PHI_SERIES_SWITCH
    out = np.empty_like(arr)
    us = arr[small]
    out[small] = 1.0 - us / 2.0 * (1.0 - us / 6.0 * (1.0 - us / 12.0))
    ul = arr[~small]
    root = np.sqrt(ul)
    out[~small] = special.j1(2.0 * root) / root
    return float(out[0]) if np.ndim(u) == 0 else out.reshape(np.shape(u))
