"""Special functions used by the channel statistics.

Everything here is vectorised over numpy arrays: scalars in, scalars out;
arrays in, arrays out.
"""

import math

import numpy as np
from scipy import special as _sc

from .errors import DomainError

__all__ = ["log_gamma", "gamma_fn", "bessel_j0", "gaussian_q"]

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _as_array(x, dtype):
    arr = np.asarray(x, dtype=dtype)
    return arr, arr.ndim == 0


def _lanczos_log_gamma(z):
    # valid (principal branch) for Re(z) >= 0.5
    z = z - 1.0
    acc = np.full(z.shape, _LANCZOS_COEF[0], dtype=complex)
    for k in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def _log_sin_pi(z):
    """Principal log(sin(pi z)) without overflow for large |Im z|."""
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    x, y = w.real, w.imag
    # sin(pi w) = exp(pi y) * u with |u| bounded
    u = np.exp(-1j * np.pi * x) * (np.exp(2j * np.pi * w) - 1.0) * (-0.5j)
    out = np.pi * y + np.log(u)
    return np.where(flip, np.conj(out), out)


def log_gamma(s):
    """Principal branch of log Gamma(s) for complex ``s``.

    Uses the Lanczos series for ``Re(s) >= 0.5`` and the reflection
    formula with the branch correction of Hare (1997) elsewhere, so that
    ``log_gamma(s + 1) == log(s) + log_gamma(s)`` holds off the negative
    real axis.

    Raises
    ------
    DomainError
        If any ``s`` is a non-positive integer.
    """
    z, scalar = _as_array(s, complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("log_gamma: non-finite argument")
    pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(pole):
        where = z[pole].real.ravel()[0]
        raise DomainError(f"log_gamma: pole of Gamma at s = {where:g}")

    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_log_gamma(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        branch = np.copysign(2.0 * np.pi, zl.imag) * np.floor(0.5 * zl.real + 0.25)
        out[left] = (_LOG_PI + 1j * branch - _log_sin_pi(zl)
                     - _lanczos_log_gamma(1.0 - zl))
    return out[()] if scalar else out


def gamma_fn(x):
    """Real Gamma function via :func:`log_gamma` (sign-correct for x < 0)."""
    val = np.exp(log_gamma(np.asarray(x, dtype=float) + 0j))
    return val.real


def _j0_series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, 60):
        term = -term * q / (k * k)
        acc = acc + term
    return acc


def _j0_miller(x):
    # backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised by
    # J_0 + 2 sum J_{2k} = 1
    start = int(2 * ((int(np.max(x)) + 40) // 2))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm = norm + 2.0 * j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur, j_next, norm = j_cur * scale, j_next * scale, norm * scale
    return j_cur / (norm + j_cur)


def _j0_asymptotic(x):
    # Hankel expansion; terms summed until they stop decreasing
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    last = np.full_like(x, np.inf)
    for k in range(0, 80):
        if k > 0:
            a = a * (-(2 * k - 1) ** 2) / (8.0 * k * x)
        mag = np.abs(a)
        active &= mag < last
        if not np.any(active):
            break
        contrib = np.where(active, a, 0.0)
        if k % 4 == 0:
            p = p + contrib
        elif k % 4 == 1:
            q = q + contrib
        elif k % 4 == 2:
            p = p - contrib
        else:
            q = q - contrib
        last = np.where(active, mag, last)
        active &= mag > 1e-17 * np.maximum(np.abs(p), 1.0)
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Ascending series for ``|x| <= 8``, Miller backward recurrence for
    ``8 < |x| <= 25`` and the Hankel asymptotic expansion beyond.
    """
    xa, scalar = _as_array(x, float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("bessel_j0: non-finite argument")
    ax = np.abs(xa)
    out = np.empty_like(ax)
    lo = ax <= 8.0
    mid = (ax > 8.0) & (ax <= 25.0)
    hi = ax > 25.0
    if np.any(lo):
        out[lo] = _j0_series(ax[lo])
    if np.any(mid):
        out[mid] = _j0_miller(ax[mid])
    if np.any(hi):
        out[hi] = _j0_asymptotic(ax[hi])
    return out[()] if scalar else out


def gaussian_q(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    xa, scalar = _as_array(x, float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("gaussian_q: non-finite argument")
    out = 0.5 * _sc.erfc(xa / math.sqrt(2.0))
    return out[()] if scalar else out
