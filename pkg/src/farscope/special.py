"""Bessel and Hankel functions of integer order.

Only what the 2D Helmholtz kernel, the self-cell integral and the disk
reference solution need: ``J_m`` for real or complex arguments, and
``Y_0``, ``Y_1``, ``H^(1)_0``, ``H^(1)_1`` on the positive real axis.
All functions accept scalars or numpy arrays and are vectorized.

Two regimes are used:

* small arguments: ascending power series, stopped once the term ratio
  makes the remainder negligible (``|z| <= J_SERIES_SWITCH`` for ``J``,
  ``x <= SERIES_SWITCH`` for ``Y``).
* larger arguments: Miller's backward recurrence, normalized by a
  Neumann-type sum. ``Y_0`` and ``Y_1`` come from the Neumann series
  ``Y_0 = (2/pi)[(log(x/2) + gamma) J_0 - 2 sum (-1)^k J_2k / k]`` and
  its derivative, evaluated from the same recurrence sweep.

The power series loses digits to cancellation as ``|z|`` grows (terms
grow like ``exp(|z|)``); ``J`` switches earlier than ``Y`` because the
recurrence is exact to rounding for ``J`` at any argument.
"""

import numpy as np

from .errors import DomainError

__all__ = [
    "SERIES_SWITCH",
    "J_SERIES_SWITCH",
    "MAX_ORDER",
    "MAX_ARGUMENT",
    "bessel_j",
    "bessel_y",
    "hankel1",
    "bessel_y_orders",
]

SERIES_SWITCH = 12.0
J_SERIES_SWITCH = 6.0
MAX_ORDER = 60
MAX_ARGUMENT = 100.0

EULER_GAMMA = 0.57721566490153286061
_RESCALE = 1e200
_SERIES_TOL = 1e-17
_SERIES_MAX_TERMS = 200


def _check_order(order, allowed=None):
    if int(order) != order or order < 0:
        raise DomainError(f"order must be a non-negative integer, got {order!r}")
    if order > MAX_ORDER:
        raise DomainError(f"order {order} exceeds the supported maximum {MAX_ORDER}")
    if allowed is not None and order not in allowed:
        raise DomainError(f"order {order} not supported here (allowed: {sorted(allowed)})")
    return int(order)


def _as_positive_real(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        if np.any(x.imag != 0):
            raise DomainError("argument must be real")
        x = x.real
    x = x.astype(float)
    if not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")
    if np.any(x <= 0):
        raise DomainError("argument must be positive (logarithmic singularity at 0)")
    if np.any(x > MAX_ARGUMENT):
        raise DomainError(f"argument exceeds the supported maximum {MAX_ARGUMENT}")
    return x


def _j_series(order, z):
    """Ascending series sum_k (-1)^k (z/2)^(2k+m) / (k! (k+m)!)."""
    half = z / 2.0
    lead = np.ones_like(z)
    for j in range(1, order + 1):
        lead = lead * half / j
    term = lead.copy()
    total = lead.copy()
    q = -(half * half)
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * q / (k * (k + order))
        total = total + term
        if np.all(np.abs(term) <= _SERIES_TOL * np.abs(total)):
            break
    return total


def _start_index(order, zmax):
    big = max(float(order), float(zmax))
    n = int(big + 20 + 4.0 * np.sqrt(big))
    return n + (n % 2)


def _miller(z, order, with_neumann=False):
    """Backward recurrence for J_order(z) (and optionally the Y sums).

    Returns ``(j_order, j0, j1, s0, s1)`` already normalized; ``s0`` and
    ``s1`` are ``sum (-1)^k J_2k / k`` and
    ``sum (-1)^k (J_{2k-1} - J_{2k+1}) / k`` when ``with_neumann`` is set.
    """
    z = np.asarray(z)
    complex_arg = np.iscomplexobj(z)
    dtype = complex if complex_arg else float
    z = z.astype(dtype)
    start = _start_index(order, np.max(np.abs(z)) if z.size else 0.0)

    if complex_arg:
        # normalize through exp(-i s z) = J_0 + 2 sum (-i s)^m J_m with the
        # sign s chosen so that |exp(-i s z)| >= 1 (no cancellation).
        s = np.where(z.imag >= 0, 1.0, -1.0)
        phase = -1j * s
        target = np.exp(-1j * s * z)
    else:
        phase = None
        target = None

    j_next = np.zeros_like(z)
    j_cur = np.full_like(z, 1e-300)
    norm = np.zeros_like(z)
    s0 = np.zeros_like(z)
    s1 = np.zeros_like(z)
    j_order = np.zeros_like(z)
    j1 = np.zeros_like(z)
    two_over_z = 2.0 / z
    # powers of the complex normalization phase, indexed by m mod 4
    if complex_arg:
        phase_pow = [np.ones_like(z), phase, phase * phase, phase * phase * phase]

    for m in range(start, -1, -1):
        # j_cur holds the (unnormalized) J_m here
        if m == order:
            j_order = j_cur.copy()
        if m == 1:
            j1 = j_cur.copy()
        if m > 0:
            if complex_arg:
                norm = norm + 2.0 * phase_pow[m % 4] * j_cur
            elif m % 2 == 0:
                norm = norm + 2.0 * j_cur
            if with_neumann:
                if m % 2 == 0:
                    k = m // 2
                    s0 = s0 + ((-1.0) ** k / k) * j_cur
                else:
                    i = (m - 1) // 2
                    coef = (-1.0) ** (i + 1) * (1.0 / (i + 1) + (1.0 / i if i >= 1 else 0.0))
                    s1 = s1 + coef * j_cur
            j_prev = m * two_over_z * j_cur - j_next
            j_next, j_cur = j_cur, j_prev
            big = np.abs(j_cur) > _RESCALE
            if np.any(big):
                scale = np.where(big, 1.0 / _RESCALE, 1.0)
                j_next = j_next * scale
                j_cur = j_cur * scale
                norm = norm * scale
                s0 = s0 * scale
                s1 = s1 * scale
                j_order = j_order * scale
                j1 = j1 * scale
    j0 = j_cur
    norm = norm + j0
    if order == 0:
        j_order = j0.copy()
    if complex_arg:
        scale = target / norm
    else:
        scale = 1.0 / norm
    return j_order * scale, j0 * scale, j1 * scale, s0 * scale, s1 * scale


def bessel_j(order, z):
    """Bessel function of the first kind ``J_order(z)``.

    ``z`` may be real or complex, scalar or array. Real input gives real
    output. Raises :class:`DomainError` for ``order > 60`` or ``|z| > 100``.
    """
    order = _check_order(order)
    z = np.asarray(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if not np.issubdtype(z.dtype, np.number):
        raise DomainError("argument must be numeric")
    if np.iscomplexobj(z) and np.all(z.imag == 0):
        out_complex = True
    else:
        out_complex = np.iscomplexobj(z)
    z = z.astype(complex if out_complex else float)
    if not np.all(np.isfinite(z)):
        raise DomainError("argument must be finite")
    if np.any(np.abs(z) > MAX_ARGUMENT):
        raise DomainError(f"|z| exceeds the supported maximum {MAX_ARGUMENT}")

    out = np.empty_like(z)
    small = np.abs(z) <= J_SERIES_SWITCH
    if np.any(small):
        out[small] = _j_series(order, z[small])
    if np.any(~small):
        zl = z[~small]
        if out_complex and np.all(zl.imag == 0):
            jl = _miller(zl.real, order)[0].astype(complex)
        else:
            jl = _miller(zl, order)[0]
        out[~small] = jl
    return out[0] if scalar else out


def _y01_series(x):
    """Y_0 and Y_1 from their ascending series (valid for x <= SERIES_SWITCH)."""
    half = x / 2.0
    q = half * half
    log_term = np.log(half) + EULER_GAMMA
    j0 = bessel_j(0, x)
    j1 = bessel_j(1, x)

    # Y_0: (2/pi)[(log(x/2)+gamma) J_0 + sum_{k>=1} (-1)^(k+1) H_k q^k / (k!)^2]
    term = np.ones_like(x)
    harmonic = 0.0
    acc0 = np.zeros_like(x)
    for k in range(1, _SERIES_MAX_TERMS):
        term = -term * q / (k * k)
        harmonic += 1.0 / k
        inc = -harmonic * term
        acc0 = acc0 + inc
        if np.all(np.abs(inc) <= _SERIES_TOL * np.maximum(np.abs(acc0), 1e-300)):
            break
    y0 = (2.0 / np.pi) * (log_term * j0 + acc0)

    # Y_1: -2/(pi x) + (2/pi) log(x/2) J_1
    #      - (1/pi) sum_k (-1)^k [psi(k+1) + psi(k+2)] (x/2)^(2k+1) / (k! (k+1)!)
    term = half.copy()
    psi_a = -EULER_GAMMA
    psi_b = 1.0 - EULER_GAMMA
    acc1 = (psi_a + psi_b) * term
    for k in range(1, _SERIES_MAX_TERMS):
        term = -term * q / (k * (k + 1))
        psi_a += 1.0 / k
        psi_b += 1.0 / (k + 1)
        inc = (psi_a + psi_b) * term
        acc1 = acc1 + inc
        if np.all(np.abs(inc) <= _SERIES_TOL * np.maximum(np.abs(acc1), 1e-300)):
            break
    y1 = -2.0 / (np.pi * x) + (2.0 / np.pi) * np.log(half) * j1 - acc1 / np.pi
    return y0, y1


def _jy01(x):
    """``(J_0, J_1, Y_0, Y_1)`` at positive real ``x``; one recurrence sweep above the switch."""
    j0 = np.empty_like(x)
    j1 = np.empty_like(x)
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)
    small = x <= SERIES_SWITCH
    if np.any(small):
        xs = x[small]
        j0[small] = bessel_j(0, xs)
        j1[small] = bessel_j(1, xs)
        y0[small], y1[small] = _y01_series(xs)
    if np.any(~small):
        xl = x[~small]
        _, a0, a1, s0, s1 = _miller(xl, 1, with_neumann=True)
        log_term = np.log(xl / 2.0) + EULER_GAMMA
        j0[~small] = a0
        j1[~small] = a1
        y0[~small] = (2.0 / np.pi) * (log_term * a0 - 2.0 * s0)
        y1[~small] = (2.0 / np.pi) * (log_term * a1 - a0 / xl + s1)
    return j0, j1, y0, y1


def _y01(x):
    _, _, y0, y1 = _jy01(x)
    return y0, y1


def bessel_y(order, x):
    """Bessel function of the second kind ``Y_order(x)`` for order 0 or 1, ``x > 0``."""
    order = _check_order(order, allowed={0, 1})
    x = np.asarray(x)
    scalar = x.ndim == 0
    x = _as_positive_real(np.atleast_1d(x))
    y0, y1 = _y01(x)
    out = y0 if order == 0 else y1
    return out[0] if scalar else out


def hankel1(order, x):
    """Hankel function ``H^(1)_order(x) = J_order(x) + i Y_order(x)``, order 0 or 1, ``x > 0``."""
    order = _check_order(order, allowed={0, 1})
    x = np.asarray(x)
    scalar = x.ndim == 0
    x = _as_positive_real(np.atleast_1d(x))
    j0, j1, y0, y1 = _jy01(x)
    out = j0 + 1j * y0 if order == 0 else j1 + 1j * y1
    return out[0] if scalar else out


def bessel_y_orders(max_order, x):
    """``Y_0 .. Y_max_order`` at positive real ``x`` by forward recurrence.

    Forward recurrence is stable for ``Y`` (the dominant solution). Returns
    an array of shape ``(max_order + 1,) + x.shape``.
    """
    _check_order(max_order)
    x = np.asarray(x)
    xs = _as_positive_real(np.atleast_1d(x))
    y0, y1 = _y01(xs)
    out = np.empty((max_order + 1,) + xs.shape)
    out[0] = y0
    if max_order >= 1:
        out[1] = y1
    for m in range(1, max_order):
        out[m + 1] = (2.0 * m / xs) * out[m] - out[m - 1]
    return out.reshape((max_order + 1,) + x.shape)
