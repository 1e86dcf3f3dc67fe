"""Modified Bessel functions of the second kind for integer order.

``K_0`` and ``K_1`` come from their ascending series for ``x <= 2`` and from
Steed's continued fraction (Temme's normalisation) above that.  Higher orders
follow by upward recurrence, which is stable for ``K_n``.
"""

from __future__ import annotations

import math

EULER_GAMMA = 0.5772156649015329

MAX_ORDER = 64
SERIES_WINDOW = 0.5

_EPS = 1e-17
_MAXIT = 10000


def _k0_k1_series(x: float) -> tuple[float, float]:
    # K0 = -(ln(x/2) + C) I0 + sum H_k q^k/(k!)^2
    # K1 = 1/x + ln(x/2) I1 - (x/4) sum [psi(k+1) + psi(k+2)] q^k/(k!(k+1)!)
    q = 0.25 * x * x
    log_half = math.log(0.5 * x)

    i0 = 1.0
    i1 = 0.0
    k0_tail = 0.0
    k1_tail = 0.0
    term = 1.0  # q^k / (k!)^2
    harmonic = 0.0
    psi_k1 = -EULER_GAMMA  # psi(k+1)
    for k in range(_MAXIT):
        if k > 0:
            term *= q / (k * k)
            harmonic += 1.0 / k
            psi_k1 += 1.0 / k
            i0 += term
            k0_tail += harmonic * term
        term1 = term / (k + 1)  # q^k / (k!(k+1)!)
        psi_k2 = psi_k1 + 1.0 / (k + 1)
        i1 += term1
        k1_tail += (psi_k1 + psi_k2) * term1
        if term < _EPS * i0 and k > 0:
            break

    i1 *= 0.5 * x
    k0 = -(log_half + EULER_GAMMA) * i0 + k0_tail
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * k1_tail
    return k0, k1


def _k0_k1_continued_fraction(x: float) -> tuple[float, float]:
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, _MAXIT):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError(f"continued fraction failed to converge at x={x}")
    h *= a1
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k(n: int, x: float) -> float:
    """Modified Bessel function of the second kind ``K_n(x)``.

    Parameters
    ----------
    n : int
        Non-negative integer order, at most 64.
    x : float
        Strictly positive argument.

    Raises
    ------
    ValueError
        If ``x <= 0`` or ``n`` is outside ``[0, 64]``.
    OverflowError
        If the value exceeds the double range (large ``n``, tiny ``x``).
    """
    if n != int(n) or n < 0 or n > MAX_ORDER:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}], got {n}")
    n = int(n)
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"bessel_k requires finite x > 0, got {x}")

    if x <= 2.0:
        k_prev, k_cur = _k0_k1_series(x)
    else:
        k_prev, k_cur = _k0_k1_continued_fraction(x)
    if n == 0:
        return k_prev

    two_over_x = 2.0 / x
    for j in range(1, n):
        k_prev, k_cur = k_cur, k_prev + j * two_over_x * k_cur
        if math.isinf(k_cur):
            raise OverflowError(f"K_{n}({x}) exceeds the double-precision range")
    if math.isinf(k_cur):
        raise OverflowError(f"K_{n}({x}) exceeds the double-precision range")
    return k_cur


def bessel_k_small_x_series(n: int, x: float) -> float:
    """Truncated small-argument expansion of ``x**n * K_n(x)``.

    For ``n == 2`` the logarithmic form
    ``(4 - x^2)/2 + (x^4/8) (-ln(x/2) - c0)`` with ``c0 = C - 3/4`` is used;
    for ``n >= 3`` the finite polynomial part
    ``1/2 sum_{l<n} (-1)^l (n-l-1)!/l! x^(2l) / 2^(2l-n)``.

    Only valid for ``0 < x <= 0.5``.
    """
    if n != int(n) or n < 2:
        raise ValueError(f"series is defined for integer n >= 2, got {n}")
    n = int(n)
    if not 0.0 < x <= SERIES_WINDOW:
        raise ValueError(f"series window is 0 < x <= {SERIES_WINDOW}, got {x}")

    if n == 2:
        c0 = EULER_GAMMA - 0.75
        return 0.5 * (4.0 - x * x) + x**4 / 8.0 * (-math.log(0.5 * x) - c0)

    total = 0.0
    for l in range(n):
        total += (-1) ** l * math.factorial(n - l - 1) / math.factorial(l) * x ** (2 * l) / 2.0 ** (2 * l - n)
    return 0.5 * total
