"""
Bessel functions of the first kind, integer order

Power series where it is well conditioned (|x| <= 5, or x^2/4 <= n + 1);
otherwise Miller's backward recurrence normalized with
1 = J_0 + 2 * sum_k J_2k. Absolute accuracy is ~1e-15 for n <= 200, |x| <= 50.
"""
import math
from typing import Tuple

import numpy as np

FIRST_J0_ROOT = 2.404825557695773

MAX_ORDER = 200
MAX_ARGUMENT = 50.0
SERIES_RADIUS = 5.0

_RESCALE_LIMIT = 1e250


def _check_range(n: int, x: float) -> None:
    if abs(n) > MAX_ORDER:
        raise ValueError(f"Bessel order {n} outside |n| <= {MAX_ORDER}")
    if not math.isfinite(x) or abs(x) > MAX_ARGUMENT:
        raise ValueError(f"Bessel argument {x} outside |x| <= {MAX_ARGUMENT}")


def _series(n: int, x: float) -> float:
    half = 0.5 * x
    term = math.exp(n * math.log(half) - math.lgamma(n + 1))
    if term == 0.0:
        return 0.0
    total = term
    k = 0
    while True:
        k += 1
        term *= -(half * half) / (k * (k + n))
        total += term
        if abs(term) <= 1e-17 * max(abs(total), 1e-300) or term == 0.0:
            return total


def _miller(x: float, n_max: int) -> np.ndarray:
    """J_0..J_{n_max}(x) for x > 0 by normalized backward recurrence"""
    top = max(n_max, int(x)) + 20 + int(math.sqrt(40.0 * max(n_max, x, 1.0)))
    top += top % 2
    values = np.zeros(top + 2)
    values[top] = 1e-30
    norm = 0.0
    for k in range(top, 0, -1):
        values[k - 1] = (2.0 * k / x) * values[k] - values[k + 1]
        if abs(values[k - 1]) > _RESCALE_LIMIT:
            values /= _RESCALE_LIMIT
            norm /= _RESCALE_LIMIT
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * values[k - 1]
    norm += values[0]
    return values[:n_max + 1] / norm


def bessel_j_orders(x: float, n_max: int) -> np.ndarray:
    """J_0(x) .. J_{n_max}(x) in one pass"""
    _check_range(n_max, x)
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if x == 0.0:
        values = np.zeros(n_max + 1)
        values[0] = 1.0
        return values
    sign = np.ones(n_max + 1)
    if x < 0:
        sign[1::2] = -1.0
    if abs(x) <= SERIES_RADIUS:
        values = np.array([_series(n, abs(x)) for n in range(n_max + 1)])
    else:
        values = _miller(abs(x), n_max)
    return sign * values


def bessel_j(n: int, x: float) -> float:
    """J_n(x); negative orders through J_{-n} = (-1)^n J_n"""
    if int(n) != n:
        raise ValueError("only integer orders are supported")
    n = int(n)
    _check_range(n, x)
    if n < 0:
        return (-1.0) ** (-n) * bessel_j(-n, x)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    sign = -1.0 if (x < 0 and n % 2 == 1) else 1.0
    ax = abs(x)
    if ax <= SERIES_RADIUS or 0.25 * ax * ax <= n + 1:
        return sign * _series(n, ax)
    return sign * float(_miller(ax, n)[n])


def jacobi_anger_partial(chi: float, tau: float, n_max: int) -> Tuple[float, float]:
    """
    Partial sums through harmonic n_max of
      cos(chi sin tau) = J_0 + 2 sum_n J_2n cos(2n tau)
      sin(chi sin tau) = 2 sum_n J_{2n-1} sin((2n-1) tau)
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    orders = bessel_j_orders(chi, 2 * n_max)
    n = np.arange(1, n_max + 1)
    cos_value = orders[0] + 2.0 * np.sum(orders[2 * n] * np.cos(2 * n * tau))
    sin_value = 2.0 * np.sum(orders[2 * n - 1] * np.sin((2 * n - 1) * tau))
    return float(cos_value), float(sin_value)
