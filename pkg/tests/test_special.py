import math

import numpy as np
import pytest
from scipy.special import jv

from physics.special import FIRST_J0_ROOT, bessel_j, bessel_j_orders, jacobi_anger_partial


@pytest.mark.parametrize(
    "x",
    [0.3, 2.404825557695773, 4.9, 7.0, 20.0, 45.0],
    ids=["small", "j0-root", "series-edge", "miller", "large", "near-limit"],
)
def test_bessel_matches_scipy(x):
    orders = np.arange(0, 61)
    ours = np.array([bessel_j(int(n), x) for n in orders])
    error = np.max(np.abs(ours - jv(orders, x)))
    assert error < 1e-13, f"max |J_n({x}) - reference| = {error:.3e}"


def test_orders_in_one_pass_agree_with_single_orders():
    values = bessel_j_orders(12.5, 40)
    assert np.allclose(values, [bessel_j(n, 12.5) for n in range(41)], atol=1e-14, rtol=0)


def test_first_root_of_j0():
    assert abs(bessel_j(0, FIRST_J0_ROOT)) < 1e-15
    assert bessel_j(2, FIRST_J0_ROOT) == pytest.approx(0.4317548, abs=1e-7)


@pytest.mark.parametrize("n, x", [(-1, 1.3), (-4, 8.0), (3, -2.0)], ids=["J-1", "J-4", "negative-x"])
def test_symmetries(n, x):
    assert bessel_j(n, x) == pytest.approx(jv(n, x), abs=1e-14)


@pytest.mark.parametrize("n, x", [(201, 1.0), (2, 60.0), (2.5, 1.0)], ids=["order", "argument", "non-integer"])
def test_outside_supported_range(n, x):
    with pytest.raises(ValueError):
        bessel_j(n, x)


def test_recurrence_holds():
    x = 9.0
    values = bessel_j_orders(x, 40)
    n = np.arange(1, 40)
    residual = values[n - 1] + values[n + 1] - (2 * n / x) * values[n]
    assert np.max(np.abs(residual)) < 1e-13


@pytest.mark.parametrize("tau", [0.0, 0.7, 2.9], ids=["tau=0", "tau=0.7", "tau=2.9"])
def test_jacobi_anger_partial_sums_converge(tau):
    cos_value, sin_value = jacobi_anger_partial(FIRST_J0_ROOT, tau, 20)
    assert cos_value == pytest.approx(math.cos(FIRST_J0_ROOT * math.sin(tau)), abs=1e-14)
    assert sin_value == pytest.approx(math.sin(FIRST_J0_ROOT * math.sin(tau)), abs=1e-14)
