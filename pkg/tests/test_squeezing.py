import math

import numpy as np
import pytest

from physics.dynamics import squeeze_unitary
from physics.exceptions import DegenerateStateError, SpaceMismatchError, TruncationError
from physics.fockspace import HilbertSpace, StateVector, expectation, fidelity, number
from physics.schemas import SqueezeParam
from physics.squeezing import (
    LogicalLabel,
    kl_check,
    log_cosh,
    logical_state,
    moment_ratio,
    moment_ratio_closed_form,
    norm_deficiency,
    normalization_constants,
    number_moment,
    rotation_expectation,
    squeezed_vacuum,
)


def test_squeezed_vacuum_matches_matrix_exponential(osc120):
    xi = SqueezeParam(r=1.0, phi=0.0)
    series = squeezed_vacuum(xi, osc120)
    oracle = squeeze_unitary(xi, osc120) @ StateVector.basis(osc120, 0)
    assert fidelity(series, oracle) >= 1 - 1e-10


def test_squeezed_vacuum_mean_occupation(osc120, xi_i):
    state = squeezed_vacuum(xi_i, osc120)
    assert expectation(number(osc120), state).real == pytest.approx(math.sinh(1.0) ** 2, abs=1e-9)
    assert expectation(number(osc120), state).real == pytest.approx(1.38109, abs=1e-5)


def test_phase_enters_even_amplitudes():
    space = HilbertSpace(40, has_qubit=False)
    state = squeezed_vacuum(SqueezeParam(r=0.5, phi=0.5 * math.pi), space)
    c0, c2 = state.amplitudes[0], state.amplitudes[2]
    expected = -1j * math.tanh(0.5) / math.sqrt(2.0)
    assert c2 / c0 == pytest.approx(expected, rel=1e-12)
    assert np.all(state.amplitudes[1::2] == 0)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.5], ids=["r=0.5", "r=1", "r=1.5"])
def test_norm_deficiency_shrinks_with_cutoff(r):
    xi = SqueezeParam(r=r)
    assert norm_deficiency(xi, 200) < 1e-8
    assert norm_deficiency(xi, 80) < norm_deficiency(xi, 40)


def test_too_small_cutoff_raises_with_deficiency(xi_i):
    with pytest.raises(TruncationError) as excinfo:
        squeezed_vacuum(xi_i, HilbertSpace(10, has_qubit=False))
    assert excinfo.value.deficiency > 1e-6


def test_squeezed_vacuum_needs_oscillator_space(xi_i):
    with pytest.raises(SpaceMismatchError):
        squeezed_vacuum(xi_i, HilbertSpace(120))


def test_normalization_constants_at_unit_squeezing():
    n_plus, n_minus = normalization_constants(1.0)
    assert n_plus / 4 == pytest.approx(0.75779, abs=1e-5)
    assert n_minus / 4 == pytest.approx(0.24221, abs=1e-5)
    assert n_plus + n_minus == pytest.approx(4.0)


def test_small_r_normalization_has_no_cancellation():
    _, n_minus = normalization_constants(1e-6)
    # 1 - cosh(2r)^{-1/2} ~ r^2 for small r
    assert n_minus == pytest.approx(2e-12, rel=1e-6)


def test_log_cosh_is_stable():
    assert log_cosh(800.0) == pytest.approx(800.0 - math.log(2.0))
    assert log_cosh(1e-5) == pytest.approx(0.5e-10, rel=1e-8)


@pytest.mark.parametrize(
    "label, residue",
    [(LogicalLabel.ZERO, 0), (LogicalLabel.ONE, 2)],
    ids=["zero_L", "one_L"],
)
def test_code_word_fock_support(label, residue, osc200, xi_i):
    state = logical_state(label, xi_i, osc200)
    support = np.flatnonzero(np.abs(state.amplitudes) > 0)
    assert np.all(support % 4 == residue), f"{label.value} support {support[:6]}..."
    assert state.is_normalized()


def test_code_words_are_orthogonal(osc200, xi_i):
    zero = logical_state(LogicalLabel.ZERO, xi_i, osc200)
    one = logical_state(LogicalLabel.ONE, xi_i, osc200)
    assert fidelity(zero, one) == 0.0


def test_code_words_from_squeezed_vacua(osc120, xi_i):
    plus = squeezed_vacuum(xi_i, osc120).amplitudes
    minus = squeezed_vacuum(xi_i.negated(), osc120).amplitudes
    expected = StateVector.from_amplitudes(osc120, plus + minus)
    assert fidelity(expected, logical_state(LogicalLabel.ZERO, xi_i, osc120)) == pytest.approx(1.0, abs=1e-12)


def test_one_l_undefined_without_squeezing(osc120):
    with pytest.raises(DegenerateStateError):
        logical_state(LogicalLabel.ONE, SqueezeParam(r=0.0), osc120)


@pytest.mark.parametrize(
    "label, angle_quarters, expected",
    [(LogicalLabel.ZERO, 1, 1.0), (LogicalLabel.ONE, 1, -1.0), (LogicalLabel.ONE, 2, 1.0)],
    ids=["zero_L-quarter", "one_L-quarter", "one_L-half"],
)
def test_rotation_acts_as_logical_z(label, angle_quarters, expected, osc200, xi_i):
    state = logical_state(label, xi_i, osc200)
    value = rotation_expectation(state, angle_quarters * math.pi / 2)
    assert value == pytest.approx(expected, abs=1e-12)


def test_moment_series_matches_operator_expectation(osc200, xi_i):
    state = logical_state(LogicalLabel.ZERO, xi_i, osc200)
    operator = expectation(number(osc200), state).real
    assert number_moment(LogicalLabel.ZERO, 1.0, 1) == pytest.approx(operator, abs=1e-6)


def test_moment_ratio_against_truncated_operators():
    space = HilbertSpace(300, has_qubit=False)
    xi = SqueezeParam(r=1.2)
    n = number(space).elements
    n2 = n @ n
    zero = logical_state(LogicalLabel.ZERO, xi, space).amplitudes
    one = logical_state(LogicalLabel.ONE, xi, space).amplitudes
    operator_ratio = np.vdot(zero, n2 @ zero).real / np.vdot(one, n2 @ one).real
    assert moment_ratio(1.2, 2).ratio == pytest.approx(operator_ratio, abs=1e-5)


@pytest.mark.parametrize("r", [0.2, 1.0, 2.5], ids=["r=0.2", "r=1", "r=2.5"])
def test_first_moment_ratio_closed_form(r):
    assert moment_ratio(r, 1).ratio == pytest.approx(moment_ratio_closed_form(r), rel=1e-10)


def test_moment_ratio_tends_to_one_with_squeezing():
    ratios = [moment_ratio(r, 1).ratio for r in (0.5, 1.0, 2.0, 3.0)]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert 0.8 < ratios[-1] < 1.0


@pytest.mark.parametrize("p", [1, 2, 3, 4], ids=["p=1", "p=2", "p=3", "p=4"])
def test_moment_mismatch_shrinks_on_grid(p):
    mismatch = [abs(moment_ratio(r, p).ratio - 1.0) for r in (0.5, 1.0, 1.5, 2.0, 2.5)]
    assert all(b <= a for a, b in zip(mismatch, mismatch[1:])), f"|ratio - 1| = {mismatch}"


def test_moment_report_fields():
    report = moment_ratio(1.0, 3)
    assert report.terms_used > 10
    assert report.truncation_estimate < 1e-12 * report.moment_one


@pytest.mark.parametrize("p", [0, 5], ids=["p=0", "p=5"])
def test_moment_order_must_be_supported(p):
    with pytest.raises(ValueError):
        number_moment(LogicalLabel.ZERO, 1.0, p)


def test_knill_laflamme_orthogonality(osc200, xi_i):
    report = kl_check(xi_i, osc200)
    assert report.off_diagonal_max <= 1e-12
    assert dict(report.moment_mismatches)[1] > 0.0, "finite squeezing leaves a non-zero moment mismatch"


def test_squeeze_param_phase_is_canonical():
    assert SqueezeParam(r=1.0, phi=-0.5 * math.pi).phi == pytest.approx(1.5 * math.pi)
    xi = SqueezeParam.from_evolution(g_cs=0.25, t=2.0)
    assert xi.r == pytest.approx(1.0)
    assert xi.xi == pytest.approx(1j)
