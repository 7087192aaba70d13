import math

import numpy as np
import pytest

from physics.exceptions import DegenerateStateError, SpaceMismatchError
from physics.fockspace import (
    EXCITED,
    GROUND,
    DensityMatrix,
    HilbertSpace,
    StateVector,
    annihilation,
    creation,
    embed,
    expectation,
    fidelity,
    measure_qubit_x,
    number,
    partial_trace_qubit,
    pauli,
    pauli_matrix,
)


@pytest.mark.parametrize("cutoff", [4, 16, 64], ids=["N=4", "N=16", "N=64"])
def test_ladder_matrix_elements(cutoff):
    space = HilbertSpace(cutoff, has_qubit=False)
    b = annihilation(space).elements
    for n in range(1, cutoff + 1):
        assert b[n - 1, n] == math.sqrt(n), f"<{n - 1}|b|{n}> = {b[n - 1, n]}"

    commutator = b @ creation(space).elements - creation(space).elements @ b
    expected = np.eye(cutoff + 1)
    expected[cutoff, cutoff] = -cutoff
    assert np.allclose(commutator, expected, rtol=0.0, atol=1e-12), "[b, b^dag] should be I except the corner entry -N"
    assert commutator[cutoff, cutoff] == -cutoff


def test_composite_index_puts_excited_first():
    space = HilbertSpace(3)
    assert space.total_dim == 8
    assert space.index(0, EXCITED) == 0
    assert space.index(2, GROUND) == 6
    with pytest.raises(IndexError):
        space.index(4, EXCITED)


def test_cutoff_must_be_positive():
    with pytest.raises(ValueError):
        HilbertSpace(0)


def test_pauli_algebra():
    x, y, z = (pauli_matrix(axis) for axis in ("x", "y", "z"))
    assert np.allclose(x @ y, 1j * z)
    assert np.allclose(z @ np.array([1, 0]), np.array([1, 0])), "sigma_z |e> should be +|e>"
    assert np.allclose(pauli_matrix("minus") @ np.array([1, 0]), np.array([0, 1])), "sigma_- maps |e> to |g>"


def test_embed_matches_kron():
    space = HilbertSpace(5)
    op = embed(pauli_matrix("z"), number(space.oscillator()), space)
    assert op.hermitian_hint
    assert np.allclose(op.elements, np.kron(pauli_matrix("z"), np.diag(np.arange(6))))
    assert np.allclose(pauli("x", space).elements, np.kron(pauli_matrix("x"), np.eye(6)))


def test_pauli_needs_qubit():
    with pytest.raises(SpaceMismatchError):
        pauli("z", HilbertSpace(3, has_qubit=False))


def test_state_vector_rejects_zero_norm():
    with pytest.raises(DegenerateStateError):
        StateVector.from_amplitudes(HilbertSpace(2, has_qubit=False), np.zeros(3))


def test_state_vector_is_read_only():
    state = StateVector.basis(HilbertSpace(2, has_qubit=False), 1)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 1.0


@pytest.mark.parametrize(
    "trace_scale, hermitian",
    [(1.5, True), (1.0, False)],
    ids=["bad-trace", "non-hermitian"],
)
def test_density_matrix_validation(trace_scale, hermitian):
    elements = np.diag([0.5, 0.5, 0.0]).astype(complex) * trace_scale
    if not hermitian:
        elements[0, 1] = 0.3
    with pytest.raises(ValueError):
        DensityMatrix(HilbertSpace(2, has_qubit=False), elements)


def test_density_from_elements_normalizes():
    rho = DensityMatrix.from_elements(HilbertSpace(1, has_qubit=False), np.diag([2.0, 2.0]))
    assert rho.trace == pytest.approx(1.0)
    assert rho.purity() == pytest.approx(0.5)


def test_expectation_of_number_on_fock_state():
    space = HilbertSpace(6)
    state = StateVector.basis(space, 3, GROUND)
    assert expectation(number(space), state) == pytest.approx(3.0)
    assert expectation(number(space), state.to_density()) == pytest.approx(3.0)


def test_fidelity_forms_agree():
    space = HilbertSpace(4, has_qubit=False)
    a = StateVector.from_amplitudes(space, [1, 1j, 0, 0, 0])
    b = StateVector.from_amplitudes(space, [1, 0, 1, 0, 0])
    pure = fidelity(a, b)
    assert pure == pytest.approx(0.25)
    assert fidelity(a, b.to_density()) == pytest.approx(pure)
    assert fidelity(a.to_density(), b.to_density()) == pytest.approx(pure, abs=1e-8)


def test_measure_plus_state_gives_null_minus_branch():
    osc = HilbertSpace(3, has_qubit=False)
    state = StateVector.product([1.0, 1.0], StateVector.basis(osc, 2))
    measurement = measure_qubit_x(state)
    assert measurement.plus.probability == pytest.approx(1.0)
    assert measurement.minus.is_null, "(|e>+|g>)/sqrt(2) has no weight on |->"
    assert fidelity(measurement.plus.state, StateVector.basis(osc, 2)) == pytest.approx(1.0)


@pytest.mark.parametrize("as_density", [False, True], ids=["pure", "mixed"])
def test_measurement_probabilities_sum_to_one(as_density):
    rng = np.random.default_rng(7)
    space = HilbertSpace(5)
    for _ in range(100):
        state = StateVector.from_amplitudes(space, rng.normal(size=12) + 1j * rng.normal(size=12))
        if as_density:
            state = state.to_density()
        assert measure_qubit_x(state).total_probability == pytest.approx(1.0, abs=1e-12)


def _random_amplitudes(rng, size):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


@pytest.mark.parametrize("seed", [1, 2, 3], ids=["seed=1", "seed=2", "seed=3"])
def test_fidelity_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    space = HilbertSpace(4)
    a = StateVector.from_amplitudes(space, _random_amplitudes(rng, space.total_dim))
    b = StateVector.from_amplitudes(space, _random_amplitudes(rng, space.total_dim))
    mixtures = [
        DensityMatrix.mixture([StateVector.from_amplitudes(space, _random_amplitudes(rng, space.total_dim))
                               for _ in range(space.total_dim)], rng.uniform(0.1, 1.0, size=space.total_dim))
        for _ in range(2)
    ]
    rho, sigma = mixtures
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-14)
    assert fidelity(a, rho) == pytest.approx(fidelity(rho, a), abs=1e-14)
    assert fidelity(rho, sigma) == pytest.approx(fidelity(sigma, rho), abs=1e-10)
    assert 0.0 <= fidelity(rho, sigma) <= 1.0 + 1e-12


@pytest.mark.parametrize("axis", ["x", "y", "z", "minus"], ids=["x", "y", "z", "minus"])
def test_embedding_acts_factorwise(axis):
    rng = np.random.default_rng(11)
    space = HilbertSpace(4)
    osc_op = _random_amplitudes(rng, (5, 5))
    qubit, osc = _random_amplitudes(rng, 2), _random_amplitudes(rng, 5)
    joint = embed(pauli_matrix(axis), osc_op, space)

    assert np.allclose(joint.elements, (pauli(axis, space) @ embed(None, osc_op, space)).elements, atol=1e-14)
    assert np.allclose(joint.elements @ np.kron(qubit, osc),
                       np.kron(pauli_matrix(axis) @ qubit, osc_op @ osc), atol=1e-12)


def test_partial_trace_of_product_state():
    osc = HilbertSpace(2, has_qubit=False)
    state = StateVector.product([1.0, 1j], StateVector.basis(osc, 1))
    reduced = partial_trace_qubit(state.to_density())
    assert np.allclose(reduced.elements, np.diag([0, 1, 0]))


def test_space_mismatch_is_reported():
    with pytest.raises(SpaceMismatchError):
        fidelity(StateVector.basis(HilbertSpace(2, has_qubit=False), 0),
                 StateVector.basis(HilbertSpace(3, has_qubit=False), 0))
