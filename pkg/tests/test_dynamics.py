import math

import numpy as np
import pytest

from physics import dynamics
from physics.dynamics import (
    evolve_density,
    evolve_state,
    lindblad_rhs,
    propagator,
    sample_times,
    squeeze_unitary,
)
from physics.exceptions import SolverError
from physics.fockspace import (
    EXCITED,
    GROUND,
    DensityMatrix,
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    expectation,
    fidelity,
    number,
)
from physics.hamiltonians import h_cs, hamiltonian_provider
from physics.schemas import NoiseParams, SolverOptions, SqueezeParam, SystemParams
from physics.squeezing import squeezed_vacuum

QUBIT_ONLY = HilbertSpace(1)


def _zero_hamiltonian(space):
    return OperatorMatrix(space, np.zeros((space.total_dim, space.total_dim)), hermitian_hint=True)


def _plus_state(space):
    return StateVector.product([1.0, 1.0], StateVector.basis(space.oscillator(), 0))


def test_conditional_squeezing_identity(osc120):
    params = SystemParams.at_first_j0_root(g=1e-2)
    space = osc120.composite()
    t_end = 0.5 / params.g_cs
    psi0 = StateVector.basis(space, 0, EXCITED)
    final = evolve_state(h_cs(params, space), psi0, 0.0, t_end).final

    branch = StateVector.from_amplitudes(osc120, final.oscillator_block(EXCITED))
    expected = squeezed_vacuum(SqueezeParam.from_evolution(params.g_cs, t_end), osc120)
    assert fidelity(branch, expected) >= 1 - 1e-8
    assert np.allclose(final.oscillator_block(GROUND), 0.0)


def test_constant_hamiltonian_evolution_matches_propagator():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(20)
    h = h_cs(params, space)
    psi0 = _plus_state(space)
    solved = evolve_state(h, psi0, 0.0, 3.0).final
    exact = propagator(h, 3.0) @ psi0
    assert fidelity(solved, exact) == pytest.approx(1.0, abs=1e-9)
    assert propagator(h, 3.0).is_unitary()


def test_output_times_are_respected():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(10)
    times = sample_times(0.0, 2.0, 5)
    trajectory = evolve_state(hamiltonian_provider("rotating", params, space), _plus_state(space),
                              0.0, 2.0, output_times=times)
    assert np.allclose(trajectory.times, times)
    assert len(trajectory) == 5
    assert trajectory.diagnostics["max_norm_drift"] < 1e-8


def test_fixed_rk4_is_fourth_order():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(20)
    h = h_cs(params, space)
    psi0 = _plus_state(space)
    exact = (propagator(h, 2.0) @ psi0).amplitudes

    errors = []
    for step in (0.1, 0.05):
        opts = SolverOptions(method="fixed_rk4", fixed_step=step)
        final = evolve_state(h, psi0, 0.0, 2.0, opts).final
        errors.append(np.linalg.norm(final.amplitudes - exact))
    ratio = errors[0] / errors[1]
    assert 12.0 < ratio < 20.0, f"halving the step reduced the error by {ratio:.2f}, expected ~16"


@pytest.mark.parametrize(
    "kind, frequency",
    [("lab", 21.0), ("interaction", 3.0), ("rotating", 3.0), ("rotating_expanded", 3.0), ("cs", 0.0)],
    ids=["lab", "interaction", "rotating", "rotating_expanded", "cs"],
)
def test_providers_expose_fastest_frequency(kind, frequency):
    provider = hamiltonian_provider(kind, SystemParams.at_first_j0_root(g=0.1), HilbertSpace(4))
    assert provider.fastest_frequency == pytest.approx(frequency)
    expected_cap = 2 * math.pi / (dynamics.STEPS_PER_FAST_PERIOD * frequency) if frequency else math.inf
    assert dynamics.step_cap(provider) == pytest.approx(expected_cap)


def test_adaptive_step_is_capped_by_drive_frequency():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(4)
    trajectory = evolve_state(hamiltonian_provider("interaction", params, space), _plus_state(space), 0.0, 2.0)
    assert trajectory.diagnostics["max_step"] == pytest.approx(2 * math.pi / 60)


def test_fixed_rk4_step_is_sized_from_drive_frequency():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(4)
    opts = SolverOptions(method="fixed_rk4", fixed_step=1.0, rel_tol=1e-4)
    trajectory = evolve_state(hamiltonian_provider("interaction", params, space), _plus_state(space), 0.0, 2.0, opts)
    cap = 2 * math.pi / 60
    assert trajectory.diagnostics["fixed_step"] == pytest.approx(cap)
    assert trajectory.diagnostics["rhs_evaluations"] == 4 * math.ceil(2.0 / cap)


def test_constant_hamiltonian_keeps_requested_step():
    space = HilbertSpace(4)
    opts = SolverOptions(method="fixed_rk4", fixed_step=0.5)
    trajectory = evolve_state(_zero_hamiltonian(space), _plus_state(space), 0.0, 2.0, opts)
    assert trajectory.diagnostics["fixed_step"] == 0.5
    assert trajectory.diagnostics["rhs_evaluations"] == 16


def test_zero_length_interval_returns_initial_state():
    space = HilbertSpace(4)
    psi0 = _plus_state(space)
    trajectory = evolve_state(_zero_hamiltonian(space), psi0, 1.0, 1.0)
    assert len(trajectory) == 1
    assert np.array_equal(trajectory.final.amplitudes, psi0.amplitudes)


@pytest.mark.parametrize("t0, t1", [(1.0, 0.5)], ids=["backwards"])
def test_time_order_is_checked(t0, t1):
    space = HilbertSpace(4)
    with pytest.raises(ValueError):
        evolve_state(_zero_hamiltonian(space), _plus_state(space), t0, t1)


def test_unnormalized_initial_state_rejected():
    space = HilbertSpace(4)
    psi0 = StateVector(space, 2.0 * _plus_state(space).amplitudes)
    with pytest.raises(ValueError):
        evolve_state(_zero_hamiltonian(space), psi0, 0.0, 1.0)


def test_norm_loss_aborts_integration():
    space = HilbertSpace(4)
    leaky = -0.5j * np.eye(space.total_dim)
    with pytest.raises(SolverError) as excinfo:
        evolve_state(lambda t: leaky, _plus_state(space), 0.0, 1.0)
    assert excinfo.value.diagnostics["max_norm_drift"] > 0.5


def test_dephasing_decays_coherence_at_gamma_phi():
    rho0 = _plus_state(QUBIT_ONLY).to_density()
    noise = NoiseParams(gamma_phi=1.0)
    final = evolve_density(_zero_hamiltonian(QUBIT_ONLY), noise, rho0, 0.0, 1.0).final
    coherence = final.elements[QUBIT_ONLY.index(0, EXCITED), QUBIT_ONLY.index(0, GROUND)]
    assert 2 * coherence.real == pytest.approx(math.exp(-1.0), abs=1e-6)


def test_dephasing_prefactor_is_load_bearing(monkeypatch):
    monkeypatch.setattr(dynamics, "DEPHASING_PREFACTOR", 1.0)
    rho0 = _plus_state(QUBIT_ONLY).to_density()
    final = evolve_density(_zero_hamiltonian(QUBIT_ONLY), NoiseParams(gamma_phi=1.0), rho0, 0.0, 1.0).final
    coherence = final.elements[QUBIT_ONLY.index(0, EXCITED), QUBIT_ONLY.index(0, GROUND)]
    assert abs(2 * coherence.real - math.exp(-1.0)) > 1e-2, "a doubled dephasing rate must be visible"


def test_qubit_decay_empties_excited_state():
    rho0 = StateVector.basis(QUBIT_ONLY, 0, EXCITED).to_density()
    final = evolve_density(_zero_hamiltonian(QUBIT_ONLY), NoiseParams(gamma_1=1.0), rho0, 0.0, 1.0).final
    population = final.elements[QUBIT_ONLY.index(0, EXCITED), QUBIT_ONLY.index(0, EXCITED)].real
    assert population == pytest.approx(math.exp(-1.0), abs=1e-6)


@pytest.mark.parametrize(
    "n_th, initial, expected",
    [(0.0, 1, math.exp(-1.0)), (0.5, 0, 0.5 * (1 - math.exp(-1.0)))],
    ids=["zero-temperature", "thermal"],
)
def test_oscillator_damping(n_th, initial, expected):
    space = HilbertSpace(30, has_qubit=False)
    rho0 = StateVector.basis(space, initial).to_density()
    final = evolve_density(_zero_hamiltonian(space), NoiseParams(gamma_m=1.0, n_m_th=n_th), rho0, 0.0, 1.0).final
    assert expectation(number(space), final).real == pytest.approx(expected, abs=1e-5)


def test_lindblad_rhs_is_trace_free_and_hermitian():
    rng = np.random.default_rng(11)
    space = HilbertSpace(6)
    amplitudes = rng.normal(size=14) + 1j * rng.normal(size=14)
    rho = StateVector.from_amplitudes(space, amplitudes).to_density()
    params = SystemParams.at_first_j0_root(g=0.1)
    noise = NoiseParams(gamma_1=0.3, gamma_phi=0.2, gamma_m=0.1, n_m_th=1.0)
    drho = lindblad_rhs(h_cs(params, space), noise, rho)
    assert abs(np.trace(drho)) < 1e-12
    assert np.max(np.abs(drho - drho.conj().T)) < 1e-12


def test_open_evolution_stays_physical():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(12)
    noise = NoiseParams.from_ratios(params.g, 1.0, 1.0, gamma_m_over_g=0.1, n_m_th=1.0)
    trajectory = evolve_density(hamiltonian_provider("interaction", params, space), noise,
                                _plus_state(space).to_density(), 0.0, 5.0, output_times=sample_times(0.0, 5.0, 6))
    assert trajectory.diagnostics["min_eigenvalue"] > -1e-6
    assert all(isinstance(state, DensityMatrix) for state in trajectory.states)
    assert trajectory.final.purity() < 1.0


def test_closed_density_evolution_matches_state_evolution():
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(12)
    h = h_cs(params, space)
    psi0 = _plus_state(space)
    rho = evolve_density(h, NoiseParams(), psi0.to_density(), 0.0, 2.0).final
    psi = propagator(h, 2.0) @ psi0
    assert fidelity(psi, rho) == pytest.approx(1.0, abs=1e-6)


def test_squeeze_unitary_inverse_pair(osc120):
    xi = SqueezeParam(r=1.0, phi=0.3)
    product = squeeze_unitary(xi, osc120) @ squeeze_unitary(xi.negated(), osc120)
    assert np.max(np.abs(product.elements - np.eye(osc120.osc_dim))) < 1e-8
