"""
Invariant suite behind `python -m harness validate`

Every check returns a non-negative error measure compared against its tolerance.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel

from physics import dynamics
from physics.exceptions import ConfigError
from physics.fockspace import (
    EXCITED,
    DensityMatrix,
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    annihilation,
    creation,
    embed,
    fidelity,
    measure_qubit_x,
    number,
    pauli,
    pauli_matrix,
)
from physics.hamiltonians import (
    frame_transform,
    h_cs,
    h_lab,
    h_rotating,
    h_rotating_expanded,
    h_rwa,
    hamiltonian_provider,
    period_average,
)
from physics.schemas import NoiseParams, SolverOptions, SqueezeParam, SystemParams
from physics.special import FIRST_J0_ROOT, bessel_j, jacobi_anger_partial
from physics.squeezing import (
    MOMENT_ORDERS,
    LogicalLabel,
    kl_check,
    logical_state,
    moment_ratio,
    moment_ratio_closed_form,
    norm_deficiency,
    normalization_constants,
    number_moment,
    rotation_expectation,
    squeezed_vacuum,
)
from physics.wigner import wigner
from .config import ExperimentConfig, UNIT_SQUEEZE_G_T
from .experiments import rotating_vs_cs_fidelity, sweep_amplitude
from .protocol import initial_state, run_protocol, to_rotating_frame

logger = logging.getLogger(__name__)

XI_I = SqueezeParam(r=1.0, phi=0.5 * math.pi)
SEED = 20240229


class InvariantCheck(BaseModel):
    name: str
    module: str
    tolerance: float
    measured: Optional[float]
    passed: bool
    detail: str = ""


class ValidationReport(BaseModel):
    checks: List[InvariantCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[InvariantCheck]:
        return [check for check in self.checks if not check.passed]


@dataclass(frozen=True)
class Invariant:
    name: str
    module: str
    tolerance: float
    measure: Callable[[], float]


INVARIANTS: List[Invariant] = []


def invariant(name: str, module: str, tolerance: float):
    def register(func: Callable[[], float]) -> Callable[[], float]:
        INVARIANTS.append(Invariant(name, module, tolerance, func))
        return func
    return register


def random_state(rng: np.random.Generator, space: HilbertSpace) -> StateVector:
    return StateVector.from_amplitudes(space, rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim))


def random_density(rng: np.random.Generator, space: HilbertSpace, rank: Optional[int] = None) -> DensityMatrix:
    """Full rank unless `rank` is given"""
    rank = rank or space.total_dim
    return DensityMatrix.mixture([random_state(rng, space) for _ in range(rank)], rng.uniform(0.1, 1.0, size=rank))


@invariant("branch_probabilities_sum_to_one", "fockspace", 1e-12)
def _branch_probabilities() -> float:
    rng = np.random.default_rng(SEED)
    space = HilbertSpace(10)
    worst = 0.0
    for _ in range(100):
        psi = random_state(rng, space)
        worst = max(worst, abs(measure_qubit_x(psi).total_probability - 1.0),
                    abs(measure_qubit_x(psi.to_density()).total_probability - 1.0))
    return worst


@invariant("pauli_algebra", "fockspace", 1e-14)
def _pauli_algebra() -> float:
    space = HilbertSpace(3)
    product = (pauli("x", space) @ pauli("y", space)).elements
    return float(np.max(np.abs(product - 1j * pauli("z", space).elements)))


@invariant("ladder_commutator", "fockspace", 1e-12)
def _ladder_commutator() -> float:
    """[b, b^dag] = 1 except the truncation corner, which is -N"""
    worst = 0.0
    for cutoff in (4, 40, 120):
        space = HilbertSpace(cutoff, has_qubit=False)
        b, bd = annihilation(space).elements, creation(space).elements
        expected = np.eye(space.osc_dim)
        expected[cutoff, cutoff] = -cutoff
        worst = max(worst, float(np.max(np.abs(b @ bd - bd @ b - expected))),
                    float(np.max(np.abs(bd @ b - number(space).elements))))
    return worst


@invariant("kronecker_embedding", "fockspace", 1e-14)
def _kronecker_embedding() -> float:
    rng = np.random.default_rng(SEED)
    space = HilbertSpace(6)
    worst = 0.0
    for axis in ("x", "y", "z"):
        osc = rng.normal(size=(space.osc_dim,) * 2) + 1j * rng.normal(size=(space.osc_dim,) * 2)
        joint = embed(pauli_matrix(axis), osc, space).elements
        factored = (pauli(axis, space) @ embed(None, osc, space)).elements
        worst = max(worst, float(np.max(np.abs(joint - np.kron(pauli_matrix(axis), osc)))),
                    float(np.max(np.abs(joint - factored))))
    return worst


@invariant("fidelity_symmetry", "fockspace", 1e-10)
def _fidelity_symmetry() -> float:
    rng = np.random.default_rng(SEED)
    space = HilbertSpace(5)
    worst = 0.0
    for _ in range(20):
        a, b = random_state(rng, space), random_state(rng, space)
        rho, sigma = random_density(rng, space), random_density(rng, space)
        worst = max(worst,
                    abs(fidelity(a, b) - fidelity(b, a)),
                    abs(fidelity(a, rho) - fidelity(rho, a)),
                    abs(fidelity(rho, sigma) - fidelity(sigma, rho)),
                    abs(fidelity(a, b) - fidelity(a, b.to_density())))
    return worst


@invariant("first_j0_root", "hamiltonians", 1e-12)
def _first_root() -> float:
    return abs(bessel_j(0, FIRST_J0_ROOT))


@invariant("bessel_recurrence", "hamiltonians", 1e-10)
def _bessel_recurrence() -> float:
    worst = 0.0
    for x in (0.5, 2.405, 7.0, 20.0, 45.0):
        for n in range(1, 60):
            residual = bessel_j(n - 1, x) + bessel_j(n + 1, x) - (2.0 * n / x) * bessel_j(n, x)
            worst = max(worst, abs(residual))
    return worst


@invariant("jacobi_anger_partial_sums", "hamiltonians", 1e-12)
def _jacobi_anger() -> float:
    worst = 0.0
    for chi in (0.5, 2.405, 3.0):
        for tau in np.linspace(0.0, 2.0 * math.pi, 1000, endpoint=False):
            cos_value, sin_value = jacobi_anger_partial(chi, tau, 20)
            worst = max(worst, abs(cos_value - math.cos(chi * math.sin(tau))),
                        abs(sin_value - math.sin(chi * math.sin(tau))))
    return worst


@invariant("expansion_matches_closed_form", "hamiltonians", 1e-12)
def _expansion_exact() -> float:
    params = SystemParams.at_first_j0_root(g=1e-2)
    space = HilbertSpace(10)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for t in rng.uniform(0.0, 50.0, size=20):
        difference = h_rotating_expanded(params, space, t, n_max=30).elements - h_rotating(params, space, t).elements
        worst = max(worst, float(np.max(np.abs(difference))))
    return worst


@invariant("hamiltonians_hermitian", "hamiltonians", 1e-12)
def _hermitian() -> float:
    params = SystemParams(omega_q=20.0, omega_d=1.1, amplitude_A=1.3, g=0.05)
    space = HilbertSpace(8)
    rng = np.random.default_rng(SEED)
    providers = [hamiltonian_provider(kind, params, space) for kind in ("lab", "interaction", "rotating", "rotating_expanded")]
    worst = 0.0
    for t in rng.uniform(0.0, 100.0, size=100):
        for provider in providers:
            h = OperatorMatrix(space, provider.elements(t))
            worst = max(worst, float(np.max(np.abs(h.elements - h.dagger().elements))))
    return worst


@invariant("period_average_equals_rwa", "hamiltonians", 2e-3)
def _rwa_average() -> float:
    """Entrywise |<H~>_T - H_RWA| in units of g"""
    params = SystemParams.at_first_j0_root(g=1e-2)
    space = HilbertSpace(10)
    average = period_average(hamiltonian_provider("rotating", params, space), 2.0 * math.pi / params.omega_d, 4096)
    return float(np.max(np.abs(average.elements - h_rwa(params, space).elements))) / params.g


@invariant("frame_transform_lab_to_rotating", "hamiltonians", 1e-6)
def _frame_transform() -> float:
    params = SystemParams(omega_q=20.0, omega_d=1.0, amplitude_A=1.2, g=0.05)
    space = HilbertSpace(4)
    step = 1e-6
    worst = 0.0
    for t in (0.37, 1.9, 4.2):
        v = frame_transform(params, space, t, "V").elements
        dv = (frame_transform(params, space, t + step, "V").elements
              - frame_transform(params, space, t - step, "V").elements) / (2.0 * step)
        transformed = v @ h_lab(params, space, t).elements @ v.conj().T + 1j * dv @ v.conj().T
        worst = max(worst, float(np.max(np.abs(transformed - h_rotating(params, space, t).elements))))
    return worst


@invariant("frame_unitary_and_factorized", "hamiltonians", 1e-12)
def _frame_identity() -> float:
    params = SystemParams.at_first_j0_root(g=1e-2)
    space = HilbertSpace(8)
    worst = 0.0
    for t in (0.0, 0.8, 3.3, 17.0):
        v = frame_transform(params, space, t, "V")
        v2v1 = frame_transform(params, space, t, "V2") @ frame_transform(params, space, t, "V1")
        worst = max(worst, v.unitarity_error(), float(np.max(np.abs(v.elements - v2v1.elements))))
    return worst


@invariant("kl_orthogonality", "squeezing", 1e-12)
def _kl() -> float:
    return kl_check(XI_I, HilbertSpace(200, has_qubit=False)).off_diagonal_max


@invariant("moment_series_vs_operator", "squeezing", 1e-5)
def _moments_vs_operator() -> float:
    space = HilbertSpace(240, has_qubit=False)
    n = np.diag(number(space).elements).real
    worst = 0.0
    for r in (0.25, 0.5, 1.0, 1.5):
        for label in LogicalLabel:
            populations = np.abs(logical_state(label, SqueezeParam(r=r), space).amplitudes) ** 2
            for p in MOMENT_ORDERS:
                series = number_moment(label, r, p)
                operator = float(np.sum(populations * n ** p))
                worst = max(worst, abs(series - operator) / max(abs(operator), 1e-300))
    return worst


@invariant("moment_ratio_closed_form_p1", "squeezing", 1e-10)
def _closed_form() -> float:
    worst = 0.0
    for r in (0.1, 0.5, 1.0, 2.0, 3.0):
        closed = moment_ratio_closed_form(r)
        worst = max(worst, abs(moment_ratio(r, 1).ratio - closed) / closed)
    return worst


@invariant("moment_ratio_convergence", "squeezing", 0.0)
def _ratio_convergence() -> float:
    # |ratio - 1| must shrink between r = 0.5 and r = 2.5 for every order
    growth = [abs(moment_ratio(2.5, p).ratio - 1.0) - abs(moment_ratio(0.5, p).ratio - 1.0) for p in MOMENT_ORDERS]
    return max(0.0, max(growth))


@invariant("quarter_rotation_is_logical_z", "squeezing", 1e-12)
def _rotation() -> float:
    space = HilbertSpace(120, has_qubit=False)
    zero = logical_state(LogicalLabel.ZERO, XI_I, space)
    one = logical_state(LogicalLabel.ONE, XI_I, space)
    return max(abs(rotation_expectation(zero, 0.5 * math.pi) - 1.0),
               abs(rotation_expectation(one, 0.5 * math.pi) + 1.0),
               abs(rotation_expectation(one, math.pi) - 1.0))


@invariant("code_word_support_disjoint", "squeezing", 0.0)
def _support_disjoint() -> float:
    space = HilbertSpace(200, has_qubit=False)
    zero = logical_state(LogicalLabel.ZERO, XI_I, space).amplitudes
    one = logical_state(LogicalLabel.ONE, XI_I, space).amplitudes
    return float(np.max(np.abs(zero * one)))


@invariant("squeezed_vacuum_overlap", "squeezing", 1e-10)
def _squeezed_overlap() -> float:
    """<S(xi)0|S(-xi)0> = cosh(2r)^(-1/2)"""
    space = HilbertSpace(240, has_qubit=False)
    worst = 0.0
    for r in (0.3, 1.0, 1.5):
        xi = SqueezeParam(r=r, phi=0.7)
        overlap = np.vdot(squeezed_vacuum(xi, space).amplitudes, squeezed_vacuum(xi.negated(), space).amplitudes)
        worst = max(worst, abs(overlap - 1.0 / math.sqrt(math.cosh(2.0 * r))))
    return worst


@invariant("norm_deficiency_converges", "squeezing", 1e-12)
def _norm_convergence() -> float:
    deficiencies = [norm_deficiency(XI_I, cutoff) for cutoff in (20, 40, 80, 160, 240)]
    growth = max(b - a for a, b in zip(deficiencies, deficiencies[1:]))
    return max(0.0, growth, deficiencies[-1])


@invariant("conditional_squeezing_identity", "dynamics", 1e-8)
def _conditional_squeezing() -> float:
    params = SystemParams.at_first_j0_root(g=1e-4)
    space = HilbertSpace(80)
    t_end = 0.5 / params.g_cs
    psi0 = StateVector.basis(space, 0, EXCITED)
    final = dynamics.evolve_state(h_cs(params, space), psi0, 0.0, t_end, SolverOptions.closed_defaults()).final
    target = squeezed_vacuum(SqueezeParam.from_evolution(params.g_cs, t_end), space.oscillator())
    return 1.0 - fidelity(target, StateVector(space.oscillator(), final.oscillator_block(EXCITED)))


@invariant("dephasing_coherence_decay", "dynamics", 1e-6)
def _dephasing() -> float:
    """(gamma_phi/2) D[sz] takes rho_eg to rho_eg exp(-gamma_phi t)"""
    space = HilbertSpace(1)
    plus = StateVector.from_amplitudes(space, [1.0, 0.0, 1.0, 0.0])
    zero_h = OperatorMatrix.hermitian(space, np.zeros((4, 4)))
    noise = NoiseParams(gamma_phi=1.0)
    final = dynamics.evolve_density(zero_h, noise, plus.to_density(), 0.0, 1.0,
                                    SolverOptions(rel_tol=1e-10, abs_tol=1e-12)).final
    coherence = final.elements[space.index(0, 0), space.index(0, 1)]
    return abs(2.0 * coherence.real - math.exp(-1.0))


@invariant("oscillator_damping", "dynamics", 1e-6)
def _damping() -> float:
    space = HilbertSpace(3, has_qubit=False)
    rho0 = StateVector.basis(space, 1).to_density()
    zero_h = OperatorMatrix.hermitian(space, np.zeros((4, 4)))
    final = dynamics.evolve_density(zero_h, NoiseParams(gamma_m=1.0), rho0, 0.0, 1.0,
                                    SolverOptions(rel_tol=1e-10, abs_tol=1e-12)).final
    return abs(final.elements[1, 1].real - math.exp(-1.0))


@invariant("lindblad_trace_free", "dynamics", 1e-12)
def _trace_free() -> float:
    rng = np.random.default_rng(SEED)
    space = HilbertSpace(6)
    noise = NoiseParams(gamma_1=0.3, gamma_phi=0.2, gamma_m=0.1, n_m_th=1.0)
    h = h_rwa(SystemParams.at_first_j0_root(g=0.1), space)
    worst = 0.0
    for _ in range(10):
        a = rng.normal(size=(space.total_dim,) * 2) + 1j * rng.normal(size=(space.total_dim,) * 2)
        rho = DensityMatrix.from_elements(space, a @ a.conj().T)
        worst = max(worst, abs(np.trace(dynamics.lindblad_rhs(h, noise, rho))))
    return worst


@invariant("thermal_occupation", "dynamics", 1e-3)
def _thermal() -> float:
    space = HilbertSpace(20, has_qubit=False)
    zero_h = OperatorMatrix.hermitian(space, np.zeros((21, 21)))
    final = dynamics.evolve_density(zero_h, NoiseParams(gamma_m=1.0, n_m_th=1.0),
                                    StateVector.basis(space, 0).to_density(), 0.0, 20.0).final
    mean = float(np.real(np.trace(number(space).elements @ final.elements)))
    return abs(mean - 1.0)


@invariant("squeeze_unitary_vs_series", "dynamics", 1e-10)
def _squeeze_unitary() -> float:
    space = HilbertSpace(120, has_qubit=False)
    state = dynamics.squeeze_unitary(XI_I, space) @ StateVector.basis(space, 0)
    return 1.0 - fidelity(state, squeezed_vacuum(XI_I, space))


@invariant("propagator_unitary", "dynamics", 1e-10)
def _propagator_unitary() -> float:
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(30)
    worst = 0.0
    for h in (h_cs(params, space), h_rwa(params, space)):
        for t in (0.5, 10.0, 250.0):
            u = dynamics.propagator(h, t)
            worst = max(worst, float(np.max(np.abs((u.dagger() @ u).elements - np.eye(space.total_dim)))),
                        u.unitarity_error())
    return worst


@invariant("frame_equivalence_under_evolution", "dynamics", 1e-8)
def _frame_equivalence() -> float:
    """Lab and interaction runs mapped into the rotating frame agree with the rotating run"""
    params = SystemParams(omega_q=20.0, omega_d=1.0, amplitude_A=1.2, g=0.05)
    space = HilbertSpace(6)
    psi0 = initial_state(space)
    t_end = 3.0
    opts = SolverOptions(rel_tol=1e-11, abs_tol=1e-13)
    reference = dynamics.evolve_state(hamiltonian_provider("rotating", params, space), psi0, 0.0, t_end, opts).final
    worst = 0.0
    for model in ("lab", "interaction"):
        final = dynamics.evolve_state(hamiltonian_provider(model, params, space), psi0, 0.0, t_end, opts).final
        worst = max(worst, 1.0 - fidelity(reference, to_rotating_frame(final, params, t_end, model)))
    return worst


@invariant("adaptive_matches_fixed_step", "dynamics", 1e-9)
def _adaptive_vs_fixed() -> float:
    params = SystemParams.at_first_j0_root(g=0.1)
    space = HilbertSpace(10)
    provider = hamiltonian_provider("rotating", params, space)
    psi0 = initial_state(space)
    adaptive = dynamics.evolve_state(provider, psi0, 0.0, 4.0, SolverOptions(rel_tol=1e-11, abs_tol=1e-13)).final
    fixed = dynamics.evolve_state(provider, psi0, 0.0, 4.0, SolverOptions(method="fixed_rk4", fixed_step=1e-3)).final
    return 1.0 - fidelity(adaptive, fixed)


@invariant("vacuum_wigner_origin", "wigner", 1e-10)
def _vacuum_origin() -> float:
    grid = wigner(StateVector.basis(HilbertSpace(40, has_qubit=False), 0), [0.0], [0.0])
    return abs(grid.values[0, 0] - 2.0 / math.pi)


@invariant("vacuum_wigner_normalization", "wigner", 1e-3)
def _vacuum_normalization() -> float:
    axis = np.linspace(-5.0, 5.0, 201)
    grid = wigner(StateVector.basis(HilbertSpace(200, has_qubit=False), 0), axis, axis)
    return abs(grid.normalization() - 1.0)


@invariant("code_word_wigner_symmetry", "wigner", 1e-10)
def _code_symmetry() -> float:
    axis = np.linspace(-3.0, 3.0, 61)
    values = wigner(logical_state(LogicalLabel.ZERO, XI_I, HilbertSpace(120, has_qubit=False)), axis, axis).values
    n = axis.size
    rotated = values[np.arange(n)[None, :], (n - 1 - np.arange(n))[:, None]]
    return max(float(np.max(np.abs(values[::-1, ::-1] - values))), float(np.max(np.abs(rotated - values))))


@invariant("wigner_realness", "wigner", 1e-10)
def _wigner_realness() -> float:
    axis = np.linspace(-2.5, 2.5, 21)
    state = logical_state(LogicalLabel.ZERO, XI_I, HilbertSpace(60, has_qubit=False))
    return float(wigner(state, axis, axis, method="expm").diagnostics["max_imag"])


@invariant("zero_l_wigner_negative", "wigner", 0.0)
def _zero_l_negativity() -> float:
    # interference fringes of |0_L> at xi = i dip below -0.05
    axis = np.linspace(-3.0, 3.0, 61)
    grid = wigner(logical_state(LogicalLabel.ZERO, XI_I, HilbertSpace(120, has_qubit=False)), axis, axis)
    return max(0.0, grid.min_value + 0.05)


@invariant("protocol_branches", "harness", 1e-8)
def _protocol() -> float:
    config = ExperimentConfig(system=SystemParams.at_first_j0_root(g=1e-4), fock_cutoff=80,
                              hamiltonian_model="cs", t_end_in_g_units=UNIT_SQUEEZE_G_T)
    result = run_protocol(config)
    n_plus, n_minus = normalization_constants(1.0)
    return max(abs(result.plus_probability - n_plus / 4.0), abs(result.minus_probability - n_minus / 4.0),
               1.0 - result.fidelity_plus_vs_analytic, 1.0 - result.fidelity_minus_vs_analytic)


@invariant("amplitude_sweep_frame_agreement", "harness", 1e-7)
def _sweep_frames() -> float:
    """The drive-amplitude fidelity is the same whether evolved in the interaction or the rotating frame"""
    config = ExperimentConfig(fock_cutoff=60)
    worst = 0.0
    for a_bar in (2.0, FIRST_J0_ROOT):
        params = SystemParams.at_first_j0_root(g=1e-2).with_a_bar(a_bar)
        worst = max(worst, abs(rotating_vs_cs_fidelity(params, config, model="interaction")
                               - rotating_vs_cs_fidelity(params, config, model="rotating")))
    return worst


@invariant("protocol_cutoff_robustness", "harness", 1e-7)
def _cutoff_robustness() -> float:
    base = ExperimentConfig(system=SystemParams.at_first_j0_root(g=1e-2), hamiltonian_model="rotating")
    low, high = (run_protocol(base.with_overrides(fock_cutoff=cutoff)) for cutoff in (60, 80))
    return max(abs(low.plus_probability - high.plus_probability),
               abs(low.fidelity_plus_vs_analytic - high.fidelity_plus_vs_analytic))


@invariant("sweep_is_deterministic", "harness", 0.0)
def _determinism() -> float:
    config = ExperimentConfig(system=SystemParams.at_first_j0_root(g=1e-2), fock_cutoff=60)
    first, second = (sweep_amplitude(config, [2.0, FIRST_J0_ROOT]) for _ in range(2))
    return float(np.max(np.abs(first["fidelity"].to_numpy() - second["fidelity"].to_numpy())))


def validate(names: Optional[List[str]] = None) -> ValidationReport:
    """Run the registered invariants (all, or the named subset)"""
    if names is not None:
        unknown = sorted(set(names) - {inv.name for inv in INVARIANTS})
        if unknown:
            raise ConfigError(f"unknown invariants: {', '.join(unknown)}")
    selected = [inv for inv in INVARIANTS if names is None or inv.name in names]
    checks = []
    for inv in selected:
        try:
            measured = float(inv.measure())
            passed = bool(measured <= inv.tolerance)
            detail = ""
        except Exception as e:
            measured, passed, detail = None, False, f"{type(e).__name__}: {e}"
        checks.append(InvariantCheck(name=inv.name, module=inv.module, tolerance=inv.tolerance,
                                     measured=measured, passed=passed, detail=detail))
        mark = "✅" if passed else "❌"
        logger.info(f"{mark} {inv.module}.{inv.name}: {measured} (tol {inv.tolerance:g}) {detail}")

    report = ValidationReport(checks=checks)
    logger.info(f"📋 {len(checks) - len(report.failures)}/{len(checks)} invariants passed")
    return report
