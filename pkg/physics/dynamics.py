"""
Time evolution: Schrodinger propagation, constant-H propagators and the Lindblad master equation

  i d psi/dt = H(t) psi
  d rho/dt = -i[H, rho] + (gamma_phi/2) D[sz] rho + gamma_1 D[s-] rho
             + gamma_m n_th D[b^dag] rho + gamma_m (n_th + 1) D[b] rho
  D[O] rho = O rho O^dag - (O^dag O rho + rho O^dag O)/2
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from config.settings import settings
from .exceptions import SolverError, SpaceMismatchError, TruncationError
from .fockspace import (
    HERMITIAN_TOL,
    DensityMatrix,
    HilbertSpace,
    OperatorMatrix,
    State,
    StateVector,
    _ladder,
    _require_oscillator_only,
    _require_same_space,
    hermitian_part,
    hermiticity_error,
    pauli_matrix,
)
from .hamiltonians import TimeDependentHamiltonian
from .schemas import NoiseParams, SolverOptions, SqueezeParam
from .squeezing import norm_deficiency

logger = logging.getLogger(__name__)

# (gamma_phi / 2) D[sz]: coherences decay as exp(-gamma_phi t)
DEPHASING_PREFACTOR = 0.5

DRIFT_WARN_FACTOR = 10.0
DRIFT_ABORT_FACTOR = 100.0
POSITIVITY_WARN = -1e-6
# integrator steps per period of the fastest coefficient frequency
STEPS_PER_FAST_PERIOD = 20

HamiltonianLike = Union[TimeDependentHamiltonian, OperatorMatrix, Callable[[float], Any]]


@dataclass
class Trajectory:
    """Stored states of one integration, in time order"""
    times: np.ndarray
    states: List[State]
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> State:
        return self.states[-1]

    @property
    def space(self) -> HilbertSpace:
        return self.states[0].space


def as_provider(h: HamiltonianLike, space: HilbertSpace) -> Callable[[float], np.ndarray]:
    """Normalize any Hamiltonian description to t -> dense matrix on `space`"""
    if isinstance(h, TimeDependentHamiltonian):
        _require_same_space(h.space, space)
        return h.elements
    if isinstance(h, OperatorMatrix):
        _require_same_space(h.space, space)
        elements = h.elements
        return lambda t: elements

    def provider(t):
        value = h(t)
        if isinstance(value, OperatorMatrix):
            _require_same_space(value.space, space)
            return value.elements
        value = np.asarray(value, dtype=complex)
        if value.shape != (space.total_dim, space.total_dim):
            raise SpaceMismatchError(f"Hamiltonian at t={t} has shape {value.shape}")
        return value

    return provider


def step_cap(h: HamiltonianLike) -> float:
    """Largest step resolving the fastest oscillation of h; inf when h carries no frequency"""
    frequency = getattr(h, "fastest_frequency", 0.0)
    if frequency <= 0.0:
        return math.inf
    return 2.0 * math.pi / (STEPS_PER_FAST_PERIOD * frequency)


def _capped(opts: SolverOptions, h: HamiltonianLike) -> SolverOptions:
    cap = step_cap(h)
    if cap >= max(opts.max_step, opts.fixed_step):
        return opts
    logger.debug(f"step capped at {cap:.4g} by {getattr(h, 'label', 'hamiltonian')}")
    return opts.model_copy(update={"max_step": min(opts.max_step, cap), "fixed_step": min(opts.fixed_step, cap)})


def _check_times(t0: float, t1: float, output_times) -> Optional[np.ndarray]:
    if t1 < t0:
        raise ValueError(f"t1 ({t1}) must not precede t0 ({t0})")
    if output_times is None:
        return None
    output_times = np.asarray(output_times, dtype=float)
    if output_times.ndim != 1 or output_times.size == 0:
        raise ValueError("output_times must be a non-empty 1-D array")
    if np.any(np.diff(output_times) <= 0):
        raise ValueError("output_times must be strictly increasing")
    if output_times[0] < t0 or output_times[-1] > t1:
        raise ValueError("output_times must lie inside [t0, t1]")
    return output_times


def _rk4_segment(rhs, y: np.ndarray, ta: float, tb: float, step: float) -> Tuple[np.ndarray, int]:
    n_steps = max(1, int(math.ceil((tb - ta) / step - 1e-12)))
    dt = (tb - ta) / n_steps
    t = ta
    for _ in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    return y, n_steps


def _fixed_rk4(rhs, y0, t0, t1, opts: SolverOptions, output_times) -> Tuple[np.ndarray, np.ndarray, int]:
    if output_times is None:
        n_steps = max(1, int(math.ceil((t1 - t0) / opts.fixed_step - 1e-12)))
        grid = np.linspace(t0, t1, n_steps + 1)
        keep = np.zeros(grid.size, dtype=bool)
        keep[::opts.store_every] = True
        keep[-1] = True
    else:
        grid = np.unique(np.concatenate([[t0], output_times]))
        keep = np.isin(grid, output_times)

    times, ys = [], []
    y = y0
    evaluations = 0
    if keep[0]:
        times.append(grid[0])
        ys.append(y0)
    for i in range(1, grid.size):
        y, used = _rk4_segment(rhs, y, grid[i - 1], grid[i], opts.fixed_step)
        evaluations += 4 * used
        if keep[i]:
            times.append(grid[i])
            ys.append(y)
    return np.array(times), np.array(ys).T, evaluations


def _integrate(rhs, y0: np.ndarray, t0: float, t1: float, opts: SolverOptions,
               output_times) -> Tuple[np.ndarray, np.ndarray, Dict[str, Any]]:
    """Returns (times, y with one column per stored time, diagnostics)"""
    if t1 == t0:
        return np.array([t0]), y0[:, None], {"method": opts.method, "rhs_evaluations": 0}

    if opts.method == "fixed_rk4":
        times, ys, evaluations = _fixed_rk4(rhs, y0, t0, t1, opts, output_times)
        return times, ys, {"method": opts.method, "rhs_evaluations": evaluations, "fixed_step": opts.fixed_step}

    solution = solve_ivp(
        rhs, (t0, t1), y0, method="DOP853",
        t_eval=output_times, rtol=opts.rel_tol, atol=opts.abs_tol, max_step=opts.max_step,
    )
    diagnostics = {"method": opts.method, "rhs_evaluations": int(solution.nfev), "max_step": opts.max_step,
                   "status": int(solution.status), "message": solution.message}
    if solution.status < 0:
        raise SolverError(f"integration failed: {solution.message}", diagnostics)
    times, ys = solution.t, solution.y
    if output_times is None and opts.store_every > 1:
        keep = np.zeros(times.size, dtype=bool)
        keep[::opts.store_every] = True
        keep[-1] = True
        times, ys = times[keep], ys[:, keep]
    return times, ys, diagnostics


def _check_drift(drift: np.ndarray, opts: SolverOptions, what: str, diagnostics: Dict[str, Any]) -> None:
    worst = float(np.max(drift)) if drift.size else 0.0
    diagnostics[f"max_{what}_drift"] = worst
    diagnostics[f"final_{what}_drift"] = float(drift[-1]) if drift.size else 0.0
    if worst > DRIFT_ABORT_FACTOR * opts.rel_tol:
        raise SolverError(f"{what} drift {worst:.3e} exceeds {DRIFT_ABORT_FACTOR:g} x rel_tol", diagnostics)
    if worst > DRIFT_WARN_FACTOR * opts.rel_tol:
        logger.warning(f"{what} drift {worst:.3e} above {DRIFT_WARN_FACTOR:g} x rel_tol ({opts.rel_tol:g})")


def evolve_state(h_of_t: HamiltonianLike, psi0: StateVector, t0: float, t1: float,
                 opts: Optional[SolverOptions] = None, output_times=None) -> Trajectory:
    """Integrate i d psi/dt = H(t) psi from t0 to t1"""
    opts = opts or SolverOptions.closed_defaults()
    if not psi0.is_normalized():
        raise ValueError(f"initial state is not normalized (|psi|^2 = {psi0.norm_squared:.12f})")
    opts = _capped(opts, h_of_t)
    output_times = _check_times(t0, t1, output_times)
    hamiltonian = as_provider(h_of_t, psi0.space)

    def rhs(t, y):
        return -1j * (hamiltonian(t) @ y)

    logger.debug(f"evolve_state: t in [{t0}, {t1}], dim {psi0.space.total_dim}, method {opts.method}")
    times, ys, diagnostics = _integrate(rhs, psi0.amplitudes.copy(), t0, t1, opts, output_times)

    drift = np.abs(np.sum(np.abs(ys) ** 2, axis=0) - 1.0)
    _check_drift(drift, opts, "norm", diagnostics)
    states = [StateVector(psi0.space, ys[:, k]) for k in range(ys.shape[1])]
    return Trajectory(times=times, states=states, diagnostics=diagnostics)


def propagator(h_const: OperatorMatrix, t: float) -> OperatorMatrix:
    """U = exp(-i H t) via scipy's scaling-and-squaring Pade kernel"""
    if hermiticity_error(h_const.elements) > HERMITIAN_TOL:
        raise ValueError("propagator needs a Hermitian Hamiltonian")
    return OperatorMatrix(h_const.space, expm(-1j * t * h_const.elements))


def _collapse_operators(noise: NoiseParams, space: HilbertSpace) -> List[Tuple[float, np.ndarray]]:
    """(rate, L) pairs with non-zero rate"""
    osc = np.eye(space.osc_dim, dtype=complex)
    b = _ladder(space.fock_cutoff)

    def on_oscillator(op):
        return np.kron(np.eye(2), op) if space.has_qubit else op

    qubit_terms = [
        (DEPHASING_PREFACTOR * noise.gamma_phi, pauli_matrix("z")),
        (noise.gamma_1, pauli_matrix("minus")),
    ]
    operators = []
    for rate, qubit_op in qubit_terms:
        if rate == 0.0:
            continue
        if not space.has_qubit:
            raise SpaceMismatchError("qubit decoherence rates need a space with a qubit factor")
        operators.append((rate, np.kron(qubit_op, osc)))
    if noise.gamma_m * noise.n_m_th > 0.0:
        operators.append((noise.gamma_m * noise.n_m_th, on_oscillator(b.T.copy())))
    if noise.gamma_m > 0.0:
        operators.append((noise.gamma_m * (noise.n_m_th + 1.0), on_oscillator(b)))
    return operators


def _dissipator_terms(noise: NoiseParams, space: HilbertSpace):
    terms = []
    for rate, op in _collapse_operators(noise, space):
        op_dag = op.conj().T
        terms.append((rate, op, op_dag, op_dag @ op))
    return terms


def _lindblad(h: np.ndarray, rho: np.ndarray, terms) -> np.ndarray:
    # rho Hermitian: H rho - rho H = X - X^dag with X = H rho
    hr = h @ rho
    drho = -1j * (hr - hr.conj().T)
    for rate, op, op_dag, op_dag_op in terms:
        anti = op_dag_op @ rho
        drho += rate * (op @ rho @ op_dag - 0.5 * (anti + anti.conj().T))
    return drho


def lindblad_rhs(h: OperatorMatrix, noise: NoiseParams, rho: DensityMatrix) -> np.ndarray:
    """Full master-equation right-hand side for a Hermitian H and a valid rho"""
    _require_same_space(h.space, rho.space)
    if hermiticity_error(h.elements) > HERMITIAN_TOL:
        raise ValueError("lindblad_rhs needs a Hermitian Hamiltonian")
    return _lindblad(h.elements, rho.elements, _dissipator_terms(noise, rho.space))


def evolve_density(h_of_t: HamiltonianLike, noise: NoiseParams, rho0: DensityMatrix, t0: float, t1: float,
                   opts: Optional[SolverOptions] = None, output_times=None) -> Trajectory:
    """Integrate the master equation; stored states are hermitized, drift is reported"""
    opts = opts or SolverOptions.open_defaults()
    opts = _capped(opts, h_of_t)
    output_times = _check_times(t0, t1, output_times)
    space = rho0.space
    dim = space.total_dim
    hamiltonian = as_provider(h_of_t, space)
    terms = _dissipator_terms(noise, space)

    def rhs(t, y):
        return _lindblad(hamiltonian(t), y.reshape(dim, dim), terms).reshape(-1)

    logger.debug(f"evolve_density: t in [{t0}, {t1}], dim {dim}, {len(terms)} collapse operators")
    times, ys, diagnostics = _integrate(rhs, rho0.elements.reshape(-1).copy(), t0, t1, opts, output_times)

    matrices = [hermitian_part(ys[:, k].reshape(dim, dim)) for k in range(ys.shape[1])]
    drift = np.array([abs(np.trace(m).real - 1.0) for m in matrices])
    _check_drift(drift, opts, "trace", diagnostics)

    states = [DensityMatrix.from_elements(space, m) for m in matrices]
    min_eigenvalue = min(state.min_eigenvalue() for state in states)
    diagnostics["min_eigenvalue"] = min_eigenvalue
    if min_eigenvalue < POSITIVITY_WARN:
        diagnostics["positivity_violation"] = min_eigenvalue
        logger.warning(f"density matrix lost positivity: min eigenvalue {min_eigenvalue:.3e}")
    return Trajectory(times=times, states=states, diagnostics=diagnostics)


def squeeze_unitary(xi: SqueezeParam, space: HilbertSpace,
                    leak_threshold: Optional[float] = None) -> OperatorMatrix:
    """S(xi) = exp[(xi^* b^2 - xi b^dag^2)/2] on the truncated oscillator"""
    _require_oscillator_only(space, "squeeze_unitary")
    threshold = settings.leak_threshold if leak_threshold is None else leak_threshold
    leak = norm_deficiency(xi, space.fock_cutoff)
    if leak >= threshold:
        raise TruncationError(f"cutoff {space.fock_cutoff} too small for |xi|={xi.r}", leak, threshold)
    b = _ladder(space.fock_cutoff)
    b2 = b @ b
    generator = 0.5 * (np.conj(xi.xi) * b2 - xi.xi * b2.T)
    logger.debug(f"squeeze unitary |xi|={xi.r}, cutoff {space.fock_cutoff}, leak {leak:.3e}")
    return OperatorMatrix(space, expm(generator))


def sample_times(t0: float, t1: float, count: int) -> np.ndarray:
    """Evenly spaced output times including both ends"""
    if count < 2:
        raise ValueError("count must be >= 2")
    return np.linspace(t0, t1, count)
