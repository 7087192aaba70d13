"""
Truncated Fock-space and qubit linear algebra

Basis ordering is fixed for every matrix in the project: the qubit slot comes
first with |e> before |g>, so the composite index of |q, n> is q*(N+1) + n
(q = 0 for |e>, q = 1 for |g>). sigma_z |e> = +|e>.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Union

import numpy as np

from config.settings import settings
from .exceptions import DegenerateStateError, SpaceMismatchError, TruncationError

logger = logging.getLogger(__name__)

EXCITED = 0
GROUND = 1

HERMITIAN_TOL = 1e-12
DENSITY_TOL = 1e-10
NULL_BRANCH_PROBABILITY = 1e-14

PauliAxis = Literal["x", "y", "z", "minus"]

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),  # |g><e|
}


def _frozen(values, shape=None) -> np.ndarray:
    array = np.array(values, dtype=complex, copy=True)
    if shape is not None:
        array = array.reshape(shape)
    array.setflags(write=False)
    return array


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    """(M + M^dagger)/2, exactly Hermitian in floating point"""
    return 0.5 * (matrix + matrix.conj().T)


def hermiticity_error(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.conj().T)))


@dataclass(frozen=True)
class HilbertSpace:
    """Qubit (optional) tensor a Fock space truncated at fock_cutoff"""
    fock_cutoff: int
    has_qubit: bool = True

    def __post_init__(self):
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be an integer >= 1, got {self.fock_cutoff}")
        object.__setattr__(self, "fock_cutoff", int(self.fock_cutoff))

    @property
    def osc_dim(self) -> int:
        return self.fock_cutoff + 1

    @property
    def total_dim(self) -> int:
        return 2 * self.osc_dim if self.has_qubit else self.osc_dim

    def index(self, n: int, qubit: Optional[int] = None) -> int:
        if not 0 <= n <= self.fock_cutoff:
            raise IndexError(f"Fock index {n} outside 0..{self.fock_cutoff}")
        if not self.has_qubit:
            return n
        if qubit not in (EXCITED, GROUND):
            raise ValueError("composite index needs qubit = EXCITED or GROUND")
        return qubit * self.osc_dim + n

    def oscillator(self) -> HilbertSpace:
        return HilbertSpace(self.fock_cutoff, has_qubit=False)

    def composite(self) -> HilbertSpace:
        return HilbertSpace(self.fock_cutoff, has_qubit=True)


def _require_qubit(space: HilbertSpace, what: str) -> None:
    if not space.has_qubit:
        raise SpaceMismatchError(f"{what} needs a space with a qubit factor")


def _require_oscillator_only(space: HilbertSpace, what: str) -> None:
    if space.has_qubit:
        raise SpaceMismatchError(f"{what} needs an oscillator-only space")


def _require_same_space(a: HilbertSpace, b: HilbertSpace) -> None:
    if a != b:
        raise SpaceMismatchError(f"space mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state; amplitudes are read-only"""
    space: HilbertSpace
    amplitudes: np.ndarray
    truncation_deficiency: float = 0.0

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes).reshape(-1)
        if amplitudes.shape != (self.space.total_dim,):
            raise SpaceMismatchError(
                f"expected {self.space.total_dim} amplitudes, got {amplitudes.shape[0]}"
            )
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_amplitudes(
        cls,
        space: HilbertSpace,
        amplitudes,
        normalize: bool = True,
        leak_threshold: Optional[float] = None,
        truncation_deficiency: float = 0.0,
    ) -> StateVector:
        amplitudes = np.asarray(amplitudes, dtype=complex)
        norm = float(np.linalg.norm(amplitudes))
        if not np.isfinite(norm) or norm == 0.0:
            raise DegenerateStateError("state has zero (or non-finite) norm")
        if normalize:
            amplitudes = amplitudes / norm
        state = cls(space, amplitudes, truncation_deficiency)
        if leak_threshold is not None:
            state.check_truncation(leak_threshold)
        return state

    @classmethod
    def basis(cls, space: HilbertSpace, n: int, qubit: Optional[int] = None) -> StateVector:
        amplitudes = np.zeros(space.total_dim, dtype=complex)
        amplitudes[space.index(n, qubit)] = 1.0
        return cls(space, amplitudes)

    @classmethod
    def product(cls, qubit_amplitudes, oscillator_state: StateVector) -> StateVector:
        """(c_e|e> + c_g|g>) tensor |phi>, normalized"""
        _require_oscillator_only(oscillator_state.space, "product")
        qubit_amplitudes = np.asarray(qubit_amplitudes, dtype=complex)
        if qubit_amplitudes.shape != (2,):
            raise ValueError("qubit amplitudes must be a length-2 vector (c_e, c_g)")
        space = oscillator_state.space.composite()
        return cls.from_amplitudes(space, np.kron(qubit_amplitudes, oscillator_state.amplitudes))

    @property
    def norm_squared(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def is_normalized(self, epsilon: Optional[float] = None) -> bool:
        epsilon = settings.norm_epsilon if epsilon is None else epsilon
        return abs(self.norm_squared - 1.0) <= epsilon

    def oscillator_block(self, qubit: int) -> np.ndarray:
        _require_qubit(self.space, "oscillator_block")
        d = self.space.osc_dim
        return self.amplitudes[qubit * d:(qubit + 1) * d]

    def fock_populations(self) -> np.ndarray:
        populations = np.abs(self.amplitudes) ** 2
        if self.space.has_qubit:
            populations = populations.reshape(2, -1).sum(axis=0)
        return populations

    def top_level_population(self) -> float:
        return float(self.fock_populations()[-1])

    def check_truncation(self, threshold: Optional[float] = None) -> None:
        threshold = settings.leak_threshold if threshold is None else threshold
        leak = self.top_level_population()
        if leak >= threshold:
            raise TruncationError("top Fock level is populated", leak, threshold)

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_state(self)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state: Hermitian, unit trace (both within 1e-10)"""
    space: HilbertSpace
    elements: np.ndarray

    def __post_init__(self):
        dim = self.space.total_dim
        elements = _frozen(self.elements)
        if elements.shape != (dim, dim):
            raise SpaceMismatchError(f"expected a {dim}x{dim} density matrix, got {elements.shape}")
        if hermiticity_error(elements) > DENSITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        trace = np.trace(elements)
        if abs(trace - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix trace is {trace.real:.12f}, expected 1")
        object.__setattr__(self, "elements", elements)

    @classmethod
    def from_elements(cls, space: HilbertSpace, elements, normalize: bool = True) -> DensityMatrix:
        """Hermitize and (optionally) renormalize the trace before wrapping"""
        elements = hermitian_part(np.asarray(elements, dtype=complex))
        if normalize:
            trace = float(np.real(np.trace(elements)))
            if not np.isfinite(trace) or trace <= 0.0:
                raise DegenerateStateError(f"density matrix has non-positive trace {trace}")
            elements = elements / trace
        return cls(space, elements)

    @classmethod
    def from_state(cls, state: StateVector) -> DensityMatrix:
        psi = state.amplitudes / np.sqrt(state.norm_squared)
        return cls.from_elements(state.space, np.outer(psi, psi.conj()), normalize=False)

    @classmethod
    def mixture(cls, states, weights) -> DensityMatrix:
        states = list(states)
        space = states[0].space
        elements = np.zeros((space.total_dim, space.total_dim), dtype=complex)
        for state, weight in zip(states, weights):
            _require_same_space(space, state.space)
            elements += weight * np.outer(state.amplitudes, state.amplitudes.conj())
        return cls.from_elements(space, elements)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.elements)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def purity(self) -> float:
        return float(np.real(np.einsum('ij,ji->', self.elements, self.elements)))

    def top_level_population(self) -> float:
        diagonal = np.real(np.diag(self.elements))
        if self.space.has_qubit:
            diagonal = diagonal.reshape(2, -1).sum(axis=0)
        return float(diagonal[-1])


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator on a HilbertSpace"""
    space: HilbertSpace
    elements: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        dim = self.space.total_dim
        elements = _frozen(self.elements)
        if elements.shape != (dim, dim):
            raise SpaceMismatchError(f"expected a {dim}x{dim} operator, got {elements.shape}")
        if self.hermitian_hint and hermiticity_error(elements) > HERMITIAN_TOL:
            raise ValueError(
                f"operator flagged Hermitian deviates by {hermiticity_error(elements):.3e}"
            )
        object.__setattr__(self, "elements", elements)

    @classmethod
    def hermitian(cls, space: HilbertSpace, elements) -> OperatorMatrix:
        return cls(space, hermitian_part(np.asarray(elements, dtype=complex)), hermitian_hint=True)

    def dagger(self) -> OperatorMatrix:
        return OperatorMatrix(self.space, self.elements.conj().T, self.hermitian_hint)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _require_same_space(self.space, other.space)
            return OperatorMatrix(self.space, self.elements @ other.elements)
        if isinstance(other, StateVector):
            _require_same_space(self.space, other.space)
            return StateVector(self.space, self.elements @ other.amplitudes)
        return NotImplemented

    def unitarity_error(self) -> float:
        product = self.elements.conj().T @ self.elements
        return float(np.max(np.abs(product - np.eye(self.space.total_dim))))

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return self.unitarity_error() <= tol


@lru_cache(maxsize=None)
def _ladder(fock_cutoff: int) -> np.ndarray:
    lowering = np.diag(np.sqrt(np.arange(1, fock_cutoff + 1, dtype=float)), k=1).astype(complex)
    lowering.setflags(write=False)
    return lowering


def _wrap(space: HilbertSpace, osc: np.ndarray, hermitian: bool = False) -> OperatorMatrix:
    if space.has_qubit:
        osc = np.kron(np.eye(2), osc)
    return OperatorMatrix(space, osc, hermitian)


def annihilation(space: HilbertSpace) -> OperatorMatrix:
    """b with <n-1|b|n> = sqrt(n); I_qubit (x) b on composite spaces"""
    return _wrap(space, _ladder(space.fock_cutoff))


def creation(space: HilbertSpace) -> OperatorMatrix:
    return _wrap(space, _ladder(space.fock_cutoff).T.copy())


def number(space: HilbertSpace) -> OperatorMatrix:
    return _wrap(space, np.diag(np.arange(space.osc_dim, dtype=complex)), hermitian=True)


def identity(space: HilbertSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.eye(space.total_dim, dtype=complex), hermitian_hint=True)


def pauli(axis: PauliAxis, space: HilbertSpace) -> OperatorMatrix:
    """sigma_x/y/z or sigma_minus = |g><e|, embedded as sigma (x) I_osc"""
    _require_qubit(space, "pauli")
    if axis not in _PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return embed(_PAULI[axis], None, space)


def pauli_matrix(axis: PauliAxis) -> np.ndarray:
    return _PAULI[axis].copy()


def embed(qubit_op, osc_op, space: HilbertSpace) -> OperatorMatrix:
    """Kronecker product qubit_op (x) osc_op; a missing factor becomes identity"""
    if qubit_op is None and osc_op is None:
        raise ValueError("embed needs at least one factor")
    d = space.osc_dim
    osc = np.eye(d, dtype=complex) if osc_op is None else np.asarray(
        getattr(osc_op, "elements", osc_op), dtype=complex)
    if osc.shape != (d, d):
        raise SpaceMismatchError(f"oscillator factor must be {d}x{d}, got {osc.shape}")
    if not space.has_qubit:
        if qubit_op is not None:
            raise SpaceMismatchError("qubit factor given for an oscillator-only space")
        elements = osc
    else:
        qubit = np.eye(2, dtype=complex) if qubit_op is None else np.asarray(qubit_op, dtype=complex)
        if qubit.shape != (2, 2):
            raise SpaceMismatchError(f"qubit factor must be 2x2, got {qubit.shape}")
        elements = np.kron(qubit, osc)
    return OperatorMatrix(space, elements, hermiticity_error(elements) <= HERMITIAN_TOL)


State = Union[StateVector, DensityMatrix]


def expectation(op: OperatorMatrix, state: State) -> complex:
    """<psi|O|psi> or Tr[rho O]"""
    _require_same_space(op.space, state.space)
    if isinstance(state, StateVector):
        return complex(np.vdot(state.amplitudes, op.elements @ state.amplitudes))
    return complex(np.einsum('ij,ji->', state.elements, op.elements))


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    values = np.sqrt(np.clip(values, 0.0, None))
    return (vectors * values) @ vectors.conj().T


def fidelity(a: State, b: State) -> float:
    """|<a|b>|^2, <a|rho|a>, or the Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2"""
    _require_same_space(a.space, b.space)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    if isinstance(a, DensityMatrix) and isinstance(b, StateVector):
        a, b = b, a
    if isinstance(a, StateVector):
        if hermiticity_error(b.elements) > DENSITY_TOL:
            raise ValueError("fidelity needs a Hermitian density matrix")
        value = np.real(np.vdot(a.amplitudes, b.elements @ a.amplitudes))
        return float(max(value, 0.0))
    for rho in (a, b):
        if hermiticity_error(rho.elements) > DENSITY_TOL:
            raise ValueError("fidelity needs Hermitian density matrices")
    root = _sqrt_psd(a.elements)
    inner = hermitian_part(root @ b.elements @ root)
    values = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(np.sum(np.sqrt(values)) ** 2)


@dataclass(frozen=True, eq=False)
class MeasurementBranch:
    """One outcome of the sigma_x measurement; state is None for a null branch"""
    outcome: int
    probability: float
    state: Optional[State]

    @property
    def is_null(self) -> bool:
        return self.state is None


@dataclass(frozen=True, eq=False)
class QubitMeasurement:
    plus: MeasurementBranch
    minus: MeasurementBranch

    @property
    def total_probability(self) -> float:
        return self.plus.probability + self.minus.probability


def measure_qubit_x(state: State) -> QubitMeasurement:
    """Project the qubit onto (|e> +- |g>)/sqrt(2) and return the oscillator branches"""
    _require_qubit(state.space, "measure_qubit_x")
    osc_space = state.space.oscillator()
    d = state.space.osc_dim
    branches = {}
    for sign in (+1, -1):
        if isinstance(state, StateVector):
            amplitudes = (state.oscillator_block(EXCITED) + sign * state.oscillator_block(GROUND)) / np.sqrt(2.0)
            probability = float(np.real(np.vdot(amplitudes, amplitudes)))
            branch_state = None
            if probability > NULL_BRANCH_PROBABILITY:
                branch_state = StateVector.from_amplitudes(osc_space, amplitudes)
        else:
            rho = state.elements
            block = 0.5 * (rho[:d, :d] + rho[d:, d:] + sign * (rho[:d, d:] + rho[d:, :d]))
            probability = float(np.real(np.trace(block)))
            branch_state = None
            if probability > NULL_BRANCH_PROBABILITY:
                branch_state = DensityMatrix.from_elements(osc_space, block)
        branches[sign] = MeasurementBranch(sign, probability, branch_state)

    result = QubitMeasurement(plus=branches[+1], minus=branches[-1])
    logger.debug(f"sigma_x measurement: P(+)={result.plus.probability:.12f}, "
                 f"P(-)={result.minus.probability:.12f}")
    return result


def partial_trace_qubit(dm: DensityMatrix) -> DensityMatrix:
    """Trace out the qubit: rho_ee + rho_gg"""
    _require_qubit(dm.space, "partial_trace_qubit")
    d = dm.space.osc_dim
    rho = dm.elements
    return DensityMatrix.from_elements(dm.space.oscillator(), rho[:d, :d] + rho[d:, d:], normalize=False)
