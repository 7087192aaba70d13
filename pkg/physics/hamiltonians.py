"""
Hamiltonians of the driven qubit-oscillator system in every frame

Lab frame:
  H = (w_q/2) sz + w_m n + g (b + b^dag)^2 sz + A cos(w_d t)[cos(w_q t) sx + sin(w_q t) sy]
Interaction frame (V1 = exp[i((w_q/2) sz + w_m n) t]):
  H1 = g (b^2 e^{-2i w_m t} + b^dag^2 e^{2i w_m t} + 2n + 1) sz + A cos(w_d t) sx
Rotating frame (V = V2 V1, V2 = exp[i (A/w_d) sin(w_d t) sx]):
  H~ = g (same oscillator factor) (cos[A_bar sin(w_d t)] sz + sin[A_bar sin(w_d t)] sy)

(b + b^dag)^2 is always represented in its normal-ordered form b^2 + b^dag^2 + 2n + 1,
so the frame transformations hold exactly inside the truncated space.

Every builder is a fixed set of operator blocks combined with scalar coefficients;
`TimeDependentHamiltonian` keeps that decomposition so solvers never rebuild blocks.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, Optional, Tuple

import numpy as np

from .exceptions import SpaceMismatchError
from .fockspace import HilbertSpace, OperatorMatrix, _ladder, _require_qubit, hermitian_part, pauli_matrix
from .schemas import SystemParams
from .special import bessel_j, bessel_j_orders, jacobi_anger_partial

logger = logging.getLogger(__name__)

__all__ = [
    "bessel_j", "jacobi_anger_partial", "operator_blocks", "TimeDependentHamiltonian",
    "h_lab", "h_interaction", "h_rotating", "h_rotating_expanded", "secular_hamiltonian",
    "h_rwa", "h_cs", "frame_transform", "hamiltonian_provider", "period_average",
]

FrameName = Literal["V1", "V2", "V"]
ProviderKind = Literal["lab", "interaction", "rotating", "rotating_expanded", "rwa", "cs"]

DEFAULT_EXPANSION_ORDER = 20
SECULAR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorBlocks:
    """Constant building blocks on one composite space (read-only, shared)"""
    b2: np.ndarray           # b^2 on the oscillator
    bd2: np.ndarray          # b^dag^2
    diag: np.ndarray         # 2n + 1
    number: np.ndarray       # n
    sz: np.ndarray
    sy: np.ndarray
    sx: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray


@lru_cache(maxsize=16)
def operator_blocks(space: HilbertSpace) -> OperatorBlocks:
    _require_qubit(space, "operator_blocks")
    b = _ladder(space.fock_cutoff)
    b2 = b @ b
    bd2 = b2.T.copy()
    n = np.diag(np.arange(space.osc_dim, dtype=complex))
    arrays = dict(
        b2=b2, bd2=bd2, diag=2.0 * n + np.eye(space.osc_dim), number=n,
        sz=pauli_matrix("z"), sy=pauli_matrix("y"), sx=pauli_matrix("x"),
        s_plus=pauli_matrix("minus").T.copy(), s_minus=pauli_matrix("minus"),
    )
    for value in arrays.values():
        value.setflags(write=False)
    logger.debug(f"built operator blocks for cutoff {space.fock_cutoff}")
    return OperatorBlocks(**arrays)


class TimeDependentHamiltonian:
    """
    H(t) = sum_k c_k(t) B_k with constant blocks B_k and scalar coefficients.
    Hermitian whenever the coefficients come in conjugate pairs, which every
    factory in this module guarantees.
    """

    def __init__(self, space: HilbertSpace, blocks, coefficients: Callable[[float], np.ndarray],
                 label: str = "hamiltonian", time_independent: bool = False,
                 fastest_frequency: float = 0.0):
        self.space = space
        self.blocks = np.ascontiguousarray(np.stack([np.asarray(b, dtype=complex) for b in blocks]))
        dim = space.total_dim
        if self.blocks.shape[1:] != (dim, dim):
            raise SpaceMismatchError(f"blocks must be {dim}x{dim}, got {self.blocks.shape[1:]}")
        self.blocks.setflags(write=False)
        self._coefficients = coefficients
        self.label = label
        self.time_independent = time_independent
        # largest angular frequency in the coefficients; 0 for constant H
        self.fastest_frequency = float(fastest_frequency)
        self._constant: Optional[np.ndarray] = None

    @classmethod
    def constant(cls, operator: OperatorMatrix, label: str = "constant") -> "TimeDependentHamiltonian":
        return cls(operator.space, [operator.elements], lambda t: np.ones(1), label, time_independent=True)

    def coefficients(self, t: float) -> np.ndarray:
        return np.asarray(self._coefficients(t), dtype=complex)

    def elements(self, t: float) -> np.ndarray:
        if self.time_independent:
            if self._constant is None:
                self._constant = hermitian_part(np.tensordot(self.coefficients(0.0), self.blocks, axes=1))
            return self._constant
        return np.tensordot(self.coefficients(t), self.blocks, axes=1)

    def matrix(self, t: float) -> OperatorMatrix:
        return OperatorMatrix.hermitian(self.space, self.elements(t))

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        """H(t) applied to a vector (or to the columns of a matrix)"""
        return self.elements(t) @ psi

    def __repr__(self) -> str:
        return f"TimeDependentHamiltonian({self.label!r}, cutoff={self.space.fock_cutoff}, blocks={len(self.blocks)})"


def _oscillator_drive_frequency(params: SystemParams) -> float:
    return 2.0 * params.omega_m + params.omega_d


def _oscillator_phases(params: SystemParams, t: float) -> Tuple[complex, complex]:
    phase = np.exp(-2j * params.omega_m * t)
    return phase, np.conj(phase)


def _lab_provider(params: SystemParams, space: HilbertSpace) -> TimeDependentHamiltonian:
    ob = operator_blocks(space)
    eye_osc = np.eye(space.osc_dim)
    blocks = [
        np.kron(ob.sz, eye_osc),
        np.kron(np.eye(2), ob.number),
        np.kron(ob.sz, ob.b2 + ob.bd2 + ob.diag),
        np.kron(ob.s_plus, eye_osc),
        np.kron(ob.s_minus, eye_osc),
    ]

    # cos(w_q t) sx + sin(w_q t) sy = e^{-i w_q t} s+ + e^{i w_q t} s-
    def coefficients(t):
        drive = params.amplitude_A * math.cos(params.omega_d * t)
        rotation = np.exp(-1j * params.omega_q * t)
        return np.array([0.5 * params.omega_q, params.omega_m, params.g,
                         drive * rotation, drive * np.conj(rotation)])

    return TimeDependentHamiltonian(space, blocks, coefficients, "lab",
                                    fastest_frequency=max(params.omega_q + params.omega_d, 2.0 * params.omega_m))


def _interaction_provider(params: SystemParams, space: HilbertSpace) -> TimeDependentHamiltonian:
    ob = operator_blocks(space)
    blocks = [
        np.kron(ob.sz, ob.b2),
        np.kron(ob.sz, ob.bd2),
        np.kron(ob.sz, ob.diag),
        np.kron(ob.sx, np.eye(space.osc_dim)),
    ]

    def coefficients(t):
        down, up = _oscillator_phases(params, t)
        return np.array([params.g * down, params.g * up, params.g,
                         params.amplitude_A * math.cos(params.omega_d * t)])

    return TimeDependentHamiltonian(space, blocks, coefficients, "interaction",
                                    fastest_frequency=_oscillator_drive_frequency(params))


def _rotating_blocks(space: HilbertSpace):
    ob = operator_blocks(space)
    return [np.kron(q, o) for q in (ob.sz, ob.sy) for o in (ob.b2, ob.bd2, ob.diag)]


def _rotating_coefficients(params: SystemParams, t: float, envelope_z: float, envelope_y: float) -> np.ndarray:
    down, up = _oscillator_phases(params, t)
    osc = params.g * np.array([down, up, 1.0])
    return np.concatenate([envelope_z * osc, envelope_y * osc])


def _rotating_provider(params: SystemParams, space: HilbertSpace) -> TimeDependentHamiltonian:
    def coefficients(t):
        phase = params.a_bar * math.sin(params.omega_d * t)
        return _rotating_coefficients(params, t, math.cos(phase), math.sin(phase))

    return TimeDependentHamiltonian(space, _rotating_blocks(space), coefficients, "rotating",
                                    fastest_frequency=_oscillator_drive_frequency(params))


def _rotating_expanded_provider(params: SystemParams, space: HilbertSpace, n_max: int) -> TimeDependentHamiltonian:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    orders = bessel_j_orders(params.a_bar, 2 * n_max)
    n = np.arange(1, n_max + 1)

    def coefficients(t):
        tau = params.omega_d * t
        envelope_z = orders[0] + 2.0 * np.sum(orders[2 * n] * np.cos(2 * n * tau))
        envelope_y = 2.0 * np.sum(orders[2 * n - 1] * np.sin((2 * n - 1) * tau))
        return _rotating_coefficients(params, t, envelope_z, envelope_y)

    return TimeDependentHamiltonian(space, _rotating_blocks(space), coefficients, f"rotating_expanded[{n_max}]",
                                    fastest_frequency=_oscillator_drive_frequency(params))


def hamiltonian_provider(kind: ProviderKind, params: SystemParams, space: HilbertSpace,
                         n_max: int = DEFAULT_EXPANSION_ORDER) -> TimeDependentHamiltonian:
    """Block/coefficient form of the Hamiltonian in the requested frame"""
    _require_qubit(space, f"hamiltonian_provider({kind})")
    if kind == "lab":
        return _lab_provider(params, space)
    if kind == "interaction":
        return _interaction_provider(params, space)
    if kind == "rotating":
        return _rotating_provider(params, space)
    if kind == "rotating_expanded":
        return _rotating_expanded_provider(params, space, n_max)
    if kind == "rwa":
        return TimeDependentHamiltonian.constant(h_rwa(params, space), "rwa")
    if kind == "cs":
        return TimeDependentHamiltonian.constant(h_cs(params, space), "cs")
    raise ValueError(f"unknown Hamiltonian kind {kind!r}")


def h_lab(params: SystemParams, space: HilbertSpace, t: float) -> OperatorMatrix:
    return _lab_provider(params, space).matrix(t)


def h_interaction(params: SystemParams, space: HilbertSpace, t: float) -> OperatorMatrix:
    return _interaction_provider(params, space).matrix(t)


def h_rotating(params: SystemParams, space: HilbertSpace, t: float) -> OperatorMatrix:
    return _rotating_provider(params, space).matrix(t)


def h_rotating_expanded(params: SystemParams, space: HilbertSpace, t: float,
                        n_max: int = DEFAULT_EXPANSION_ORDER) -> OperatorMatrix:
    """Jacobi-Anger partial sum of the rotating-frame Hamiltonian through harmonic n_max"""
    return _rotating_expanded_provider(params, space, n_max).matrix(t)


def secular_hamiltonian(params: SystemParams, space: HilbertSpace,
                        n_max: int = DEFAULT_EXPANSION_ORDER, tol: float = SECULAR_TOL) -> OperatorMatrix:
    """
    Non-rotating part of the expanded H~ for arbitrary w_d.

    With exp[i A_bar sin(tau)] = sum_m J_m e^{i m tau}, the qubit envelope is
    sum_m J_m e^{i m w_d t} (sz for even m, -i sy for odd m). A term survives when
    its oscillator frequency (-2w_m, 0, +2w_m for b^2, 2n+1, b^dag^2) cancels m w_d.
    """
    _require_qubit(space, "secular_hamiltonian")
    ob = operator_blocks(space)
    orders = bessel_j_orders(params.a_bar, 2 * n_max)
    elements = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for osc, frequency in ((ob.b2, -2.0 * params.omega_m), (ob.diag, 0.0), (ob.bd2, 2.0 * params.omega_m)):
        for m in range(-2 * n_max, 2 * n_max + 1):
            if abs(frequency + m * params.omega_d) > tol:
                continue
            j_m = orders[m] if m >= 0 else (-1.0) ** m * orders[-m]
            qubit = ob.sz if m % 2 == 0 else -1j * ob.sy
            elements += params.g * j_m * np.kron(qubit, osc)
    return OperatorMatrix.hermitian(space, elements)


def h_rwa(params: SystemParams, space: HilbertSpace) -> OperatorMatrix:
    """g J0(A_bar)(2n + 1) sz + g J2(A_bar)(b^2 + b^dag^2) sz"""
    _require_qubit(space, "h_rwa")
    ob = operator_blocks(space)
    a_bar = params.a_bar
    osc = params.g * (bessel_j(0, a_bar) * ob.diag + bessel_j(2, a_bar) * (ob.b2 + ob.bd2))
    return OperatorMatrix.hermitian(space, np.kron(ob.sz, osc))


def h_cs(params: SystemParams, space: HilbertSpace) -> OperatorMatrix:
    """g_cs (b^2 + b^dag^2) sz"""
    _require_qubit(space, "h_cs")
    ob = operator_blocks(space)
    return OperatorMatrix.hermitian(space, np.kron(ob.sz, params.g_cs * (ob.b2 + ob.bd2)))


def frame_transform(params: SystemParams, space: HilbertSpace, t: float, which: FrameName = "V") -> OperatorMatrix:
    """V1(t), V2(t) or V(t) = V2(t) V1(t)"""
    _require_qubit(space, "frame_transform")
    if which not in ("V1", "V2", "V"):
        raise ValueError(f"unknown frame {which!r}")
    n = np.arange(space.osc_dim)
    qubit_energy = np.concatenate([np.full(space.osc_dim, 0.5), np.full(space.osc_dim, -0.5)])
    v1 = np.diag(np.exp(1j * t * (params.omega_q * qubit_energy + params.omega_m * np.tile(n, 2))))
    theta = params.amplitude_A / params.omega_d * math.sin(params.omega_d * t)
    v2 = np.kron(math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * pauli_matrix("x"), np.eye(space.osc_dim))
    elements = {"V1": v1, "V2": v2, "V": v2 @ v1}[which]
    return OperatorMatrix(space, elements)


def period_average(provider: TimeDependentHamiltonian, period: float, points: int = 10_000,
                   t0: float = 0.0) -> OperatorMatrix:
    """(1/T) integral of H(t) over [t0, t0 + T] by the periodic trapezoid rule"""
    if points < 2:
        raise ValueError("points must be >= 2")
    times = t0 + period * np.arange(points) / points
    mean = np.mean([provider.coefficients(t) for t in times], axis=0)
    return OperatorMatrix.hermitian(provider.space, np.tensordot(mean, provider.blocks, axes=1))
