"""
Wigner function as displaced parity

  W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^dag],  D(alpha) = exp(alpha b^dag - alpha^* b)

normalized so that the integral of W over d^2 alpha is 1.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Literal

import numpy as np
from scipy.linalg import expm

from .exceptions import SpaceMismatchError
from .fockspace import State, StateVector, _ladder

logger = logging.getLogger(__name__)

CONVENTION = "2/pi displaced parity"
DEFAULT_EXTENT = 3.5
DEFAULT_POINTS = 141
CHUNK_SIZE = 512
REALNESS_TOL = 1e-10
EIGENVALUE_CUTOFF = 1e-14

WignerMethod = Literal["eigenbasis", "expm"]


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """W sampled on re_axis x im_axis; values[i, j] = W(re_axis[j] + 1j * im_axis[i])"""
    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("re_axis", "im_axis"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} must be a non-empty, strictly increasing 1-D array")
            object.__setattr__(self, name, axis)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.im_axis.size, self.re_axis.size):
            raise ValueError(f"values must have shape {(self.im_axis.size, self.re_axis.size)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Wigner values must be finite")
        object.__setattr__(self, "values", values)

    def normalization(self) -> float:
        """Riemann sum of W on the (uniform) grid"""
        if self.re_axis.size < 2 or self.im_axis.size < 2:
            raise ValueError("normalization needs at least two points per axis")
        d_re = (self.re_axis[-1] - self.re_axis[0]) / (self.re_axis.size - 1)
        d_im = (self.im_axis[-1] - self.im_axis[0]) / (self.im_axis.size - 1)
        return float(np.sum(self.values) * d_re * d_im)

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))

    @property
    def max_value(self) -> float:
        return float(np.max(self.values))


def default_axis(extent: float = DEFAULT_EXTENT, points: int = DEFAULT_POINTS) -> np.ndarray:
    return np.linspace(-extent, extent, points)


def _mixture_components(state: State):
    """(weight, pure amplitudes) pairs describing the state"""
    if isinstance(state, StateVector):
        psi = state.amplitudes / math.sqrt(state.norm_squared)
        return [(1.0, psi)]
    weights, vectors = np.linalg.eigh(state.elements)
    keep = weights > EIGENVALUE_CUTOFF * max(float(weights[-1]), 1.0)
    return [(float(w), vectors[:, k]) for k, w in zip(np.flatnonzero(keep), weights[keep])]


def _eigenbasis_evaluator(fock_cutoff: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """
    D(alpha) = R D(|alpha|) R^dag with R = exp(i arg(alpha) n) diagonal and
    D(x) = V exp(-i x mu) V^dag from one diagonalization of i(b^dag - b).
    """
    b = _ladder(fock_cutoff)
    mu, v = np.linalg.eigh(1j * (b.T - b))
    v_dag = v.conj().T
    n = np.arange(fock_cutoff + 1)
    parity = np.where(n % 2 == 0, 1.0, -1.0)

    def displaced_parity(psi: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        x = np.abs(alphas)
        theta = np.angle(alphas)
        # D^dag psi = R V exp(i x mu) V^dag R^dag psi; the outer R drops out of |.|^2
        rotated = psi[:, None] * np.exp(-1j * np.outer(n, theta))
        moved = v @ (np.exp(1j * np.outer(mu, x)) * (v_dag @ rotated))
        return parity @ (np.abs(moved) ** 2)

    return displaced_parity


def _expm_parity(rho: np.ndarray, fock_cutoff: int, alphas: np.ndarray) -> np.ndarray:
    b = _ladder(fock_cutoff)
    parity = np.diag(np.where(np.arange(fock_cutoff + 1) % 2 == 0, 1.0, -1.0))
    values = np.empty(alphas.size, dtype=complex)
    for k, alpha in enumerate(alphas):
        d = expm(alpha * b.T - np.conj(alpha) * b)
        values[k] = np.trace(rho @ d @ parity @ d.conj().T)
    return values


def wigner(state: State, re_axis=None, im_axis=None, method: WignerMethod = "eigenbasis") -> PhaseSpaceGrid:
    """W(alpha) of an oscillator state on the grid re_axis x im_axis"""
    if state.space.has_qubit:
        raise SpaceMismatchError("wigner needs an oscillator-only state (measure or trace out the qubit)")
    re_axis = default_axis() if re_axis is None else np.asarray(re_axis, dtype=float)
    im_axis = default_axis() if im_axis is None else np.asarray(im_axis, dtype=float)
    cutoff = state.space.fock_cutoff

    re_grid, im_grid = np.meshgrid(re_axis, im_axis)
    alphas = (re_grid + 1j * im_grid).reshape(-1)
    diagnostics: Dict[str, Any] = {"method": method, "fock_cutoff": cutoff, "convention": CONVENTION}

    max_radius_sq = float(np.max(np.abs(alphas)) ** 2)
    if max_radius_sq > cutoff / 4:
        diagnostics["grid_extent_warning"] = max_radius_sq
        logger.warning(f"grid reaches |alpha|^2 = {max_radius_sq:.2f} > cutoff/4 = {cutoff / 4:.2f}; "
                       f"outer values may be truncation artifacts")

    if method == "eigenbasis":
        evaluate = _eigenbasis_evaluator(cutoff)
        parity_values = np.zeros(alphas.size)
        for weight, psi in _mixture_components(state):
            for start in range(0, alphas.size, CHUNK_SIZE):
                chunk = slice(start, start + CHUNK_SIZE)
                parity_values[chunk] += weight * evaluate(psi, alphas[chunk])
    elif method == "expm":
        rho = state.to_density().elements if isinstance(state, StateVector) else state.elements
        complex_values = _expm_parity(rho, cutoff, alphas)
        max_imag = float(np.max(np.abs(complex_values.imag)))
        diagnostics["max_imag"] = max_imag
        if max_imag > REALNESS_TOL:
            logger.warning(f"displaced parity has imaginary part {max_imag:.3e}")
        parity_values = complex_values.real
    else:
        raise ValueError(f"unknown Wigner method {method!r}")

    values = (2.0 / math.pi) * parity_values.reshape(im_axis.size, re_axis.size)
    grid = PhaseSpaceGrid(re_axis=re_axis, im_axis=im_axis, values=values, diagnostics=diagnostics)
    if re_axis.size > 1 and im_axis.size > 1:
        diagnostics["normalization"] = grid.normalization()
    logger.debug(f"Wigner grid {im_axis.size}x{re_axis.size} ({method}): min {grid.min_value:.4f}, "
                 f"max {grid.max_value:.4f}")
    return grid
