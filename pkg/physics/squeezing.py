"""
Squeezed-vacuum analytics and the squeezed-vacuum code

S(xi)|0> = cosh(r)^{-1/2} sum_m (-1)^m sqrt((2m)!)/(2^m m!) e^{i m phi} tanh(r)^m |2m>

The code words (S(xi) +- S(-xi))|0>/sqrt(N+-) keep the even-m (|4n>) and
odd-m (|4n+2>) terms of that series; both are built directly from it so that
the forbidden Fock amplitudes are exactly zero.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from config.settings import settings
from .exceptions import CondSqueezeError, DegenerateStateError, TruncationError
from .fockspace import HilbertSpace, StateVector, _require_oscillator_only, annihilation, number
from .schemas import SqueezeParam

logger = logging.getLogger(__name__)

MAX_SERIES_TERMS = 10 ** 6
SERIES_BLOCK = 2048
DEFAULT_MOMENT_TOLERANCE = 1e-15
MOMENT_ORDERS = (1, 2, 3, 4)
LN2 = math.log(2.0)


class LogicalLabel(str, Enum):
    ZERO = "zero_L"
    ONE = "one_L"


class SeriesConvergenceError(CondSqueezeError):
    """A series did not meet its tolerance within MAX_SERIES_TERMS terms"""


@dataclass(frozen=True)
class MomentReport:
    r: float
    p: int
    moment_zero: float
    moment_one: float
    ratio: float
    terms_used: int
    truncation_estimate: float


@dataclass(frozen=True)
class KLReport:
    """Knill-Laflamme summary for E = {I, b, b^dag b, (b^dag b)^2}"""
    r: float
    off_diagonal_max: float
    moment_mismatches: List[Tuple[int, float]] = field(default_factory=list)
    diagonal_spread: float = 0.0


def log_cosh(x: float) -> float:
    x = abs(x)
    if x < 20.0:
        return math.log1p(2.0 * math.sinh(0.5 * x) ** 2)
    return x + math.log1p(math.exp(-2.0 * x)) - LN2


def normalization_constants(r: float) -> Tuple[float, float]:
    """N+- = 2[1 +- cosh(2r)^{-1/2}]; N- evaluated without cancellation"""
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    half_log = 0.5 * log_cosh(2.0 * r)
    return 2.0 * (1.0 + math.exp(-half_log)), -2.0 * math.expm1(-half_log)


def _log_weight(m: np.ndarray, log_t: float) -> np.ndarray:
    """log of binom(2m, m) (tanh r / 2)^{2m}, i.e. |c_m|^2 cosh r"""
    return gammaln(2 * m + 1) - 2.0 * gammaln(m + 1) - 2.0 * m * LN2 + 2.0 * m * log_t


def _sum_log_series(log_term: Callable[[np.ndarray], np.ndarray], tolerance: float,
                    max_terms: int = MAX_SERIES_TERMS) -> Tuple[float, int, float]:
    """
    Sum exp(log_term(k)), k = 0, 1, ..., stopping once the next term is below
    tolerance * partial sum. Returns (sum, terms used, last included term).
    """
    total = 0.0
    used = 0
    while used < max_terms:
        k = np.arange(used, min(used + SERIES_BLOCK, max_terms), dtype=float)
        with np.errstate(divide='ignore'):
            terms = np.exp(log_term(k))
        partial = total + np.cumsum(terms)
        below = terms[1:] < tolerance * partial[:-1]
        if below.any():
            i = int(np.argmax(below))
            return float(partial[i]), used + i + 1, float(terms[i])
        total = float(partial[-1])
        used += k.size
    raise SeriesConvergenceError(f"series did not converge within {max_terms} terms")


def _series_coefficients(xi: SqueezeParam, fock_cutoff: int) -> np.ndarray:
    """Untruncated-series amplitudes of S(xi)|0> on Fock indices 0..N"""
    amplitudes = np.zeros(fock_cutoff + 1, dtype=complex)
    if xi.r == 0.0:
        amplitudes[0] = 1.0
        return amplitudes
    m = np.arange(fock_cutoff // 2 + 1, dtype=float)
    log_t = math.log(math.tanh(xi.r))
    magnitude = np.exp(0.5 * _log_weight(m, log_t) - 0.5 * log_cosh(xi.r))
    amplitudes[0::2] = magnitude * np.exp(1j * m * (xi.phi + math.pi))
    return amplitudes


def _tail(xi: SqueezeParam, first_m: int, step: int, prefactor: float) -> float:
    if xi.r == 0.0:
        return 0.0
    log_t = math.log(math.tanh(xi.r))
    offset = math.log(prefactor) - log_cosh(xi.r)
    value, _, _ = _sum_log_series(
        lambda k: _log_weight(first_m + step * k, log_t) + offset, tolerance=1e-16)
    return value


def norm_deficiency(xi: SqueezeParam, fock_cutoff: int) -> float:
    """Probability of S(xi)|0> above the cutoff, 1 - sum_{2m <= N} |c_m|^2"""
    return _tail(xi, fock_cutoff // 2 + 1, 1, 1.0)


def _threshold(leak_threshold: Optional[float]) -> float:
    return settings.leak_threshold if leak_threshold is None else leak_threshold


def squeezed_vacuum(xi: SqueezeParam, space: HilbertSpace,
                    leak_threshold: Optional[float] = None) -> StateVector:
    """S(xi)|0> from the closed-form Fock series, renormalized after truncation"""
    _require_oscillator_only(space, "squeezed_vacuum")
    threshold = _threshold(leak_threshold)
    deficiency = norm_deficiency(xi, space.fock_cutoff)
    logger.debug(f"squeezed vacuum r={xi.r:.6f}, cutoff={space.fock_cutoff}: deficiency {deficiency:.3e}")
    if deficiency >= threshold:
        raise TruncationError(f"cutoff {space.fock_cutoff} too small for r={xi.r}", deficiency, threshold)
    return StateVector.from_amplitudes(space, _series_coefficients(xi, space.fock_cutoff),
                                       truncation_deficiency=deficiency)


def logical_state(label: LogicalLabel, xi: SqueezeParam, space: HilbertSpace,
                  leak_threshold: Optional[float] = None) -> StateVector:
    """|0_L> (Fock support 4n) or |1_L> (support 4n+2) of the squeezed-vacuum code"""
    _require_oscillator_only(space, "logical_state")
    label = LogicalLabel(label)
    if label is LogicalLabel.ONE and xi.r == 0.0:
        raise DegenerateStateError("one_L is undefined at r = 0 (N- = 0)")

    n_plus, n_minus = normalization_constants(xi.r)
    norm_constant = n_plus if label is LogicalLabel.ZERO else n_minus
    residue = 0 if label is LogicalLabel.ZERO else 2

    coefficients = _series_coefficients(xi, space.fock_cutoff)
    indices = np.arange(space.osc_dim)
    amplitudes = np.where(indices % 4 == residue, 2.0 * coefficients / math.sqrt(norm_constant), 0.0)

    m_first = space.fock_cutoff // 2 + 1
    if m_first % 2 != residue // 2:
        m_first += 1
    deficiency = _tail(xi, m_first, 2, 4.0 / norm_constant)
    threshold = _threshold(leak_threshold)
    if deficiency >= threshold:
        raise TruncationError(f"cutoff {space.fock_cutoff} too small for {label.value} at r={xi.r}",
                              deficiency, threshold)
    return StateVector.from_amplitudes(space, amplitudes, truncation_deficiency=deficiency)


def _moment_series(label: LogicalLabel, r: float, p: int, tolerance: float) -> Tuple[float, int, float]:
    label = LogicalLabel(label)
    if p not in MOMENT_ORDERS:
        raise ValueError(f"p must be one of {MOMENT_ORDERS}, got {p}")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    if r == 0.0:
        if label is LogicalLabel.ONE:
            raise DegenerateStateError("one_L is undefined at r = 0 (N- = 0)")
        return 0.0, 1, 0.0

    n_plus, n_minus = normalization_constants(r)
    norm_constant = n_plus if label is LogicalLabel.ZERO else n_minus
    log_t = math.log(math.tanh(r))
    parity = 0 if label is LogicalLabel.ZERO else 1

    def log_term(k):
        m = 2 * k + parity
        with np.errstate(divide='ignore'):
            return _log_weight(m, log_t) + p * np.log(2.0 * m)

    total, used, last = _sum_log_series(log_term, tolerance)
    prefactor = 4.0 / (norm_constant * math.cosh(r))
    return prefactor * total, used, prefactor * last


def number_moment(label: LogicalLabel, r: float, p: int,
                  tolerance: float = DEFAULT_MOMENT_TOLERANCE) -> float:
    """<(b^dag b)^p> in a code word, summed from its Fock series"""
    value, _, _ = _moment_series(label, r, p, tolerance)
    return value


def moment_ratio(r: float, p: int, tolerance: float = DEFAULT_MOMENT_TOLERANCE) -> MomentReport:
    if r <= 0:
        raise ValueError(f"moment_ratio needs r > 0, got {r}")
    zero, used_zero, last_zero = _moment_series(LogicalLabel.ZERO, r, p, tolerance)
    one, used_one, last_one = _moment_series(LogicalLabel.ONE, r, p, tolerance)
    return MomentReport(
        r=r, p=p, moment_zero=zero, moment_one=one, ratio=zero / one,
        terms_used=max(used_zero, used_one),
        truncation_estimate=max(last_zero, last_one),
    )


def moment_ratio_closed_form(r: float) -> float:
    """p = 1 ratio (1-c^3)(1-c) / ((1+c^3)(1+c)) with c = cosh(2r)^{-1/2}"""
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    half_log = 0.5 * log_cosh(2.0 * r)
    c = math.exp(-half_log)
    return (-math.expm1(-3.0 * half_log)) * (-math.expm1(-half_log)) / ((1.0 + c ** 3) * (1.0 + c))


def error_set(space: HilbertSpace) -> Dict[str, np.ndarray]:
    """E = {I, b, b^dag b, (b^dag b)^2} on an oscillator space"""
    _require_oscillator_only(space, "error_set")
    n = number(space).elements
    return {
        "I": np.eye(space.osc_dim, dtype=complex),
        "b": annihilation(space).elements,
        "n": n,
        "n^2": n @ n,
    }


def kl_check(xi: SqueezeParam, space: HilbertSpace,
             tolerance: float = DEFAULT_MOMENT_TOLERANCE) -> KLReport:
    """Orthogonality of the code words under E_i^dag E_j plus the moment mismatches"""
    if xi.r <= 0:
        raise ValueError("kl_check needs r > 0")
    zero = logical_state(LogicalLabel.ZERO, xi, space).amplitudes
    one = logical_state(LogicalLabel.ONE, xi, space).amplitudes

    off_diagonal = 0.0
    spread = 0.0
    errors = list(error_set(space).values())
    for left in errors:
        for right in errors:
            product = left.conj().T @ right
            off_diagonal = max(off_diagonal, abs(np.vdot(zero, product @ one)))
            spread = max(spread, abs(np.vdot(zero, product @ zero) - np.vdot(one, product @ one)))

    mismatches = [(p, abs(moment_ratio(xi.r, p, tolerance).ratio - 1.0)) for p in MOMENT_ORDERS]
    logger.debug(f"KL check r={xi.r}: off-diagonal {off_diagonal:.3e}, mismatches {mismatches}")
    return KLReport(r=xi.r, off_diagonal_max=float(off_diagonal),
                    moment_mismatches=mismatches, diagonal_spread=float(spread))


def rotation_expectation(state: StateVector, angle: float) -> complex:
    """<psi| exp(i angle b^dag b) |psi> for an oscillator state"""
    _require_oscillator_only(state.space, "rotation_expectation")
    phases = np.exp(1j * angle * np.arange(state.space.osc_dim))
    return complex(np.sum(np.abs(state.amplitudes) ** 2 * phases))
