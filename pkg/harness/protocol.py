"""
State-preparation protocol: |0> (x) (|e> + |g>)/sqrt(2), evolve, measure sigma_x

The symmetric (antisymmetric) code word appears in the oscillator when the qubit
is found in |+> (|->).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from config.settings import settings
from physics.dynamics import Trajectory, evolve_density, evolve_state, propagator
from physics.exceptions import TruncationError
from physics.fockspace import (
    DensityMatrix,
    HilbertSpace,
    State,
    StateVector,
    fidelity,
    measure_qubit_x,
)
from physics.hamiltonians import frame_transform, h_cs, h_rwa, hamiltonian_provider
from physics.schemas import SqueezeParam, SystemParams
from physics.squeezing import LogicalLabel, logical_state
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

CONSTANT_MODELS = ("cs", "rwa")


@dataclass
class ProtocolResult:
    plus_probability: float
    minus_probability: float
    plus_state: Optional[State]
    minus_state: Optional[State]
    fidelity_plus_vs_analytic: float
    fidelity_minus_vs_analytic: Optional[float]
    xi: SqueezeParam
    t_end: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def total_probability(self) -> float:
        return self.plus_probability + self.minus_probability


def initial_state(space: HilbertSpace) -> StateVector:
    """|0> (x) (|e> + |g>)/sqrt(2)"""
    vacuum = StateVector.basis(space.oscillator(), 0)
    return StateVector.product(np.array([1.0, 1.0]) / math.sqrt(2.0), vacuum)


def constant_hamiltonian(config: ExperimentConfig):
    builder = h_cs if config.hamiltonian_model == "cs" else h_rwa
    return builder(config.system, config.space)


def to_rotating_frame(state: State, params: SystemParams, t: float, model: str) -> State:
    """Apply V2 (interaction model) or V = V2 V1 (lab model); other models already live there"""
    if model in ("rotating", "rwa", "cs"):
        return state
    if model not in ("lab", "interaction"):
        raise ValueError(f"unknown Hamiltonian model {model!r}")
    v = frame_transform(params, state.space, t, "V" if model == "lab" else "V2").elements
    if isinstance(state, StateVector):
        return StateVector(state.space, v @ state.amplitudes)
    return DensityMatrix.from_elements(state.space, v @ state.elements @ v.conj().T)


def guard_truncation(trajectory: Trajectory, threshold: Optional[float] = None) -> Trajectory:
    """Records the worst top-Fock-level population; raises TruncationError at or above threshold"""
    threshold = settings.leak_threshold if threshold is None else threshold
    leak = max(state.top_level_population() for state in trajectory.states)
    trajectory.diagnostics["top_level_population"] = leak
    if leak >= threshold:
        raise TruncationError(f"cutoff {trajectory.space.fock_cutoff} leaks during evolution", leak, threshold)
    return trajectory


def evolve_protocol(config: ExperimentConfig, output_times=None) -> Trajectory:
    """Evolve the protocol's initial state under config.hamiltonian_model (and config.noise)"""
    space = config.space
    psi0 = initial_state(space)
    t_end = config.t_end
    if output_times is None:
        output_times = [0.0, t_end] if t_end > 0 else [0.0]
    times = np.asarray(output_times, dtype=float)

    if not config.noise.is_closed:
        if config.hamiltonian_model != "interaction":
            logger.warning(f"open protocol evolved with the {config.hamiltonian_model} model "
                           f"rather than the interaction frame")
        if config.hamiltonian_model in CONSTANT_MODELS:
            hamiltonian = constant_hamiltonian(config)
        else:
            hamiltonian = hamiltonian_provider(config.hamiltonian_model, config.system, space)
        return guard_truncation(evolve_density(hamiltonian, config.noise, psi0.to_density(), 0.0, t_end,
                                               config.solver, output_times=times))

    if config.hamiltonian_model in CONSTANT_MODELS:
        hamiltonian = constant_hamiltonian(config)
        states = [StateVector(space, propagator(hamiltonian, t).elements @ psi0.amplitudes) for t in times]
        return guard_truncation(Trajectory(times=times, states=states, diagnostics={"method": "propagator"}))

    provider = hamiltonian_provider(config.hamiltonian_model, config.system, space)
    return guard_truncation(evolve_state(provider, psi0, 0.0, t_end, config.solver, output_times=times))


def analytic_branches(xi: SqueezeParam, space: HilbertSpace):
    """(|0_L>, |1_L>) at xi; |1_L> is None at xi = 0"""
    osc = space.oscillator()
    zero = logical_state(LogicalLabel.ZERO, xi, osc)
    one = None if xi.r == 0.0 else logical_state(LogicalLabel.ONE, xi, osc)
    return zero, one


def project(state: State, xi: SqueezeParam, t_end: float, diagnostics: Optional[Dict[str, Any]] = None) -> ProtocolResult:
    """sigma_x measurement of a rotating-frame state, compared against the code words at xi"""
    measurement = measure_qubit_x(state)
    zero, one = analytic_branches(xi, state.space)
    plus, minus = measurement.plus, measurement.minus
    fid_plus = 0.0 if plus.is_null else fidelity(zero, plus.state)
    fid_minus = None
    if one is not None and not minus.is_null:
        fid_minus = fidelity(one, minus.state)
    return ProtocolResult(
        plus_probability=plus.probability,
        minus_probability=minus.probability,
        plus_state=plus.state,
        minus_state=minus.state,
        fidelity_plus_vs_analytic=fid_plus,
        fidelity_minus_vs_analytic=fid_minus,
        xi=xi,
        t_end=t_end,
        diagnostics=diagnostics or {},
    )


def run_protocol(config: ExperimentConfig) -> ProtocolResult:
    """Prepare, evolve to t_end, project the qubit and compare with the analytic code words"""
    t_end = config.t_end
    xi = SqueezeParam.from_evolution(config.system.g_cs, t_end)
    logger.info(f"🔄 Protocol: model={config.hamiltonian_model}, g t_end={config.t_end_in_g_units:.6g}, "
                f"|xi|={xi.r:.6f}, cutoff={config.fock_cutoff}, open={not config.noise.is_closed}")

    trajectory = evolve_protocol(config)
    final = to_rotating_frame(trajectory.final, config.system, t_end, config.hamiltonian_model)
    result = project(final, xi, t_end, trajectory.diagnostics)

    logger.info(f"✅ P(+)={result.plus_probability:.10f}, P(-)={result.minus_probability:.10f}, "
                f"F(+)={result.fidelity_plus_vs_analytic:.10f}")
    return result


def branch_series(trajectory: Trajectory, params: SystemParams, model: str) -> List[Optional[State]]:
    """Plus-branch oscillator state at every stored time (None when the branch is empty)"""
    branches = []
    for t, state in zip(trajectory.times, trajectory.states):
        plus = measure_qubit_x(to_rotating_frame(state, params, float(t), model)).plus
        branches.append(plus.state)
    return branches
