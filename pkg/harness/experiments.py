"""
Experiments: parameter sweeps, moment-ratio curves, open-system fidelity and Wigner snapshots

Sweep points are independent trajectories; they run on a thread pool and the
output rows keep the order of the input grid.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.settings import settings
from physics.dynamics import evolve_state, propagator
from physics.fockspace import StateVector, fidelity, measure_qubit_x
from physics.hamiltonians import h_cs, hamiltonian_provider
from physics.schemas import NoiseParams, SqueezeParam, SystemParams
from physics.special import FIRST_J0_ROOT, bessel_j
from physics.squeezing import MOMENT_ORDERS, LogicalLabel, logical_state, moment_ratio
from physics.wigner import PhaseSpaceGrid, default_axis, wigner
from .config import ExperimentConfig
from .protocol import branch_series, evolve_protocol, guard_truncation, initial_state, to_rotating_frame

logger = logging.getLogger(__name__)

RATE_COMBOS: Tuple[Tuple[float, float], ...] = ((0.1, 0.1), (1.0, 0.1), (0.1, 1.0), (1.0, 1.0))
WEAK_COUPLING_FRACTION = 0.05
OPEN_POINTS = 25

SnapshotKind = Literal["fig1_sym", "fig1_antisym", "open_endstate"]


@dataclass(frozen=True)
class WignerSnapshot:
    label: str
    grid: PhaseSpaceGrid
    xi: SqueezeParam
    fock_cutoff: int


def parallel_map(func: Callable, items: Sequence, max_workers: Optional[int] = None) -> List:
    """Ordered map over a thread pool"""
    items = list(items)
    workers = max(1, min(max_workers or settings.max_workers, len(items) or 1))
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def unit_squeeze_end_time(params: SystemParams) -> float:
    """
    t_end with 2|g_cs| t_end = 1. Where J2(A_bar) is tiny the J0-root end time is
    used, so the h_cs reference tends to |0> as A_bar -> 0.
    """
    j2_root = bessel_j(2, FIRST_J0_ROOT)
    j2 = bessel_j(2, params.a_bar)
    if abs(j2) < WEAK_COUPLING_FRACTION * j2_root:
        return 0.5 / (params.g * j2_root)
    return 0.5 / abs(params.g * j2)


def rotating_vs_cs_fidelity(params: SystemParams, config: ExperimentConfig, t_end: Optional[float] = None,
                            reference: Optional[SystemParams] = None, model: str = "rotating") -> float:
    """
    Fidelity between the plus branches of the `model` evolution (mapped to the rotating
    frame) and of the h_cs evolution of `reference` (default: params), both at t_end.
    """
    space = config.space
    t_end = unit_squeeze_end_time(params) if t_end is None else t_end
    psi0 = initial_state(space)

    provider = hamiltonian_provider(model, params, space)
    full = guard_truncation(evolve_state(provider, psi0, 0.0, t_end, config.solver)).final
    full = to_rotating_frame(full, params, t_end, model)

    u_cs = propagator(h_cs(reference or params, space), t_end)
    ideal = StateVector(space, u_cs.elements @ psi0.amplitudes)

    plus_full = measure_qubit_x(full).plus
    plus_ideal = measure_qubit_x(ideal).plus
    if plus_full.is_null or plus_ideal.is_null:
        return 0.0
    return fidelity(plus_ideal.state, plus_full.state)


def _table(column: str, grid: Iterable[float], values: Iterable[float]) -> pd.DataFrame:
    return pd.DataFrame({column: np.asarray(list(grid), dtype=float), "fidelity": np.asarray(list(values), dtype=float)})


def sweep_amplitude(config: ExperimentConfig, a_bar_grid: Sequence[float],
                    max_workers: Optional[int] = None) -> pd.DataFrame:
    """Plus-branch fidelity, full rotating-frame H vs h_cs, over A_bar"""
    a_bar_grid = [float(a) for a in a_bar_grid]
    logger.info(f"📈 Amplitude sweep: {len(a_bar_grid)} points, g={config.system.g:g}, cutoff={config.fock_cutoff}")

    def point(a_bar):
        value = rotating_vs_cs_fidelity(config.system.with_a_bar(a_bar), config)
        logger.debug(f"A_bar={a_bar:.4f}: fidelity {value:.10f}")
        return value

    return _table("a_bar", a_bar_grid, parallel_map(point, a_bar_grid, max_workers))


def sweep_coupling(config: ExperimentConfig, g_over_omega_m_grid: Sequence[float],
                   max_workers: Optional[int] = None) -> pd.DataFrame:
    """Plus-branch fidelity over g/w_m at the J0 root, 2 g_cs t_end = 1 per point"""
    grid = [float(g) for g in g_over_omega_m_grid]
    base = config.system.with_a_bar(FIRST_J0_ROOT)
    logger.info(f"📈 Coupling sweep: {len(grid)} points in [{min(grid):g}, {max(grid):g}]")

    def point(ratio):
        params = base.with_coupling(ratio * base.omega_m)
        value = rotating_vs_cs_fidelity(params, config)
        logger.debug(f"g/w_m={ratio:g}: fidelity {value:.10f}")
        return value

    return _table("g_over_omega_m", grid, parallel_map(point, grid, max_workers))


def sweep_drive_frequency(config: ExperimentConfig, detuning_grid: Sequence[float],
                          max_workers: Optional[int] = None) -> pd.DataFrame:
    """Plus-branch fidelity for w_d = w_m + delta (delta in units of g) against the resonant h_cs branch"""
    grid = [float(d) for d in detuning_grid]
    resonant = config.system.with_drive_frequency(config.system.omega_m).with_a_bar(FIRST_J0_ROOT)
    t_end = unit_squeeze_end_time(resonant)
    logger.info(f"📈 Drive-frequency sweep: {len(grid)} detunings, g={resonant.g:g}")

    def point(detuning):
        params = resonant.with_drive_frequency(resonant.omega_m + detuning * resonant.g)
        return rotating_vs_cs_fidelity(params, config, t_end=t_end, reference=resonant)

    return _table("detuning_over_g", grid, parallel_map(point, grid, max_workers))


def moment_ratio_curves(r_grid: Sequence[float], p_set: Sequence[int] = MOMENT_ORDERS) -> pd.DataFrame:
    """Long-format table (r, p, ratio), ordered by r then p"""
    rows = []
    for r in r_grid:
        if r <= 0:
            raise ValueError(f"r grid must be positive, got {r}")
        for p in p_set:
            rows.append({"r": float(r), "p": int(p), "ratio": moment_ratio(float(r), int(p)).ratio})
    return pd.DataFrame(rows, columns=["r", "p", "ratio"])


def combo_label(combo: Tuple[float, float]) -> str:
    return f"{combo[0]:g}/{combo[1]:g}"


def _open_config(config: ExperimentConfig, combo: Tuple[float, float]) -> ExperimentConfig:
    g = config.system.g
    noise = NoiseParams.from_ratios(
        g, combo[0], combo[1],
        gamma_m_over_g=config.noise.gamma_m / g,
        n_m_th=config.noise.n_m_th,
    )
    return config.with_overrides(noise=noise)


def open_fidelity_curves(config: ExperimentConfig, rate_combos: Sequence[Tuple[float, float]] = RATE_COMBOS,
                         points: int = OPEN_POINTS, max_workers: Optional[int] = None) -> pd.DataFrame:
    """
    Plus-branch fidelity of the open protocol against the closed protocol at matching
    g t in [0, t_end_in_g_units]; gamma_m/g and n_th come from config.noise.
    """
    if points < 2:
        raise ValueError("points must be >= 2")
    g_t = np.linspace(0.0, config.t_end_in_g_units, points)
    times = g_t / config.system.g
    model = config.hamiltonian_model
    logger.info(f"🌡️ Open-system curves: {len(rate_combos)} combos, g={config.system.g:g}, "
                f"cutoff={config.fock_cutoff}, model={model}")

    closed_config = config.with_overrides(noise=NoiseParams())
    closed = branch_series(evolve_protocol(closed_config, times), config.system, model)

    def run(combo):
        trajectory = evolve_protocol(_open_config(config, combo), times)
        logger.debug(f"combo {combo_label(combo)}: max trace drift {trajectory.diagnostics.get('max_trace_drift')}")
        opened = branch_series(trajectory, config.system, model)
        return [0.0 if (a is None or b is None) else fidelity(a, b) for a, b in zip(closed, opened)]

    curves = parallel_map(run, list(rate_combos), max_workers)
    rows = []
    for combo, curve in zip(rate_combos, curves):
        label = combo_label(combo)
        rows.extend({"combo": label, "g_t": float(t), "fidelity": float(f)} for t, f in zip(g_t, curve))
    return pd.DataFrame(rows, columns=["combo", "g_t", "fidelity"])


def wigner_snapshot(config: ExperimentConfig, which: SnapshotKind) -> WignerSnapshot:
    """Code-word Wigner grids at the config's xi, or the open plus branch at t_end"""
    axis = default_axis(config.wigner_extent, config.wigner_points)
    xi = SqueezeParam.from_evolution(config.system.g_cs, config.t_end)
    osc = config.space.oscillator()

    if which == "fig1_sym":
        state = logical_state(LogicalLabel.ZERO, xi, osc)
    elif which == "fig1_antisym":
        state = logical_state(LogicalLabel.ONE, xi, osc)
    elif which == "open_endstate":
        trajectory = evolve_protocol(config)
        final = to_rotating_frame(trajectory.final, config.system, config.t_end, config.hamiltonian_model)
        plus = measure_qubit_x(final).plus
        if plus.is_null:
            raise ValueError("plus branch is empty at t_end")
        state = plus.state
    else:
        raise ValueError(f"unknown snapshot {which!r}")

    logger.info(f"🗺️ Wigner snapshot {which}: |xi|={xi.r:.4f}, {axis.size}x{axis.size} grid")
    return WignerSnapshot(label=which, grid=wigner(state, axis, axis), xi=xi, fock_cutoff=config.fock_cutoff)


def default_amplitude_grid() -> np.ndarray:
    return np.round(np.arange(0.5, 4.5 + 1e-9, 0.05), 10)


def default_coupling_grid(paper_scale: bool = False) -> np.ndarray:
    return np.logspace(-4 if paper_scale else -3, -1, 13 if paper_scale else 9)


def default_detuning_grid() -> np.ndarray:
    return np.linspace(-2.0, 2.0, 41)


def default_r_grid() -> np.ndarray:
    return np.round(np.linspace(0.1, 3.0, 30), 10)
