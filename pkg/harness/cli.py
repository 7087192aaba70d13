"""Command-line entry point: python -m harness <command> [options]"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel

from config.settings import settings, setup_logging
from physics.exceptions import ConfigError, SolverError, TruncationError
from physics.schemas import NoiseParams
from .config import PAPER_G, ExperimentConfig, load_config
from .experiments import (
    RATE_COMBOS,
    default_amplitude_grid,
    default_coupling_grid,
    default_detuning_grid,
    default_r_grid,
    moment_ratio_curves,
    open_fidelity_curves,
    sweep_amplitude,
    sweep_coupling,
    sweep_drive_frequency,
    wigner_snapshot,
)
from .export import WignerMetadata, write_json, write_table, write_wigner
from .protocol import run_protocol
from .validation import validate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

SWEEP_DESK_G = 1e-3


class ProtocolSummary(BaseModel):
    hamiltonian_model: str
    fock_cutoff: int
    t_end: float
    xi_r: float
    xi_phi: float
    plus_probability: float
    minus_probability: float
    fidelity_plus_vs_analytic: float
    fidelity_minus_vs_analytic: Optional[float]


def _base_config(args: argparse.Namespace, closed: bool) -> ExperimentConfig:
    if closed:
        base = ExperimentConfig.closed_system(g=PAPER_G if args.paper_scale else SWEEP_DESK_G)
    elif args.paper_scale:
        base = ExperimentConfig.paper_scale()
    else:
        base = ExperimentConfig.desk_scale()
    config = load_config(args.config, base) if args.config else base
    if args.cutoff is not None:
        config = config.with_overrides(fock_cutoff=args.cutoff)
    return config


def _out_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    return Path(args.out or config.output_path)


def cmd_protocol(args) -> int:
    if args.config:
        config = load_config(args.config)
        if args.cutoff is not None:
            config = config.with_overrides(fock_cutoff=args.cutoff)
    else:
        config = _base_config(args, closed=True).with_overrides(hamiltonian_model="cs")
    result = run_protocol(config)
    summary = ProtocolSummary(
        hamiltonian_model=config.hamiltonian_model, fock_cutoff=config.fock_cutoff, t_end=result.t_end,
        xi_r=result.xi.r, xi_phi=result.xi.phi,
        plus_probability=result.plus_probability, minus_probability=result.minus_probability,
        fidelity_plus_vs_analytic=result.fidelity_plus_vs_analytic,
        fidelity_minus_vs_analytic=result.fidelity_minus_vs_analytic,
    )
    write_json(summary, _out_dir(args, config) / "protocol.json")
    return EXIT_OK


def cmd_fig2a(args) -> int:
    config = _base_config(args, closed=True)
    table = sweep_amplitude(config, default_amplitude_grid())
    best = table.loc[table["fidelity"].idxmax()]
    logger.info(f"🎯 Best A_bar = {best['a_bar']:.3f} (fidelity {best['fidelity']:.8f})")
    write_table(table, _out_dir(args, config) / "fig2a.csv")
    return EXIT_OK


def cmd_fig2b(args) -> int:
    config = _base_config(args, closed=True)
    table = sweep_coupling(config, default_coupling_grid(args.paper_scale))
    write_table(table, _out_dir(args, config) / "fig2b.csv")
    return EXIT_OK


def cmd_fig2c(args) -> int:
    config = _base_config(args, closed=True)
    table = sweep_drive_frequency(config, default_detuning_grid())
    write_table(table, _out_dir(args, config) / "fig2c.csv")
    return EXIT_OK


def cmd_fig3(args) -> int:
    table = moment_ratio_curves(default_r_grid())
    write_table(table, Path(args.out or settings.output_dir) / "fig3.csv")
    return EXIT_OK


def cmd_fig4(args) -> int:
    config = _base_config(args, closed=False)
    table = open_fidelity_curves(config, RATE_COMBOS, points=args.points)
    write_table(table, _out_dir(args, config) / "fig4.csv")
    return EXIT_OK


def cmd_wigner(args) -> int:
    if args.which == "open_endstate":
        config = _base_config(args, closed=False)
        g = config.system.g
        noise = NoiseParams.from_ratios(g, args.combo[0], args.combo[1],
                                        gamma_m_over_g=config.noise.gamma_m / g, n_m_th=config.noise.n_m_th)
        config = config.with_overrides(noise=noise)
    else:
        # code words at xi = i
        config = load_config(args.config) if args.config else ExperimentConfig()
        if args.cutoff is not None:
            config = config.with_overrides(fock_cutoff=args.cutoff)
    snapshot = wigner_snapshot(config, args.which)
    grid = snapshot.grid
    metadata = WignerMetadata(
        state_label=snapshot.label, xi_r=snapshot.xi.r, xi_phi=snapshot.xi.phi, fock_cutoff=snapshot.fock_cutoff,
        points=int(grid.values.size), min_value=grid.min_value, max_value=grid.max_value,
        normalization=grid.diagnostics.get("normalization"),
    )
    write_wigner(grid, _out_dir(args, config) / f"wigner_{snapshot.label}.csv", metadata)
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate(args.only or None)
    write_json(report, Path(args.out or settings.output_dir) / "validation.json")
    if not report.passed:
        for failure in report.failures:
            logger.error(f"❌ {failure.module}.{failure.name}: measured {failure.measured}, "
                         f"tolerance {failure.tolerance:g} {failure.detail}")
        return EXIT_VALIDATION_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harness", description="Conditional squeezed-vacuum code experiments")
    parser.add_argument("--config", help="TOML experiment config (dotted keys, e.g. system.g = 1e-4)")
    parser.add_argument("--out", help=f"Output directory (default: $CONDSQUEEZE_OUTPUT_DIR or {settings.output_dir})")
    parser.add_argument("--paper-scale", action="store_true", help="Use g/w_m = 1e-4 instead of the desk-scale couplings")
    parser.add_argument("--cutoff", type=int, help="Override the Fock cutoff")
    parser.add_argument("--log-level", default=None, help="Override CONDSQUEEZE_LOG_LEVEL")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("protocol", help="Run the preparation protocol once").set_defaults(func=cmd_protocol)
    sub.add_parser("fig2a", help="Fidelity vs drive amplitude").set_defaults(func=cmd_fig2a)
    sub.add_parser("fig2b", help="Fidelity vs g/w_m").set_defaults(func=cmd_fig2b)
    sub.add_parser("fig2c", help="Fidelity vs drive detuning").set_defaults(func=cmd_fig2c)
    sub.add_parser("fig3", help="Moment ratios of the code words").set_defaults(func=cmd_fig3)

    curves = sub.add_parser("fig4", help="Open-system fidelity curves")
    curves.add_argument("--points", type=int, default=25, help="Samples in g t")
    curves.set_defaults(func=cmd_fig4)

    wig = sub.add_parser("wigner", help="Wigner grid of a code word or the open end state")
    wig.add_argument("--which", choices=["fig1_sym", "fig1_antisym", "open_endstate"], default="fig1_sym")
    wig.add_argument("--combo", type=float, nargs=2, default=[1.0, 1.0], metavar=("G1_OVER_G", "GPHI_OVER_G"))
    wig.set_defaults(func=cmd_wigner)

    val = sub.add_parser("validate", help="Run the invariant suite")
    val.add_argument("--only", nargs="*", help="Run only the named invariants")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level)

    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except (SolverError, TruncationError) as e:
        logger.error(f"❌ Numerical failure: {e}")
        return EXIT_NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
