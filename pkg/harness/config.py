"""Experiment configuration: validated model, TOML loading and named presets"""
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from config.settings import settings
from physics.exceptions import ConfigError
from physics.fockspace import HilbertSpace
from physics.schemas import NoiseParams, SolverOptions, SystemParams
from physics.special import FIRST_J0_ROOT, bessel_j

logger = logging.getLogger(__name__)

HamiltonianModel = Literal["lab", "interaction", "rotating", "rwa", "cs"]

# 2 g_cs t = 1 at the J0 root, i.e. xi = i
UNIT_SQUEEZE_G_T = 0.5 / bessel_j(2, FIRST_J0_ROOT)
# g t = 1.2, r ~ 1 in the closed system
OPEN_G_T = 1.2

PAPER_G = 1e-4
DESK_G = 1e-2
OPEN_CUTOFF = 60
CLOSED_CUTOFF = 120


class ExperimentConfig(BaseModel):
    """One experiment: parameters, cutoff, solver and the Hamiltonian model to evolve with"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    system: SystemParams = Field(default_factory=SystemParams)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    fock_cutoff: int = Field(CLOSED_CUTOFF, ge=4, description="Highest retained Fock index")
    solver: SolverOptions = Field(default_factory=SolverOptions.closed_defaults)
    hamiltonian_model: HamiltonianModel = "cs"
    t_end_in_g_units: float = Field(UNIT_SQUEEZE_G_T, ge=0, description="End time as g * t")
    output_path: str = Field(default_factory=lambda: settings.output_dir)
    wigner_extent: float = Field(3.5, gt=0)
    wigner_points: int = Field(141, ge=2)

    @field_validator("system")
    @classmethod
    def _coupling_sets_time_unit(cls, system: SystemParams) -> SystemParams:
        if system.g <= 0:
            raise ValueError("experiments need g > 0: end times are given in units of 1/g")
        return system

    @property
    def t_end(self) -> float:
        return self.t_end_in_g_units / self.system.g

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.fock_cutoff)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Re-validated copy with top-level fields replaced"""
        data = self.model_dump()
        for key, value in overrides.items():
            data[key] = value.model_dump() if isinstance(value, BaseModel) else value
        try:
            return ExperimentConfig(**data)
        except ValidationError as e:
            raise ConfigError(f"invalid override {sorted(overrides)}: {e}") from e

    @classmethod
    def desk_scale(cls, g: float = DESK_G) -> "ExperimentConfig":
        """Open-system run at a reduced g/w_m; gamma/g ratios and n_th as in the full run"""
        return cls(
            system=SystemParams.at_first_j0_root(g),
            noise=NoiseParams.from_ratios(g, 0.0, 0.0, gamma_m_over_g=0.01, n_m_th=1.0),
            fock_cutoff=OPEN_CUTOFF,
            solver=SolverOptions.open_defaults(),
            hamiltonian_model="interaction",
            t_end_in_g_units=OPEN_G_T,
        )

    @classmethod
    def closed_system(cls, g: float = DESK_G) -> "ExperimentConfig":
        """Closed run in the rotating frame at the cutoff the analytic comparisons use"""
        return cls(system=SystemParams.at_first_j0_root(g), fock_cutoff=CLOSED_CUTOFF, hamiltonian_model="rotating")

    @classmethod
    def paper_scale(cls) -> "ExperimentConfig":
        return cls.desk_scale(g=PAPER_G)


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    """Expand quoted dotted keys ("system.g") the parser left flat"""
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if isinstance(value, dict):
            value = _nest(value)
        target = nested
        *parents, leaf = key.split(".")
        for parent in parents:
            target = target.setdefault(parent, {})
            if not isinstance(target, dict):
                raise ConfigError(f"key {key!r} conflicts with a scalar value")
        if isinstance(value, dict) and isinstance(target.get(leaf), dict):
            target[leaf].update(value)
        else:
            target[leaf] = value
    return nested


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Parse TOML text (dotted keys allowed) on top of `base`; unknown keys are an error"""
    try:
        raw = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise ConfigError(f"cannot parse config: {e}") from e

    data = (base or ExperimentConfig()).model_dump()
    for key, value in _nest(raw).items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e


def load_config(path: Union[str, Path], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    config = parse_config(text, base)
    logger.info(f"📄 Loaded config {path} (model={config.hamiltonian_model}, cutoff={config.fock_cutoff})")
    return config
