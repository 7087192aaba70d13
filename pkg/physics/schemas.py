"""Validated parameter models (dimensionless units, omega_m = 1)"""
import math
from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .special import FIRST_J0_ROOT, bessel_j

TWO_PI = 2.0 * math.pi


class SqueezeParam(BaseModel):
    """Complex squeezing parameter xi = r e^{i phi}"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    r: float = Field(..., ge=0, description="Squeezing strength")
    phi: float = Field(0.0, description="Squeezing phase in radians, stored in [0, 2pi)")

    @field_validator('phi')
    @classmethod
    def canonical_phase(cls, v):
        if not math.isfinite(v):
            raise ValueError('phase must be finite')
        v = math.fmod(v, TWO_PI)
        if v < 0:
            v += TWO_PI
        if v >= TWO_PI:
            v = 0.0
        return v

    @property
    def xi(self) -> complex:
        return self.r * complex(math.cos(self.phi), math.sin(self.phi))

    def negated(self) -> "SqueezeParam":
        return SqueezeParam(r=self.r, phi=self.phi + math.pi)

    @classmethod
    def from_complex(cls, xi: complex) -> "SqueezeParam":
        xi = complex(xi)
        if xi == 0:
            return cls(r=0.0, phi=0.0)
        return cls(r=abs(xi), phi=math.atan2(xi.imag, xi.real))

    @classmethod
    def from_evolution(cls, g_cs: float, t: float) -> "SqueezeParam":
        """xi = 2 i g_cs t, i.e. r = 2|g_cs t| and phi = pi/2 (3pi/2 if g_cs t < 0)"""
        product = g_cs * t
        return cls(r=2.0 * abs(product), phi=0.5 * math.pi if product >= 0 else 1.5 * math.pi)


@dataclass(frozen=True)
class DriveCondition:
    resonant: bool
    amplitude_at_first_j0_root: bool


class SystemParams(BaseModel):
    """Frequencies and couplings in units of omega_m"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    omega_q: float = Field(20.0, gt=0, description="Qubit frequency")
    omega_m: float = Field(1.0, gt=0, description="Oscillator frequency (the unit)")
    omega_d: float = Field(1.0, gt=0, description="Drive frequency")
    amplitude_A: float = Field(0.5 * FIRST_J0_ROOT, ge=0, description="Drive amplitude")
    g: float = Field(1e-4, ge=0, description="Quadratic coupling (0 leaves the bare qubit and oscillator)")

    @property
    def a_bar(self) -> float:
        return 2.0 * self.amplitude_A / self.omega_d

    @property
    def g_cs(self) -> float:
        return self.g * bessel_j(2, self.a_bar)

    def drive_condition(self, tol: float = 1e-9) -> DriveCondition:
        return DriveCondition(
            resonant=abs(self.omega_d - self.omega_m) <= tol,
            amplitude_at_first_j0_root=abs(self.a_bar - FIRST_J0_ROOT) <= tol,
        )

    @classmethod
    def at_first_j0_root(cls, g: float, omega_q: float = 20.0, omega_m: float = 1.0) -> "SystemParams":
        return cls(omega_q=omega_q, omega_m=omega_m, omega_d=omega_m,
                   amplitude_A=0.5 * FIRST_J0_ROOT * omega_m, g=g)

    def with_a_bar(self, a_bar: float) -> "SystemParams":
        return SystemParams(**{**self.model_dump(), 'amplitude_A': 0.5 * a_bar * self.omega_d})

    def with_coupling(self, g: float) -> "SystemParams":
        return SystemParams(**{**self.model_dump(), 'g': g})

    def with_drive_frequency(self, omega_d: float) -> "SystemParams":
        """Same A-bar at a new drive frequency"""
        return SystemParams(**{**self.model_dump(), 'omega_d': omega_d,
                               'amplitude_A': 0.5 * self.a_bar * omega_d})


class NoiseParams(BaseModel):
    """Decoherence rates (units of omega_m) and bath occupation"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma_1: float = Field(0.0, ge=0, description="Qubit decay rate")
    gamma_phi: float = Field(0.0, ge=0, description="Qubit dephasing rate")
    gamma_m: float = Field(0.0, ge=0, description="Oscillator damping rate")
    n_m_th: float = Field(0.0, ge=0, description="Oscillator bath thermal occupation")

    @property
    def is_closed(self) -> bool:
        return self.gamma_1 == 0 and self.gamma_phi == 0 and self.gamma_m == 0

    @classmethod
    def from_ratios(cls, g: float, gamma_1_over_g: float, gamma_phi_over_g: float,
                    gamma_m_over_g: float = 0.01, n_m_th: float = 1.0) -> "NoiseParams":
        return cls(gamma_1=gamma_1_over_g * g, gamma_phi=gamma_phi_over_g * g,
                   gamma_m=gamma_m_over_g * g, n_m_th=n_m_th)


class SolverOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal['adaptive_embedded', 'fixed_rk4'] = 'adaptive_embedded'
    rel_tol: float = Field(1e-9, gt=0)
    abs_tol: float = Field(1e-11, gt=0)
    max_step: float = Field(math.inf, gt=0)
    fixed_step: float = Field(1e-2, gt=0)
    store_every: int = Field(1, ge=1)

    @classmethod
    def closed_defaults(cls) -> "SolverOptions":
        return cls(rel_tol=1e-9, abs_tol=1e-11)

    @classmethod
    def open_defaults(cls) -> "SolverOptions":
        return cls(rel_tol=1e-7, abs_tol=1e-9)
