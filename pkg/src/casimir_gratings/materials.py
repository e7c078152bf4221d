"""Physical constants and dielectric response at imaginary frequency.

All models expose ``epsilon(xi)`` and ``cm(xi)`` for real ``xi > 0`` in rad/s;
the module-level :func:`epsilon_iw` and :func:`cm_factor` dispatch to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as sc

from .errors import DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    c: float
    eps0: float
    e_charge: float
    m_e: float


CONSTANTS = PhysicalConstants(
    hbar=sc.hbar, c=sc.c, eps0=sc.epsilon_0, e_charge=sc.e, m_e=sc.m_e
)
HBAR_C = CONSTANTS.hbar * CONSTANTS.c


@dataclass(frozen=True)
class PerfectMetal:
    """Ideal reflector: epsilon is infinite at every frequency."""

    name: str = "pm"

    def epsilon(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape, np.inf) if xi.shape else math.inf

    def cm(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.ones(xi.shape) if xi.shape else 1.0


@dataclass(frozen=True)
class LorentzDrude:
    """Single Lorentz oscillator plus a Drude term for free carriers.

    epsilon(i xi) = eps_inf + (eps_static - eps_inf) / (1 + xi^2/omega0^2)
                    + omega_p^2 / (xi (xi + gamma))

    Defaults are doped silicon at 4 K.
    """

    eps_inf: float = 1.035
    eps_static: float = 11.87
    omega0: float = 6.6e15
    omega_p: float = 2.37e14
    gamma: float = 6.45e13
    name: str = "silicon"

    def __post_init__(self):
        for field in ("omega0", "omega_p", "gamma"):
            value = getattr(self, field)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{field} must be positive and finite, got {value!r}")
        if not self.eps_inf >= 1:
            raise DomainError(f"eps_inf must be >= 1, got {self.eps_inf!r}")
        if not self.eps_static >= self.eps_inf:
            raise DomainError("eps_static must be >= eps_inf")

    @property
    def eps_static_term(self) -> float:
        return self.eps_static - self.eps_inf

    def epsilon(self, xi):
        xi = np.asarray(xi, dtype=float)
        if np.any(~(xi > 0)):
            # the Drude term diverges at xi = 0; callers take that endpoint as a limit
            raise DomainError("LorentzDrude epsilon needs xi > 0")
        eps = (
            self.eps_inf
            + self.eps_static_term / (1.0 + (xi / self.omega0) ** 2)
            + self.omega_p**2 / (xi * (xi + self.gamma))
        )
        return eps if eps.shape else float(eps)

    def cm(self, xi):
        eps = self.epsilon(xi)
        return (eps - 1.0) / (eps + 2.0)


@dataclass(frozen=True)
class ConstantEpsilon:
    """Frequency independent epsilon; eps = 1 is vacuum. Used as a test model."""

    eps: float = 1.0
    name: str = "constant"

    def __post_init__(self):
        if not self.eps >= 1:
            raise DomainError("eps must be >= 1")

    @classmethod
    def from_cm(cls, f0: float) -> "ConstantEpsilon":
        """Model whose Clausius-Mossotti factor equals ``f0`` (0 <= f0 < 1)."""
        if not 0 <= f0 < 1:
            raise DomainError("constant CM factor must lie in [0, 1)")
        return cls(eps=(1.0 + 2.0 * f0) / (1.0 - f0))

    def epsilon(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape, self.eps) if xi.shape else self.eps

    def cm(self, xi):
        xi = np.asarray(xi, dtype=float)
        f = (self.eps - 1.0) / (self.eps + 2.0)
        return np.full(xi.shape, f) if xi.shape else f


DielectricModel = PerfectMetal | LorentzDrude | ConstantEpsilon

SILICON = LorentzDrude()
PERFECT_METAL = PerfectMetal()


def epsilon_iw(model: DielectricModel, xi):
    """Dielectric function at imaginary frequency ``i*xi``; ``inf`` for a perfect metal."""
    return model.epsilon(xi)


def cm_factor(model: DielectricModel, xi):
    """Clausius-Mossotti factor (eps - 1)/(eps + 2); exactly 1 for a perfect metal."""
    return model.cm(xi)


@dataclass(frozen=True)
class TransportInputs:
    carrier_density: float  # m^-3
    resistivity: float  # ohm m
    effective_mass_ratio: float  # m*/m_e

    def __post_init__(self):
        for field in ("carrier_density", "resistivity", "effective_mass_ratio"):
            value = getattr(self, field)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{field} must be positive and finite, got {value!r}")


def drude_from_transport(inp: TransportInputs) -> tuple[float, float]:
    """Plasma frequency and damping rate (rad/s) from DC transport data."""
    k = CONSTANTS
    m_eff = inp.effective_mass_ratio * k.m_e
    ne2 = inp.carrier_density * k.e_charge**2
    omega_p = math.sqrt(ne2 / (k.eps0 * m_eff))
    gamma = ne2 * inp.resistivity / m_eff
    return omega_p, gamma


def model_from_name(name: str) -> DielectricModel:
    """Resolve ``pm``/``silicon`` or a JSON file of LorentzDrude parameters."""
    key = name.strip().lower()
    if key in ("pm", "perfect", "perfect-metal", "perfect_metal"):
        return PERFECT_METAL
    if key in ("silicon", "si"):
        return SILICON
    import json
    from pathlib import Path

    path = Path(name)
    if not path.is_file():
        raise DomainError(f"unknown material {name!r} (expected pm, silicon or a JSON file)")
    try:
        params = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"cannot read material file {name}: {exc}") from None
    allowed = {"eps_inf", "eps_static", "omega0", "omega_p", "gamma", "name"}
    unknown = set(params) - allowed
    if unknown:
        raise DomainError(f"unknown material keys: {sorted(unknown)}")
    return LorentzDrude(**params)
