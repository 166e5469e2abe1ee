"""Lumped-element fluxonium-resonator circuit mapped onto the JC parameters.

Frequencies follow the harmonic (plasma) estimates omega_0 = sqrt(8 E_L E_C)/hbar
and omega = sqrt(8 E_Lr E_Cr)/hbar; the coupling comes from the charge-charge
term of the circuit Hamiltonian with harmonic number-operator amplitudes,
g = C_c / (2 C_r (C_J + C_g)) / sqrt(Z_r Z).  See docs/circuit_mapping.md.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
import json
import math
from pathlib import Path
import warnings

from .errors import InvalidArgument, RegimeError
from .quantum import SystemParams

# CODATA 2018, 12 significant digits (e and h are exact SI values)
ELEMENTARY_CHARGE = 1.602176634e-19  # C
PLANCK = 6.62607015e-34  # J s
HBAR = 1.05457181765e-34  # J s
REDUCED_FLUX_QUANTUM = HBAR / (2 * ELEMENTARY_CHARGE)  # Wb

WEAK_COUPLING_RATIO = 0.05
STRONG_COUPLING_LIMIT = 0.1  # g / omega


class StrongCouplingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CircuitParams:
    C_J: float
    C_g: float
    C_c: float
    C_r: float
    L_J: float
    L_r: float
    E_J: float = 0.0
    flux_frustration: float = 0.5

    def validate(self) -> None:
        for name in ("C_J", "C_g", "C_c", "C_r", "L_J", "L_r"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise RegimeError(f"{name} must be a positive finite number, got {v!r}")
        if self.E_J < 0:
            raise RegimeError(f"E_J must be >= 0, got {self.E_J}")
        for other in ("C_r", "C_g"):
            ratio = self.C_c / getattr(self, other)
            if ratio > WEAK_COUPLING_RATIO:
                raise RegimeError(f"C_c/{other} = {ratio:.4g} exceeds {WEAK_COUPLING_RATIO}; "
                                  "the weak-capacitive-coupling approximation does not hold")

    def scaled(self, lam: float) -> "CircuitParams":
        """All capacitances and inductances multiplied by ``lam``."""
        return CircuitParams(self.C_J * lam, self.C_g * lam, self.C_c * lam, self.C_r * lam,
                             self.L_J * lam, self.L_r * lam, self.E_J, self.flux_frustration)

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitParams":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        missing = [k for k in ("C_J", "C_g", "C_c", "C_r", "L_J", "L_r") if k not in d]
        if missing:
            raise InvalidArgument(f"circuit parameters missing {missing}")
        return cls(**{k: float(v) for k, v in known.items()})

    @classmethod
    def load(cls, path) -> "CircuitParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Energies:
    """Circuit energies in joules."""

    E_C: float
    E_L: float
    E_Cr: float
    E_Lr: float

    def in_ghz(self) -> dict:
        return {k: v / PLANCK / 1e9 for k, v in asdict(self).items()}


def derive_energies(cp: CircuitParams) -> Energies:
    cp.validate()
    e2 = ELEMENTARY_CHARGE ** 2
    phi2 = REDUCED_FLUX_QUANTUM ** 2
    return Energies(
        E_C=e2 / (2 * (cp.C_J + cp.C_g)),
        E_L=phi2 / cp.L_J,
        E_Cr=e2 / (2 * cp.C_r),
        E_Lr=phi2 / cp.L_r,
    )


@dataclass(frozen=True)
class CircuitMapping:
    energies: Energies
    omega0: float  # rad/s
    omega: float  # rad/s
    g: float  # rad/s
    suppression_ratio: float  # C_c / C_r, residual resonator drive factor
    strong_coupling: bool
    t_protocol: float  # s, time for the dimensionless window
    feasible: bool | None
    system: SystemParams

    def report(self) -> dict:
        ghz = self.energies.in_ghz()
        return {
            "E_C/h [GHz]": ghz["E_C"],
            "E_L/h [GHz]": ghz["E_L"],
            "E_Cr/h [GHz]": ghz["E_Cr"],
            "E_Lr/h [GHz]": ghz["E_Lr"],
            "omega0/2pi [GHz]": self.omega0 / (2 * math.pi) / 1e9,
            "omega/2pi [GHz]": self.omega / (2 * math.pi) / 1e9,
            "g/2pi [MHz]": self.g / (2 * math.pi) / 1e6,
            "omega/g": self.omega / self.g,
            "omega0/g": self.omega0 / self.g,
            "C_c/C_r": self.suppression_ratio,
            "strong_coupling": self.strong_coupling,
            "t_protocol [us]": self.t_protocol * 1e6,
            "feasible": self.feasible,
        }


def coupling_rate(cp: CircuitParams) -> float:
    c_sum = cp.C_J + cp.C_g
    z_r = math.sqrt(cp.L_r / cp.C_r)
    z = math.sqrt(cp.L_J / c_sum)
    return cp.C_c / (2 * cp.C_r * c_sum) / math.sqrt(z_r * z)


def map_to_system(cp: CircuitParams, window_gt: float = 10.0, T1: float | None = None,
                  T2: float | None = None, n_max: int = 80) -> CircuitMapping:
    """Physical omega0, omega, g (rad/s) and the dimensionless SystemParams.

    ``t_protocol = window_gt / g``; it is feasible when shorter than every
    supplied coherence time (``None`` when none is given).
    """
    en = derive_energies(cp)
    omega0 = math.sqrt(8 * en.E_L * en.E_C) / HBAR
    omega = math.sqrt(8 * en.E_Lr * en.E_Cr) / HBAR
    g = coupling_rate(cp)
    strong = g >= STRONG_COUPLING_LIMIT * omega
    if strong:
        warnings.warn(f"g/omega = {g / omega:.3g} >= {STRONG_COUPLING_LIMIT}; "
                      "the JC (rotating-wave) description is not reliable", StrongCouplingWarning)
    t_protocol = window_gt / g
    times = [t for t in (T1, T2) if t is not None]
    feasible = (t_protocol < min(times)) if times else None
    system = SystemParams(omega / g, omega0 / g, omega / g, n_max)
    return CircuitMapping(en, omega0, omega, g, cp.C_c / cp.C_r, strong, t_protocol, feasible, system)


def design_for(omega10: float, g_ratio: float = 1 / 200, C: float = 100e-15,
               C_g_fraction: float = 0.5) -> CircuitParams:
    """Symmetric design: resonator and fluxonium share C and L so omega0 = omega.

    ``g_ratio`` = g/omega fixes C_c = 2 C g_ratio.
    """
    L = 1.0 / (omega10 ** 2 * C)
    return CircuitParams(C_J=C * (1 - C_g_fraction), C_g=C * C_g_fraction,
                         C_c=2 * C * g_ratio, C_r=C, L_J=L, L_r=L)
