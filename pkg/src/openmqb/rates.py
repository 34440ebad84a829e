"""Conversion of spectroscopic observables (T1, T2, radiative yield,
temperature) into Lindblad rates, and thermal bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .model import ChannelKind, DissipationChannel
from .units import KB_OVER_HBAR, boltzmann_factor


@dataclass(frozen=True)
class ElectronicSpectroscopy:
    """Decay data for one electronic state. ``T1 = inf`` means no population
    decay; ``relaxes_to`` is the lower state receiving radiative decay."""

    state: int
    T2: float
    T1: float = math.inf
    radiative_yield: float = 0.0
    relaxes_to: Optional[int] = None

    def __post_init__(self):
        if not (self.T1 > 0 and self.T2 > 0):
            raise ConfigError(f"dissipation.electronic[{self.state}]", "T1 and T2 must be positive")
        if self.T2 > 2 * self.T1:
            raise ConfigError(f"dissipation.electronic[{self.state}]", "T2 must not exceed 2 T1")
        if not 0 <= self.radiative_yield <= 1:
            raise ConfigError(f"dissipation.electronic[{self.state}].radiative_yield", "must lie in [0, 1]")


@dataclass(frozen=True)
class VibrationalSpectroscopy:
    """Relaxation/dephasing times of one mode. ``T2 = None`` skips the
    dephasing channel (its rate is then supplied directly)."""

    mode: int
    T1: float
    T2: Optional[float] = None

    def __post_init__(self):
        if not self.T1 > 0 or (self.T2 is not None and not self.T2 > 0):
            raise ConfigError(f"dissipation.vibrational[{self.mode}]", "times must be positive")
        if self.T2 is not None and self.T2 > 2 * self.T1:
            raise ConfigError(f"dissipation.vibrational[{self.mode}]", "T2 must not exceed 2 T1")


@dataclass(frozen=True)
class ThermalSpec:
    zeta2: float
    t_sim: float

    @property
    def zeta(self):
        return math.sqrt(self.zeta2)


def thermal_spec(nu_mol, temperature, nu_sim=None):
    """Boltzmann factor zeta^2 = exp(-nu_mol / k_B T) and the equivalent
    simulator temperature for a trap mode at ``nu_sim``."""
    zeta2 = boltzmann_factor(nu_mol, temperature)
    t_sim = temperature * (nu_sim / nu_mol) if nu_sim is not None else temperature
    return ThermalSpec(zeta2=zeta2, t_sim=t_sim)


def pure_dephasing_rate(T1, T2):
    return 1.0 / T2 - 0.5 / T1


def electronic_rates(spec: ElectronicSpectroscopy):
    """Dephasing 1/T2 - 1/(2 T1) on the state and radiative relaxation
    Y_R / T1 towards ``relaxes_to``."""
    gamma_e = pure_dephasing_rate(spec.T1, spec.T2)
    if gamma_e < 0:
        raise ConfigError(f"dissipation.electronic[{spec.state}]", "computed dephasing rate is negative")
    channels = [DissipationChannel(ChannelKind.ELEC_DEPHASING, (spec.state,), gamma_e)]
    if spec.relaxes_to is not None:
        gamma_r = spec.radiative_yield / spec.T1 if math.isfinite(spec.T1) else 0.0
        channels.append(
            DissipationChannel(ChannelKind.ELECTRONIC_RELAXATION, (spec.relaxes_to, spec.state), gamma_r)
        )
    return channels


def vibrational_rates(spec: VibrationalSpectroscopy, nu_mol, temperature):
    """Cooling/heating from {g- - g+ = 1/T1, g+ = zeta^2 g-} and dephasing
    1/T2 - 1/(2 T1)."""
    zeta2 = boltzmann_factor(nu_mol, temperature)
    if zeta2 >= 1.0:
        raise ConfigError(
            f"dissipation.vibrational[{spec.mode}]",
            "Boltzmann factor is 1; finite T1 is inconsistent with detailed balance",
        )
    cooling = 1.0 / (spec.T1 * (1.0 - zeta2))
    heating = zeta2 * cooling
    channels = [
        DissipationChannel(ChannelKind.VIB_COOLING, (spec.mode,), cooling),
        DissipationChannel(ChannelKind.VIB_HEATING, (spec.mode,), heating),
    ]
    if spec.T2 is not None:
        gamma_v = pure_dephasing_rate(spec.T1, spec.T2)
        if gamma_v < 0:
            raise ConfigError(f"dissipation.vibrational[{spec.mode}]", "computed dephasing rate is negative")
        channels.append(DissipationChannel(ChannelKind.VIB_DEPHASING, (spec.mode,), gamma_v))
    return channels


def electronic_times(dephasing, relaxation, T1):
    """Inverse of :func:`electronic_rates` for a given population lifetime."""
    T2 = 1.0 / (dephasing + 0.5 / T1)
    yield_ = relaxation * T1 if math.isfinite(T1) else 0.0
    return T2, yield_


def vibrational_times(cooling, heating, dephasing):
    """Inverse of :func:`vibrational_rates`: returns ``(T1, T2)``."""
    T1 = 1.0 / (cooling - heating)
    T2 = 1.0 / (dephasing + 0.5 / T1)
    return T1, T2


def detailed_balance_temperature(nu_mol, cooling, heating):
    """Temperature implied by a heating/cooling ratio (inverse of zeta^2)."""
    if heating <= 0:
        return 0.0
    return nu_mol / (KB_OVER_HBAR * math.log(cooling / heating))
