"""Unit handling.

Every frequency and energy is stored internally as an angular frequency in
rad/s (hbar = 1), every rate in 1/s, every time in s and temperatures in K.
Quantities in configuration files are written either as bare numbers, which
are taken to be canonical already, or as strings with a unit suffix such as
``"112 cm-1"`` or ``"20 MHz"``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError

# CODATA 2018 exact values, SI.
SPEED_OF_LIGHT = 299_792_458.0  # m/s
PLANCK = 6.626_070_15e-34  # J s
HBAR = PLANCK / (2.0 * math.pi)
BOLTZMANN = 1.380_649e-23  # J/K
ELEMENTARY_CHARGE = 1.602_176_634e-19  # C
VACUUM_PERMEABILITY = 1.256_637_062_12e-6  # T m/A

# k_B / hbar = 1.30920e11 rad s^-1 K^-1
KB_OVER_HBAR = BOLTZMANN / HBAR
# one wavenumber as angular frequency: 2 pi c (1/cm) = 1.88365e11 rad/s
WAVENUMBER = 2.0 * math.pi * SPEED_OF_LIGHT * 100.0
ELECTRONVOLT = ELEMENTARY_CHARGE / HBAR

TWO_PI = 2.0 * math.pi

FREQUENCY = "frequency"
RATE = "rate"
TIME = "time"
TEMPERATURE = "temperature"
MAGNETIC_SENSITIVITY = "magnetic_sensitivity"
FIELD_PER_CURRENT = "field_per_current"
VOLTAGE_SENSITIVITY = "voltage_sensitivity"
LENGTH = "length"
DIMENSIONLESS = "dimensionless"

CANONICAL_UNITS = {
    FREQUENCY: "rad/s",
    RATE: "s-1",
    TIME: "s",
    TEMPERATURE: "K",
    MAGNETIC_SENSITIVITY: "rad/s/T",
    FIELD_PER_CURRENT: "T/A",
    VOLTAGE_SENSITIVITY: "rad/s/V",
    LENGTH: "m",
    DIMENSIONLESS: "",
}


def _table():
    freq = {
        "rad/s": 1.0,
        "s-1": 1.0,
        "ps-1": 1e12,
        "fs-1": 1e15,
        "Hz": TWO_PI,
        "kHz": TWO_PI * 1e3,
        "MHz": TWO_PI * 1e6,
        "GHz": TWO_PI * 1e9,
        "THz": TWO_PI * 1e12,
        "cm-1": WAVENUMBER,
        "eV": ELECTRONVOLT,
        "meV": ELECTRONVOLT * 1e-3,
    }
    rate = {
        "s-1": 1.0,
        "1/s": 1.0,
        "ms-1": 1e3,
        "us-1": 1e6,
        "ns-1": 1e9,
        "ps-1": 1e12,
        "fs-1": 1e15,
    }
    time = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}
    mag = {
        "rad/s/T": 1.0,
        "Hz/T": TWO_PI,
        "kHz/T": TWO_PI * 1e3,
        "MHz/T": TWO_PI * 1e6,
        "Hz/G": TWO_PI * 1e4,
        "kHz/G": TWO_PI * 1e7,
        "MHz/G": TWO_PI * 1e10,
    }
    return {
        FREQUENCY: freq,
        RATE: rate,
        TIME: time,
        TEMPERATURE: {"K": 1.0},
        MAGNETIC_SENSITIVITY: mag,
        FIELD_PER_CURRENT: {"T/A": 1.0, "mT/A": 1e-3, "G/A": 1e-4},
        VOLTAGE_SENSITIVITY: {
            "rad/s/V": 1.0,
            "Hz/V": TWO_PI,
            "kHz/V": TWO_PI * 1e3,
            "MHz/V": TWO_PI * 1e6,
        },
        LENGTH: {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
        DIMENSIONLESS: {"": 1.0},
    }


_QUANTITY_RE = re.compile(r"^\s*([-+]?(?:inf|[0-9.]+(?:[eE][-+]?[0-9]+)?))\s*(\S*)\s*$")


@dataclass(frozen=True)
class UnitConvention:
    """Conversion table between accepted input units and canonical units."""

    factors: dict = field(default_factory=_table)

    def units_for(self, dimension):
        return tuple(self.factors[dimension])

    def factor(self, unit, dimension, path=""):
        try:
            table = self.factors[dimension]
        except KeyError:
            raise ConfigError(path, f"unknown dimension {dimension!r}") from None
        if unit not in table:
            raise ConfigError(
                path, f"unknown unit {unit!r} for {dimension}; accepted: {', '.join(table)}"
            )
        return table[unit]

    def to_canonical(self, value, unit, dimension, path=""):
        return float(value) * self.factor(unit, dimension, path)

    def from_canonical(self, value, unit, dimension, path=""):
        return float(value) / self.factor(unit, dimension, path)

    def parse(self, raw, dimension, path=""):
        """Convert a config quantity (number, ``"<number> <unit>"`` or
        ``{value, unit}`` table) into canonical units."""
        if isinstance(raw, bool):
            raise ConfigError(path, "expected a quantity, got a boolean")
        if isinstance(raw, (int, float)):
            return float(raw)
        if isinstance(raw, dict):
            if set(raw) != {"value", "unit"}:
                raise ConfigError(path, "quantity tables need exactly 'value' and 'unit'")
            if isinstance(raw["value"], bool) or not isinstance(raw["value"], (int, float)):
                raise ConfigError(path + ".value", "expected a number")
            return self.to_canonical(raw["value"], raw["unit"], dimension, path + ".unit")
        if isinstance(raw, str):
            m = _QUANTITY_RE.match(raw)
            if not m:
                raise ConfigError(path, f"cannot parse quantity {raw!r}")
            number, unit = m.groups()
            if not unit:
                unit = CANONICAL_UNITS[dimension]
            return self.to_canonical(float(number), unit, dimension, path)
        raise ConfigError(path, f"expected a quantity, got {type(raw).__name__}")


DEFAULT_UNITS = UnitConvention()


def parse_quantity(raw, dimension, path=""):
    return DEFAULT_UNITS.parse(raw, dimension, path)


def to_hz(angular):
    """Angular frequency (rad/s) rendered as ordinary frequency (Hz)."""
    return angular / TWO_PI


def boltzmann_factor(frequency, temperature):
    """exp(-nu / k_B T) for an angular frequency and a temperature in K."""
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        return 0.0
    return math.exp(-frequency / (KB_OVER_HBAR * temperature))
