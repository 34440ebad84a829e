import math

import numpy as np
import pytest

from openmqb import units
from openmqb.errors import ConfigError
from openmqb.units import DEFAULT_UNITS, FREQUENCY, RATE, TIME, parse_quantity


class TestConversions:
    def test_wavenumber_to_angular(self):
        # 2 pi c * 112 cm^-1
        expected = 2 * math.pi * 2.99792458e10 * 112
        assert parse_quantity("112 cm-1", FREQUENCY) == pytest.approx(expected, rel=1e-14)
        assert parse_quantity("112 cm-1", FREQUENCY) == pytest.approx(2.109e13, rel=1e-3)

    def test_ordinary_and_angular(self):
        assert parse_quantity("1 Hz", FREQUENCY) == pytest.approx(2 * math.pi)
        assert parse_quantity("1.34 MHz", FREQUENCY) == pytest.approx(2 * math.pi * 1.34e6)
        assert parse_quantity("5 rad/s", FREQUENCY) == 5.0
        assert parse_quantity("1 ps-1", RATE) == 1e12

    def test_table_and_bare_number(self):
        assert parse_quantity({"value": 30, "unit": "fs"}, TIME) == pytest.approx(30e-15)
        assert parse_quantity(2.5, RATE) == 2.5
        assert parse_quantity("7", RATE) == 7.0

    @pytest.mark.parametrize("dimension", [FREQUENCY, RATE, TIME])
    def test_round_trip(self, dimension):
        rng = np.random.default_rng(1)
        for unit in DEFAULT_UNITS.units_for(dimension):
            for x in 10 ** rng.uniform(-6, 6, 20):
                canon = DEFAULT_UNITS.to_canonical(x, unit, dimension)
                back = DEFAULT_UNITS.from_canonical(canon, unit, dimension)
                assert abs(back - x) <= 1e-12 * abs(x)

    def test_unknown_unit_names_path(self):
        with pytest.raises(ConfigError) as exc:
            parse_quantity("3 furlongs", FREQUENCY, "molecule.modes[0].frequency")
        assert exc.value.path == "molecule.modes[0].frequency"
        assert "furlongs" in str(exc.value)

    def test_garbage(self):
        with pytest.raises(ConfigError):
            parse_quantity("fast", RATE, "x")
        with pytest.raises(ConfigError):
            parse_quantity(True, RATE, "x")


class TestConstants:
    def test_thermal_wavenumber_at_300K(self):
        # k_B T / (h c) in cm^-1
        kT_cm = units.BOLTZMANN * 300 / (units.PLANCK * units.SPEED_OF_LIGHT * 100)
        assert kT_cm == pytest.approx(208.5, abs=0.05)

    def test_boltzmann_factor_zero_temperature(self):
        assert units.boltzmann_factor(1e13, 0.0) == 0.0

    def test_to_hz(self):
        assert units.to_hz(2 * math.pi * 3.0) == pytest.approx(3.0)
