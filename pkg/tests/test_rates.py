import math

import numpy as np
import pytest

from openmqb.errors import ConfigError
from openmqb.model import ChannelKind
from openmqb.rates import (
    ElectronicSpectroscopy,
    VibrationalSpectroscopy,
    detailed_balance_temperature,
    electronic_rates,
    electronic_times,
    thermal_spec,
    vibrational_rates,
    vibrational_times,
)
from openmqb.units import WAVENUMBER

from oracles import boltzmann_oracle


def _by_kind(channels):
    return {ch.kind: ch for ch in channels}


class TestElectronic:
    def test_short_T2_no_population_decay(self):
        chans = _by_kind(electronic_rates(ElectronicSpectroscopy(state=1, T2=30e-15)))
        assert chans[ChannelKind.ELEC_DEPHASING].gamma_mol == pytest.approx(3.333e13, rel=1e-3)

    def test_lifetime_limited(self):
        chans = _by_kind(electronic_rates(ElectronicSpectroscopy(state=1, T2=2e-9, T1=1e-9)))
        assert chans[ChannelKind.ELEC_DEPHASING].gamma_mol == pytest.approx(0.0, abs=1e-3)

    def test_zero_yield(self):
        chans = _by_kind(electronic_rates(ElectronicSpectroscopy(state=1, T2=1e-12, T1=1e-9, radiative_yield=0.0,
                                                                 relaxes_to=0)))
        assert chans[ChannelKind.ELECTRONIC_RELAXATION].gamma_mol == 0.0
        assert chans[ChannelKind.ELECTRONIC_RELAXATION].target == (0, 1)

    def test_yield_over_T1(self):
        chans = _by_kind(electronic_rates(ElectronicSpectroscopy(state=1, T2=1e-12, T1=2e-9, radiative_yield=0.5,
                                                                 relaxes_to=0)))
        assert chans[ChannelKind.ELECTRONIC_RELAXATION].gamma_mol == pytest.approx(0.25e9)

    def test_T2_too_long(self):
        with pytest.raises(ConfigError):
            ElectronicSpectroscopy(state=1, T2=3e-9, T1=1e-9)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            T1 = 10 ** rng.uniform(-12, -6)
            T2 = T1 * rng.uniform(0.01, 2.0)
            Y = rng.uniform(0, 1)
            chans = _by_kind(electronic_rates(ElectronicSpectroscopy(1, T2, T1, Y, relaxes_to=0)))
            g_e = chans[ChannelKind.ELEC_DEPHASING].gamma_mol
            g_r = chans[ChannelKind.ELECTRONIC_RELAXATION].gamma_mol
            T2b, Yb = electronic_times(g_e, g_r, T1)
            assert T2b == pytest.approx(T2, rel=1e-12)
            assert Yb == pytest.approx(Y, rel=1e-12, abs=1e-15)


class TestVibrational:
    @pytest.mark.parametrize("wn, expected, fitted", [(112.0, 0.584, 0.31 / 0.52), (1016.0, 7.65e-3, 0.0077)])
    def test_boltzmann_factor(self, wn, expected, fitted):
        z2 = thermal_spec(wn * WAVENUMBER, 300.0).zeta2
        assert z2 == pytest.approx(boltzmann_oracle(wn, 300.0), rel=1e-9)
        assert z2 == pytest.approx(expected, rel=2e-3)
        assert abs(z2 - fitted) / fitted < 0.03

    def test_detailed_balance_exact(self):
        nu = 112 * WAVENUMBER
        chans = _by_kind(vibrational_rates(VibrationalSpectroscopy(0, T1=1e-12, T2=0.5e-12), nu, 300.0))
        cool, heat = chans[ChannelKind.VIB_COOLING].gamma_mol, chans[ChannelKind.VIB_HEATING].gamma_mol
        assert heat / cool == pytest.approx(boltzmann_oracle(112, 300), rel=1e-12)
        assert cool - heat == pytest.approx(1e12, rel=1e-12)
        assert chans[ChannelKind.VIB_DEPHASING].gamma_mol == pytest.approx(2e12 - 0.5e12)

    def test_zero_temperature(self):
        chans = _by_kind(vibrational_rates(VibrationalSpectroscopy(0, T1=2e-12), 1e13, 0.0))
        assert chans[ChannelKind.VIB_HEATING].gamma_mol == 0.0
        assert chans[ChannelKind.VIB_COOLING].gamma_mol == pytest.approx(0.5e12)
        assert ChannelKind.VIB_DEPHASING not in chans

    def test_infinite_temperature_rejected(self):
        with pytest.raises(ConfigError):
            vibrational_rates(VibrationalSpectroscopy(0, T1=1e-12), 1.0, 1e30)

    def test_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            T1 = 10 ** rng.uniform(-13, -9)
            T2 = T1 * rng.uniform(0.05, 2.0)
            nu = 10 ** rng.uniform(12, 14.5)
            T = rng.uniform(1, 1000)
            chans = _by_kind(vibrational_rates(VibrationalSpectroscopy(0, T1, T2), nu, T))
            c, h, v = (chans[k].gamma_mol for k in (ChannelKind.VIB_COOLING, ChannelKind.VIB_HEATING,
                                                     ChannelKind.VIB_DEPHASING))
            T1b, T2b = vibrational_times(c, h, v)
            assert T1b == pytest.approx(T1, rel=1e-10)
            assert T2b == pytest.approx(T2, rel=1e-10)
            if h > 1e-300:
                assert detailed_balance_temperature(nu, c, h) == pytest.approx(T, rel=1e-9)

    def test_simulator_temperature(self):
        spec = thermal_spec(2e13, 300.0, nu_sim=2e7)
        assert spec.t_sim == pytest.approx(300.0 * 1e-6)
        assert spec.zeta == pytest.approx(math.sqrt(spec.zeta2))
