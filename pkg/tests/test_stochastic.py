import math

import numpy as np
import pytest

from openmqb.errors import ConfigError
from openmqb.lindblad import propagate
from openmqb.model import MagneticConstants, VoltageConstants
from openmqb.stochastic import OUProcess, check_rate, convergence_study, generate_ou, ou_paths, propagate_noisy, verify_plan
from openmqb.synth import synth_dephasing_noise, synth_global_magnetic, synth_global_voltage


class TestOU:
    def test_zero_variance(self):
        x = generate_ou(OUProcess(0.0, 1e-5, 1e-6, seed=1), 1e-3)
        assert not np.any(x)

    def test_coarse_step_rejected(self):
        with pytest.raises(ConfigError):
            OUProcess(1.0, 1e-5, 2e-6)

    def test_deterministic(self):
        p = OUProcess(2.0, 1e-5, 1e-6, seed=42)
        np.testing.assert_array_equal(generate_ou(p, 1e-3), generate_ou(p, 1e-3))
        assert not np.array_equal(generate_ou(p, 1e-3), generate_ou(OUProcess(2.0, 1e-5, 1e-6, seed=43), 1e-3))

    def test_stationary_moments(self):
        sigma2, tau, dt = 4.0, 1.0, 0.1
        x = generate_ou(OUProcess(sigma2, tau, dt, seed=3), 1e6 * dt)
        assert len(x) > 1e6
        assert abs(x.var() / sigma2 - 1) < 0.05
        # consecutive samples are correlated: N_eff = N dt / (2 tau)
        n_eff = len(x) * dt / (2 * tau)
        assert abs(x.mean()) <= 3 * math.sqrt(sigma2 / n_eff)

    def test_independent_cross_section_mean(self):
        sigma2 = 4.0
        x = ou_paths(OUProcess(sigma2, 1.0, 0.1), 5, 200_000, np.random.default_rng(9))[:, -1]
        assert abs(x.mean()) <= 3 * math.sqrt(sigma2 / len(x))

    def test_autocorrelation(self):
        sigma2, tau, dt = 1.0, 1.0, 0.1
        x = generate_ou(OUProcess(sigma2, tau, dt, seed=5), 2e5 * dt)
        lag = int(round(tau / dt))
        c = np.mean(x[:-lag] * x[lag:])
        assert abs(c / (sigma2 / math.e) - 1) < 0.1
        lags = np.arange(0, 25)
        acf = np.array([np.mean(x[: len(x) - k] * x[k:]) for k in lags])
        keep = acf > 0.1 * acf[0]
        slope = np.polyfit(lags[keep] * dt, np.log(acf[keep]), 1)[0]
        assert abs(-1 / slope / tau - 1) < 0.1


def _qubit_times(proc, gamma, points=100):
    t_end = 2.5 / gamma
    stride = int(math.ceil(t_end / proc.dt / points))
    return np.arange(points + 1) * stride * proc.dt


class TestEnsemble:
    def test_qubit_dephasing(self):
        gamma, tau = 2000.0, 1e-5
        var = gamma / (2 * tau)
        proc = OUProcess(var, tau, tau / 10)
        O = np.diag([0.0, 1.0]).astype(complex)
        rho0 = np.full((2, 2), 0.5, dtype=complex)
        res = propagate_noisy(np.zeros((2, 2)), O, proc, rho0, _qubit_times(proc, gamma), 1000, seed=11)
        fit = res.fits[(0, 1)]
        assert abs(fit.gamma - gamma) <= 3 * fit.gamma_se + 0.05 * gamma
        assert not fit.nonexponential
        np.testing.assert_allclose(np.trace(res.mean_rho, axis1=1, axis2=2), 1.0, atol=1e-8)
        herm = np.abs(res.mean_rho - np.conj(np.swapaxes(res.mean_rho, 1, 2))).max()
        assert herm < 1e-12

    def test_mode_dephasing(self):
        # Fock coherence (n, m) decays at gamma (n - m)^2 / 2
        gamma, tau, N = 500.0, 1e-5, 4
        var = gamma / (2 * tau)
        proc = OUProcess(var, tau, tau / 10)
        O = np.diag(np.arange(N, dtype=float)).astype(complex)
        psi = np.ones(N) / 2
        rho0 = np.outer(psi, psi).astype(complex)
        res = propagate_noisy(np.zeros((N, N)), O, proc, rho0, _qubit_times(proc, gamma * 2, 120), 1000,
                              pairs=((0, 1), (1, 3)), seed=12)
        for pair in ((0, 1), (1, 3)):
            fit = res.fits[pair]
            n, m = pair
            assert abs(fit.decay - gamma * (n - m) ** 2 / 2) <= 3 * fit.decay_se + 0.05 * gamma * (n - m) ** 2 / 2
            assert abs(fit.gamma - gamma) <= 3 * fit.gamma_se + 0.05 * gamma

    def test_zero_noise_is_closed_evolution(self):
        rng = np.random.default_rng(0)
        H0 = np.array([[0.0, 300.0], [300.0, 100.0]], dtype=complex)
        O = np.diag([0.0, 1.0]).astype(complex)
        psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi /= np.linalg.norm(psi)
        rho0 = np.outer(psi, psi.conj())
        proc = OUProcess(0.0, 1e-4, 1e-5)
        times = np.arange(0, 41) * 1e-5
        res = propagate_noisy(H0, O, proc, rho0, times, 100, seed=1)
        ref = propagate(H0, [], rho0, times, tol=1e-13).states
        assert np.abs(res.mean_rho - ref).max() < 1e-10

    def test_trajectories_unitary(self):
        H0 = np.array([[0.0, 200.0], [200.0, 0.0]], dtype=complex)
        O = np.diag([0.0, 1.0]).astype(complex)
        proc = OUProcess(1e8, 1e-5, 1e-6)
        rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
        res = propagate_noisy(H0, O, proc, rho0, np.arange(0, 21) * 1e-5, 100, pairs=(),
                              seed=2, check_unitarity=True)
        assert res.max_trace_error < 1e-10
        assert res.max_purity_error < 1e-10

    def test_seed_reproducible(self):
        proc = OUProcess(1e8, 1e-5, 1e-6)
        O = np.diag([0.0, 1.0]).astype(complex)
        rho0 = np.full((2, 2), 0.5, dtype=complex)
        times = np.arange(0, 11) * 1e-5
        a = propagate_noisy(np.zeros((2, 2)), O, proc, rho0, times, 300, seed=7)
        b = propagate_noisy(np.zeros((2, 2)), O, proc, rho0, times, 300, seed=7)
        np.testing.assert_array_equal(a.mean_rho, b.mean_rho)

    def test_input_errors(self):
        proc = OUProcess(1.0, 1e-5, 1e-6)
        rho0 = np.full((2, 2), 0.5, dtype=complex)
        times = np.arange(0, 11) * 1e-6
        with pytest.raises(ConfigError):
            propagate_noisy(np.zeros((2, 2)), np.array([[0, 1], [0, 0]], dtype=complex), proc, rho0, times, 100)
        with pytest.raises(ConfigError):
            propagate_noisy(np.zeros((2, 2)), np.eye(2), proc, rho0, times, 50)
        with pytest.raises(ConfigError):
            propagate_noisy(np.zeros((2, 2)), np.eye(2), proc, rho0, times + 0.3e-6, 100)


class TestConvergence:
    def test_inverse_sqrt_scaling(self):
        var, tau = 1e8, 1e-5
        ses = []
        for seed in range(8):
            rows = convergence_study(var, tau, ns=(100, 400, 1600), seed=seed)
            ses.append([r[2] for r in rows])
        se = np.mean(ses, axis=0)
        slope = np.polyfit(np.log([100, 400, 1600]), np.log(se), 1)[0]
        assert -0.7 < slope < -0.3


class TestVerifyPlan:
    def test_triiodide_electronic_plan(self, triiodide):
        plans = [p for p in triiodide.plans["noise"] if p.label.startswith("elec_dephasing")]
        assert plans and plans[0].achieved == pytest.approx(1933, rel=1e-3)
        rep = verify_plan(plans[0], n_traj=1000, seed=triiodide.problem.request.seed)
        assert rep.passed, rep.text()

    def test_zero_variance_plan(self):
        rep = verify_plan(synth_dephasing_noise(0.0, 1e-5, label="idle"), n_traj=100)
        assert rep.passed
        assert rep.rows[0].note == "zero noise"

    def test_long_correlation_time_fails(self):
        # tau_c * gamma = 5: far outside motional narrowing
        p = synth_dephasing_noise(5e4, 1e-4, strict=False, label="slow")
        assert not p.valid
        rep = verify_plan(p, n_traj=1000, seed=3)
        row = rep.rows[0]
        assert not row.passed or row.note == "non-exponential decay"
        assert not rep.passed

    def test_half_convention_plan_fails(self):
        p = synth_dephasing_noise(1000.0, 1e-5, convention="half", label="half")
        rep = verify_plan(p, n_traj=1000, seed=4)
        assert not rep.passed
        assert rep.rows[0].fitted / p.achieved == pytest.approx(4.0, rel=0.2)

    def test_magnetic_plan(self):
        p = synth_global_magnetic([0.0, 1500.0], MagneticConstants((0.0, 1e10), 1e-5), 1e-5)
        rep = verify_plan(p, n_traj=1000, seed=5)
        assert rep.passed, rep.text()
        assert len(rep.rows) == 1

    def test_voltage_plan(self):
        p = synth_global_voltage([100.0, 0.0], VoltageConstants(1e4, 1e4), ["a", "b"], 1e-5,
                                 axes=["radial", "axial"], kappas=[1.0, 1.0])
        rep = verify_plan(p, n_traj=1000, seed=6)
        assert rep.passed, rep.text()

    def test_report_csv(self):
        rep = verify_plan(synth_dephasing_noise(0.0, 1e-5, label="idle"), n_traj=100)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "channel,target_s-1,fitted_s-1,stderr_s-1,result,note"
        assert lines[1].split(",")[4] == "PASS"

    def test_check_rate_without_noise_for_target(self):
        assert not check_rate(0.0, 1e-5, 10.0).passed
