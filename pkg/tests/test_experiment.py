import json

import numpy as np
import pytest
import tomli
import tomli_w

from openmqb.config import parse_model
from openmqb.errors import ConfigError
from openmqb.operators import build_molecular_hamiltonian
from openmqb.experiment import (
    EXPERIMENT_SCHEMA,
    CompiledExperiment,
    certify,
    check_consistency,
    compile_problem,
    simulate,
    verify_noise,
)


def _compile_doc(doc):
    text = tomli_w.dumps(doc)
    return compile_problem(parse_model(text), text)


def _doc(configs, name="triiodide.toml"):
    return tomli.loads((configs / name).read_text())


class TestCompile:
    def test_report_rows(self, triiodide):
        text = triiodide.report()
        for label in ("elec_relaxation[g,e]", "vib_cooling[nu1]", "vib_heating[nu1]", "vib_dephasing[nu1]",
                      "elec_dephasing[e]"):
            assert label in text
        assert "F = 1.611e-11" in text

    def test_pyrazine_cooling(self, pyrazine):
        assert pyrazine.F == pytest.approx(2.6e-11, rel=0.03)
        assert pyrazine.budget.row("vib_cooling[nu1]").gamma_sim == pytest.approx(26, rel=0.06)

    def test_consistent(self, triiodide, pyrazine, pyrazine_desk):
        for exp in (triiodide, pyrazine, pyrazine_desk):
            check_consistency(exp)

    def test_plans_achieve_budget(self, triiodide):
        eff = triiodide.effective_rates()
        for r in triiodide.budget.rows:
            assert eff[r.label] == pytest.approx(r.gamma_sim, rel=1e-9, abs=1e-12)

    def test_tone_ratio(self, triiodide):
        (sb,) = triiodide.plans["sideband"]
        assert sb.achieved_minus == pytest.approx(triiodide.budget.row("vib_cooling[nu1]").gamma_inj, rel=1e-12)
        assert sb.zeta == pytest.approx(np.sqrt(0.584), rel=2e-3)

    def test_closed_system(self, configs):
        doc = _doc(configs)
        doc.pop("dissipation")
        exp = _compile_doc(doc)
        assert exp.budget.rows == ()
        assert exp.plan.R == 0.0
        assert exp.F == pytest.approx(exp.problem.request.t_mol / exp.plan.tau_os)
        s, _ = simulate(exp, observables=["trace", "energy"], points=11)
        assert np.abs(s.derived["trace"] - 1).max() < 1e-8
        E = s.derived["energy"]
        scale = np.linalg.norm(build_molecular_hamiltonian(exp.problem.model).matrix, 2)
        assert np.abs(E - E[0]).max() < 1e-8 * scale

    def test_provenance(self, triiodide):
        prov = triiodide.provenance
        assert len(prov["config_sha256"]) == 64
        assert prov["seed"] == 20240601
        assert "version" in prov


class TestSerialisation:
    def test_json_round_trip(self, triiodide, pyrazine):
        for exp in (triiodide, pyrazine):
            text = exp.dumps()
            back = CompiledExperiment.from_dict(json.loads(text))
            assert back.dumps() == text
            check_consistency(back)

    def test_schema_check(self, triiodide):
        d = triiodide.to_dict()
        d["schema"] = "openmqb-experiment/0"
        with pytest.raises(ConfigError):
            CompiledExperiment.from_dict(d)
        assert triiodide.to_dict()["schema"] == EXPERIMENT_SCHEMA

    def test_malformed_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            CompiledExperiment.load(p)


class TestCertify:
    def test_triiodide_identity(self, triiodide):
        rep = certify(triiodide)
        assert rep.passed
        assert rep.max_distance < 1e-8
        assert rep.attribution == []
        assert len(rep.times) == triiodide.problem.request.points

    def test_perturbed_channel_fails(self, triiodide):
        rep = certify(triiodide, points=6, perturb={"elec_dephasing[e]": 1.1})
        assert not rep.passed
        assert [label for label, _ in rep.attribution] == ["elec_dephasing[e]"]
        assert rep.attribution[0][1] == pytest.approx(1.1)
        assert "FAIL" in rep.text()

    def test_zero_horizon(self, triiodide):
        rep = certify(triiodide, horizon=0.0)
        assert rep.max_distance == 0.0 and rep.passed

    def test_unknown_perturb_label(self, triiodide):
        with pytest.raises(ConfigError):
            certify(triiodide, perturb={"nope": 2.0})

    def test_horizon_beyond_t_mol(self, triiodide):
        with pytest.raises(ConfigError):
            certify(triiodide, horizon=2e-12)

    def test_distances_bounded(self, triiodide):
        rep = certify(triiodide, points=5, perturb={"vib_cooling[nu1]": 3.0})
        assert np.all((rep.distances >= 0) & (rep.distances <= 1))
        lines = rep.to_csv().splitlines()
        assert lines[0] == "time_mol_s,trace_distance" and len(lines) == 6


class TestSimulate:
    def test_frames_agree(self, triiodide):
        names = ["pop:e", "n:nu1", "coh:0,1"]
        mol, _ = simulate(triiodide, "molecular", names, points=6)
        sim, _ = simulate(triiodide, "simulator", names, points=6)
        for key in ("pop:1", "n:0"):
            np.testing.assert_allclose(mol.derived[key], sim.derived[key], atol=1e-9)

    def test_simulator_time_column_is_molecular(self, triiodide):
        _, a = simulate(triiodide, "molecular", ["pop:e"], points=3)
        _, b = simulate(triiodide, "simulator", ["pop:e"], points=3)
        ta = [float(l.split(",")[0]) for l in a.splitlines()[1:]]
        tb = [float(l.split(",")[0]) for l in b.splitlines()[1:]]
        np.testing.assert_allclose(ta, tb, rtol=1e-12)

    def test_dephasing_only_keeps_diagonal(self, configs):
        doc = _doc(configs)
        doc["molecule"]["c0"]["values"] = [[0.0, 0.0], [0.0, 300.0]]
        doc["molecule"]["modes"][0].pop("tuning")
        doc["dissipation"]["channels"] = [c for c in doc["dissipation"]["channels"] if "dephasing" in c["kind"]]
        doc["request"]["initial_state"] = {"electronic": "e", "fock": [2]}
        doc["hardware"].pop("magnetic")
        exp = _compile_doc(doc)
        names = [f"rho_re:{i},{i}" for i in range(exp.problem.model.num_states * 8)]
        s, _ = simulate(exp, observables=names, points=6)
        rho = s.states
        diag = np.real(np.einsum("tii->ti", rho))
        assert np.abs(diag - diag[0]).max() < 1e-8

    def test_deterministic_csv(self, triiodide):
        _, a = simulate(triiodide, points=5)
        _, b = simulate(triiodide, points=5)
        assert a == b


class TestVerifyNoise:
    def test_triiodide(self, triiodide):
        reports = verify_noise(triiodide)
        assert reports and all(r.passed for r in reports)
        assert {r.seed for r in reports} == {r.seed for r in verify_noise(triiodide)}

    def test_half_convention_fails(self, configs):
        doc = _doc(configs)
        doc["request"]["noise_convention"] = "half"
        doc["hardware"].pop("magnetic")
        exp = _compile_doc(doc)
        reports = verify_noise(exp, n_traj=1000)
        assert not all(r.passed for r in reports)
