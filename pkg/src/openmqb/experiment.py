"""End-to-end pipeline: compile a problem into a self-contained experiment
file, certify the time mapping by propagating both frames, simulate and
verify the noise plans."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import Problem, load_config, problem_from_dict, problem_to_dict
from .errors import ConfigError, InfeasibleError
from .lindblad import observables_csv, propagate, trace_distance
from .model import ChannelKind
from .operators import (
    HilbertSpace,
    SimulatorHamiltonianSpec,
    build_lindblad_operator,
    build_molecular_hamiltonian,
    build_simulator_hamiltonian,
)
from .planner import InjectionBudget, ScalingPlan, budget, budget_csv, budget_text, compute_window, window_text
from .rates import thermal_spec
from .stochastic import verify_plan
from .synth import (
    plan_from_dict,
    plan_to_dict,
    plans_csv,
    plans_text,
    synth_dephasing_noise,
    synth_global_magnetic,
    synth_global_voltage,
    synth_pump,
    synth_sideband,
)

EXPERIMENT_SCHEMA = "openmqb-experiment/1"


@dataclass
class CompiledExperiment:
    problem: Problem
    plan: ScalingPlan
    budget: InjectionBudget
    plans: dict
    spec: SimulatorHamiltonianSpec
    provenance: dict
    warnings: list = field(default_factory=list)

    @property
    def F(self):
        return self.plan.F

    def effective_rates(self):
        """Simulator rate per channel label: native plus what the control plans achieve."""
        achieved = {}
        for p in self.plans.get("pump", []):
            achieved[p.label] = p.achieved
        for p in self.plans.get("sideband", []):
            achieved[f"vib_cooling[{p.mode}]"] = p.achieved_minus
            achieved[f"vib_heating[{p.mode}]"] = p.achieved_plus
        for p in self.plans.get("noise", []):
            achieved[p.label] = p.achieved
        return {r.label: r.gamma_nat + achieved.get(r.label, r.gamma_inj) for r in self.budget.rows}

    def to_dict(self):
        plans = {}
        for k, v in self.plans.items():
            if isinstance(v, list):
                plans[k] = [plan_to_dict(p) for p in v]
            elif v is not None:
                plans[k] = plan_to_dict(v)
        return {
            "schema": EXPERIMENT_SCHEMA,
            "provenance": self.provenance,
            "problem": problem_to_dict(self.problem),
            "scaling": self.plan.to_dict(),
            "budget": self.budget.to_dict(),
            "simulator": self.spec.to_dict(),
            "plans": plans,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != EXPERIMENT_SCHEMA:
            raise ConfigError("schema", f"unsupported experiment schema {d.get('schema')!r}, "
                                        f"expected {EXPERIMENT_SCHEMA!r}")
        plans = {}
        for k, v in d.get("plans", {}).items():
            plans[k] = [plan_from_dict(k, p) for p in v] if isinstance(v, list) else plan_from_dict(k, v)
        return cls(
            problem=problem_from_dict(d["problem"]),
            plan=ScalingPlan.from_dict(d["scaling"]),
            budget=InjectionBudget.from_dict(d["budget"]),
            plans=plans,
            spec=SimulatorHamiltonianSpec.from_dict(d["simulator"]),
            provenance=dict(d["provenance"]),
            warnings=list(d.get("warnings", [])),
        )

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"malformed experiment file: {exc}") from None
        return cls.from_dict(d)

    def report(self):
        m = self.problem.model
        parts = [
            f"experiment: {m.name or 'unnamed'} ({m.num_states} states, {len(m.modes)} modes)",
            "",
            "[scaling]",
            window_text(self.plan),
            "",
            "[budget]",
            budget_text(self.budget),
            "",
            "[implementation]",
            plans_text(self.plans),
        ]
        if self.warnings:
            parts += ["", "[warnings]"] + [f"- {w}" for w in self.warnings]
        return "\n".join(parts) + "\n"


def _max_eta(hardware):
    return max((tm.lamb_dicke for tm in hardware.modes.values()), default=0.0)


def synthesize(problem: Problem, plan: ScalingPlan, b: InjectionBudget):
    """Control plans for every budget row plus the optional global schemes."""
    model, hw, req = problem.model, problem.hardware, problem.request
    conv = req.noise_convention
    plans = {"pump": [], "sideband": [], "noise": []}
    warnings = []
    sidebands = {}
    for r in b.rows:
        kind = ChannelKind(r.kind)
        if kind is ChannelKind.ELECTRONIC_RELAXATION:
            plans["pump"].append(synth_pump(
                r.gamma_inj, hw.pump_decay_nl, hw.pump_decay_ml, hw.pump_detuning, label=r.label,
                max_strength=hw.max_pump_strength, recoil_rate=hw.recoil_rate, eta=_max_eta(hw),
                threshold=hw.thresholds.adiabatic))
        elif kind in (ChannelKind.VIB_COOLING, ChannelKind.VIB_HEATING):
            j = r.target[0]
            entry = sidebands.setdefault(j, {"minus": 0.0, "plus": 0.0})
            entry["minus" if kind is ChannelKind.VIB_COOLING else "plus"] = r.gamma_inj
        else:
            target_kind = "mode" if kind is ChannelKind.VIB_DEPHASING else "state"
            plans["noise"].append(synth_dephasing_noise(
                r.gamma_inj, hw.correlation_time, target_kind=target_kind, index=r.target[0], label=r.label,
                convention=conv, threshold=hw.thresholds.motional_narrowing))
    for j, t in sorted(sidebands.items()):
        label = model.modes[j].label
        if t["minus"] == 0 and t["plus"] == 0 and label not in hw.modes:
            continue
        sb = synth_sideband(label, hw, t["minus"], t["plus"])
        if req.temperature > 0 and label in hw.modes:
            zeta2 = thermal_spec(model.modes[j].frequency, req.temperature).zeta2
            ratio = sb.omega_plus / sb.omega_minus if sb.omega_minus > 0 else math.nan
            sb = replace(sb, zeta=math.sqrt(zeta2))
            if sb.omega_minus > 0 and abs(ratio - math.sqrt(zeta2)) > 0.05 * math.sqrt(zeta2):
                warnings.append(f"{label}: tone ratio {ratio:.3g} departs from zeta = {math.sqrt(zeta2):.3g} "
                                "because native rates are not negligible")
        plans["sideband"].append(sb)

    deph_states = [r for r in b.rows if r.kind == ChannelKind.ELEC_DEPHASING.value]
    if hw.magnetic is not None and deph_states:
        targets = [0.0] * model.num_states
        for r in deph_states:
            targets[r.target[0]] = r.gamma_inj
        try:
            plans["magnetic"] = synth_global_magnetic(
                targets, hw.magnetic, hw.correlation_time, labels=model.state_labels, convention=conv,
                thresholds=hw.thresholds)
        except InfeasibleError as exc:
            warnings.append(f"global magnetic scheme unavailable: {exc}")
    deph_modes = [r for r in b.rows if r.kind == ChannelKind.VIB_DEPHASING.value]
    if hw.voltage is not None and deph_modes:
        idx = [r.target[0] for r in deph_modes if model.modes[r.target[0]].label in hw.modes]
        if idx:
            tms = [hw.modes[model.modes[j].label] for j in idx]
            targets = [b.row(f"vib_dephasing[{model.modes[j].label}]").gamma_inj for j in idx]
            try:
                plans["voltage"] = synth_global_voltage(
                    targets, hw.voltage, idx, hw.correlation_time, labels=[model.modes[j].label for j in idx],
                    axes=[tm.axis for tm in tms], kappas=[tm.kappa for tm in tms], convention=conv,
                    thresholds=hw.thresholds)
            except InfeasibleError as exc:
                warnings.append(f"global voltage scheme unavailable: {exc}")
    return plans, warnings


def compile_problem(problem: Problem, config_text: Optional[str] = None):
    """Window, budget, simulator parameters and control plans for a parsed problem."""
    plan = compute_window(problem.channels, problem.hardware, problem.request, problem.model)
    b = budget(problem.channels, plan.F, problem.hardware, problem.model)
    spec = SimulatorHamiltonianSpec.from_model(problem.model, plan.F)
    spec.check_limits(problem.hardware.max_strengths)
    plans, warnings = synthesize(problem, plan, b)
    canonical = json.dumps(problem_to_dict(problem), sort_keys=True)
    source = config_text if config_text is not None else canonical
    provenance = {
        "config_sha256": hashlib.sha256(source.encode()).hexdigest(),
        "seed": problem.request.seed,
        "version": __version__,
        "noise_convention": problem.request.noise_convention.value,
    }
    exp = CompiledExperiment(problem, plan, b, plans, spec, provenance, warnings)
    check_consistency(exp)
    return exp


def compile_file(path):
    text = Path(path).read_text()
    from .config import parse_model

    return compile_problem(parse_model(text), config_text=text)


def check_consistency(exp: CompiledExperiment, rtol=1e-9):
    """Spec strengths equal F times molecular parameters; plans achieve the budget."""
    ref = SimulatorHamiltonianSpec.from_model(exp.problem.model, exp.F)
    for a, b in ((ref.detunings, exp.spec.detunings), (ref.shifts, exp.spec.shifts)):
        if not np.allclose(a, b, rtol=rtol, atol=0):
            raise ConfigError("simulator", "simulator parameters are not F times the molecular ones")
    for r in exp.budget.rows:
        eff = exp.effective_rates()[r.label]
        if abs(eff - r.gamma_sim) > rtol * max(r.gamma_sim, 1e-300) and abs(eff - r.gamma_sim) > 1e-12:
            raise ConfigError("plans", f"{r.label}: plans achieve {eff:.12g} s^-1, budget needs {r.gamma_sim:.12g}")


# -- propagation ------------------------------------------------------------


def initial_density(problem: Problem, space: HilbertSpace):
    ist = problem.request.initial_state
    fock = ist.fock or (0,) * len(space.fock_dims)
    psi = space.basis_state(ist.electronic, fock)
    return np.outer(psi, psi.conj())


def _frame_operators(exp: CompiledExperiment, frame, rates=None):
    model = exp.problem.model
    space = HilbertSpace.for_model(model)
    chans = exp.problem.channels
    ops = [build_lindblad_operator(ch, space) for ch in chans]
    if frame == "molecular":
        H = build_molecular_hamiltonian(model, space)
        pairs = [(op, ch.gamma_mol) for op, ch in zip(ops, chans)]
    elif frame == "simulator":
        H = build_simulator_hamiltonian(exp.spec, space, exp.problem.hardware.max_strengths)
        rates = rates if rates is not None else exp.effective_rates()
        pairs = [(op, rates[ch.label(model)]) for op, ch in zip(ops, chans)]
    else:
        raise ConfigError("frame", "must be 'molecular' or 'simulator'")
    return space, H, pairs


def run_frame(exp, frame, times, rates=None, keep_states=True, tolerance=None, leakage_threshold=None):
    space, H, pairs = _frame_operators(exp, frame, rates)
    req = exp.problem.request
    model = exp.problem.model
    dt = req.dt if frame == "molecular" or req.dt is None else req.dt / exp.F
    return propagate(
        H, pairs, initial_density(exp.problem, space), times,
        tol=tolerance if tolerance is not None else req.tolerance,
        dt=dt,
        space=space,
        leakage_threshold=req.leakage_threshold if leakage_threshold is None else leakage_threshold,
        keep_states=keep_states,
        state_labels=model.state_labels,
        mode_labels=model.mode_labels,
    )


def _grid(exp, horizon, points):
    req = exp.problem.request
    horizon = (req.horizon if req.horizon is not None else req.t_mol) if horizon is None else horizon
    if horizon < 0 or horizon > req.t_mol * (1 + 1e-12):
        raise ConfigError("horizon", f"horizon must lie in [0, t_mol = {req.t_mol:.4g} s]")
    points = req.points if points is None else points
    return np.linspace(0.0, horizon, points)


@dataclass
class EquivalenceReport:
    times: np.ndarray
    distances: np.ndarray
    tolerance: float
    attribution: list

    @property
    def max_distance(self):
        return float(np.max(self.distances)) if len(self.distances) else 0.0

    @property
    def passed(self):
        return self.max_distance < self.tolerance

    def to_csv(self):
        lines = ["time_mol_s,trace_distance"]
        lines += [f"{float(t)!r},{float(d)!r}" for t, d in zip(self.times, self.distances)]
        return "\n".join(lines) + "\n"

    def text(self):
        out = [f"max trace distance {self.max_distance:.3e} (tolerance {self.tolerance:.1e}): "
               f"{'PASS' if self.passed else 'FAIL'}"]
        for label, ratio in self.attribution:
            out.append(f"  channel {label}: gamma_sim / (F gamma_mol) = {ratio:.6g}")
        return "\n".join(out)


def certify(exp: CompiledExperiment, horizon=None, tolerance=1e-8, points=None, perturb=None):
    """Propagate both frames and compare rho_sim(t/F) with rho_mol(t).

    ``perturb`` maps channel labels to a multiplicative factor on the
    simulator rate (used to demonstrate failure attribution).
    """
    times = _grid(exp, horizon, points)
    rates = exp.effective_rates()
    if perturb:
        for label, factor in perturb.items():
            if label not in rates:
                raise ConfigError("perturb", f"unknown channel {label!r}")
            rates[label] *= factor
    model = exp.problem.model
    attribution = []
    for ch in exp.problem.channels:
        label = ch.label(model)
        want = exp.F * ch.gamma_mol
        ratio = rates[label] / want if want > 0 else (1.0 if rates[label] == 0 else math.inf)
        if abs(ratio - 1.0) > 1e-9:
            attribution.append((label, ratio))
    if len(times) < 2 or times[-1] == 0:
        # zero horizon: both frames start from the same state
        return EquivalenceReport(times, np.zeros(len(times)), tolerance, attribution)
    mol = run_frame(exp, "molecular", times)
    sim = run_frame(exp, "simulator", times / exp.F, rates=rates)
    dist = np.array([trace_distance(a, b) for a, b in zip(mol.states, sim.states)])
    return EquivalenceReport(times, dist, tolerance, attribution)


def default_observables(model):
    names = [f"pop:{l}" for l in model.state_labels] + [f"n:{l}" for l in model.mode_labels]
    names += ["coh:0,1", "purity", "trace"]
    return names


def simulate(exp: CompiledExperiment, frame="molecular", observables=None, horizon=None, points=None):
    """Propagate one frame and return ``(series, csv_text)``; the time column is molecular time."""
    times = _grid(exp, horizon, points)
    model = exp.problem.model
    names = list(observables) if observables else default_observables(model)
    if frame == "simulator":
        series = run_frame(exp, "simulator", times / exp.F, keep_states=any(n.startswith("rho") for n in names))
        return series, observables_csv(series, names, time_scale=exp.F)
    series = run_frame(exp, "molecular", times, keep_states=any(n.startswith("rho") for n in names))
    return series, observables_csv(series, names)


def verify_noise(exp: CompiledExperiment, n_traj=None, seed=None):
    """Ensemble verification of every noise plan; returns a list of reports."""
    req = exp.problem.request
    n_traj = req.trajectories if n_traj is None else n_traj
    seed = req.seed if seed is None else seed
    reports = []
    for i, p in enumerate(exp.plans.get("noise", [])):
        reports.append(verify_plan(p, n_traj=n_traj, seed=seed + 1000 * i))
    for key in ("magnetic", "voltage"):
        p = exp.plans.get(key)
        if p is not None:
            reports.append(verify_plan(p, n_traj=n_traj, seed=seed + 100_000 + len(reports)))
    return reports
