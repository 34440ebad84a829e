"""Configuration documents (TOML) to validated domain objects and back.

The same nested-dict layout is used for TOML configs and for the ``problem``
block embedded in compiled experiment files, so :func:`problem_from_dict`
and :func:`problem_to_dict` are exact inverses on canonical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError
from .model import (
    ChannelKind,
    DissipationChannel,
    HardwareProfile,
    InitialState,
    LVCModel,
    MagneticConstants,
    Mode,
    ModeKind,
    SimulationRequest,
    TermType,
    Thresholds,
    TrapMode,
    VoltageConstants,
)
from .rates import ElectronicSpectroscopy, VibrationalSpectroscopy, electronic_rates, vibrational_rates
from .units import (
    DIMENSIONLESS,
    FIELD_PER_CURRENT,
    FREQUENCY,
    LENGTH,
    MAGNETIC_SENSITIVITY,
    RATE,
    TEMPERATURE,
    TIME,
    VACUUM_PERMEABILITY,
    VOLTAGE_SENSITIVITY,
    parse_quantity,
)

CONFIG_SCHEMA = "openmqb-config/1"


@dataclass(frozen=True)
class Problem:
    model: LVCModel
    channels: tuple
    hardware: HardwareProfile
    request: SimulationRequest


def _check_keys(table, allowed, path):
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}" if path else sorted(unknown)[0], "unknown key")


def _require(table, key, path):
    if key not in table:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return table[key]


def _int(raw, path, minimum=None):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(path, "expected an integer")
    if minimum is not None and raw < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return raw


def _number(raw, path):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(path, "expected a number")
    return float(raw)


def _vector(raw, dimension, path):
    """A list of quantities, or ``{unit, values}``."""
    if isinstance(raw, dict):
        _check_keys(raw, ("unit", "values"), path)
        unit = _require(raw, "unit", path)
        values = _require(raw, "values", path)
        if not isinstance(values, list):
            raise ConfigError(f"{path}.values", "expected a list")
        return [parse_quantity({"value": v, "unit": unit}, dimension, f"{path}.values[{i}]") for i, v in enumerate(values)]
    if not isinstance(raw, list):
        raise ConfigError(path, "expected a list of quantities")
    return [parse_quantity(v, dimension, f"{path}[{i}]") for i, v in enumerate(raw)]


def _matrix(raw, dimension, path):
    if isinstance(raw, dict):
        _check_keys(raw, ("unit", "values"), path)
        unit = _require(raw, "unit", path)
        rows = _require(raw, "values", path)
        if not isinstance(rows, list):
            raise ConfigError(f"{path}.values", "expected a list of rows")
        return [
            _vector({"unit": unit, "values": row}, dimension, f"{path}.values[{i}]") for i, row in enumerate(rows)
        ]
    if not isinstance(raw, list):
        raise ConfigError(path, "expected a matrix")
    return [_vector(row, dimension, f"{path}[{i}]") for i, row in enumerate(raw)]


def _state_index(raw, labels, path):
    if isinstance(raw, str):
        if raw not in labels:
            raise ConfigError(path, f"unknown state {raw!r}")
        return labels.index(raw)
    return _int(raw, path, 0)


def _mode_index(raw, labels, path):
    if isinstance(raw, str):
        if raw not in labels:
            raise ConfigError(path, f"unknown mode {raw!r}")
        return labels.index(raw)
    idx = _int(raw, path, 0)
    if idx >= len(labels):
        raise ConfigError(path, f"mode index {idx} out of range")
    return idx


# -- molecule ---------------------------------------------------------------

_MOLECULE_KEYS = ("name", "num_states", "state_labels", "c0", "c0_imag", "modes", "max_dimension", "higher_order")
_MODE_KEYS = ("label", "frequency", "kind", "fock", "tuning", "coupling")


def _parse_molecule(raw):
    path = "molecule"
    _check_keys(raw, _MOLECULE_KEYS, path)
    if "higher_order" in raw:
        raise ConfigError("molecule.higher_order", "higher-order vibronic terms are not supported")
    d = _int(_require(raw, "num_states", path), "molecule.num_states", 2)
    labels = raw.get("state_labels", [str(n) for n in range(d)])
    if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
        raise ConfigError("molecule.state_labels", "expected a list of strings")
    if len(labels) != d:
        raise ConfigError("molecule.state_labels", f"expected {d} labels")
    c0 = np.array(_matrix(_require(raw, "c0", path), FREQUENCY, "molecule.c0"), dtype=complex)
    if c0.shape != (d, d):
        raise ConfigError("molecule.c0", f"expected a {d}x{d} matrix")
    if "c0_imag" in raw:
        im = np.array(_matrix(raw["c0_imag"], FREQUENCY, "molecule.c0_imag"), dtype=float)
        if im.shape != (d, d):
            raise ConfigError("molecule.c0_imag", f"expected a {d}x{d} matrix")
        c0 = c0 + 1j * im
    modes, tuning, coupling = [], {}, {}
    raw_modes = raw.get("modes", [])
    if not isinstance(raw_modes, list):
        raise ConfigError("molecule.modes", "expected an array of tables")
    for j, rm in enumerate(raw_modes):
        mpath = f"molecule.modes[{j}]"
        _check_keys(rm, _MODE_KEYS, mpath)
        label = _require(rm, "label", mpath)
        kind = rm.get("kind", "tuning")
        try:
            kind = ModeKind(kind)
        except ValueError:
            raise ConfigError(f"{mpath}.kind", f"unknown mode kind {kind!r}") from None
        freq = parse_quantity(_require(rm, "frequency", mpath), FREQUENCY, f"{mpath}.frequency")
        fock = _int(rm.get("fock", 8), f"{mpath}.fock")
        modes.append(Mode(label=str(label), frequency=freq, kind=kind, fock=fock))
        if "tuning" in rm:
            if kind is not ModeKind.TUNING:
                raise ConfigError(f"{mpath}.tuning", "tuning constants are only allowed on tuning modes")
            values = _vector(rm["tuning"], FREQUENCY, f"{mpath}.tuning")
            if len(values) != d:
                raise ConfigError(f"{mpath}.tuning", f"expected one constant per state ({d})")
            for n, v in enumerate(values):
                if v != 0.0:
                    tuning[(j, n)] = v
        if "coupling" in rm:
            if kind is not ModeKind.COUPLING:
                raise ConfigError(f"{mpath}.coupling", "vibronic couplings are only allowed on coupling modes")
            if not isinstance(rm["coupling"], list):
                raise ConfigError(f"{mpath}.coupling", "expected an array of {states, value} tables")
            for k, entry in enumerate(rm["coupling"]):
                cpath = f"{mpath}.coupling[{k}]"
                _check_keys(entry, ("states", "value"), cpath)
                states = _require(entry, "states", cpath)
                if not isinstance(states, list) or len(states) != 2:
                    raise ConfigError(f"{cpath}.states", "expected a pair of states")
                n, m = (_state_index(s, labels, f"{cpath}.states") for s in states)
                key = (j, min(n, m), max(n, m))
                if n == m or key in coupling:
                    raise ConfigError(f"{cpath}.states", "state pair must be distinct and given once")
                coupling[key] = parse_quantity(_require(entry, "value", cpath), FREQUENCY, f"{cpath}.value")
    return LVCModel(
        num_states=d,
        modes=tuple(modes),
        c0=c0,
        tuning=tuning,
        coupling=coupling,
        state_labels=tuple(labels),
        name=str(raw.get("name", "")),
        max_dimension=_int(raw.get("max_dimension", 2048), "molecule.max_dimension", 1),
    )


# -- dissipation ------------------------------------------------------------


def _parse_dissipation(raw, model, temperature):
    path = "dissipation"
    _check_keys(raw, ("channels", "electronic", "vibrational"), path)
    channels = []
    labels = list(model.state_labels)
    mlabels = list(model.mode_labels)
    for i, rc in enumerate(raw.get("channels", [])):
        cpath = f"dissipation.channels[{i}]"
        _check_keys(rc, ("kind", "state", "states", "mode", "rate"), cpath)
        try:
            kind = ChannelKind(_require(rc, "kind", cpath))
        except ValueError:
            raise ConfigError(f"{cpath}.kind", f"unknown channel kind {rc['kind']!r}") from None
        wanted = {"elec_relaxation": "states", "elec_dephasing": "state"}.get(kind.value, "mode")
        extra = {"state", "states", "mode"} & set(rc) - {wanted}
        if extra or wanted not in rc:
            raise ConfigError(cpath, f"{kind.value} needs exactly one target field '{wanted}'")
        if wanted == "states":
            pair = rc["states"]
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"{cpath}.states", "expected [lower, upper]")
            target = tuple(_state_index(s, labels, f"{cpath}.states") for s in pair)
        elif wanted == "state":
            target = (_state_index(rc["state"], labels, f"{cpath}.state"),)
        else:
            target = (_mode_index(rc["mode"], mlabels, f"{cpath}.mode"),)
        rate = parse_quantity(_require(rc, "rate", cpath), RATE, f"{cpath}.rate")
        if not rate >= 0:
            raise ConfigError(f"{cpath}.rate", "rate must be non-negative")
        ch = DissipationChannel(kind, target, rate)
        ch.validate_against(model, cpath)
        channels.append(ch)
    for i, re_ in enumerate(raw.get("electronic", [])):
        epath = f"dissipation.electronic[{i}]"
        _check_keys(re_, ("state", "T1", "T2", "radiative_yield", "relaxes_to"), epath)
        state = _state_index(_require(re_, "state", epath), labels, f"{epath}.state")
        relaxes_to = re_.get("relaxes_to")
        if relaxes_to is not None:
            relaxes_to = _state_index(relaxes_to, labels, f"{epath}.relaxes_to")
        spec = ElectronicSpectroscopy(
            state=state,
            T2=parse_quantity(_require(re_, "T2", epath), TIME, f"{epath}.T2"),
            T1=parse_quantity(re_.get("T1", math.inf), TIME, f"{epath}.T1"),
            radiative_yield=_number(re_.get("radiative_yield", 0.0), f"{epath}.radiative_yield"),
            relaxes_to=relaxes_to,
        )
        for ch in electronic_rates(spec):
            ch.validate_against(model, epath)
            channels.append(ch)
    for i, rv in enumerate(raw.get("vibrational", [])):
        vpath = f"dissipation.vibrational[{i}]"
        _check_keys(rv, ("mode", "T1", "T2"), vpath)
        j = _mode_index(_require(rv, "mode", vpath), mlabels, f"{vpath}.mode")
        t2 = rv.get("T2")
        spec = VibrationalSpectroscopy(
            mode=j,
            T1=parse_quantity(_require(rv, "T1", vpath), TIME, f"{vpath}.T1"),
            T2=None if t2 is None else parse_quantity(t2, TIME, f"{vpath}.T2"),
        )
        channels.extend(vibrational_rates(spec, model.modes[j].frequency, temperature))
    seen = set()
    for ch in channels:
        key = (ch.kind, ch.target)
        if key in seen:
            raise ConfigError(path, f"channel {ch.label(model)} defined twice")
        seen.add(key)
    return tuple(channels)


# -- hardware ---------------------------------------------------------------

_HW_KEYS = (
    "name", "native", "usable", "unusable", "modes", "max", "ancilla_decay", "alpha", "pump",
    "max_sideband_strength", "coherence_time", "correlation_time", "recoil_rate", "magnetic",
    "voltage", "thresholds",
)


def _kind_table(raw, path, parse):
    _check_keys(raw, [k.value for k in ChannelKind], path)
    return {ChannelKind(k): parse(v, f"{path}.{k}") for k, v in raw.items()}


def _parse_hardware(raw, model):
    path = "hardware"
    _check_keys(raw, _HW_KEYS, path)
    kw = {"name": str(raw.get("name", ""))}
    kw["native_rates"] = _kind_table(raw.get("native", {}), "hardware.native", lambda v, p: parse_quantity(v, RATE, p))

    def _bool(v, p):
        if not isinstance(v, bool):
            raise ConfigError(p, "expected true/false")
        return v

    kw["usable"] = _kind_table(raw.get("usable", {}), "hardware.usable", _bool)
    unusable = raw.get("unusable", {})
    if not isinstance(unusable, dict):
        raise ConfigError("hardware.unusable", "expected a table of named rates")
    kw["unusable_rates"] = {k: parse_quantity(v, RATE, f"hardware.unusable.{k}") for k, v in unusable.items()}
    modes = {}
    for i, rm in enumerate(raw.get("modes", [])):
        mpath = f"hardware.modes[{i}]"
        _check_keys(rm, ("mode", "frequency", "lamb_dicke", "kappa", "axis"), mpath)
        j = _mode_index(_require(rm, "mode", mpath), list(model.mode_labels), f"{mpath}.mode")
        label = model.modes[j].label
        if label in modes:
            raise ConfigError(f"{mpath}.mode", f"trap mode for {label!r} given twice")
        modes[label] = TrapMode(
            frequency=parse_quantity(_require(rm, "frequency", mpath), FREQUENCY, f"{mpath}.frequency"),
            lamb_dicke=_number(rm.get("lamb_dicke", 0.1), f"{mpath}.lamb_dicke"),
            kappa=_number(rm.get("kappa", 1.0), f"{mpath}.kappa"),
            axis=str(rm.get("axis", "radial")),
        )
    kw["modes"] = modes
    rmax = raw.get("max", {})
    _check_keys(rmax, [t.value for t in TermType], "hardware.max")
    kw["max_strengths"] = {TermType(k): parse_quantity(v, FREQUENCY, f"hardware.max.{k}") for k, v in rmax.items()}
    for key, dim in (("ancilla_decay", FREQUENCY), ("coherence_time", TIME), ("correlation_time", TIME),
                     ("recoil_rate", RATE), ("max_sideband_strength", FREQUENCY)):
        if key in raw:
            kw[key] = parse_quantity(raw[key], dim, f"hardware.{key}")
    if "alpha" in raw:
        kw["alpha"] = _number(raw["alpha"], "hardware.alpha")
    if "pump" in raw:
        p = raw["pump"]
        _check_keys(p, ("decay_nl", "decay_ml", "detuning", "max_strength"), "hardware.pump")
        for key, field_ in (("decay_nl", "pump_decay_nl"), ("decay_ml", "pump_decay_ml"),
                            ("detuning", "pump_detuning"), ("max_strength", "max_pump_strength")):
            if key in p:
                kw[field_] = parse_quantity(p[key], FREQUENCY, f"hardware.pump.{key}")
    if "magnetic" in raw:
        mg = raw["magnetic"]
        mpath = "hardware.magnetic"
        _check_keys(mg, ("sensitivities", "field_per_current", "solenoid"), mpath)
        sens = _vector(_require(mg, "sensitivities", mpath), MAGNETIC_SENSITIVITY, f"{mpath}.sensitivities")
        if len(sens) != model.num_states:
            raise ConfigError(f"{mpath}.sensitivities", f"expected one sensitivity per state ({model.num_states})")
        if ("field_per_current" in mg) == ("solenoid" in mg):
            raise ConfigError(mpath, "give exactly one of 'field_per_current' or 'solenoid'")
        if "solenoid" in mg:
            sol = mg["solenoid"]
            _check_keys(sol, ("windings", "length"), f"{mpath}.solenoid")
            windings = _number(_require(sol, "windings", f"{mpath}.solenoid"), f"{mpath}.solenoid.windings")
            length = parse_quantity(_require(sol, "length", f"{mpath}.solenoid"), LENGTH, f"{mpath}.solenoid.length")
            dbdi = windings * VACUUM_PERMEABILITY / length
        else:
            dbdi = parse_quantity(mg["field_per_current"], FIELD_PER_CURRENT, f"{mpath}.field_per_current")
        kw["magnetic"] = MagneticConstants(sensitivities=tuple(sens), field_per_current=dbdi)
    if "voltage" in raw:
        v = raw["voltage"]
        _check_keys(v, ("radial_sensitivity", "axial_sensitivity"), "hardware.voltage")
        kw["voltage"] = VoltageConstants(
            radial_sensitivity=parse_quantity(v.get("radial_sensitivity", 0.0), VOLTAGE_SENSITIVITY,
                                              "hardware.voltage.radial_sensitivity"),
            axial_sensitivity=parse_quantity(v.get("axial_sensitivity", 0.0), VOLTAGE_SENSITIVITY,
                                             "hardware.voltage.axial_sensitivity"),
        )
    if "thresholds" in raw:
        t = raw["thresholds"]
        _check_keys(t, ("adiabatic", "sideband", "motional_narrowing", "global_spread"), "hardware.thresholds")
        kw["thresholds"] = Thresholds(**{k: _number(val, f"hardware.thresholds.{k}") for k, val in t.items()})
    return HardwareProfile(**kw)


# -- request ----------------------------------------------------------------

_REQ_KEYS = ("t_mol", "temperature", "dt", "tolerance", "trajectories", "seed", "leakage_threshold",
             "policy", "noise_convention", "horizon", "points", "initial_state")


def _parse_request(raw, model):
    path = "request"
    _check_keys(raw, _REQ_KEYS, path)
    kw = {
        "t_mol": parse_quantity(_require(raw, "t_mol", path), TIME, "request.t_mol"),
        "temperature": parse_quantity(raw.get("temperature", 0.0), TEMPERATURE, "request.temperature"),
    }
    if "dt" in raw:
        kw["dt"] = parse_quantity(raw["dt"], TIME, "request.dt")
    if "horizon" in raw:
        kw["horizon"] = parse_quantity(raw["horizon"], TIME, "request.horizon")
    for key in ("tolerance", "leakage_threshold"):
        if key in raw:
            kw[key] = parse_quantity(raw[key], DIMENSIONLESS, f"request.{key}")
    for key in ("trajectories", "seed", "points"):
        if key in raw:
            kw[key] = _int(raw[key], f"request.{key}", 0)
    for key in ("policy", "noise_convention"):
        if key in raw:
            kw[key] = str(raw[key])
    if kw.get("noise_convention", "ensemble") not in ("ensemble", "half"):
        raise ConfigError("request.noise_convention", "must be 'ensemble' or 'half'")
    if "initial_state" in raw:
        ist = raw["initial_state"]
        _check_keys(ist, ("electronic", "fock"), "request.initial_state")
        el = _state_index(ist.get("electronic", 0), list(model.state_labels), "request.initial_state.electronic")
        fock = ist.get("fock", [0] * len(model.modes))
        if not isinstance(fock, list) or len(fock) != len(model.modes):
            raise ConfigError("request.initial_state.fock", f"expected {len(model.modes)} occupations")
        for j, (n, m) in enumerate(zip(fock, model.modes)):
            if _int(n, f"request.initial_state.fock[{j}]", 0) >= m.fock:
                raise ConfigError(f"request.initial_state.fock[{j}]", "occupation beyond truncation")
        kw["initial_state"] = InitialState(electronic=el, fock=tuple(fock))
    else:
        kw["initial_state"] = InitialState(electronic=0, fock=(0,) * len(model.modes))
    return SimulationRequest(**kw)


# -- entry points -----------------------------------------------------------


def problem_from_dict(doc):
    _check_keys(doc, ("schema", "molecule", "dissipation", "hardware", "request"), "")
    if "schema" in doc and doc["schema"] != CONFIG_SCHEMA:
        raise ConfigError("schema", f"unsupported schema {doc['schema']!r}, expected {CONFIG_SCHEMA!r}")
    model = _parse_molecule(_require(doc, "molecule", ""))
    request = _parse_request(_require(doc, "request", ""), model)
    channels = _parse_dissipation(doc.get("dissipation", {}), model, request.temperature)
    hardware = _parse_hardware(doc.get("hardware", {}), model)
    return Problem(model=model, channels=channels, hardware=hardware, request=request)


def parse_model(text):
    """Parse a TOML configuration document into a :class:`Problem`."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("", f"malformed TOML: {exc}") from None
    return problem_from_dict(doc)


def load_config(path):
    return parse_model(Path(path).read_text())


def problem_to_dict(problem: Problem):
    """Canonical (bare-number, SI/rad-s) document for a problem."""
    model, hw, req = problem.model, problem.hardware, problem.request
    c0 = np.asarray(model.c0)
    mol = {
        "name": model.name,
        "num_states": model.num_states,
        "state_labels": list(model.state_labels),
        "c0": [[float(x) for x in row] for row in c0.real],
        "max_dimension": model.max_dimension,
    }
    if np.any(c0.imag != 0):
        mol["c0_imag"] = [[float(x) for x in row] for row in c0.imag]
    modes = []
    for j, m in enumerate(model.modes):
        rm = {"label": m.label, "frequency": m.frequency, "kind": m.kind.value, "fock": m.fock}
        if m.kind is ModeKind.TUNING and any(k[0] == j for k in model.tuning):
            rm["tuning"] = [model.tuning.get((j, n), 0.0) for n in range(model.num_states)]
        pairs = [(k, v) for k, v in sorted(model.coupling.items()) if k[0] == j]
        if pairs:
            rm["coupling"] = [{"states": [n, mm], "value": v} for (_, n, mm), v in pairs]
        modes.append(rm)
    mol["modes"] = modes
    chans = []
    for ch in problem.channels:
        rc = {"kind": ch.kind.value, "rate": ch.gamma_mol}
        if ch.kind is ChannelKind.ELECTRONIC_RELAXATION:
            rc["states"] = list(ch.target)
        elif ch.kind is ChannelKind.ELEC_DEPHASING:
            rc["state"] = ch.target[0]
        else:
            rc["mode"] = model.modes[ch.target[0]].label
        chans.append(rc)
    hwd = {
        "name": hw.name,
        "native": {k.value: v for k, v in hw.native_rates.items()},
        "usable": {k.value: v for k, v in hw.usable.items()},
        "unusable": dict(hw.unusable_rates),
        "modes": [
            {"mode": label, "frequency": tm.frequency, "lamb_dicke": tm.lamb_dicke, "kappa": tm.kappa, "axis": tm.axis}
            for label, tm in hw.modes.items()
        ],
        "max": {k.value: v for k, v in hw.max_strengths.items()},
        "ancilla_decay": hw.ancilla_decay,
        "alpha": hw.alpha,
        "pump": {"decay_nl": hw.pump_decay_nl, "decay_ml": hw.pump_decay_ml, "detuning": hw.pump_detuning},
        "correlation_time": hw.correlation_time,
        "recoil_rate": hw.recoil_rate,
        "thresholds": {
            "adiabatic": hw.thresholds.adiabatic,
            "sideband": hw.thresholds.sideband,
            "motional_narrowing": hw.thresholds.motional_narrowing,
            "global_spread": hw.thresholds.global_spread,
        },
    }
    if hw.max_pump_strength is not None:
        hwd["pump"]["max_strength"] = hw.max_pump_strength
    if hw.max_sideband_strength is not None:
        hwd["max_sideband_strength"] = hw.max_sideband_strength
    if hw.coherence_time is not None:
        hwd["coherence_time"] = hw.coherence_time
    if hw.magnetic is not None:
        hwd["magnetic"] = {
            "sensitivities": list(hw.magnetic.sensitivities),
            "field_per_current": hw.magnetic.field_per_current,
        }
    if hw.voltage is not None:
        hwd["voltage"] = {
            "radial_sensitivity": hw.voltage.radial_sensitivity,
            "axial_sensitivity": hw.voltage.axial_sensitivity,
        }
    reqd = {
        "t_mol": req.t_mol,
        "temperature": req.temperature,
        "tolerance": req.tolerance,
        "trajectories": req.trajectories,
        "seed": req.seed,
        "leakage_threshold": req.leakage_threshold,
        "policy": req.policy,
        "noise_convention": req.noise_convention.value,
        "points": req.points,
        "initial_state": {"electronic": req.initial_state.electronic, "fock": list(req.initial_state.fock)},
    }
    if req.dt is not None:
        reqd["dt"] = req.dt
    if req.horizon is not None:
        reqd["horizon"] = req.horizon
    return {
        "schema": CONFIG_SCHEMA,
        "molecule": mol,
        "dissipation": {"channels": chans},
        "hardware": hwd,
        "request": reqd,
    }


def dump_config(problem: Problem):
    """Serialize to a canonical TOML document (bare numbers in canonical units)."""
    return tomli_w.dumps(problem_to_dict(problem))
