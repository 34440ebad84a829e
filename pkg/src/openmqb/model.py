"""Domain types: the vibronic model, its dissipation channels, the hardware
profile and the simulation request.

All instances are immutable after construction. Numerical arrays are stored
with the writeable flag cleared.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .units import TWO_PI


class ModeKind(str, enum.Enum):
    TUNING = "tuning"
    COUPLING = "coupling"
    SPECTATOR = "spectator"


class ChannelKind(str, enum.Enum):
    ELECTRONIC_RELAXATION = "elec_relaxation"
    VIB_HEATING = "vib_heating"
    VIB_COOLING = "vib_cooling"
    ELEC_DEPHASING = "elec_dephasing"
    VIB_DEPHASING = "vib_dephasing"

    @property
    def on_mode(self):
        return self in (ChannelKind.VIB_HEATING, ChannelKind.VIB_COOLING, ChannelKind.VIB_DEPHASING)

    @property
    def arity(self):
        return 2 if self is ChannelKind.ELECTRONIC_RELAXATION else 1

    @property
    def operator_template(self):
        return _TEMPLATES[self]


_TEMPLATES = {
    ChannelKind.ELECTRONIC_RELAXATION: "|n><m|",
    ChannelKind.VIB_HEATING: "a_j^dag",
    ChannelKind.VIB_COOLING: "a_j",
    ChannelKind.ELEC_DEPHASING: "|n><n|",
    ChannelKind.VIB_DEPHASING: "a_j^dag a_j",
}


class TermType(str, enum.Enum):
    """Hamiltonian term families that share one hardware strength limit."""

    ELECTRONIC_COUPLING = "electronic_coupling"
    TUNING = "tuning"
    VIBRONIC_COUPLING = "vibronic_coupling"


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Mode:
    label: str
    frequency: float  # nu_mol, rad/s
    kind: ModeKind = ModeKind.TUNING
    fock: int = 8

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        if not self.frequency > 0:
            raise ConfigError(f"molecule.modes[{self.label}].frequency", "must be positive")
        if int(self.fock) != self.fock or self.fock < 2:
            raise ConfigError(f"molecule.modes[{self.label}].fock", "truncation must be an integer >= 2")


@dataclass(frozen=True)
class LVCModel:
    """Linear vibronic coupling model.

    ``tuning`` maps ``(mode, state) -> c_j^(n)`` and ``coupling`` maps
    ``(mode, n, m) -> c_j^(n,m)`` with ``n < m``; the ``(m, n)`` element is the
    same real constant. All values in rad/s.
    """

    num_states: int
    modes: tuple
    c0: np.ndarray
    tuning: dict = field(default_factory=dict)
    coupling: dict = field(default_factory=dict)
    state_labels: tuple = ()
    name: str = ""
    max_dimension: int = 2048

    def __post_init__(self):
        d = self.num_states
        if int(d) != d or d < 2:
            raise ConfigError("molecule.num_states", "need at least two electronic states")
        object.__setattr__(self, "modes", tuple(self.modes))
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ConfigError("molecule.modes", "mode labels must be unique")
        c0 = np.asarray(self.c0, dtype=complex)
        if c0.shape != (d, d):
            raise ConfigError("molecule.c0", f"expected a {d}x{d} matrix, got shape {c0.shape}")
        scale = max(np.abs(c0).max(), np.finfo(float).tiny)
        if np.abs(c0 - c0.conj().T).max() > 1e-12 * scale:
            raise ConfigError("molecule.c0", "matrix is not Hermitian")
        object.__setattr__(self, "c0", _frozen(c0, complex))
        if not self.state_labels:
            object.__setattr__(self, "state_labels", tuple(str(n) for n in range(d)))
        elif len(self.state_labels) != d:
            raise ConfigError("molecule.state_labels", f"expected {d} labels")
        else:
            object.__setattr__(self, "state_labels", tuple(self.state_labels))

        tuning = {}
        for (j, n), value in dict(self.tuning).items():
            path = f"molecule.modes[{j}].tuning"
            if not 0 <= j < len(self.modes) or self.modes[j].kind is not ModeKind.TUNING:
                raise ConfigError(path, "tuning constants are only allowed on tuning modes")
            if not 0 <= n < d:
                raise ConfigError(path, f"state index {n} out of range")
            tuning[(int(j), int(n))] = float(value)
        coupling = {}
        for (j, n, m), value in dict(self.coupling).items():
            path = f"molecule.modes[{j}].coupling"
            if not 0 <= j < len(self.modes) or self.modes[j].kind is not ModeKind.COUPLING:
                raise ConfigError(path, "vibronic couplings are only allowed on coupling modes")
            if n == m or not (0 <= n < d and 0 <= m < d):
                raise ConfigError(path, f"invalid state pair ({n}, {m})")
            key = (int(j), min(n, m), max(n, m))
            if key in coupling:
                raise ConfigError(path, f"state pair ({n}, {m}) given twice")
            coupling[key] = float(value)
        object.__setattr__(self, "tuning", tuning)
        object.__setattr__(self, "coupling", coupling)

    @property
    def mode_labels(self):
        return tuple(m.label for m in self.modes)

    def mode_index(self, label):
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode {label!r}") from None

    @property
    def fock_dims(self):
        return tuple(int(m.fock) for m in self.modes)

    @property
    def energies(self):
        return np.real(np.diag(self.c0))

    def largest_strengths(self):
        """Largest molecular strength of each Hamiltonian term family.

        Strengths are the prefactors appearing in front of the operator
        products, i.e. ``|c0(n,m)|`` and ``|c|/sqrt(2)`` for the vibronic terms.
        """
        out = {}
        off = np.abs(self.c0 - np.diag(np.diag(self.c0)))
        if off.max() > 0:
            out[TermType.ELECTRONIC_COUPLING] = float(off.max())
        if self.tuning:
            values = [abs(v) for v in self.tuning.values()]
            if max(values) > 0:
                out[TermType.TUNING] = max(values) / math.sqrt(2)
        if self.coupling:
            values = [abs(v) for v in self.coupling.values()]
            if max(values) > 0:
                out[TermType.VIBRONIC_COUPLING] = max(values) / math.sqrt(2)
        return out


@dataclass(frozen=True)
class DissipationChannel:
    """One Lindblad channel. ``target`` is ``(n, m)`` for relaxation
    ``|n><m|`` (m the higher state), ``(n,)`` for electronic dephasing and
    ``(j,)`` for the vibrational kinds."""

    kind: ChannelKind
    target: tuple
    gamma_mol: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        object.__setattr__(self, "target", tuple(int(t) for t in self.target))
        if len(self.target) != self.kind.arity:
            raise ConfigError("dissipation", f"{self.kind.value} needs a target of arity {self.kind.arity}")
        if not self.gamma_mol >= 0 or math.isnan(self.gamma_mol):
            raise ConfigError("dissipation", f"{self.kind.value} rate must be non-negative")

    def validate_against(self, model, path="dissipation"):
        if self.kind.on_mode:
            (j,) = self.target
            if not 0 <= j < len(model.modes):
                raise ConfigError(path, f"mode index {j} out of range")
            return
        d = model.num_states
        for t in self.target:
            if not 0 <= t < d:
                raise ConfigError(path, f"state index {t} out of range")
        if self.kind is ChannelKind.ELECTRONIC_RELAXATION:
            n, m = self.target
            e = model.energies
            if not e[m] > e[n]:
                raise ConfigError(
                    path, f"relaxation |{n}><{m}| requires energy of state {m} above state {n}"
                )

    def label(self, model=None):
        if self.kind.on_mode:
            name = model.modes[self.target[0]].label if model is not None else str(self.target[0])
            return f"{self.kind.value}[{name}]"
        names = [model.state_labels[t] if model is not None else str(t) for t in self.target]
        return f"{self.kind.value}[{','.join(names)}]"


@dataclass(frozen=True)
class TrapMode:
    """A simulator motional mode that carries one molecular mode."""

    frequency: float  # nu_j, rad/s (lab frame)
    lamb_dicke: float = 0.1
    kappa: float = 1.0
    axis: str = "radial"

    def __post_init__(self):
        if self.frequency <= 0 or self.lamb_dicke < 0:
            raise ConfigError("hardware.modes", "frequency must be positive and eta non-negative")
        if self.axis not in ("radial", "axial"):
            raise ConfigError("hardware.modes.axis", "must be 'radial' or 'axial'")


@dataclass(frozen=True)
class MagneticConstants:
    sensitivities: tuple  # d omega_n / dB per state, rad/s/T
    field_per_current: float  # dB/dI, T/A


@dataclass(frozen=True)
class VoltageConstants:
    radial_sensitivity: float = 0.0  # d nu_r0 / dV_RF, rad/s/V
    axial_sensitivity: float = 0.0  # d nu_z0 / dV_DC, rad/s/V


@dataclass(frozen=True)
class Thresholds:
    adiabatic: float = 0.1  # Omega_ml / Gamma_nl warning level
    sideband: float = 0.1  # Omega / Gamma_pq warning level
    motional_narrowing: float = 0.1  # tau_c * gamma limit
    global_spread: float = 0.2


@dataclass(frozen=True)
class HardwareProfile:
    native_rates: dict = field(default_factory=dict)
    usable: dict = field(default_factory=dict)
    unusable_rates: dict = field(default_factory=dict)
    modes: dict = field(default_factory=dict)
    max_strengths: dict = field(default_factory=dict)
    ancilla_decay: float = TWO_PI * 20e6
    alpha: float = 0.4
    pump_decay_nl: float = TWO_PI * 20e6
    pump_decay_ml: float = 0.0
    pump_detuning: float = 0.0
    max_pump_strength: Optional[float] = None
    max_sideband_strength: Optional[float] = None
    coherence_time: Optional[float] = None
    correlation_time: float = 10e-6
    recoil_rate: float = 0.0
    magnetic: Optional[MagneticConstants] = None
    voltage: Optional[VoltageConstants] = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    name: str = ""

    def __post_init__(self):
        natives = {ChannelKind(k): float(v) for k, v in dict(self.native_rates).items()}
        for k, v in natives.items():
            if not v >= 0:
                raise ConfigError(f"hardware.native.{k.value}", "rate must be non-negative")
        object.__setattr__(self, "native_rates", natives)
        object.__setattr__(self, "usable", {ChannelKind(k): bool(v) for k, v in dict(self.usable).items()})
        for k, v in dict(self.unusable_rates).items():
            if not v >= 0:
                raise ConfigError(f"hardware.unusable.{k}", "rate must be non-negative")
        maxima = {TermType(k): float(v) for k, v in dict(self.max_strengths).items()}
        for k, v in maxima.items():
            if not v > 0:
                raise ConfigError(f"hardware.max.{k.value}", "hardware maxima must be positive")
        object.__setattr__(self, "max_strengths", maxima)
        if not 0 < self.alpha <= 1:
            raise ConfigError("hardware.alpha", "angular factor must lie in (0, 1]")
        for name in ("ancilla_decay", "pump_decay_nl", "pump_decay_ml", "recoil_rate", "correlation_time"):
            if getattr(self, name) < 0:
                raise ConfigError(f"hardware.{name}", "must be non-negative")
        if self.coherence_time is not None and not self.coherence_time > 0:
            raise ConfigError("hardware.coherence_time", "must be positive")

    def native(self, kind):
        return self.native_rates.get(ChannelKind(kind), 0.0)

    def is_usable(self, kind):
        return self.usable.get(ChannelKind(kind), True)


class NoiseConvention(str, enum.Enum):
    """Relation between classical frequency noise and the Lindblad rate.

    ``ENSEMBLE``: gamma = 2 <dPhi^2> tau_c, the rate of D[O] that an
    Ornstein-Uhlenbeck fluctuation H = dPhi(t) O produces in the ensemble
    average (motional-narrowing limit).
    ``HALF``: gamma = <dPhi^2> tau_c / 2, an alternative closed form;
    kept to reproduce published control tables.
    """

    ENSEMBLE = "ensemble"
    HALF = "half"

    @property
    def prefactor(self):
        return 2.0 if self is NoiseConvention.ENSEMBLE else 0.5


@dataclass(frozen=True)
class InitialState:
    electronic: int = 0
    fock: tuple = ()


@dataclass(frozen=True)
class SimulationRequest:
    t_mol: float
    temperature: float = 0.0
    dt: Optional[float] = None
    tolerance: float = 1e-10
    trajectories: int = 1000
    seed: int = 0
    leakage_threshold: float = 1e-3
    policy: str = "min-injection"
    noise_convention: NoiseConvention = NoiseConvention.ENSEMBLE
    horizon: Optional[float] = None
    points: int = 51
    initial_state: InitialState = field(default_factory=InitialState)

    def __post_init__(self):
        if not self.t_mol > 0:
            raise ConfigError("request.t_mol", "must be positive")
        if not self.temperature >= 0:
            raise ConfigError("request.temperature", "must be non-negative")
        if not self.tolerance > 0:
            raise ConfigError("request.tolerance", "must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("request.dt", "must be positive")
        if self.trajectories < 1:
            raise ConfigError("request.trajectories", "must be at least 1")
        if self.policy not in ("min-injection", "max-duration"):
            raise ConfigError("request.policy", "must be 'min-injection' or 'max-duration'")
        object.__setattr__(self, "noise_convention", NoiseConvention(self.noise_convention))
        if self.horizon is not None and not 0 <= self.horizon <= self.t_mol:
            raise ConfigError("request.horizon", "must lie in [0, t_mol]")
        if self.points < 2:
            raise ConfigError("request.points", "need at least two time points")
