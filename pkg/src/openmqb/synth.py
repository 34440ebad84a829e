"""Control-parameter synthesis: invert the hardware rate formulas.

Every plan stores the parameters it would program together with the rate a
forward evaluation of the same formula yields (``achieved``), so that a
plan can be audited without re-running the synthesis.

Noise rates follow ``gamma = c <dPhi^2> tau_c`` with ``c`` fixed by a
:class:`~openmqb.model.NoiseConvention` (2 for the ensemble-average rate of
D[O], 1/2 for the published closed form).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InfeasibleError
from .model import HardwareProfile, NoiseConvention, Thresholds
from .units import TWO_PI

log = logging.getLogger(__name__)


def _convention(c):
    return NoiseConvention(c)


# -- forward formulas -------------------------------------------------------


def pump_rate(omega, decay_nl, decay_ml=0.0, detuning=0.0):
    """Adiabatically eliminated optical-pumping rate |m> -> |l> -> |n>."""
    return omega**2 * decay_nl / ((decay_nl + decay_ml) ** 2 + 4.0 * detuning**2)


def sideband_coefficient(sign, eta, gamma_a, nu, alpha, detuning=None):
    """gamma / Omega^2 for one tone; ``sign`` is -1 (red, cooling) or +1 (blue, heating).

    The tone sits at Delta = sign * nu unless ``detuning`` is given.
    """
    delta = sign * nu if detuning is None else detuning
    resonant = 1.0 / (gamma_a**2 + 4.0 * (delta - sign * nu) ** 2)
    carrier = alpha / (gamma_a**2 + 4.0 * delta**2)
    return eta**2 * gamma_a * (resonant + carrier)


def sideband_rate(omega, sign, eta, gamma_a, nu, alpha, detuning=None):
    return omega**2 * sideband_coefficient(sign, eta, gamma_a, nu, alpha, detuning)


def noise_rate(variance, tau_c, convention=NoiseConvention.ENSEMBLE):
    return _convention(convention).prefactor * variance * tau_c


def recoil_heating_estimate(gamma_prime, eta):
    """Motional heating from spontaneous-emission recoil during pumping: Gamma' eta^2."""
    if gamma_prime < 0 or eta < 0:
        raise ConfigError("recoil", "inputs must be non-negative")
    return gamma_prime * eta * eta


# -- plans ------------------------------------------------------------------


@dataclass(frozen=True)
class PumpPlan:
    label: str
    target: float
    omega: float
    decay_nl: float
    decay_ml: float
    detuning: float
    achieved: float
    validity: float  # Omega_ml / Gamma_nl
    recoil_heating: float
    warnings: tuple = ()


@dataclass(frozen=True)
class SidebandPlan:
    mode: str
    target_minus: float
    target_plus: float
    omega_minus: float
    omega_plus: float
    detuning_minus: float
    detuning_plus: float
    eta: float
    gamma_a: float
    alpha: float
    nu: float
    achieved_minus: float
    achieved_plus: float
    zeta: Optional[float]
    validity_minus: float
    validity_plus: float
    warnings: tuple = ()


@dataclass(frozen=True)
class NoisePlan:
    label: str
    target_kind: str  # "mode" | "state"
    index: int
    target: float
    variance: float  # rad^2/s^2
    tau_c: float
    convention: str
    achieved: float
    narrowing: float  # tau_c * gamma
    valid: bool = True
    warnings: tuple = ()

    @property
    def rms(self):
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class MagneticPlan:
    states: tuple
    labels: tuple
    sensitivities: tuple  # d omega_n / dB, rad/s/T
    field_per_current: float
    targets: tuple
    current_variance: float  # A^2
    tau_c: float
    convention: str
    achieved: tuple
    relative_error: tuple
    spread_flag: bool
    warnings: tuple = ()


@dataclass(frozen=True)
class VoltagePlan:
    modes: tuple
    labels: tuple
    axes: tuple
    kappas: tuple
    radial_sensitivity: float  # d nu_r0 / dV_RF, rad/s/V
    axial_sensitivity: float
    targets: tuple
    rf_variance: float  # V^2
    dc_variance: float
    tau_c: float
    convention: str
    achieved: tuple
    relative_error: tuple
    spread_flag: bool
    warnings: tuple = ()

    def frequency_variance(self, i):
        s = self.radial_sensitivity if self.axes[i] == "radial" else self.axial_sensitivity
        v = self.rf_variance if self.axes[i] == "radial" else self.dc_variance
        return (self.kappas[i] * s) ** 2 * v


@dataclass(frozen=True)
class GlobalSidebandPlan:
    modes: tuple
    omega_minus: float
    omega_plus: float
    targets_minus: tuple
    targets_plus: tuple
    achieved_minus: tuple
    achieved_plus: tuple
    max_relative_error: float
    warnings: tuple = ()


# -- synthesis --------------------------------------------------------------


def synth_pump(target, decay_nl, decay_ml=0.0, detuning=0.0, *, label="", max_strength=None,
               recoil_rate=0.0, eta=0.0, threshold=0.1):
    """Pump strength Omega_ml achieving ``target`` (1/s)."""
    if not decay_nl > 0:
        raise ConfigError("hardware.pump.decay_nl", "must be positive")
    if not target >= 0:
        raise ConfigError("target", "pump target must be non-negative")
    omega = math.sqrt(target * ((decay_nl + decay_ml) ** 2 + 4.0 * detuning**2) / decay_nl)
    ratio = omega / decay_nl
    warnings = []
    if ratio > 1.0:
        raise InfeasibleError(
            f"pump {label}: Omega_ml/Gamma_nl = {ratio:.3g} > 1, adiabatic elimination invalid", "adiabatic"
        )
    if ratio > threshold:
        warnings.append(f"Omega_ml/Gamma_nl = {ratio:.3g} exceeds {threshold:g}")
    if max_strength is not None and omega > max_strength * (1 + 1e-12):
        raise InfeasibleError(f"pump {label}: Omega_ml = {omega:.4g} rad/s exceeds limit {max_strength:.4g}",
                              "max_pump_strength")
    recoil = recoil_heating_estimate(recoil_rate, eta) if target > 0 else 0.0
    if recoil > 0:
        warnings.append(f"recoil heating ~{recoil:.3g} s^-1 on shared modes")
    if target > 0:
        warnings.append("check leakage out of the pump cycle (repump if needed)")
    return PumpPlan(
        label=label,
        target=target,
        omega=omega,
        decay_nl=decay_nl,
        decay_ml=decay_ml,
        detuning=detuning,
        achieved=pump_rate(omega, decay_nl, decay_ml, detuning),
        validity=ratio,
        recoil_heating=recoil,
        warnings=tuple(warnings),
    )


def thermal_heating_target(cooling_inj, zeta2, native_cooling=0.0, native_heating=None):
    """Injected heating that restores detailed balance given injected cooling."""
    if native_heating is None:
        native_heating = native_cooling
    return zeta2 * (cooling_inj + native_cooling) - native_heating


def synth_sideband(mode, hardware: HardwareProfile, target_minus, target_plus=None, *, zeta2=None,
                   native_minus=0.0, native_plus=None):
    """Red/blue tone strengths for one mode.

    Give ``target_plus`` explicitly or ``zeta2`` for thermal targeting
    (then ``target_plus`` follows from detailed balance including native
    rates). A negative thermal heating target means native cooling already
    exceeds what the environment needs; the blue tone is switched off and a
    warning recorded.
    """
    if mode not in hardware.modes:
        raise ConfigError(f"hardware.modes[{mode}]", "no trap mode configured for this molecular mode")
    tm = hardware.modes[mode]
    eta, gam, nu, alpha = tm.lamb_dicke, hardware.ancilla_decay, tm.frequency, hardware.alpha
    warnings = []
    if target_minus < 0:
        raise ConfigError("target_minus", "must be non-negative")
    zeta = None
    if target_plus is None:
        if zeta2 is None:
            raise ConfigError("target_plus", "give a heating target or a Boltzmann factor")
        zeta = math.sqrt(zeta2)
        target_plus = thermal_heating_target(target_minus, zeta2, native_minus, native_plus)
        if target_plus < 0:
            warnings.append(
                f"native cooling exceeds thermal heating need by {-target_plus:.3g} s^-1; blue tone off"
            )
            target_plus = 0.0
    elif target_plus < 0:
        raise ConfigError("target_plus", "must be non-negative")
    if (target_minus > 0 or target_plus > 0) and not (eta > 0 and gam > 0):
        raise InfeasibleError(f"sideband on {mode}: need eta > 0 and ancilla decay > 0", "sideband")
    omegas = []
    for sign, target in ((-1, target_minus), (+1, target_plus)):
        k = sideband_coefficient(sign, eta, gam, nu, alpha) if target > 0 else 1.0
        omegas.append(math.sqrt(target / k))
    # both tones share one coefficient, so without native rates Omega_+ = zeta Omega_-
    om, op = omegas
    th = hardware.thresholds.sideband
    for name, om_ in (("Omega_-", om), ("Omega_+", op)):
        if gam > 0 and om_ / gam > th:
            warnings.append(f"{name}/Gamma = {om_ / gam:.3g} exceeds {th:g}")
        if hardware.max_sideband_strength is not None and om_ > hardware.max_sideband_strength * (1 + 1e-12):
            raise InfeasibleError(
                f"sideband on {mode}: {name} = {om_:.4g} rad/s exceeds limit {hardware.max_sideband_strength:.4g}",
                "max_sideband_strength",
            )
    return SidebandPlan(
        mode=mode,
        target_minus=target_minus,
        target_plus=target_plus,
        omega_minus=om,
        omega_plus=op,
        detuning_minus=-nu,
        detuning_plus=nu,
        eta=eta,
        gamma_a=gam,
        alpha=alpha,
        nu=nu,
        achieved_minus=sideband_rate(om, -1, eta, gam, nu, alpha),
        achieved_plus=sideband_rate(op, +1, eta, gam, nu, alpha),
        zeta=zeta,
        validity_minus=om / gam if gam > 0 else 0.0,
        validity_plus=op / gam if gam > 0 else 0.0,
        warnings=tuple(warnings),
    )


def synth_global_sideband(modes, hardware: HardwareProfile, targets_minus, targets_plus, tolerance=0.15):
    """One broadband tone pair shared by all ``modes``.

    The common Omega^2 is the geometric mean of target/coefficient over modes,
    which balances the worst over- and under-shoot.
    """
    modes = tuple(modes)
    out = {}
    for sign, targets in ((-1, targets_minus), (+1, targets_plus)):
        ks, need = [], []
        for m, t in zip(modes, targets):
            tm = hardware.modes[m]
            ks.append(sideband_coefficient(sign, tm.lamb_dicke, hardware.ancilla_decay, tm.frequency, hardware.alpha))
            need.append(t)
        ks, need = np.array(ks), np.array(need, dtype=float)
        pos = need > 0
        om2 = float(np.exp(np.mean(np.log(need[pos] / ks[pos])))) if pos.any() else 0.0
        out[sign] = (math.sqrt(om2), tuple(float(x) for x in om2 * ks))
    errs = []
    for targets, (_, ach) in ((targets_minus, out[-1]), (targets_plus, out[+1])):
        for t, a in zip(targets, ach):
            if t > 0:
                errs.append(abs(a - t) / t)
            elif a > 0:
                errs.append(math.inf)
    max_err = max(errs, default=0.0)
    warnings = () if max_err <= tolerance else (
        f"global tone misses a per-mode target by {100 * max_err:.1f}% (> {100 * tolerance:.0f}%)",)
    return GlobalSidebandPlan(
        modes=modes,
        omega_minus=out[-1][0],
        omega_plus=out[+1][0],
        targets_minus=tuple(targets_minus),
        targets_plus=tuple(targets_plus),
        achieved_minus=out[-1][1],
        achieved_plus=out[+1][1],
        max_relative_error=max_err,
        warnings=warnings,
    )


def _narrowing_check(gamma, tau_c, threshold, what, strict):
    x = tau_c * gamma
    if x > threshold:
        msg = (f"{what}: tau_c * gamma = {x:.3g} > {threshold:g} breaks motional narrowing; "
               f"use tau_c <= {threshold / gamma:.3g} s")
        if strict:
            raise InfeasibleError(msg, "motional_narrowing")
        return x, False, (msg,)
    return x, True, ()


def synth_dephasing_noise(target, tau_c, *, target_kind="state", index=0, label="",
                          convention=NoiseConvention.ENSEMBLE, threshold=0.1, strict=True):
    """Noise variance that produces dephasing ``target`` at correlation time ``tau_c``."""
    convention = _convention(convention)
    if target_kind not in ("state", "mode"):
        raise ConfigError("target_kind", "must be 'state' or 'mode'")
    if not target >= 0:
        raise ConfigError("target", "dephasing target must be non-negative")
    if not tau_c > 0:
        raise ConfigError("hardware.correlation_time", "must be positive")
    variance = target / (convention.prefactor * tau_c)
    x, valid, warnings = _narrowing_check(target, tau_c, threshold, label or "noise", strict)
    return NoisePlan(
        label=label,
        target_kind=target_kind,
        index=int(index),
        target=target,
        variance=variance,
        tau_c=tau_c,
        convention=convention.value,
        achieved=noise_rate(variance, tau_c, convention),
        narrowing=x,
        valid=valid,
        warnings=warnings,
    )


def _global_fit(coeffs, targets, what):
    """Variance meeting the largest target exactly; returns (variance, achieved, rel_err)."""
    coeffs = np.asarray(coeffs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    for c, t, w in zip(coeffs, targets, what):
        if t > 0 and c == 0:
            raise InfeasibleError(f"{w} has zero sensitivity and cannot be served by the global knob", "sensitivity")
    if not (targets > 0).any():
        return 0.0, np.zeros_like(targets), np.zeros_like(targets)
    k = int(np.argmax(targets))
    variance = targets[k] / coeffs[k]
    achieved = variance * coeffs
    rel = np.where(targets > 0, np.abs(achieved - targets) / np.where(targets > 0, targets, 1.0),
                   np.where(achieved > 0, np.inf, 0.0))
    return float(variance), achieved, rel


def synth_global_magnetic(targets, magnetic, tau_c, *, states=None, labels=None,
                          convention=NoiseConvention.ENSEMBLE, thresholds=Thresholds(), strict=True):
    """Current-noise variance for global electronic dephasing through the bias field.

    ``targets`` lists gamma_e,n per state in ``states`` (default all states).
    """
    convention = _convention(convention)
    sens = np.asarray(magnetic.sensitivities, dtype=float)
    states = tuple(range(len(sens))) if states is None else tuple(states)
    labels = tuple(str(s) for s in states) if labels is None else tuple(labels)
    if len(targets) != len(states):
        raise ConfigError("targets", "one target per state")
    if not np.any(sens[list(states)] != 0):
        raise InfeasibleError("no state has a nonzero field sensitivity", "sensitivity")
    coeffs = [convention.prefactor * (sens[n] * magnetic.field_per_current) ** 2 * tau_c for n in states]
    variance, achieved, rel = _global_fit(coeffs, targets, [f"state {l}" for l in labels])
    warnings = ["all states share one current noise: fluctuations are fully correlated, so pairwise "
                "coherence decay differs from independent per-state channels"]
    x, _, w = _narrowing_check(max(targets, default=0.0), tau_c, thresholds.motional_narrowing, "magnetic", strict)
    warnings.extend(w)
    spread = bool(np.any(rel > thresholds.global_spread))
    if spread:
        warnings.append(f"per-state rates deviate from targets by up to {100 * float(np.max(rel)):.1f}%")
    return MagneticPlan(
        states=states,
        labels=labels,
        sensitivities=tuple(float(s) for s in sens[list(states)]),
        field_per_current=magnetic.field_per_current,
        targets=tuple(float(t) for t in targets),
        current_variance=variance,
        tau_c=tau_c,
        convention=convention.value,
        achieved=tuple(float(a) for a in achieved),
        relative_error=tuple(float(r) for r in rel),
        spread_flag=spread,
        warnings=tuple(warnings),
    )


def synth_global_voltage(targets, voltage, modes, tau_c, *, labels=None, axes=None, kappas=None,
                         convention=NoiseConvention.ENSEMBLE, thresholds=Thresholds(), strict=True):
    """RF/DC voltage-noise variances for global vibrational dephasing.

    Radial modes share the RF knob and axial modes the DC knob; each knob is
    set by the largest target among its modes.
    """
    convention = _convention(convention)
    modes = tuple(modes)
    labels = tuple(str(m) for m in modes) if labels is None else tuple(labels)
    axes = tuple(axes)
    kappas = tuple(float(k) for k in kappas)
    targets = np.asarray(targets, dtype=float)
    achieved = np.zeros(len(modes))
    rel = np.zeros(len(modes))
    variances = {}
    for axis, sens in (("radial", voltage.radial_sensitivity), ("axial", voltage.axial_sensitivity)):
        idx = [i for i, a in enumerate(axes) if a == axis]
        if not idx:
            variances[axis] = 0.0
            continue
        coeffs = [convention.prefactor * (kappas[i] * sens) ** 2 * tau_c for i in idx]
        v, a, r = _global_fit(coeffs, targets[idx], [f"{axis} mode {labels[i]}" for i in idx])
        variances[axis] = v
        achieved[idx] = a
        rel[idx] = r
    warnings = ["modes on one axis share a voltage noise: fluctuations are fully correlated across them"]
    _, _, w = _narrowing_check(float(targets.max(initial=0.0)), tau_c, thresholds.motional_narrowing,
                               "voltage", strict)
    warnings.extend(w)
    spread = bool(np.any(rel > thresholds.global_spread))
    if spread:
        warnings.append(f"per-mode rates deviate from targets by up to {100 * float(np.max(rel)):.1f}%")
    return VoltagePlan(
        modes=modes,
        labels=labels,
        axes=axes,
        kappas=kappas,
        radial_sensitivity=voltage.radial_sensitivity,
        axial_sensitivity=voltage.axial_sensitivity,
        targets=tuple(float(t) for t in targets),
        rf_variance=variances["radial"],
        dc_variance=variances["axial"],
        tau_c=tau_c,
        convention=convention.value,
        achieved=tuple(float(a) for a in achieved),
        relative_error=tuple(float(r) for r in rel),
        spread_flag=spread,
        warnings=tuple(warnings),
    )


# -- serialisation and reports ---------------------------------------------

PLAN_TYPES = {
    "pump": PumpPlan,
    "sideband": SidebandPlan,
    "noise": NoisePlan,
    "magnetic": MagneticPlan,
    "voltage": VoltagePlan,
    "global_sideband": GlobalSidebandPlan,
}


def plan_to_dict(plan):
    d = asdict(plan)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def plan_from_dict(kind, d):
    cls = PLAN_TYPES[kind]
    names = set(cls.__dataclass_fields__)
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"plans.{kind}", f"unknown fields {sorted(unknown)}")
    return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()})


def _hz(x):
    return x / TWO_PI


def plan_rows(plans):
    """Flat (channel, parameter, rad/s, Hz, flags) rows for the implementation table."""
    rows = []
    for p in plans.get("pump", []):
        rows.append((p.label, "Omega_ml", p.omega, _hz(p.omega), f"Omega/Gamma_nl={p.validity:.2g}"))
    for p in plans.get("sideband", []):
        rows.append((f"vib_cooling[{p.mode}]", "eta Omega_-", p.eta * p.omega_minus, _hz(p.eta * p.omega_minus),
                     f"Omega/Gamma={p.validity_minus:.2g}"))
        rows.append((f"vib_heating[{p.mode}]", "eta Omega_+", p.eta * p.omega_plus, _hz(p.eta * p.omega_plus),
                     f"Omega/Gamma={p.validity_plus:.2g}"))
    for p in plans.get("noise", []):
        name = "rms d delta_j" if p.target_kind == "mode" else "rms d chi_n"
        flag = f"tau_c*gamma={p.narrowing:.2g}" + ("" if p.valid else " INVALID")
        rows.append((p.label, name, p.rms, _hz(p.rms), flag))
    return rows


def plans_csv(plans):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("channel", "parameter", "value_rad_s", "value_hz", "flags"))
    for r in plan_rows(plans):
        w.writerow((r[0], r[1], repr(float(r[2])), repr(float(r[3])), r[4]))
    return buf.getvalue()


def plans_text(plans):
    lines = [f"{'channel':<28}{'parameter':<16}{'rad/s':>12}{'/2pi Hz':>12}  flags"]
    for r in plan_rows(plans):
        lines.append(f"{r[0]:<28}{r[1]:<16}{r[2]:>12.4g}{r[3]:>12.4g}  {r[4]}")
    mg = plans.get("magnetic")
    if mg is not None:
        lines.append(f"global magnetic: <dI^2> = {mg.current_variance:.4g} A^2, spread flag {mg.spread_flag}")
    vp = plans.get("voltage")
    if vp is not None:
        lines.append(f"global voltage: <dV_RF^2> = {vp.rf_variance:.4g} V^2, <dV_DC^2> = {vp.dc_variance:.4g} V^2, "
                     f"spread flag {vp.spread_flag}")
    for key in ("pump", "sideband", "noise"):
        for p in plans.get(key, []):
            for w in p.warnings:
                lines.append(f"warning [{getattr(p, 'label', '') or getattr(p, 'mode', '')}]: {w}")
    for key in ("magnetic", "voltage"):
        p = plans.get(key)
        if p is not None:
            for w in p.warnings:
                lines.append(f"warning [{key}]: {w}")
    return "\n".join(lines)
