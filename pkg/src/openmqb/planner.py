"""Scaling-factor window, choice of F and the native/injected dissipation budget.

Coherence-time model: unless the hardware profile states the closed-system
coherence time explicitly, tau_cs = 1 / (sum of every native rate), and the
open-system coherence time tau_os = 1 / (1/tau_cs - sum of native rates that
are absorbed into matching molecular channels). A native rate is absorbed
only if the channel kind is flagged usable and the molecule has a channel of
that kind with a nonzero rate.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

from .errors import InfeasibleError
from .model import ChannelKind, DissipationChannel, HardwareProfile, LVCModel, SimulationRequest, TermType

EPS_ROUND = 1e-9

HANDLES = {
    ChannelKind.ELECTRONIC_RELAXATION: "optical pumping (Omega_ml)",
    ChannelKind.VIB_COOLING: "red sideband (eta Omega_-)",
    ChannelKind.VIB_HEATING: "blue sideband (eta Omega_+)",
    ChannelKind.VIB_DEPHASING: "trap-frequency noise (d delta_j)",
    ChannelKind.ELEC_DEPHASING: "qudit-energy noise (d chi_n)",
}


@dataclass(frozen=True)
class ScalingPlan:
    F_cs_min: float
    F_cs_max: float
    F_os_min: float
    F_os_max: float
    R: float
    F: float
    t_max_cs: float
    t_max_os: float
    tau_cs: float
    tau_os: float
    policy: str = "min-injection"
    ratio_channel: Optional[str] = None  # channel attaining R
    binding_term: Optional[str] = None  # term type fixing F_cs_max

    @property
    def lower_bound_source(self):
        return "native-rate ratio R" if self.R >= self.F_os_min else "open-system coherence time"

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class BudgetRow:
    label: str
    kind: str
    target: tuple
    gamma_mol: float
    gamma_sim: float
    gamma_nat: float
    gamma_inj: float
    handle: str


@dataclass(frozen=True)
class InjectionBudget:
    F: float
    rows: tuple

    def row(self, label):
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def by_kind(self, kind):
        kind = ChannelKind(kind)
        return [r for r in self.rows if r.kind == kind.value]

    def to_dict(self):
        return {"F": self.F, "rows": [dict(r.__dict__, target=list(r.target)) for r in self.rows]}

    @classmethod
    def from_dict(cls, d):
        rows = tuple(BudgetRow(**dict(r, target=tuple(r["target"]))) for r in d["rows"])
        return cls(F=d["F"], rows=rows)


def _used_kinds(channels, hardware):
    return {
        ch.kind
        for ch in channels
        if ch.gamma_mol > 0 and hardware.is_usable(ch.kind) and hardware.native(ch.kind) > 0
    }


def coherence_times(channels, hardware: HardwareProfile):
    """Return ``(tau_cs, tau_os)``."""
    used = _used_kinds(channels, hardware)
    total = sum(hardware.native_rates.values()) + sum(hardware.unusable_rates.values())
    absorbed = sum(hardware.native(k) for k in used)
    if hardware.coherence_time is not None:
        inv_cs = 1.0 / hardware.coherence_time
    else:
        inv_cs = total
    tau_cs = math.inf if inv_cs <= 0 else 1.0 / inv_cs
    inv_os = inv_cs - absorbed
    tau_os = math.inf if inv_os <= 0 else 1.0 / inv_os
    return tau_cs, max(tau_os, tau_cs)


def native_ratio(channels, hardware):
    """R = max gamma_nat / gamma_mol over channels that absorb a native rate; returns (R, label)."""
    best, label = 0.0, None
    for ch in channels:
        if ch.gamma_mol > 0 and hardware.is_usable(ch.kind):
            r = hardware.native(ch.kind) / ch.gamma_mol
            if r > best:
                best, label = r, ch
    return best, label


def closed_system_limit(model: LVCModel, hardware: HardwareProfile):
    """F_cs_max and the term type that sets it."""
    F, term = math.inf, None
    for ttype, strength in model.largest_strengths().items():
        limit = hardware.max_strengths.get(ttype)
        if limit is None:
            continue
        ratio = limit / strength
        if ratio < F:
            F, term = ratio, ttype.value
    return F, term


def choose_F(plan: ScalingPlan, policy="min-injection"):
    if plan.F_os_min > plan.F_os_max * (1 + 1e-12):
        raise InfeasibleError("scaling window is empty", constraint=plan.binding_term)
    if policy == "min-injection":
        return plan.F_os_min
    if policy == "max-duration":
        if not math.isfinite(plan.F_os_max):
            raise InfeasibleError("max-duration policy needs a finite hardware strength limit", "F_os_max")
        return plan.F_os_max
    raise ValueError(f"unknown policy {policy!r}")


def compute_window(channels, hardware: HardwareProfile, request: SimulationRequest, model: LVCModel):
    """Build the :class:`ScalingPlan` and select F according to ``request.policy``."""
    channels = tuple(channels)
    tau_cs, tau_os = coherence_times(channels, hardware)
    R, rch = native_ratio(channels, hardware)
    F_cs_max, term = closed_system_limit(model, hardware)
    F_cs_min = request.t_mol / tau_cs
    F_os_min = max(request.t_mol / tau_os, R)
    F_os_max = F_cs_max
    if F_os_min > F_os_max * (1 + 1e-12):
        if R >= request.t_mol / tau_os:
            what = f"native-rate ratio R = {R:.4g} (channel {rch.label(model)})"
            constraint = "R"
        else:
            what = f"open-system coherence bound t_mol/tau_os = {request.t_mol / tau_os:.4g}"
            constraint = "tau_os"
        raise InfeasibleError(
            f"empty scaling window: lower bound from {what} exceeds F_max = {F_os_max:.4g} "
            f"set by the {term} strength limit",
            constraint=constraint,
        )
    plan = ScalingPlan(
        F_cs_min=F_cs_min,
        F_cs_max=F_cs_max,
        F_os_min=F_os_min,
        F_os_max=F_os_max,
        R=R,
        F=math.nan,
        t_max_cs=tau_cs * F_cs_max,
        t_max_os=tau_os * F_os_max,
        tau_cs=tau_cs,
        tau_os=tau_os,
        policy=request.policy,
        ratio_channel=rch.label(model) if rch is not None else None,
        binding_term=term,
    )
    F = choose_F(plan, request.policy)
    return ScalingPlan(**dict(plan.to_dict(), F=F))


def budget(channels, F, hardware: HardwareProfile, model: Optional[LVCModel] = None):
    """Per-channel split gamma_sim = F gamma_mol = gamma_nat + gamma_inj."""
    rows = []
    for ch in channels:
        ch = ch if isinstance(ch, DissipationChannel) else DissipationChannel(*ch)
        g_sim = F * ch.gamma_mol
        g_nat = hardware.native(ch.kind) if (hardware.is_usable(ch.kind) and ch.gamma_mol > 0) else 0.0
        g_inj = g_sim - g_nat
        if abs(g_inj) <= EPS_ROUND * g_sim:
            g_inj = 0.0
        if g_inj < 0:
            raise InfeasibleError(
                f"channel {ch.label(model)} needs negative injection {g_inj:.4g} s^-1 at F = {F:.4g}; "
                "F lies below the native-rate ratio",
                constraint="R",
            )
        rows.append(
            BudgetRow(
                label=ch.label(model),
                kind=ch.kind.value,
                target=ch.target,
                gamma_mol=ch.gamma_mol,
                gamma_sim=g_sim,
                gamma_nat=g_nat,
                gamma_inj=g_inj,
                handle=HANDLES[ch.kind],
            )
        )
    return InjectionBudget(F=F, rows=tuple(rows))


# -- reports ----------------------------------------------------------------

_COLUMNS = ("channel", "gamma_nat_s-1", "gamma_mol_ps-1", "gamma_sim_s-1", "gamma_inj_s-1", "implementation")


def budget_rows(b: InjectionBudget):
    for r in b.rows:
        yield (r.label, r.gamma_nat, r.gamma_mol * 1e-12, r.gamma_sim, r.gamma_inj, r.handle)


def budget_csv(b: InjectionBudget):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for row in budget_rows(b):
        w.writerow([row[0]] + [repr(float(x)) for x in row[1:5]] + [row[5]])
    return buf.getvalue()


def budget_text(b: InjectionBudget):
    lines = [f"{'channel':<28}{'g_nat (1/s)':>12}{'g_mol (1/ps)':>14}{'g_sim (1/s)':>13}{'g_inj (1/s)':>13}  implementation"]
    for row in budget_rows(b):
        lines.append(f"{row[0]:<28}{row[1]:>12.4g}{row[2]:>14.4g}{row[3]:>13.4g}{row[4]:>13.4g}  {row[5]}")
    return "\n".join(lines)


def window_text(plan: ScalingPlan):
    def fmt(x):
        return "inf" if math.isinf(x) else f"{x:.4g}"

    return "\n".join(
        [
            f"F = {plan.F:.4g}  (policy {plan.policy}; lower bound from {plan.lower_bound_source})",
            f"R = {fmt(plan.R)}" + (f"  set by {plan.ratio_channel}" if plan.ratio_channel else ""),
            f"closed window  [{fmt(plan.F_cs_min)}, {fmt(plan.F_cs_max)}]"
            + (f"  upper bound from {plan.binding_term} limit" if plan.binding_term else ""),
            f"open window    [{fmt(plan.F_os_min)}, {fmt(plan.F_os_max)}]",
            f"tau_cs = {fmt(plan.tau_cs)} s, tau_os = {fmt(plan.tau_os)} s",
            f"t_max_cs = {fmt(plan.t_max_cs)} s, t_max_os = {fmt(plan.t_max_os)} s (molecular time)",
        ]
    )
