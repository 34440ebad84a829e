"""Trajectory-ensemble check of dephasing-by-noise plans.

Each trajectory evolves unitarily under H0 + x(t) O with x an
Ornstein-Uhlenbeck process; the ensemble mean of rho is compared with
the Lindblad prediction. Decay rates are obtained by a log-linear fit on
the window where the coherence magnitude lies in [0.2, 0.9] of its
initial value; standard errors come from a delete-one-group jackknife.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConfigError
from .model import NoiseConvention

FIT_WINDOW = (0.2, 0.9)
JACKKNIFE_GROUPS = 10
SYSTEMATIC = 0.05


@dataclass(frozen=True)
class OUProcess:
    variance: float  # sigma^2, rad^2/s^2
    tau_c: float
    dt: float
    seed: int = 0

    def __post_init__(self):
        if self.variance < 0 or not self.tau_c > 0 or not self.dt > 0:
            raise ConfigError("ou", "variance must be >= 0, tau_c and dt > 0")
        if self.dt > self.tau_c / 10 * (1 + 1e-12):
            raise ConfigError("ou.dt", f"step {self.dt:.3g} s is coarser than tau_c/10 = {self.tau_c / 10:.3g} s")

    @property
    def sigma(self):
        return math.sqrt(self.variance)


def ou_paths(proc: OUProcess, n_steps, n_paths, rng):
    """Exact OU samples on a uniform grid; shape ``(n_paths, n_steps + 1)``, x0 stationary."""
    a = math.exp(-proc.dt / proc.tau_c)
    b = proc.sigma * math.sqrt(-math.expm1(-2.0 * proc.dt / proc.tau_c))
    xi = rng.standard_normal((n_paths, n_steps + 1))
    x = np.empty_like(xi)
    x[:, 0] = proc.sigma * xi[:, 0]
    for k in range(n_steps):
        x[:, k + 1] = a * x[:, k] + b * xi[:, k + 1]
    return x


def generate_ou(proc: OUProcess, duration, rng=None):
    """One realisation over ``[0, duration]`` (``n = ceil(duration/dt)`` steps)."""
    n = int(math.ceil(duration / proc.dt - 1e-9))
    rng = np.random.default_rng(proc.seed) if rng is None else rng
    return ou_paths(proc, n, 1, rng)[0]


@dataclass
class CoherenceFit:
    pair: tuple
    decay: float  # fitted -d ln|rho_ij| / dt
    decay_se: float
    gamma: float  # equivalent D[O] rate, 2 decay / (o_i - o_j)^2
    gamma_se: float
    curvature: float  # relative quadratic term over the window
    window: tuple
    nonexponential: bool


@dataclass
class EnsembleResult:
    times: np.ndarray
    n_traj: int
    mean_rho: np.ndarray
    fits: dict
    seed: int
    max_trace_error: float = 0.0
    max_purity_error: float = 0.0


def _seeds(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


def _fit_log_linear(t, c, mask):
    """Weighted fit of ln c; weights c compensate the 1/c growth of log noise."""
    tt, cc = t[mask], np.maximum(c[mask], 1e-300)
    yy = np.log(cc)
    slope = np.polyfit(tt, yy, 1, w=cc)[0]
    quad = np.polyfit(tt - tt.mean(), yy, 2, w=cc)
    span = tt[-1] - tt[0]
    curvature = abs(quad[0]) * span / max(abs(quad[1]), 1e-300)
    return -slope, curvature


def _fit_pair(times, coh_groups, c0, pair, delta_o, curvature_limit, window=FIT_WINDOW):
    """coh_groups: (G, n_t) complex group means of rho_ij.

    The fit window is fixed from the full ensemble; jackknife replicates
    reuse it so that window jitter does not enter the error estimate.
    """
    full = np.abs(coh_groups.mean(axis=0)) / abs(c0)
    lo, hi = window
    mask = (full >= lo) & (full <= hi)
    if mask.sum() < 5:
        return CoherenceFit(pair, math.nan, math.nan, math.nan, math.nan, math.nan, (math.nan, math.nan), True)
    k, curv = _fit_log_linear(times, full, mask)
    G = coh_groups.shape[0]
    reps = np.array([_fit_log_linear(times, np.abs(np.delete(coh_groups, g, axis=0).mean(axis=0)) / abs(c0), mask)
                     for g in range(G)])
    jk = math.sqrt((G - 1) / G)
    se = jk * float(np.sqrt(np.sum((reps[:, 0] - reps[:, 0].mean()) ** 2)))
    curv_se = jk * float(np.sqrt(np.sum((reps[:, 1] - reps[:, 1].mean()) ** 2)))
    scale = 2.0 / delta_o**2
    win = (float(times[mask][0]), float(times[mask][-1]))
    nonexp = curv > curvature_limit + 3.0 * curv_se
    return CoherenceFit(pair, k, se, k * scale, se * scale, curv, win, bool(nonexp))


def propagate_noisy(H0, O, proc: OUProcess, rho0, times, n_traj, *, pairs=((0, 1),), seed=None,
                    curvature_limit=0.1, check_unitarity=False):
    """Ensemble-average rho under H0 + x(t) O.

    ``times`` must start at 0 and be spaced by integer multiples of
    ``proc.dt`` (within 1e-9 relative). Each step uses the symmetric split
    exp(-i H0 h/2) exp(-i xbar O h) exp(-i H0 h/2) with xbar the trapezoidal
    mean of the noise, which is exactly unitary.
    """
    H0 = np.asarray(H0, dtype=complex)
    O = np.asarray(O, dtype=complex)
    rho0 = np.asarray(rho0, dtype=complex)
    D = O.shape[0]
    if np.abs(O - O.conj().T).max() > 1e-12 * max(np.abs(O).max(), 1.0):
        raise ConfigError("O", "noise operator must be Hermitian")
    if np.abs(H0 - H0.conj().T).max() > 1e-12 * max(np.abs(H0).max(), 1.0):
        raise ConfigError("H0", "Hamiltonian must be Hermitian")
    if n_traj < 100:
        raise ConfigError("trajectories", "need at least 100 trajectories")
    times = np.asarray(times, dtype=float)
    steps_f = times / proc.dt
    steps = np.rint(steps_f).astype(int)
    if times[0] != 0 or np.any(np.abs(steps_f - steps) > 1e-9 * np.maximum(steps_f, 1)) or np.any(np.diff(steps) <= 0):
        raise ConfigError("times", "times must start at 0 on the noise grid")
    n_steps = int(steps[-1])
    seed = proc.seed if seed is None else seed

    G = min(JACKKNIFE_GROUPS, n_traj)
    group_of = np.arange(n_traj) * G // n_traj
    sums = np.zeros((G, len(times), D, D), dtype=complex)
    counts = np.bincount(group_of, minlength=G)
    diagonal = np.count_nonzero(O - np.diag(np.diag(O))) == 0 and np.count_nonzero(H0 - np.diag(np.diag(H0))) == 0
    trace_err = purity_err = 0.0
    purity0 = float(np.real(np.vdot(rho0.conj().T, rho0)))
    h = proc.dt

    # trajectories are processed in seeded blocks; each block draws from its own child stream
    block = 200
    children = _seeds(seed, (n_traj + block - 1) // block)
    start = 0
    for child in children:
        n = min(block, n_traj - start)
        rng = np.random.default_rng(child)
        x = ou_paths(proc, n_steps, n, rng)
        phi = np.concatenate([np.zeros((n, 1)), np.cumsum(0.5 * (x[:, 1:] + x[:, :-1]) * h, axis=1)], axis=1)
        grp = group_of[start:start + n]
        if diagonal:
            o = np.real(np.diag(O))
            e0 = np.real(np.diag(H0))
            dphase = np.subtract.outer(o, o)
            de0 = np.subtract.outer(e0, e0)
            for k, s in enumerate(steps):
                t = s * h
                ph = np.exp(-1j * (phi[:, s, None, None] * dphase[None] + t * de0[None]))
                rho_t = ph * rho0[None]
                np.add.at(sums[:, k], grp, rho_t)
        else:
            lam, V = np.linalg.eigh(O)
            half = scipy.linalg.expm(-0.5j * h * H0)
            for i in range(n):
                rho = rho0.copy()
                k = 0
                if steps[0] == 0:
                    sums[grp[i], 0] += rho
                    k = 1
                for s in range(1, n_steps + 1):
                    xbar = phi[i, s] - phi[i, s - 1]
                    U = half @ (V * np.exp(-1j * lam * xbar)) @ V.conj().T @ half
                    rho = U @ rho @ U.conj().T
                    if k < len(steps) and s == steps[k]:
                        sums[grp[i], k] += rho
                        if check_unitarity:
                            trace_err = max(trace_err, abs(np.trace(rho) - np.trace(rho0)))
                            purity_err = max(purity_err, abs(np.real(np.vdot(rho.conj().T, rho)) - purity0))
                        k += 1
        start += n

    group_means = sums / counts[:, None, None, None]
    mean_rho = sums.sum(axis=0) / n_traj
    fits = {}
    o_diag = np.real(np.diag(O)) if np.count_nonzero(O - np.diag(np.diag(O))) == 0 else np.linalg.eigvalsh(O)
    for (i, j) in pairs:
        c0 = rho0[i, j]
        if c0 == 0:
            raise ConfigError("pairs", f"initial coherence ({i},{j}) is zero")
        delta_o = o_diag[i] - o_diag[j]
        fits[(i, j)] = _fit_pair(times, group_means[:, :, i, j], c0, (i, j), delta_o if delta_o != 0 else 1.0,
                                 curvature_limit)
    return EnsembleResult(times=times, n_traj=n_traj, mean_rho=mean_rho, fits=fits, seed=seed,
                          max_trace_error=trace_err, max_purity_error=purity_err)


# -- plan verification ------------------------------------------------------


@dataclass
class VerificationRow:
    label: str
    target: float
    fitted: float
    stderr: float
    passed: bool
    note: str = ""


@dataclass
class VerificationReport:
    rows: list
    seed: int
    n_traj: int
    warnings: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("channel", "target_s-1", "fitted_s-1", "stderr_s-1", "result", "note"))
        for r in self.rows:
            w.writerow((r.label, repr(float(r.target)), repr(float(r.fitted)), repr(float(r.stderr)),
                        "PASS" if r.passed else "FAIL", r.note))
        return buf.getvalue()

    def text(self):
        lines = [f"{'channel':<28}{'target':>12}{'fitted':>12}{'stderr':>10}  result"]
        for r in self.rows:
            lines.append(f"{r.label:<28}{r.target:>12.4g}{r.fitted:>12.4g}{r.stderr:>10.2g}  "
                         f"{'PASS' if r.passed else 'FAIL'} {r.note}".rstrip())
        lines.append(f"trajectories {self.n_traj}, seed {self.seed}")
        lines.extend(f"warning: {w}" for w in self.warnings)
        return "\n".join(lines)


def _ensemble_rate(variance, tau_c):
    return NoiseConvention.ENSEMBLE.prefactor * variance * tau_c


def check_rate(frequency_variance, tau_c, target, *, kind="state", n_traj=1000, seed=0, fock=3,
               label="", points=120):
    """Fit the dephasing rate produced by frequency noise of the given variance.

    ``kind='state'`` drives |1><1| on a qubit in |+>; ``kind='mode'`` drives
    a^dag a on a truncated oscillator in (|0> + |1>)/sqrt(2).
    Returns a :class:`VerificationRow`.
    """
    if target == 0 and frequency_variance == 0:
        return VerificationRow(label, 0.0, 0.0, 0.0, True, "zero noise")
    if frequency_variance == 0:
        return VerificationRow(label, target, 0.0, 0.0, False, "no noise for nonzero target")
    sigma = math.sqrt(frequency_variance)
    expected = _ensemble_rate(frequency_variance, tau_c)
    # resolve tau_c and keep per-step phase kicks small
    dt = min(tau_c / 10.0, 0.05 / sigma)
    t_end = math.log(1.0 / 0.15) / (0.5 * expected) + 2 * tau_c
    stride = max(1, int(math.ceil(t_end / dt / points)))
    times = np.arange(points + 1) * stride * dt
    if kind == "state":
        O = np.diag([0.0, 1.0]).astype(complex)
        psi = np.array([1.0, 1.0]) / math.sqrt(2)
    else:
        O = np.diag(np.arange(fock, dtype=float)).astype(complex)
        psi = np.zeros(fock)
        psi[:2] = 1.0 / math.sqrt(2)
    rho0 = np.outer(psi, psi.conj()).astype(complex)
    proc = OUProcess(frequency_variance, tau_c, dt, seed)
    res = propagate_noisy(np.zeros_like(O), O, proc, rho0, times, n_traj, pairs=((0, 1),), seed=seed)
    fit = res.fits[(0, 1)]
    if not math.isfinite(fit.gamma):
        return VerificationRow(label, target, math.nan, math.nan, False, "coherence did not reach fit window")
    ok = abs(fit.gamma - target) <= 3.0 * fit.gamma_se + SYSTEMATIC * target
    note = "non-exponential decay" if fit.nonexponential else ""
    if fit.nonexponential:
        ok = False
    return VerificationRow(label, target, fit.gamma, fit.gamma_se, bool(ok), note)


def verify_plan(plan, *, n_traj=1000, seed=0, fock=3):
    """Ensemble check of a ``NoisePlan``, ``MagneticPlan`` or ``VoltagePlan``."""
    from .synth import MagneticPlan, NoisePlan, VoltagePlan

    warnings = []
    rows = []
    if isinstance(plan, NoisePlan):
        rows.append(check_rate(plan.variance, plan.tau_c, plan.achieved, kind=plan.target_kind, n_traj=n_traj,
                               seed=seed, fock=fock, label=plan.label))
        if not plan.valid:
            warnings.append(f"{plan.label}: plan violates motional narrowing")
    elif isinstance(plan, MagneticPlan):
        for i, (lab, s, a) in enumerate(zip(plan.labels, plan.sensitivities, plan.achieved)):
            if a == 0 and s == 0:
                continue
            var = (s * plan.field_per_current) ** 2 * plan.current_variance
            rows.append(check_rate(var, plan.tau_c, a, kind="state", n_traj=n_traj, seed=seed + i,
                                   label=f"elec_dephasing[{lab}] vs field-insensitive reference"))
        warnings.append("common-mode noise: pairwise decay between two field-sensitive states follows "
                        "(s_n - s_m)^2, not the sum of per-state rates")
    elif isinstance(plan, VoltagePlan):
        for i, (lab, a) in enumerate(zip(plan.labels, plan.achieved)):
            var = plan.frequency_variance(i)
            if var == 0 and a == 0:
                continue
            rows.append(check_rate(var, plan.tau_c, a, kind="mode", n_traj=n_traj, seed=seed + i, fock=fock,
                                   label=f"vib_dephasing[{lab}]"))
        warnings.append("common-mode noise across modes on one axis")
    else:
        raise ConfigError("plan", f"cannot verify plan of type {type(plan).__name__}")
    return VerificationReport(rows=rows, seed=seed, n_traj=n_traj, warnings=warnings)


def convergence_study(variance, tau_c, ns=(100, 400, 1600), seed=0, kind="state"):
    """Fitted rate, standard error and absolute error against the ensemble rate for each n."""
    target = _ensemble_rate(variance, tau_c)
    out = []
    for n in ns:
        row = check_rate(variance, tau_c, target, kind=kind, n_traj=n, seed=seed)
        out.append((n, row.fitted, row.stderr, abs(row.fitted - target)))
    return out
