"""Lindblad master-equation propagation and observable extraction.

``propagate`` integrates

    d rho/dt = -i[H, rho] + sum_i g_i (L_i rho L_i^dag - 1/2 {L_i^dag L_i, rho})

with classical RK4 and step-doubling error control. Integration runs in the
dimensionless time tau = s t, where s is a norm of the generator, so that a
problem and its uniformly rescaled copy (H -> F H, g -> F g, t -> t/F) take
identical steps.

``liouvillian`` / ``propagate_expm`` assemble the D^2 x D^2 superoperator
explicitly and exponentiate it; they serve as an independent oracle for
small systems.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigError, PositivityError, PropagationError, TraceDriftError, TruncationError
from .operators import HilbertSpace, OperatorMatrix

log = logging.getLogger(__name__)

TRACE_DRIFT_LIMIT = 1e-6
POSITIVITY_LIMIT = -1e-6
SUPEROPERATOR_NNZ_LIMIT = 2_000_000  # above this the matrix-form generator is used


def _as_array(op):
    return op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


@dataclass
class DensityMatrixSeries:
    times: np.ndarray
    states: Optional[np.ndarray]
    derived: dict
    space: Optional[HilbertSpace] = None
    state_labels: tuple = ()
    mode_labels: tuple = ()
    steps: int = 0
    rejected: int = 0
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    @property
    def max_leakage(self):
        keys = [k for k in self.derived if k.startswith("leak:")]
        return max((float(np.max(self.derived[k])) for k in keys), default=0.0)


class _Generator:
    """Right-hand side f(rho) in scaled time."""

    def __init__(self, H, channels, scale):
        D = H.shape[0]
        K = H / scale
        mask = np.zeros((D, D), dtype=complex)
        jumps = []
        for op, rate in channels:
            L = _as_array(op)
            g = rate / scale
            if g == 0:
                continue
            K = K - 0.5j * g * (L.conj().T @ L)
            if np.count_nonzero(L - np.diag(np.diag(L))) == 0:
                d = np.diag(L)
                mask += g * np.outer(d, d.conj())
            else:
                Ls = sp.csr_matrix(L)
                jumps.append((g, Ls))
        self.K = sp.csr_matrix(K)
        self.mask = mask if np.any(mask) else None
        self.jumps = jumps
        self.shape = (D, D)
        self.sup = None
        est = 2 * self.K.nnz * D + sum(L.nnz ** 2 for _, L in jumps) + D * D
        if est <= SUPEROPERATOR_NNZ_LIMIT:
            # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
            I = sp.identity(D, dtype=complex, format="csr")
            S = -1j * (sp.kron(self.K, I) - sp.kron(I, self.K.conj()))
            for g, L in jumps:
                S = S + g * sp.kron(L, L.conj())
            if self.mask is not None:
                S = S + sp.diags(self.mask.ravel())
            self.sup = sp.csr_matrix(S)

    def __call__(self, rho):
        if self.sup is not None:
            return (self.sup @ rho.ravel()).reshape(self.shape)
        # rho is Hermitian, so rho K^dag = (K rho)^dag and L rho L^dag = (L (L rho)^dag)^dag
        out = -1j * (self.K @ rho)
        out += out.conj().T
        if self.mask is not None:
            out += self.mask * rho
        for g, L in self.jumps:
            B = L @ rho
            out += g * (L @ B.conj().T).conj().T
        return out


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def generator_scale(H, channels):
    """Infinity-norm bound of the generator, used as the time unit."""
    H = _as_array(H)
    s = float(np.abs(H).sum(axis=1).max())
    for op, rate in channels:
        L = _as_array(op)
        s += rate * float(np.abs(L).sum(axis=1).max()) ** 2
    return s


def _check_initial(rho0):
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim != 2 or rho0.shape[0] != rho0.shape[1]:
        raise ConfigError("rho0", "initial state must be a square matrix")
    if np.abs(rho0 - rho0.conj().T).max() > 1e-10:
        raise ConfigError("rho0", "initial state is not Hermitian")
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ConfigError("rho0", "initial state does not have unit trace")
    if np.linalg.eigvalsh(rho0).min() < -1e-10:
        raise ConfigError("rho0", "initial state is not positive semidefinite")
    return rho0


class _Recorder:
    def __init__(self, H, space, keep_states, check_positivity, leakage_threshold):
        self.H = H
        self.space = space
        self.keep = keep_states
        self.check_positivity = check_positivity
        self.leakage_threshold = leakage_threshold
        self.states = []
        self.rows = {}

    def _put(self, key, value):
        self.rows.setdefault(key, []).append(value)

    def record(self, t, rho):
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
            raise TraceDriftError(f"trace drifted to {tr.real:.12f} at t = {t:.6g} s; reduce the step size")
        self._put("trace", tr.real)
        self._put("purity", float(np.real(np.vdot(rho.conj().T, rho))))
        self._put("energy", float(np.real(np.vdot(self.H.conj().T, rho))))
        if self.check_positivity:
            lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
            if lam < POSITIVITY_LIMIT:
                raise PositivityError(f"density matrix eigenvalue {lam:.3g} < {POSITIVITY_LIMIT} at t = {t:.6g} s")
            self._put("min_eig", lam)
        if self.space is not None:
            sp_ = self.space
            diag = np.real(np.diag(rho)).reshape(sp_.shape)
            d = sp_.num_states
            V = sp_.vib_dim
            self._put("elec_rho", np.einsum("nvmv->nm", rho.reshape(d, V, d, V)))
            for n in range(d):
                self._put(f"pop:{n}", float(diag[n].sum()))
            for j, N in enumerate(sp_.fock_dims):
                axes = tuple(a for a in range(diag.ndim) if a != j + 1)
                marginal = diag.sum(axis=axes)
                self._put(f"n:{j}", float(np.dot(np.arange(N), marginal)))
                leak = float(marginal[-1])
                self._put(f"leak:{j}", leak)
                if self.leakage_threshold is not None and leak > self.leakage_threshold:
                    raise TruncationError(
                        f"population {leak:.3g} in top Fock level of mode {j} exceeds "
                        f"{self.leakage_threshold:g} at t = {t:.6g} s; increase the truncation"
                    )
        if self.keep:
            self.states.append(rho.copy())


def propagate(
    H,
    channels,
    rho0,
    times,
    *,
    tol=1e-10,
    dt=None,
    space=None,
    leakage_threshold=1e-3,
    keep_states=True,
    check_positivity=True,
    state_labels=(),
    mode_labels=(),
):
    """Propagate ``rho0`` and record it at each of ``times`` (s, ascending, starting at the initial time).

    ``channels`` is a sequence of ``(operator, rate)``. ``tol`` bounds the
    estimated local error per step (max-abs over matrix elements); ``dt``
    caps the step size in seconds.
    """
    Hm = _as_array(H)
    rho = _check_initial(rho0).copy()
    D = Hm.shape[0]
    if rho.shape != (D, D):
        raise ConfigError("rho0", f"initial state has shape {rho.shape}, expected {(D, D)}")
    channels = [(op, float(rate)) for op, rate in channels]
    for op, rate in channels:
        if not rate >= 0:
            raise ConfigError("channels", "rates must be non-negative")
        if _as_array(op).shape != (D, D):
            raise ConfigError("channels", "Lindblad operator shape does not match the Hamiltonian")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) < 0):
        raise ConfigError("times", "times must be a non-empty ascending sequence")
    if space is not None and space.dim != D:
        raise ConfigError("space", "Hilbert space does not match the operators")

    rec = _Recorder(Hm, space, keep_states, check_positivity, leakage_threshold)
    rec.record(times[0], rho)
    scale = generator_scale(Hm, channels)
    steps = rejected = 0
    if scale > 0 and len(times) > 1:
        f = _Generator(Hm, channels, scale)
        taus = (times - times[0]) * scale
        h_max = 0.5 if dt is None else min(0.5, dt * scale)
        h = h_max
        tau = 0.0
        for k in range(1, len(taus)):
            target = taus[k]
            while target - tau > 1e-14 * max(target, 1.0):
                step = min(h, target - tau)
                full = _rk4(f, rho, step)
                half = _rk4(f, _rk4(f, rho, 0.5 * step), 0.5 * step)
                diff = half - full
                err = float(np.abs(diff).max()) / 15.0
                if err > tol:
                    rejected += 1
                    h = 0.5 * step
                    if h < 1e-14 * max(target, 1.0):
                        raise PropagationError("step size underflow; tolerance cannot be met")
                    continue
                rho = half + diff / 15.0
                tau += step
                steps += 1
                if err < tol / 64.0 and step == h:
                    h = min(2.0 * h, h_max)
            tau = target
            rec.record(times[k], rho)
    else:
        for t in times[1:]:
            rec.record(t, rho)

    derived = {}
    for key, vals in rec.rows.items():
        derived[key] = np.array(vals)
    return DensityMatrixSeries(
        times=times.copy(),
        states=np.array(rec.states) if keep_states else None,
        derived=derived,
        space=space,
        state_labels=tuple(state_labels),
        mode_labels=tuple(mode_labels),
        steps=steps,
        rejected=rejected,
    )


# -- oracle -----------------------------------------------------------------


def liouvillian(H, channels):
    """Explicit superoperator acting on the row-major vectorisation of rho.

    Uses vec(A rho B) = (A kron B^T) vec(rho).
    """
    Hm = _as_array(H)
    D = Hm.shape[0]
    I = np.eye(D)
    Lv = -1j * (np.kron(Hm, I) - np.kron(I, Hm.T))
    for op, rate in channels:
        L = _as_array(op)
        LdL = L.conj().T @ L
        Lv = Lv + rate * (np.kron(L, L.conj()) - 0.5 * np.kron(LdL, I) - 0.5 * np.kron(I, LdL.T))
    return Lv


def propagate_expm(H, channels, rho0, times):
    """Brute-force propagation by exponentiating the Liouvillian; returns (n_t, D, D)."""
    Lv = liouvillian(H, channels)
    rho0 = np.asarray(rho0, dtype=complex)
    D = rho0.shape[0]
    v0 = rho0.reshape(-1)
    out = []
    t0 = times[0]
    for t in times:
        out.append((scipy.linalg.expm(Lv * (t - t0)) @ v0).reshape(D, D))
    return np.array(out)


# -- observables ------------------------------------------------------------


def _lookup(token, labels, what):
    if token in labels:
        return labels.index(token)
    try:
        idx = int(token)
    except ValueError:
        raise ConfigError("observables", f"unknown {what} {token!r}") from None
    if not 0 <= idx < max(len(labels), 1) and labels:
        raise ConfigError("observables", f"{what} index {idx} out of range")
    return idx


def observables(series: DensityMatrixSeries, names):
    """Evaluate named observables; returns ``{name: array}`` in order.

    Names: ``trace``, ``purity``, ``min_eig``, ``energy``, ``pop:<state>``,
    ``n:<mode>``, ``leak:<mode>``, ``coh:<n>,<m>`` (magnitude of the reduced
    electronic coherence; ``coh_re``/``coh_im`` for parts) and
    ``rho:<i>,<j>`` (``rho_re``/``rho_im``) for composite-basis elements.
    """
    out = {}
    d = series.derived
    for name in names:
        head, _, arg = name.partition(":")
        if head in ("trace", "purity", "min_eig", "energy") and not arg:
            if head not in d:
                raise ConfigError("observables", f"{head} was not recorded")
            out[name] = np.asarray(d[head])
        elif head in ("pop", "n", "leak") and arg:
            if series.space is None:
                raise ConfigError("observables", f"{name} needs a Hilbert space")
            labels = series.state_labels if head == "pop" else series.mode_labels
            idx = _lookup(arg, list(labels), "state" if head == "pop" else "mode")
            key = f"{head}:{idx}"
            if key not in d:
                raise ConfigError("observables", f"unknown observable {name!r}")
            out[name] = np.asarray(d[key])
        elif head in ("coh", "coh_re", "coh_im") and arg:
            if "elec_rho" not in d:
                raise ConfigError("observables", f"{name} needs a Hilbert space")
            try:
                a, b = (_lookup(x, list(series.state_labels), "state") for x in arg.split(","))
            except ValueError:
                raise ConfigError("observables", f"malformed observable {name!r}") from None
            z = np.asarray(d["elec_rho"])[:, a, b]
            out[name] = {"coh": np.abs, "coh_re": np.real, "coh_im": np.imag}[head](z)
        elif head in ("rho", "rho_re", "rho_im") and arg:
            if series.states is None:
                raise ConfigError("observables", f"{name} needs stored density matrices")
            try:
                i, j = (int(x) for x in arg.split(","))
            except ValueError:
                raise ConfigError("observables", f"malformed observable {name!r}") from None
            z = series.states[:, i, j]
            out[name] = {"rho": np.abs, "rho_re": np.real, "rho_im": np.imag}[head](z)
        else:
            raise ConfigError("observables", f"unknown observable {name!r}")
    return out


def observables_csv(series, names, time_scale=1.0):
    """CSV text: a ``time`` column (s, multiplied by ``time_scale``) then one column per observable."""
    values = observables(series, names)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time"] + list(names))
    for k, t in enumerate(series.times):
        w.writerow([repr(float(t * time_scale))] + [repr(float(values[n][k])) for n in names])
    return buf.getvalue()


def trace_distance(rho, sigma):
    """1/2 ||rho - sigma||_1 for Hermitian arguments."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
