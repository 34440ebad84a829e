"""Composite qudit x Fock Hilbert space and dense operator assembly.

Tensor order is electronic first, then the modes in declared order; the
composite index is the row-major (C order) flattening of
``(n, k_0, k_1, ...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import ConfigError, InfeasibleError
from .model import ChannelKind, TermType


@dataclass(frozen=True)
class HilbertSpace:
    num_states: int
    fock_dims: tuple = ()
    max_dimension: int = 2048

    def __post_init__(self):
        object.__setattr__(self, "fock_dims", tuple(int(n) for n in self.fock_dims))
        if any(n < 2 for n in self.fock_dims):
            raise ConfigError("molecule.modes.fock", "Fock truncation must be at least 2")
        if self.dim > self.max_dimension:
            raise ConfigError(
                "molecule.max_dimension",
                f"Hilbert-space dimension {self.dim} exceeds the configured maximum {self.max_dimension}",
            )

    @classmethod
    def for_model(cls, model):
        return cls(model.num_states, model.fock_dims, model.max_dimension)

    @property
    def shape(self):
        return (self.num_states,) + self.fock_dims

    @property
    def dim(self):
        return self.num_states * math.prod(self.fock_dims)

    @property
    def vib_dim(self):
        return math.prod(self.fock_dims)

    def index(self, electronic, occupations=()):
        return int(np.ravel_multi_index((electronic,) + tuple(occupations), self.shape))

    def labels(self, index):
        """Inverse of :meth:`index`: ``(electronic, (k_0, k_1, ...))``."""
        parts = np.unravel_index(index, self.shape)
        return int(parts[0]), tuple(int(p) for p in parts[1:])

    def _embed(self, factors):
        return reduce(np.kron, factors, np.ones((1, 1), dtype=complex))

    def identity(self):
        return np.eye(self.dim, dtype=complex)

    def electronic(self, op):
        """Electronic operator (d x d) tensored with the vibrational identity."""
        return self._embed([np.asarray(op, dtype=complex)] + [np.eye(n) for n in self.fock_dims])

    def on_mode(self, j, op):
        factors = [np.eye(self.num_states)] + [np.eye(n) for n in self.fock_dims]
        factors[j + 1] = np.asarray(op, dtype=complex)
        return self._embed(factors)

    def product(self, electronic_op, j, mode_op):
        factors = [np.asarray(electronic_op, dtype=complex)] + [np.eye(n) for n in self.fock_dims]
        factors[j + 1] = np.asarray(mode_op, dtype=complex)
        return self._embed(factors)

    def ket_bra(self, n, m):
        op = np.zeros((self.num_states, self.num_states), dtype=complex)
        op[n, m] = 1.0
        return op

    def annihilation(self, j):
        return self.on_mode(j, destroy(self.fock_dims[j]))

    def creation(self, j):
        return self.on_mode(j, destroy(self.fock_dims[j]).T.copy())

    def number(self, j):
        return self.on_mode(j, np.diag(np.arange(self.fock_dims[j], dtype=complex)))

    def projector(self, n):
        return self.electronic(self.ket_bra(n, n))

    def top_level_projector(self, j):
        top = np.zeros((self.fock_dims[j],) * 2, dtype=complex)
        top[-1, -1] = 1.0
        return self.on_mode(j, top)

    def basis_state(self, electronic, occupations=()):
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(electronic, occupations)] = 1.0
        return psi


def destroy(n):
    """Truncated annihilation operator, <i-1|a|i> = sqrt(i)."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def is_hermitian(self, rtol=1e-12):
        m = self.matrix
        scale = max(np.abs(m).max(), np.finfo(float).tiny)
        return bool(np.abs(m - m.conj().T).max() <= rtol * scale)


def _position(space, j):
    n = space.fock_dims[j]
    a = destroy(n)
    return a + a.T


def build_molecular_hamiltonian(model, space=None):
    """Linear vibronic coupling Hamiltonian in rad/s.

    H = sum_j nu_j a_j^dag a_j + sum_nm c0 |n><m|
        + sum_{n, j tuning} c_j^(n)/sqrt2 (a_j^dag + a_j) |n><n|
        + sum_{n != m, j coupling} c_j^(n,m)/sqrt2 (a_j^dag + a_j) |n><m|
    """
    space = space or HilbertSpace.for_model(model)
    if space.num_states != model.num_states or space.fock_dims != model.fock_dims:
        raise ConfigError("molecule", "Hilbert space does not match the model")
    H = space.electronic(model.c0)
    for j, mode in enumerate(model.modes):
        H += mode.frequency * space.number(j)
    for (j, n), c in model.tuning.items():
        H += (c / math.sqrt(2)) * space.product(space.ket_bra(n, n), j, _position(space, j))
    for (j, n, m), c in model.coupling.items():
        el = space.ket_bra(n, m) + space.ket_bra(m, n)
        H += (c / math.sqrt(2)) * space.product(el, j, _position(space, j))
    return OperatorMatrix(H, "H_mol")


@dataclass(frozen=True)
class SimulatorHamiltonianSpec:
    """Parameters of the final-frame simulator Hamiltonian, all rad/s.

    ``detunings`` delta_j per mode, ``shifts`` chi_n per state,
    ``electronic`` Omega_{n,m} (Hermitian d x d, zero diagonal),
    ``tuning`` {(j, n): Theta'} and ``coupling`` {(j, n, m): Omega'}, n < m.
    """

    detunings: tuple
    shifts: tuple
    electronic: np.ndarray
    tuning: dict = field(default_factory=dict)
    coupling: dict = field(default_factory=dict)

    def __post_init__(self):
        om = np.array(self.electronic, dtype=complex, copy=True)
        if np.abs(om - om.conj().T).max() > 1e-12 * max(np.abs(om).max(), 1e-300):
            raise ConfigError("simulator.electronic", "Omega_{n,m} must be Hermitian in (n, m)")
        om.flags.writeable = False
        object.__setattr__(self, "electronic", om)
        object.__setattr__(self, "detunings", tuple(float(x) for x in self.detunings))
        object.__setattr__(self, "shifts", tuple(float(x) for x in self.shifts))
        object.__setattr__(self, "tuning", {tuple(k): float(v) for k, v in dict(self.tuning).items()})
        object.__setattr__(self, "coupling", {tuple(k): float(v) for k, v in dict(self.coupling).items()})

    @classmethod
    def from_model(cls, model, F):
        """Direct mapping: every simulator parameter is F times its molecular counterpart."""
        c0 = np.asarray(model.c0)
        return cls(
            detunings=tuple(F * m.frequency for m in model.modes),
            shifts=tuple(F * float(np.real(c0[n, n])) for n in range(model.num_states)),
            electronic=F * (c0 - np.diag(np.diag(c0))),
            tuning={k: F * v / math.sqrt(2) for k, v in model.tuning.items()},
            coupling={k: F * v / math.sqrt(2) for k, v in model.coupling.items()},
        )

    def strengths(self):
        """Largest strength of each limited term family."""
        out = {}
        off = np.abs(self.electronic)
        if off.size and off.max() > 0:
            out[TermType.ELECTRONIC_COUPLING] = ("Omega", float(off.max()))
        if self.tuning:
            k, v = max(self.tuning.items(), key=lambda kv: abs(kv[1]))
            out[TermType.TUNING] = (f"Theta'[mode {k[0]}, state {k[1]}]", abs(v))
        if self.coupling:
            k, v = max(self.coupling.items(), key=lambda kv: abs(kv[1]))
            out[TermType.VIBRONIC_COUPLING] = (f"Omega'[mode {k[0]}, states {k[1]},{k[2]}]", abs(v))
        return out

    def check_limits(self, max_strengths, rtol=1e-9):
        for term, (name, value) in self.strengths().items():
            limit = max_strengths.get(term)
            if limit is not None and value > limit * (1 + rtol):
                raise InfeasibleError(
                    f"{term.value} strength {name} = {value:.6g} rad/s exceeds hardware maximum {limit:.6g} rad/s",
                    constraint=term.value,
                )

    def to_dict(self):
        om = self.electronic
        return {
            "detunings": list(self.detunings),
            "shifts": list(self.shifts),
            "electronic_real": om.real.tolist(),
            "electronic_imag": om.imag.tolist(),
            "tuning": [[j, n, v] for (j, n), v in sorted(self.tuning.items())],
            "coupling": [[j, n, m, v] for (j, n, m), v in sorted(self.coupling.items())],
        }

    @classmethod
    def from_dict(cls, d):
        om = np.array(d["electronic_real"]) + 1j * np.array(d["electronic_imag"])
        return cls(
            detunings=tuple(d["detunings"]),
            shifts=tuple(d["shifts"]),
            electronic=om,
            tuning={(int(j), int(n)): v for j, n, v in d["tuning"]},
            coupling={(int(j), int(n), int(m)): v for j, n, m, v in d["coupling"]},
        )


def build_simulator_hamiltonian(spec: SimulatorHamiltonianSpec, space: HilbertSpace, max_strengths=None):
    """Final interaction-picture simulator Hamiltonian:

    H = sum_j delta_j a^dag a + sum_n chi_n |n><n| + sum_{n!=m} Omega_nm |n><m|
        + sum Theta'_nj (a^dag + a)|n><n| + sum Omega'_nmj (a^dag + a)|n><m|
    """
    if max_strengths:
        spec.check_limits(max_strengths)
    if len(spec.detunings) != len(space.fock_dims) or len(spec.shifts) != space.num_states:
        raise ConfigError("simulator", "parameter counts do not match the Hilbert space")
    H = space.electronic(np.diag(spec.shifts) + spec.electronic)
    for j, delta in enumerate(spec.detunings):
        H += delta * space.number(j)
    for (j, n), theta in spec.tuning.items():
        H += theta * space.product(space.ket_bra(n, n), j, _position(space, j))
    for (j, n, m), om in spec.coupling.items():
        el = space.ket_bra(n, m) + space.ket_bra(m, n)
        H += om * space.product(el, j, _position(space, j))
    return OperatorMatrix(H, "H_sim")


def build_lindblad_operator(channel, space: HilbertSpace):
    kind = channel.kind
    if kind.on_mode:
        (j,) = channel.target
        if not 0 <= j < len(space.fock_dims):
            raise ConfigError("dissipation", f"mode {j} not in Hilbert space")
        op = {
            ChannelKind.VIB_COOLING: space.annihilation,
            ChannelKind.VIB_HEATING: space.creation,
            ChannelKind.VIB_DEPHASING: space.number,
        }[kind](j)
    else:
        for t in channel.target:
            if not 0 <= t < space.num_states:
                raise ConfigError("dissipation", f"state {t} not in Hilbert space")
        if kind is ChannelKind.ELECTRONIC_RELAXATION:
            n, m = channel.target
            op = space.electronic(space.ket_bra(n, m))
        else:
            op = space.projector(channel.target[0])
    return OperatorMatrix(op, channel.label())


def dump_matrix(op, path_or_file, threshold=0.0):
    """Write nonzero entries as ``row col re im`` lines (portable text format)."""
    m = op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)
    label = op.label if isinstance(op, OperatorMatrix) else ""
    lines = [f"# dim {m.shape[0]} {m.shape[1]} {label}".rstrip()]
    rows, cols = np.nonzero(np.abs(m) > threshold)
    for r, c in zip(rows, cols):
        z = m[r, c]
        lines.append(f"{r} {c} {float(z.real)!r} {float(z.imag)!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def load_matrix(path_or_file):
    text = path_or_file.read() if hasattr(path_or_file, "read") else open(path_or_file).read()
    lines = text.splitlines()
    head = lines[0].split()
    if head[:2] != ["#", "dim"]:
        raise ConfigError("matrix", "missing '# dim' header")
    nr, nc = int(head[2]), int(head[3])
    label = " ".join(head[4:])
    m = np.zeros((nr, nc), dtype=complex)
    for line in lines[1:]:
        if line.strip():
            r, c, re_, im = line.split()
            m[int(r), int(c)] = complex(float(re_), float(im))
    return OperatorMatrix(m, label)
