import io
import itertools

import numpy as np
import pytest

from openmqb.errors import ConfigError, InfeasibleError
from openmqb.model import ChannelKind, DissipationChannel, LVCModel, Mode, TermType
from openmqb.operators import (
    HilbertSpace,
    OperatorMatrix,
    SimulatorHamiltonianSpec,
    build_lindblad_operator,
    build_molecular_hamiltonian,
    build_simulator_hamiltonian,
    dump_matrix,
    load_matrix,
)

from oracles import destroy as ref_destroy


def _three_mode_model(order=(0, 1, 2)):
    modes = [Mode("a", 1.0, "tuning", 4), Mode("b", 1.7, "tuning", 3), Mode("c", 0.9, "coupling", 5)]
    tuning = {("a", 0): 0.3, ("a", 1): -0.5, ("b", 1): 0.2}
    coupling = {("c", 0, 1): 0.4}
    perm = [modes[i] for i in order]
    idx = {m.label: k for k, m in enumerate(perm)}
    return LVCModel(
        num_states=2,
        modes=tuple(perm),
        c0=np.array([[0.0, 0.1], [0.1, 0.6]]),
        tuning={(idx[l], n): v for (l, n), v in tuning.items()},
        coupling={(idx[l], n, m): v for (l, n, m), v in coupling.items()},
    )


class TestHilbertSpace:
    def test_dimension_and_bijection(self):
        s = HilbertSpace(3, (2, 4, 3))
        assert s.dim == 3 * 2 * 4 * 3
        seen = set()
        for i in range(s.dim):
            n, occ = s.labels(i)
            assert s.index(n, occ) == i
            seen.add((n, occ))
        assert len(seen) == s.dim

    def test_dimension_overflow(self):
        with pytest.raises(ConfigError):
            HilbertSpace(2, (40, 40), max_dimension=2048)

    def test_truncation_lower_bound(self):
        with pytest.raises(ConfigError):
            HilbertSpace(2, (1,))

    def test_ladder_elements(self):
        s = HilbertSpace(2, (5,))
        a, ad = s.annihilation(0), s.creation(0)
        assert np.array_equal(ad, a.conj().T)
        for i in range(1, 5):
            assert a[s.index(0, (i - 1,)), s.index(0, (i,))] == pytest.approx(np.sqrt(i))
        np.testing.assert_array_equal(s.on_mode(0, ref_destroy(5)), a)

    def test_commutator_below_edge(self):
        s = HilbertSpace(2, (6, 3))
        for j, k in itertools.product(range(2), repeat=2):
            a, adk = s.annihilation(j), s.creation(k)
            comm = a @ adk - adk @ a
            # drop basis states sitting on the top Fock level of either mode
            keep = [i for i in range(s.dim) if all(o < n - 1 for o, n in zip(s.labels(i)[1], s.fock_dims))]
            block = comm[np.ix_(keep, keep)]
            expected = np.eye(len(keep)) if j == k else np.zeros((len(keep),) * 2)
            np.testing.assert_allclose(block, expected, atol=1e-14)


class TestMolecularHamiltonian:
    def test_bare_oscillators(self):
        nu = 2.5
        m = LVCModel(2, (Mode("q", nu, fock=6),), np.zeros((2, 2)))
        ev = np.sort(np.linalg.eigvalsh(build_molecular_hamiltonian(m).matrix))
        expected = np.sort(np.repeat(nu * np.arange(6), 2))
        np.testing.assert_allclose(ev, expected, atol=1e-12)

    def test_two_level_coupling(self):
        g = 0.7
        m = LVCModel(2, (), np.array([[0.0, g], [g, 0.0]]))
        ev = np.linalg.eigvalsh(build_molecular_hamiltonian(m).matrix)
        np.testing.assert_allclose(ev, [-g, g], atol=1e-14)

    def test_polaron_shift(self):
        nu, c, N = 1.0, 0.8, 60
        m = LVCModel(2, (Mode("q", nu, fock=N),), np.zeros((2, 2)), tuning={(0, 1): c})
        H = build_molecular_hamiltonian(m).matrix
        s = HilbertSpace.for_model(m)
        idx1 = [s.index(1, (k,)) for k in range(N)]
        ev1 = np.sort(np.linalg.eigvalsh(H[np.ix_(idx1, idx1)]))[:5]
        np.testing.assert_allclose(ev1, nu * np.arange(5) - c**2 / (2 * nu), atol=1e-10)

    def test_hermitian(self):
        H = build_molecular_hamiltonian(_three_mode_model())
        assert H.is_hermitian()

    def test_tensor_order_independence(self):
        ref = np.sort(np.linalg.eigvalsh(build_molecular_hamiltonian(_three_mode_model()).matrix))
        for order in itertools.permutations(range(3)):
            ev = np.sort(np.linalg.eigvalsh(build_molecular_hamiltonian(_three_mode_model(order)).matrix))
            np.testing.assert_allclose(ev, ref, atol=1e-10)

    def test_space_mismatch(self):
        with pytest.raises(ConfigError):
            build_molecular_hamiltonian(_three_mode_model(), HilbertSpace(2, (2, 2, 2)))


class TestSimulatorHamiltonian:
    def test_direct_mapping_triiodide(self, triiodide):
        model = triiodide.problem.model
        space = HilbertSpace.for_model(model)
        F = 1.6e-11
        Hs = build_simulator_hamiltonian(SimulatorHamiltonianSpec.from_model(model, F), space).matrix
        Hm = build_molecular_hamiltonian(model, space).matrix
        assert np.linalg.norm(Hs - F * Hm) / np.linalg.norm(Hs) < 1e-12

    def test_direct_mapping_three_modes(self):
        model = _three_mode_model()
        space = HilbertSpace.for_model(model)
        F = 3.3e-8
        Hs = build_simulator_hamiltonian(SimulatorHamiltonianSpec.from_model(model, F), space).matrix
        Hm = build_molecular_hamiltonian(model, space).matrix
        assert np.linalg.norm(Hs - F * Hm) / np.linalg.norm(Hs) < 1e-12

    def test_zero_strengths_diagonal(self):
        space = HilbertSpace(2, (3,))
        spec = SimulatorHamiltonianSpec(detunings=(2.0,), shifts=(0.5, -1.0), electronic=np.zeros((2, 2)))
        H = build_simulator_hamiltonian(spec, space).matrix
        assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
        expected = [0.5 + 2.0 * k for k in range(3)] + [-1.0 + 2.0 * k for k in range(3)]
        np.testing.assert_allclose(np.diag(H).real, expected)

    def test_strength_limit(self):
        space = HilbertSpace(2, (3,))
        spec = SimulatorHamiltonianSpec((1.0,), (0.0, 0.0), np.zeros((2, 2)), tuning={(0, 1): 5.0})
        with pytest.raises(InfeasibleError) as exc:
            build_simulator_hamiltonian(spec, space, {TermType.TUNING: 4.0})
        assert exc.value.constraint == "tuning"
        assert "Theta'" in str(exc.value)

    def test_electronic_must_be_hermitian(self):
        with pytest.raises(ConfigError):
            SimulatorHamiltonianSpec((), (0.0, 0.0), np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_dict_round_trip(self, pyrazine):
        spec = pyrazine.spec
        back = SimulatorHamiltonianSpec.from_dict(spec.to_dict())
        assert back.to_dict() == spec.to_dict()


class TestLindbladOperators:
    def test_cooling_is_annihilation(self):
        space = HilbertSpace(2, (4,))
        op = build_lindblad_operator(DissipationChannel(ChannelKind.VIB_COOLING, (0,), 1.0), space).matrix
        for i in range(1, 4):
            assert op[space.index(1, (i - 1,)), space.index(1, (i,))] == pytest.approx(np.sqrt(i))

    def test_heating_is_creation(self):
        space = HilbertSpace(2, (4,))
        a = build_lindblad_operator(DissipationChannel(ChannelKind.VIB_COOLING, (0,), 1.0), space).matrix
        ad = build_lindblad_operator(DissipationChannel(ChannelKind.VIB_HEATING, (0,), 1.0), space).matrix
        assert np.array_equal(ad, a.conj().T)

    def test_dephasing_projector_trace(self):
        space = HilbertSpace(3, (4, 3))
        op = build_lindblad_operator(DissipationChannel(ChannelKind.ELEC_DEPHASING, (2,), 1.0), space).matrix
        assert np.trace(op).real == pytest.approx(12)
        np.testing.assert_allclose(op @ op, op)

    def test_relaxation_nilpotent(self):
        space = HilbertSpace(3, (3,))
        op = build_lindblad_operator(DissipationChannel(ChannelKind.ELECTRONIC_RELAXATION, (0, 2), 1.0), space)
        assert not np.any(op.matrix @ op.matrix)
        assert np.any(op.matrix)

    def test_number_operator(self):
        space = HilbertSpace(2, (5,))
        op = build_lindblad_operator(DissipationChannel(ChannelKind.VIB_DEPHASING, (0,), 1.0), space).matrix
        np.testing.assert_allclose(np.diag(op).real, np.tile(np.arange(5), 2))

    def test_target_out_of_range(self):
        space = HilbertSpace(2, (3,))
        with pytest.raises(ConfigError):
            build_lindblad_operator(DissipationChannel(ChannelKind.VIB_COOLING, (1,), 1.0), space)
        with pytest.raises(ConfigError):
            build_lindblad_operator(DissipationChannel(ChannelKind.ELEC_DEPHASING, (2,), 1.0), space)


class TestMatrixDump:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        m[m.real > 0.5] = 0
        buf = io.StringIO()
        dump_matrix(OperatorMatrix(m, "H test"), buf)
        back = load_matrix(io.StringIO(buf.getvalue()))
        assert np.array_equal(back.matrix, m)
        assert back.label == "H test"

    def test_bad_header(self):
        with pytest.raises(ConfigError):
            load_matrix(io.StringIO("1 1 0.0 0.0\n"))
