import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spin_teleport import quantum as qc
from spin_teleport.protocols import OPTIMAL_AXES, TSIRELSON

import oracles

Z = (0.0, 0.0, 1.0)
X = (1.0, 0.0, 0.0)
Y = (0.0, 1.0, 0.0)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_axes(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def assert_valid(state):
    m = state.matrix
    assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.linalg.eigvalsh(m)[0] >= -1e-10


axes = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3).map(
    lambda v: tuple(unit(v))
)


class TestConstruction:
    def test_pure_z(self):
        assert np.array_equal(qc.make_pure(Z).matrix, [[1, 0], [0, 0]])

    def test_pure_x(self):
        np.testing.assert_allclose(qc.make_pure(X).matrix, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_pure_tilted_matches_direct_construction(self):
        expected = (np.eye(2) + 0.6 * oracles.SX + 0.8 * oracles.SZ) / 2
        np.testing.assert_allclose(qc.make_pure((0.6, 0, 0.8)).matrix, expected, atol=1e-15)

    @given(axes)
    def test_pure_roundtrips_bloch(self, a):
        state = qc.make_pure(a)
        assert_valid(state)
        np.testing.assert_allclose(qc.bloch_of(state), a, atol=1e-12)

    def test_pure_rejects_non_unit(self):
        with pytest.raises(qc.InvalidAxisError):
            qc.make_pure((0, 0, 0.9))

    def test_mixed_accepts_short_vectors(self):
        np.testing.assert_allclose(qc.bloch_of(qc.make_mixed((0, 0.8, 0))), (0, 0.8, 0), atol=1e-15)
        with pytest.raises(qc.InvalidAxisError):
            qc.make_mixed((0, 1.1, 0))

    def test_singlet_entries(self):
        m = qc.make_singlet().matrix
        np.testing.assert_allclose(np.diag(m).real, [0, 0.5, 0.5, 0], atol=1e-15)
        assert m[1, 2] == pytest.approx(-0.5)

    def test_singlet_rotation_invariant(self):
        rng = np.random.default_rng(7)
        s = qc.make_singlet()
        for axis in random_axes(rng, 20):
            U = qc.rotation_unitary(axis, rng.uniform(0, 2 * np.pi))
            UU = np.kron(U, U)
            rotated = UU @ s.matrix @ UU.conj().T
            assert np.max(np.abs(rotated - s.matrix)) <= 1e-12

    def test_channel_limits(self):
        assert qc.make_channel(1.0).allclose(qc.make_singlet())
        np.testing.assert_allclose(qc.make_channel(0.25).matrix, np.eye(4) / 4, atol=1e-15)

    def test_channel_zz_correlation(self):
        oracle = oracles.expectation(oracles.werner(0.9), np.kron(oracles.SZ, oracles.SZ))
        assert oracle == pytest.approx(-(4 * 0.9 - 1) / 3, abs=1e-14)
        assert qc.correlation(qc.make_channel(0.9), Z, Z) == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(-0.8666666666666667, abs=1e-12)

    @pytest.mark.parametrize("f", [-0.01, 1.2, float("nan")])
    def test_channel_rejects_bad_fraction(self, f):
        with pytest.raises(qc.InvalidParameterError):
            qc.make_channel(f)

    def test_channel_spec_is_accepted(self):
        assert qc.make_channel(qc.ChannelSpec(0.5)).allclose(qc.make_channel(0.5))

    @given(st.floats(0, 1))
    def test_channel_valid_everywhere(self, f):
        assert_valid(qc.make_channel(f))

    def test_tensor(self):
        half = qc.make_mixed((0, 0, 0))
        np.testing.assert_allclose(qc.tensor(half, half).matrix, np.eye(4) / 4, atol=1e-15)
        big = qc.tensor(qc.make_pure(Z), qc.make_singlet())
        assert big.n_qubits == 3
        assert np.trace(big.matrix).real == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(qc.DimensionError):
            qc.tensor(qc.make_singlet(), qc.make_singlet())

    def test_density_operator_validation(self):
        with pytest.raises(qc.QuantumError):
            qc.DensityOperator(1, [[1, 1], [0, 0]])
        with pytest.raises(qc.QuantumError):
            qc.DensityOperator(1, [[0.5, 0], [0, 0.6]])
        with pytest.raises(qc.QuantumError):
            qc.DensityOperator(1, [[1.5, 0], [0, -0.5]])
        with pytest.raises(qc.DimensionError):
            qc.DensityOperator(4, np.eye(16) / 16)

    def test_matrix_is_read_only(self):
        s = qc.make_singlet()
        with pytest.raises(ValueError):
            s.matrix[0, 0] = 1


class TestMeasurement:
    def test_singlet_z_anticorrelation(self):
        outcome, collapsed, p = qc.measure_spin(qc.make_singlet(), 0, Z, 0.1)
        assert outcome == +1 and p == pytest.approx(0.5, abs=1e-12)
        remaining = qc.partial_trace(collapsed, [1])
        np.testing.assert_allclose(qc.bloch_of(remaining), (0, 0, -1), atol=1e-12)

    def test_eigenstate_unchanged(self):
        state = qc.make_pure(Z)
        outcome, collapsed, p = qc.measure_spin(state, 0, Z, 0.999)
        assert outcome == +1 and p == pytest.approx(1.0, abs=1e-12)
        assert collapsed.allclose(state)

    def test_sixty_degrees(self):
        axis = (math.sin(math.radians(60)), 0.0, math.cos(math.radians(60)))
        proj = (np.eye(2) + oracles.sigma(axis)) / 2
        oracle = oracles.expectation(oracles.bloch_matrix(Z), proj)
        assert oracle == pytest.approx(0.75, abs=1e-14)
        outcome, _, p = qc.measure_spin(qc.make_pure(Z), 0, axis, 0.0)
        assert outcome == +1 and p == pytest.approx(oracle, abs=1e-12)
        outcome, _, p = qc.measure_spin(qc.make_pure(Z), 0, axis, 0.75)
        assert outcome == -1 and p == pytest.approx(0.25, abs=1e-12)

    def test_index_errors(self):
        with pytest.raises(IndexError):
            qc.measure_spin(qc.make_singlet(), 2, Z, 0.5)
        with pytest.raises(qc.InvalidAxisError):
            qc.measure_spin(qc.make_singlet(), 0, (1, 1, 0), 0.5)

    @settings(max_examples=50)
    @given(axes, axes, st.floats(0, 0.999999), st.floats(0.25, 1))
    def test_no_signaling_of_local_measurement(self, a, b, u, f):
        # averaged over outcomes, measuring qubit 0 leaves qubit 1 untouched
        state = qc.make_channel(f)
        before = qc.partial_trace(state, [1]).matrix
        branches = qc.spin_branches(state, 0, a)
        after = sum(p * qc.partial_trace(qc.DensityOperator.from_matrix(m), [1]).matrix
                    for p, m in branches.values() if p > 1e-15)
        np.testing.assert_allclose(after, before, atol=1e-12)
        _, collapsed, _ = qc.measure_spin(state, 0, a, u)
        assert_valid(collapsed)


class TestCorrelation:
    def test_fixed_values(self):
        s = qc.make_singlet()
        assert qc.correlation(s, Z, Z) == pytest.approx(-1, abs=1e-12)
        assert qc.correlation(s, Z, X) == pytest.approx(0, abs=1e-12)
        b45 = (math.sin(math.pi / 4), 0, math.cos(math.pi / 4))
        oracle = oracles.expectation(oracles.werner(1.0), np.kron(oracles.SZ, oracles.sigma(b45)))
        assert oracle == pytest.approx(-0.7071067811865476, abs=1e-12)
        assert qc.correlation(s, Z, b45) == pytest.approx(oracle, abs=1e-12)

    def test_random_pairs(self):
        rng = np.random.default_rng(1)
        s = qc.make_singlet()
        for a, b in zip(random_axes(rng, 100), random_axes(rng, 100)):
            assert abs(qc.correlation(s, a, b) + a @ b) <= 1e-12

    def test_wrong_arity(self):
        with pytest.raises(qc.DimensionError):
            qc.correlation(qc.make_pure(Z), Z, Z)


class TestChsh:
    def test_optimal_axes_reach_tsirelson(self):
        ax = OPTIMAL_AXES
        s = qc.make_singlet()
        oracle = sum(
            sign * -float(np.dot(p, q))
            for sign, (p, q) in zip(
                (1, -1, 1, 1),
                [(ax["a"], ax["b"]), (ax["a"], ax["b_prime"]), (ax["a_prime"], ax["b"]), (ax["a_prime"], ax["b_prime"])],
            )
        )
        assert oracle == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        value = qc.chsh(s, ax["a"], ax["a_prime"], ax["b"], ax["b_prime"])
        assert value == pytest.approx(2.8284271247461903, abs=1e-10)

    def test_product_state_zero(self):
        half = qc.make_mixed((0, 0, 0))
        rng = np.random.default_rng(3)
        a, ap, b, bp = random_axes(rng, 4)
        assert qc.chsh(qc.tensor(half, half), a, ap, b, bp) == pytest.approx(0, abs=1e-12)

    def test_separable_werner_obeys_classical_bound(self):
        rng = np.random.default_rng(4)
        state = qc.make_channel(0.25)
        worst = max(abs(qc.chsh(state, *random_axes(rng, 4))) for _ in range(1000))
        assert worst <= 2

    def test_tsirelson_bound_random_states(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            rho = g @ g.conj().T
            state = qc.DensityOperator.from_matrix(rho / np.trace(rho))
            assert abs(qc.chsh(state, *random_axes(rng, 4))) <= TSIRELSON + 1e-9


class TestBellMeasure:
    @pytest.mark.parametrize("pair", [(0, 1), (0, 2), (1, 2), (1, 0)])
    def test_projectors_match_enumeration(self, pair):
        i, j = pair
        rng = np.random.default_rng(11)
        g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        rho = g @ g.conj().T
        state = qc.DensityOperator.from_matrix(rho / np.trace(rho))
        branches = qc.bell_probabilities(state, pair)
        for outcome in qc.BellOutcome:
            P = oracles.bell_projector_3q(outcome.name, i, j)
            p_oracle = np.trace(P @ state.matrix @ P).real
            assert branches[outcome][0] == pytest.approx(p_oracle, abs=1e-12)

    def test_uniform_probabilities_for_pure_input(self):
        rng = np.random.default_rng(12)
        for psi in random_axes(rng, 10):
            state = qc.tensor(qc.make_pure(psi), qc.make_singlet())
            for outcome in qc.BellOutcome:
                _, p = oracles.teleport_oracle(psi, 1.0, outcome.name)
                assert p == pytest.approx(0.25, abs=1e-12)
            probs = [p for p, _ in qc.bell_probabilities(state, (0, 1)).values()]
            np.testing.assert_allclose(probs, 0.25, atol=1e-12)

    def test_singlet_outcome_returns_input(self):
        psi = unit((0.3, -0.5, 0.8))
        state = qc.tensor(qc.make_pure(psi), qc.make_singlet())
        outcome, collapsed, p = qc.bell_measure(state, (0, 1), 0.1)
        assert outcome is qc.BellOutcome.PsiMinus
        assert qc.fidelity(qc.partial_trace(collapsed, [2]), psi) == pytest.approx(1, abs=1e-12)

    def test_phi_plus_flips_z(self):
        oracle_state, _ = oracles.teleport_oracle(Z, 1.0, "PhiPlus")
        np.testing.assert_allclose(oracle_state, oracles.bloch_matrix((0, 0, -1)), atol=1e-12)
        state = qc.tensor(qc.make_pure(Z), qc.make_singlet())
        outcome, collapsed, _ = qc.bell_measure(state, (0, 1), 0.9)
        assert outcome is qc.BellOutcome.PhiPlus
        np.testing.assert_allclose(qc.partial_trace(collapsed, [2]).matrix, oracle_state, atol=1e-12)

    def test_outcome_ladder(self):
        state = qc.tensor(qc.make_pure(Z), qc.make_singlet())
        got = [qc.bell_measure(state, (0, 1), u)[0] for u in (0.0, 0.26, 0.51, 0.76)]
        assert got == list(qc.BellOutcome)

    def test_index_validation(self):
        state = qc.tensor(qc.make_pure(Z), qc.make_singlet())
        with pytest.raises(IndexError):
            qc.bell_measure(state, (0, 0), 0.5)
        with pytest.raises(IndexError):
            qc.bell_measure(state, (0, 3), 0.5)

    @settings(max_examples=60)
    @given(st.floats(0, 1), axes, st.floats(0, 1), st.floats(0, 0.999999))
    def test_born_completeness_and_validity(self, f, direction, length, u):
        state = qc.teleport_input(tuple(length * np.asarray(direction)), f)
        total = sum(p for p, _ in qc.bell_probabilities(state, (0, 1)).values())
        assert total == pytest.approx(1, abs=1e-12)
        _, collapsed, _ = qc.bell_measure(state, (0, 1), u)
        assert_valid(collapsed)
        assert_valid(qc.partial_trace(collapsed, [2]))


class TestTeleport:
    def test_identity_for_perfect_channel(self):
        rng = np.random.default_rng(21)
        for psi in random_axes(rng, 100):
            accepted, out, p = qc.teleport(psi, 1.0, 0.0)
            assert accepted
            assert abs(qc.fidelity(out, psi) - 1) <= 1e-12
            assert abs(p - 0.25) <= 1e-12

    def test_rejected_outcome(self):
        accepted, out, p = qc.teleport(Z, 1.0, 0.5)
        assert not accepted and out is None and p == pytest.approx(0.25)

    @pytest.mark.parametrize("f", [0.25, 0.5, 0.9, 1.0])
    def test_degraded_channel_against_oracle(self, f):
        rng = np.random.default_rng(int(f * 100))
        for psi in random_axes(rng, 5):
            expected, p_oracle = oracles.teleport_oracle(psi, f)
            out, p = qc.postselected_output(psi, f)
            assert np.max(np.abs(out.matrix - expected)) <= 1e-12
            assert p == pytest.approx(p_oracle, abs=1e-12)

    def test_f09_fidelity_frozen(self):
        expected, _ = oracles.teleport_oracle(Z, 0.9)
        oracle_fid = expected[0, 0].real
        assert oracle_fid == pytest.approx(14 / 15, abs=1e-12)
        accepted, out, _ = qc.teleport(Z, 0.9, 0.0)
        assert accepted
        assert qc.fidelity(out, Z) == pytest.approx(oracle_fid, abs=1e-12)

    @settings(max_examples=30)
    @given(axes, axes, st.floats(0, 1), st.floats(0, 1))
    def test_unconditioned_output_independent_of_input(self, d1, d2, length, f):
        def average_output(bloch):
            state = qc.teleport_input(bloch, f)
            acc = np.zeros((2, 2), dtype=complex)
            for p, m in qc.bell_probabilities(state, (0, 1)).values():
                if p > 0:
                    acc += p * qc.partial_trace(qc.DensityOperator.from_matrix(m), [2]).matrix
            return acc

        r1 = tuple(length * np.asarray(d1))
        r2 = tuple(length * np.asarray(d2))
        np.testing.assert_allclose(average_output(r1), average_output(r2), atol=1e-12)


class TestFidelity:
    def test_values(self):
        assert qc.fidelity(qc.make_pure(Z), Z) == pytest.approx(1)
        assert qc.fidelity(qc.make_pure(Z), (0, 0, -1)) == pytest.approx(0, abs=1e-15)
        assert qc.fidelity(qc.make_mixed((0, 0, 0)), unit((1, 2, 3))) == pytest.approx(0.5)
