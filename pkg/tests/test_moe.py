import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uncloneable_lab.clifford import UnitaryEnsemble
from uncloneable_lab.linalg import ChoiChannel, DensityOperator, maximally_mixed, random_unitary
from uncloneable_lab.moe import (MoEGame, Strategy, build_game, check_povms, choi_swap_symmetry,
                                 game_from_ensemble, helstrom_update, seesaw_optimize,
                                 winning_probability)

BB84_VALUE = 0.5 + 1 / (2 * np.sqrt(2))


def comp_pvm():
    return np.array([np.diag([1, 0]), np.diag([0, 1])], dtype=complex)


def coin(q, d):
    return np.broadcast_to(np.eye(d) / 2, (q, 2, d, d)).copy()


def random_herm(d, rng):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return m + m.conj().T


class TestHelstrom:
    def test_diagonal_example(self):
        p = helstrom_update(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
        assert np.allclose(p, comp_pvm())

    def test_ties_go_to_outcome_zero(self):
        m = np.eye(2)
        p = helstrom_update(m, m)
        assert np.allclose(p[0], np.eye(2)) and np.allclose(p[1], 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            helstrom_update(np.array([[0, 1], [0, 0]]), np.zeros((2, 2)))

    @given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
    def test_beats_random_measurements(self, d, seed):
        rng = np.random.default_rng(seed)
        m0, m1 = random_herm(d, rng), random_herm(d, rng)
        p = helstrom_update(m0, m1)
        check_povms(p[None], projective=True)
        best = np.real(np.trace(p[0] @ m0) + np.trace(p[1] @ m1))
        # the optimum also equals the closed form Tr M1 + sum of positive eigenvalues of M0 - M1
        w = np.linalg.eigvalsh(m0 - m1)
        assert best == pytest.approx(np.real(np.trace(m1)) + w[w > 0].sum(), abs=1e-9)
        for _ in range(50):
            u = random_unitary(d, rng)
            lam = rng.uniform(0, 1, d)
            e0 = u @ np.diag(lam) @ u.conj().T
            val = np.real(np.trace(e0 @ m0) + np.trace((np.eye(d) - e0) @ m1))
            assert val <= best + 1e-9

    def test_batched(self, rng):
        m0 = np.stack([random_herm(3, rng) for _ in range(4)])
        m1 = np.stack([random_herm(3, rng) for _ in range(4)])
        p = helstrom_update(m0, m1)
        assert p.shape == (4, 2, 3, 3)
        for k in range(4):
            assert np.allclose(p[k], helstrom_update(m0[k], m1[k]))


class TestGames:
    def test_povm_validation(self):
        with pytest.raises(ValueError):
            check_povms(np.array([[np.eye(2), np.eye(2)]]))
        with pytest.raises(ValueError):
            MoEGame(coin(1, 2))  # not projective

    def test_bb84_structure(self):
        g = build_game("bb84")
        assert g.num_questions == 2 and g.dim_a == 2
        with pytest.raises(ValueError):
            build_game("bb84", 2)

    @pytest.mark.parametrize("n,q", [(1, 24), (2, 11520)])
    def test_clifford_game_size(self, n, q):
        g = build_game("clifford-scheme", n)
        assert g.num_questions == q and g.dim_a == 2 ** n

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_game("six-sided")

    def test_mixed_state_with_coin_flips(self):
        g = build_game("bb84")
        rho = np.kron(np.kron(maximally_mixed(2).matrix, maximally_mixed(2).matrix),
                      maximally_mixed(2).matrix)
        s = Strategy(DensityOperator(rho, (2, 2, 2)), coin(2, 2), coin(2, 2))
        assert winning_probability(g, s) == pytest.approx(0.25, abs=1e-12)

    def test_classical_copy_wins_single_question(self):
        g = MoEGame(comp_pvm()[None])
        ket = np.zeros(8)
        ket[0] = ket[7] = 1 / np.sqrt(2)
        s = Strategy(DensityOperator(np.outer(ket, ket), (2, 2, 2)), comp_pvm()[None], comp_pvm()[None])
        assert winning_probability(g, s) == pytest.approx(1.0, abs=1e-12)

    def test_question_count_mismatch(self):
        g = build_game("bb84")
        rho = DensityOperator(np.eye(8) / 8, (2, 2, 2))
        with pytest.raises(ValueError):
            winning_probability(g, Strategy(rho, coin(3, 2), coin(3, 2)))


class TestSeesaw:
    def test_bb84_value(self):
        res = seesaw_optimize(build_game("bb84"), 2, 2, restarts=32, seed=7)
        assert abs(res.value - BB84_VALUE) <= 1e-3
        assert res.value <= BB84_VALUE + 1e-9

    def test_single_question_reaches_one(self):
        res = seesaw_optimize(MoEGame(comp_pvm()[None]), 2, 2, restarts=2, seed=0)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_traces_monotone(self):
        res = seesaw_optimize(build_game("bb84"), 2, 2, restarts=4, seed=3)
        for tr in res.traces:
            assert np.all(np.diff(tr) >= -1e-12)
        assert res.value == pytest.approx(max(res.restart_values), abs=1e-9)

    def test_reported_value_matches_strategy(self):
        g = build_game("bb84")
        res = seesaw_optimize(g, 2, 2, restarts=3, seed=1)
        assert winning_probability(g, res.strategy) == pytest.approx(res.value, abs=1e-12)

    def test_deterministic(self):
        g = build_game("bb84")
        a = seesaw_optimize(g, 2, 2, restarts=3, seed=5)
        b = seesaw_optimize(g, 2, 2, restarts=3, seed=5)
        assert a.restart_values == b.restart_values

    def test_clifford_game_stable_across_seeds(self):
        g = build_game("clifford-scheme", 1)
        vals = [seesaw_optimize(g, 2, 2, restarts=8, seed=s).value for s in (0, 1, 2)]
        assert all(0.5 <= v <= 1.0 for v in vals)
        assert max(vals) - min(vals) <= 1e-3

    def test_game_with_fewer_bases_is_easier(self):
        # dropping questions cannot lower the value
        full = build_game("clifford-scheme", 1)
        sub = MoEGame(full.alice_pvms[:2])
        v_full = seesaw_optimize(full, 2, 2, restarts=8, seed=0).value
        v_sub = seesaw_optimize(sub, 2, 2, restarts=8, seed=0).value
        assert v_sub >= v_full - 1e-6

    def test_bad_dimensions(self):
        with pytest.raises(ValueError):
            seesaw_optimize(build_game("bb84"), 0, 2)

    def test_from_ensemble_matches_bb84(self):
        h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        g = game_from_ensemble(UnitaryEnsemble(np.stack([np.eye(2, dtype=complex), h])))
        assert np.allclose(g.alice_pvms, build_game("bb84").alice_pvms)


class TestSwapSymmetry:
    def test_symmetric_broadcast(self):
        # |i> -> |ii> (classical broadcast) is symmetric under swapping B and C
        def cnot_copy(r):
            v = np.zeros((4, 2))
            v[0, 0] = v[3, 1] = 1
            return v @ r @ v.T
        chan = ChoiChannel.from_map(cnot_copy, 2, 4, out_dims=(2, 2))
        assert choi_swap_symmetry(chan) == pytest.approx(0.0, abs=1e-12)

    def test_asymmetric_send_to_bob(self):
        e0 = np.diag([1.0, 0.0])
        chan = ChoiChannel.from_map(lambda r: np.kron(r, e0), 2, 4, out_dims=(2, 2))
        # both Choi states are pure with overlap 1/2: distance sqrt(1 - 1/4)
        assert choi_swap_symmetry(chan) == pytest.approx(np.sqrt(3) / 2, abs=1e-12)

    def test_requires_bipartite_output(self):
        chan = ChoiChannel.from_map(lambda r: r, 2, 2)
        with pytest.raises(ValueError):
            choi_swap_symmetry(chan)
