import numpy as np
import pytest

from uncloneable_lab.clifford import enumerate_clifford, sampled_ensemble
from uncloneable_lab.decoupling import (alice_pvms, decoupling_choi_state, decoupling_verify,
                                        helstrom_bob_pvms, lemma1_guess_bound, lemma1_overlap_check)
from uncloneable_lab.entropy import min_entropy
from uncloneable_lab.linalg import (DensityOperator, maximally_entangled, maximally_mixed,
                                    random_state, trace_norm)


@pytest.fixture(scope="module")
def cliff2():
    return enumerate_clifford(2)


@pytest.fixture(scope="module")
def cliff1():
    return enumerate_clifford(1)


def product(a, b):
    return DensityOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def brute_force_lhs(rho, m, ens):
    """Average distance computed one unitary at a time with explicit partial traces."""
    da, de = rho.dims
    db = 2 ** m
    rho_e = rho.ptrace([1]).matrix
    target = np.kron(np.eye(db) / db, rho_e)
    tot = 0.0
    for u in ens.unitaries:
        big = np.kron(u, np.eye(de))
        out = DensityOperator(big @ rho.matrix @ big.conj().T, (db, da // db, de))
        tot += trace_norm(out.ptrace([0, 2]).matrix - target)
    return tot / len(ens)


class TestChoiState:
    @pytest.mark.parametrize("n,m", [(2, 1), (3, 1), (3, 2), (2, 2)])
    def test_min_entropy(self, n, m):
        h, _ = min_entropy(decoupling_choi_state(n, m))
        assert h == pytest.approx(n - 2 * m, abs=1e-6)

    def test_marginal_is_mixed(self):
        tau = decoupling_choi_state(3, 1)
        assert np.allclose(tau.ptrace([0]).matrix, np.eye(8) / 8)
        assert np.allclose(tau.ptrace([1]).matrix, np.eye(2) / 2)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            decoupling_choi_state(2, 0)


class TestDecoupling:
    def test_product_mixed_state(self, cliff2):
        rho = product(maximally_mixed(4), maximally_mixed(2))
        rep = decoupling_verify(rho, 1, cliff2)
        assert rep.lhs == pytest.approx(0.0, abs=1e-10)
        # H_min(A|E) = 2 and H_min(A|B)_tau = 0
        assert rep.rhs == pytest.approx(2.0 ** (-1 - 0 - 1), abs=1e-7)
        assert rep.passed

    def test_maximally_entangled(self, cliff2):
        rep = decoupling_verify(maximally_entangled(4), 1, cliff2)
        assert rep.lhs == pytest.approx(0.75, abs=1e-9)
        assert rep.rhs == pytest.approx(1.0, abs=1e-7)
        assert rep.passed and rep.mode == "exact-2-design"

    def test_matches_brute_force(self, cliff1, rng):
        rho = random_state((2, 2), rng)
        rep = decoupling_verify(rho, 1, cliff1)
        assert rep.lhs == pytest.approx(brute_force_lhs(rho, 1, cliff1), abs=1e-12)

    def test_random_margins(self, cliff2, rng):
        for _ in range(5):
            rep = decoupling_verify(random_state((4, 2), rng), 1, cliff2)
            assert rep.margin >= -1e-8

    def test_monte_carlo_error_shrinks(self, cliff2):
        rho = random_state((4, 2), np.random.default_rng(3))
        errs = [decoupling_verify(rho, 1, cliff2, samples=s, rng=np.random.default_rng(1)).lhs_stderr
                for s in (400, 1600)]
        assert errs[1] == pytest.approx(errs[0] / 2, rel=0.25)

    def test_monte_carlo_mode_on_three_qubits(self, rng):
        ens = sampled_ensemble(3, 64, rng)
        rep = decoupling_verify(random_state((8, 2), rng), 1, ens, samples=256, rng=rng)
        assert rep.mode == "monte-carlo" and rep.lhs_stderr > 0 and rep.passed

    def test_argument_checks(self, cliff2, cliff1, rng):
        rho = random_state((4, 2), rng)
        with pytest.raises(ValueError):
            decoupling_verify(rho, 1, cliff1)
        with pytest.raises(ValueError):
            decoupling_verify(rho, 3, cliff2)
        with pytest.raises(ValueError):
            decoupling_verify(rho, 1, cliff2, samples=10)
        with pytest.raises(ValueError):
            decoupling_verify(rho, 1, cliff2, mode="bogus")


class TestGuessToOverlap:
    def test_alice_pvms_shape(self, cliff1):
        a = alice_pvms(cliff1)
        assert a.shape == (24, 2, 2, 2)
        assert np.allclose(a.sum(axis=1), np.eye(2))

    def test_maximally_entangled_perfect_guess(self, cliff1):
        rho = maximally_entangled(2)
        # Bob measures the conjugated basis
        bob = alice_pvms(cliff1).conj()
        guess, bound = lemma1_guess_bound(rho, bob, cliff1)
        assert guess == pytest.approx(1.0, abs=1e-10)
        assert bound == pytest.approx(1.5, abs=1e-7)

    def test_helstrom_matches_conjugate_basis(self, cliff1):
        rho = maximally_entangled(2)
        guess, _ = lemma1_guess_bound(rho, helstrom_bob_pvms(rho, cliff1), cliff1)
        assert guess == pytest.approx(1.0, abs=1e-10)

    def test_uncorrelated_state_is_a_coin(self, cliff1):
        rho = product(maximally_mixed(2), maximally_mixed(2))
        guess, bound = lemma1_guess_bound(rho, helstrom_bob_pvms(rho, cliff1), cliff1)
        assert guess == pytest.approx(0.5, abs=1e-10)
        assert guess <= bound

    def test_random_instances(self, cliff1, rng):
        for _ in range(10):
            rho = random_state((2, 2), rng)
            bob = helstrom_bob_pvms(rho, cliff1)
            guess, bound = lemma1_guess_bound(rho, bob, cliff1)
            assert guess <= bound + 1e-7
            # Helstrom is at least as good as any fixed answer
            assert guess >= 0.5 - 1e-10

    def test_overlap_on_maximally_entangled(self, cliff1):
        score, ok = lemma1_overlap_check(maximally_entangled(2), 0.5, alice_pvms(cliff1)[3])
        assert score == pytest.approx(1.0, abs=1e-6) and ok

    def test_overlap_on_random_state(self, cliff1, rng):
        rho = random_state((2, 2), rng)
        guess, _ = lemma1_guess_bound(rho, helstrom_bob_pvms(rho, cliff1), cliff1)
        eps = max(0.0, guess - 0.5)
        score, ok = lemma1_overlap_check(rho, eps, alice_pvms(cliff1)[0])
        assert ok and score >= eps ** 2 - 1e-6

    def test_validates_pvms(self, cliff1, rng):
        rho = random_state((2, 2), rng)
        with pytest.raises(ValueError):
            lemma1_guess_bound(rho, np.zeros((24, 2, 2, 2)), cliff1)
        with pytest.raises(ValueError):
            lemma1_guess_bound(rho, alice_pvms(cliff1)[:3], cliff1)
