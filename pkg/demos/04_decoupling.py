"""Random Cliffords followed by discarding qubits decouple A from its environment."""

# %%
import numpy as np

from uncloneable_lab.clifford import enumerate_clifford
from uncloneable_lab.decoupling import (alice_pvms, decoupling_verify, helstrom_bob_pvms,
                                        lemma1_guess_bound, lemma1_overlap_check)
from uncloneable_lab.linalg import maximally_entangled, random_state

rng = np.random.default_rng(4)
ens = enumerate_clifford(2)

# %% Exact average over all 11520 two-qubit Cliffords, keeping one qubit.
for label, rho in [("random", random_state((4, 2), rng)), ("maximally entangled", maximally_entangled(4))]:
    rep = decoupling_verify(rho, 1, ens)
    print(f"{label:>20}: distance {rep.lhs:.6f} <= bound {rep.rhs:.6f}  (margin {rep.margin:+.2e})")

# %% Guessing a measured qubit from side information is capped by the min-entropy,
# and any advantage eps forces the recovery map to reproduce the measurement with overlap eps^2.
ens1 = enumerate_clifford(1)
rho = random_state((2, 2), rng)
guess, bound = lemma1_guess_bound(rho, helstrom_bob_pvms(rho, ens1), ens1)
eps = max(0.0, guess - 0.5)
score, ok = lemma1_overlap_check(rho, eps, alice_pvms(ens1)[0])
print(f"guess {guess:.6f} <= bound {bound:.6f};  overlap {score:.6f} >= eps^2 {eps ** 2:.6f}: {ok}")
