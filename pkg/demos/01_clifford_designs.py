"""Clifford tableaux, their unitaries, and a numerical 2-design check."""

# %%
import numpy as np

from uncloneable_lab.clifford import (enumerate_clifford, clifford_to_unitary, group_order,
                                      sample_clifford, twirl_deviation, UnitaryEnsemble)

rng = np.random.default_rng(1)

# %% A tableau records where each Pauli generator goes; the unitary is synthesised from it.
c = sample_clifford(2, rng)
print("symplectic part:\n", c.symplectic)
print("phase bits:", c.phases)
u = clifford_to_unitary(c)
print("unitary is unitary:", np.allclose(u.conj().T @ u, np.eye(4)))

# %% The full one- and two-qubit groups, enumerated up to global phase.
for n in (1, 2):
    ens = enumerate_clifford(n)
    print(f"n={n}: {len(ens)} elements (expected {group_order(n)})")

# %% Averaging U^{⊗2} X U^{†⊗2} over the group matches the Haar average.
ens = enumerate_clifford(2)
x = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
print("2-design deviation, Clifford group:", twirl_deviation(ens, x, 2))

# %% A single unitary is nowhere near a design.
lonely = UnitaryEnsemble(np.eye(4, dtype=complex)[None])
print("2-design deviation, identity only:", twirl_deviation(lonely, x, 2))
