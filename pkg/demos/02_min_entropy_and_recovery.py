"""Conditional min-entropy as an SDP, and the recovery channel read off its dual."""

# %%
import numpy as np

from uncloneable_lab.entropy import (conditional_vn, ebit_fraction, max_entropy, min_entropy,
                                     recovery_channel)
from uncloneable_lab.linalg import maximally_entangled, random_state

rng = np.random.default_rng(2)

# %% Maximal entanglement: H_min(A|B) = -log d.
for d in (2, 3, 4):
    h, sol = min_entropy(maximally_entangled(d))
    print(f"d={d}: H_min = {h:+.9f}  (gap {sol.gap:.1e}, {sol.iterations} iterations)")

# %% For a generic state, min <= von Neumann <= max.
rho = random_state((2, 2), rng)
h_min, sol = min_entropy(rho)
print(f"H_min = {h_min:+.6f}, H = {conditional_vn(rho):+.6f}, H_max = {max_entropy(rho):+.6f}")

# %% The dual certificate is the Choi matrix of the best "undo B into a copy of A" channel.
chan = recovery_channel(rho, sol)
print(f"|A| F^2 achieved = {ebit_fraction(rho, chan):.9f}")
print(f"2^-H_min         = {2 ** -h_min:.9f}")
