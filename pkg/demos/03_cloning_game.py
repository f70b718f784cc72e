"""The Clifford encryption of one bit, simple cloning attacks, and the dual game."""

# %%
import numpy as np

from uncloneable_lab.moe import build_game, seesaw_optimize, winning_probability
from uncloneable_lab.qecm import (attack_to_strategy, build_scheme, cloning_success, decrypt,
                                  encrypt, random_guess_attack, trivial_attack)

# %% Encrypt and decrypt under every key of the one-qubit scheme.
scheme = build_scheme(1)
worst = max(abs(decrypt(scheme, k, encrypt(scheme, k, x))[x] - 1)
            for k in range(scheme.num_keys) for x in (0, 1))
print(f"{scheme.num_keys} keys, worst round-trip error {worst:.1e}")

# %% Baselines: hand the ciphertext to Bob (1/2) or let both guess (1/4).
print("Bob keeps the ciphertext:", cloning_success(scheme, trivial_attack(scheme)))
print("both players guess      :", cloning_success(scheme, random_guess_attack(scheme)))

# %% The same attack seen as a strategy in the entanglement-based game.
game, strat = attack_to_strategy(scheme, trivial_attack(scheme))
print("as a game strategy      :", winning_probability(game, strat))

# %% See-saw lower bounds. BB84 reaches its known optimum 1/2 + 1/(2 sqrt 2).
bb84 = seesaw_optimize(build_game("bb84"), 2, 2, restarts=32, seed=0)
print(f"BB84 see-saw value  {bb84.value:.6f}  vs  {0.5 + 1 / (2 * np.sqrt(2)):.6f}")

# %% The 24-question game for the one-qubit scheme (a measured lower bound).
cliff = seesaw_optimize(build_game("clifford", 1), 2, 2, restarts=8, seed=0)
print(f"Clifford n=1 value  {cliff.value:.6f}  (best restart {cliff.best_restart})")
