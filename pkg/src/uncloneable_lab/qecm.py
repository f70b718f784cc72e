"""
The single-bit Clifford encryption scheme and cloning attacks against it.

Plaintext states are ``sigma_x = |x><x| ⊗ omega^(n-1)``; a key is a Clifford
unitary ``U`` and the ciphertext is ``U sigma_x U^†``.  Keys are averaged
exactly over the enumerated group for n <= 2 and by Monte-Carlo sampling for
larger n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import (CliffordElement, UnitaryEnsemble, canonical_phase, clifford_to_unitary,
                       enumerate_clifford, sampled_ensemble)
from .linalg import ChoiChannel, DensityOperator, ptrace_array
from .moe import MoEGame, Strategy, check_povms, game_from_ensemble

__all__ = [
    "QECMScheme",
    "CloningAttack",
    "CloningEstimate",
    "build_scheme",
    "plaintext",
    "encrypt",
    "decrypt",
    "cloning_success",
    "trivial_attack",
    "random_guess_attack",
    "attack_to_strategy",
]


def plaintext(n: int, x: int) -> np.ndarray:
    d = 2 ** n
    m = np.zeros((d, d), dtype=complex)
    half = d // 2
    sl = slice(0, half) if x == 0 else slice(half, d)
    m[sl, sl] = np.eye(half) / half
    return m


@dataclass(frozen=True)
class QECMScheme:
    n: int
    keys: UnitaryEnsemble
    exact: bool

    @property
    def dim(self) -> int:
        return 2 ** self.n

    @property
    def num_keys(self) -> int:
        return len(self.keys)

    def plaintexts(self) -> tuple[DensityOperator, DensityOperator]:
        dims = (2,) * self.n
        return (DensityOperator(plaintext(self.n, 0), dims), DensityOperator(plaintext(self.n, 1), dims))

    def decryption_pvms(self) -> np.ndarray:
        """``U (|b><b| ⊗ I) U^†`` per key, shape ``(K, 2, d, d)``."""
        base = np.stack([plaintext(self.n, b) * (self.dim // 2) for b in (0, 1)])
        u = self.keys.unitaries
        return np.einsum("kij,xjl,kml->kxim", u, base, u.conj())


def build_scheme(n: int, samples: int = 4096, seed: int = 0) -> QECMScheme:
    """Scheme on n qubits; enumerated keys for n <= 2, ``samples`` random keys otherwise."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= 2:
        return QECMScheme(n, enumerate_clifford(n), exact=True)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, n])))
    return QECMScheme(n, sampled_ensemble(n, samples, rng), exact=False)


def _key_unitary(scheme: QECMScheme, key) -> np.ndarray:
    if isinstance(key, CliffordElement):
        if key.n != scheme.n:
            raise ValueError("key acts on the wrong number of qubits")
        return clifford_to_unitary(key)
    if isinstance(key, (int, np.integer)):
        return scheme.keys.unitaries[int(key)]
    u = np.asarray(key, dtype=complex)
    if u.shape != (scheme.dim, scheme.dim):
        raise ValueError("malformed key")
    return u


def encrypt(scheme: QECMScheme, key, x: int) -> DensityOperator:
    """Ciphertext ``U sigma_x U^†``; ``key`` is a tableau, a key index or a unitary."""
    if x not in (0, 1):
        raise ValueError("message must be a bit")
    u = _key_unitary(scheme, key)
    return DensityOperator(u @ plaintext(scheme.n, x) @ u.conj().T, (2,) * scheme.n)


def decrypt(scheme: QECMScheme, key, ct: DensityOperator) -> np.ndarray:
    """Undo the key and measure the first qubit; returns ``[p0, p1]``."""
    if ct.dim != scheme.dim:
        raise ValueError("ciphertext dimension does not match the scheme")
    u = _key_unitary(scheme, key)
    m = u.conj().T @ ct.matrix @ u
    first = ptrace_array(m, (2, scheme.dim // 2), [0])
    return np.clip(np.real(np.diag(first)), 0.0, 1.0)


@dataclass(frozen=True)
class CloningAttack:
    """Pirate channel ``A -> B ⊗ C`` plus per-key binary POVMs for Bob and Charlie."""

    channel: ChoiChannel
    bob_povms: np.ndarray
    charlie_povms: np.ndarray

    def __post_init__(self):
        if len(self.channel.out_dims) != 2:
            raise ValueError("cloning channel must output B ⊗ C")
        b = np.asarray(self.bob_povms, dtype=complex)
        c = np.asarray(self.charlie_povms, dtype=complex)
        check_povms(b)
        check_povms(c)
        db, dc = self.channel.out_dims
        if b.shape[-1] != db or c.shape[-1] != dc or b.shape[0] != c.shape[0]:
            raise ValueError("POVMs do not match the channel output")
        object.__setattr__(self, "bob_povms", b)
        object.__setattr__(self, "charlie_povms", c)


@dataclass(frozen=True)
class CloningEstimate:
    value: float
    stderr: float

    @property
    def ci95(self) -> tuple[float, float]:
        return self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr


def _per_key_success(scheme: QECMScheme, attack: CloningAttack) -> np.ndarray:
    ch = attack.channel
    if ch.d_in != scheme.dim:
        raise ValueError("attack channel input does not match the ciphertext space")
    if attack.bob_povms.shape[0] != scheme.num_keys:
        raise ValueError("attack needs one POVM pair per key")
    u = scheme.keys.unitaries
    pts = np.stack([plaintext(scheme.n, 0), plaintext(scheme.n, 1)])
    cts = np.einsum("kij,xjl,kml->kxim", u, pts, u.conj())
    db, dc = ch.out_dims
    j = ch.choi.matrix.reshape(ch.d_in, ch.d_out, ch.d_in, ch.d_out)
    out = ch.d_in * np.einsum("kxip,iapb->kxab", cts, j, optimize=True)
    out = out.reshape(-1, 2, db, dc, db, dc)
    vals = np.einsum("kxij,kxmn,kxjnim->k", attack.bob_povms, attack.charlie_povms, out, optimize=True)
    return 0.5 * np.real(vals)


def cloning_success(scheme: QECMScheme, attack: CloningAttack, return_stderr: bool = False):
    """Probability that Bob and Charlie both output the encrypted bit.

    Exact key average when the scheme enumerates its keys; otherwise the
    Monte-Carlo mean over the sampled keys, with its standard error when
    ``return_stderr`` is set.
    """
    per_key = _per_key_success(scheme, attack)
    val = float(np.mean(per_key))
    if not return_stderr:
        return val
    err = 0.0 if scheme.exact else float(np.std(per_key, ddof=1) / np.sqrt(per_key.size))
    return CloningEstimate(val, err)


def _append_channel(d: int, dc: int) -> ChoiChannel:
    # rho -> rho ⊗ |0><0|_C
    e0 = np.zeros((dc, dc), dtype=complex)
    e0[0, 0] = 1.0
    return ChoiChannel.from_map(lambda r: np.kron(r, e0), d, d * dc, out_dims=(d, dc))


def trivial_attack(scheme: QECMScheme) -> CloningAttack:
    """Bob receives the ciphertext and decrypts; Charlie always answers 0."""
    k = scheme.num_keys
    chan = _append_channel(scheme.dim, 2)
    charlie = np.zeros((k, 2, 2, 2), dtype=complex)
    charlie[:, 0] = np.eye(2)
    return CloningAttack(chan, scheme.decryption_pvms(), charlie)


def random_guess_attack(scheme: QECMScheme) -> CloningAttack:
    """Both players ignore their systems and answer a fair coin."""
    k = scheme.num_keys
    chan = _append_channel(scheme.dim, 2)
    bob = np.broadcast_to(np.eye(scheme.dim) / 2, (k, 2, scheme.dim, scheme.dim)).copy()
    charlie = np.broadcast_to(np.eye(2) / 2, (k, 2, 2, 2)).copy()
    return CloningAttack(chan, bob, charlie)


def attack_to_strategy(scheme: QECMScheme, attack: CloningAttack) -> tuple[MoEGame, Strategy]:
    """Entanglement-based picture of a cloning attack.

    The shared state is the Choi state ``(id ⊗ Phi)(phi+)`` and the referee
    measures ``U (|b><b| ⊗ I) U^†`` for question ``U``.  Since
    ``Tr[(A ⊗ M)(id ⊗ Phi)(phi+)] = Tr[M Phi(A^T)] / d``, question ``U`` must be
    answered with the POVMs the attack uses for key ``conj(U)``.
    """
    ens = scheme.keys
    try:
        perm = ens.conjugate_indices()
        game = game_from_ensemble(ens)
    except ValueError:
        # sampled key sets need not be closed under conjugation
        conj = np.array([canonical_phase(u.conj()) for u in ens.unitaries])
        game = game_from_ensemble(UnitaryEnsemble(conj, label=ens.label + "-conj"))
        perm = np.arange(len(ens))
    ch = attack.channel
    state = DensityOperator(ch.choi.matrix, (ch.d_in,) + tuple(ch.out_dims))
    strat = Strategy(state, attack.bob_povms[perm], attack.charlie_povms[perm])
    return game, strat
