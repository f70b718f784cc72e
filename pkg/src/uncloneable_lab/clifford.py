"""
The n-qubit Clifford group in the binary symplectic picture.

A Clifford element (modulo global phase) is a pair ``(S, r)``: ``S`` is a
2n x 2n binary symplectic matrix whose column ``j`` is the image of ``X_j``
and column ``n + j`` the image of ``Z_j``, both written as ``(x | z)``
vectors; ``r`` holds the sign bits of those images.  Paulis are the
Hermitian operators ``P(x, z) = ⊗_k i^(x_k z_k) X^x_k Z^z_k`` and qubit 0 is
the leftmost tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np


MAX_SYNTH_QUBITS = 6

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


def symplectic_form(n: int) -> np.ndarray:
    om = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    om[:n, n:] = np.eye(n, dtype=np.uint8)
    om[n:, :n] = np.eye(n, dtype=np.uint8)
    return om


def symplectic_product(u: np.ndarray, v: np.ndarray) -> int:
    n = u.size // 2
    return int((u[:n] @ v[n:] + u[n:] @ v[:n]) % 2)


def is_symplectic(s: np.ndarray) -> bool:
    s = np.asarray(s, dtype=np.int64)
    n = s.shape[0] // 2
    om = symplectic_form(n).astype(np.int64)
    return bool(np.array_equal((s.T @ om @ s) % 2, om))


def pauli_matrix(v: Sequence[int]) -> np.ndarray:
    """Hermitian Pauli operator for the binary vector ``v = (x | z)``."""
    v = np.asarray(v, dtype=np.int64)
    n = v.size // 2
    out = np.ones((1, 1), dtype=complex)
    for k in range(n):
        x, z = v[k], v[n + k]
        if x and z:
            f = _Y
        elif x:
            f = _X
        elif z:
            f = _Z
        else:
            f = _I2
        out = np.kron(out, f)
    return out


def pauli_from_matrix(m: np.ndarray, atol: float = 1e-8) -> tuple[np.ndarray, int]:
    """Identify ``m = (-1)^s P(x, z)``; returns ``(v, s)`` or raises ValueError."""
    d = m.shape[0]
    n = d.bit_length() - 1
    col0 = np.abs(m[:, 0])
    xi = int(np.argmax(col0))
    x = np.array([(xi >> (n - 1 - k)) & 1 for k in range(n)], dtype=np.int64)
    # X^x m should be diagonal with entries ±i^(x.z) (-1)^(z.b)
    xm = pauli_matrix(np.concatenate([x, np.zeros(n, dtype=np.int64)])) @ m
    diag = np.diag(xm)
    if np.max(np.abs(xm - np.diag(diag))) > atol:
        raise ValueError("matrix is not a Pauli operator")
    z = np.zeros(n, dtype=np.int64)
    for k in range(n):
        b = 1 << (n - 1 - k)
        z[k] = 0 if abs(diag[b] - diag[0]) < atol else 1
    v = np.concatenate([x, z])
    p = pauli_matrix(v)
    if np.max(np.abs(m - p)) < atol:
        return v, 0
    if np.max(np.abs(m + p)) < atol:
        return v, 1
    raise ValueError("matrix is not a Hermitian signed Pauli operator")


@dataclass(frozen=True)
class CliffordElement:
    """Tableau ``(S, r)`` of an n-qubit Clifford unitary modulo global phase."""

    n: int
    symplectic: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.symplectic, dtype=np.uint8) % 2
        r = np.asarray(self.phases, dtype=np.uint8).ravel() % 2
        if s.shape != (2 * self.n, 2 * self.n) or r.shape != (2 * self.n,):
            raise ValueError("tableau shape does not match n")
        if not is_symplectic(s):
            raise ValueError("matrix does not preserve the symplectic form")
        s.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "symplectic", s)
        object.__setattr__(self, "phases", r)

    @classmethod
    def identity(cls, n: int) -> "CliffordElement":
        return cls(n, np.eye(2 * n, dtype=np.uint8), np.zeros(2 * n, dtype=np.uint8))

    def image(self, j: int) -> tuple[np.ndarray, int]:
        """Image of generator ``j`` (``X_j`` for j < n, ``Z_{j-n}`` otherwise)."""
        return self.symplectic[:, j].astype(np.int64), int(self.phases[j])

    def to_unitary(self) -> np.ndarray:
        return clifford_to_unitary(self)

    def to_record(self) -> dict:
        return {"n": self.n,
                "symplectic": self.symplectic.astype(int).tolist(),
                "phases": self.phases.astype(int).tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "CliffordElement":
        return cls(int(rec["n"]), np.array(rec["symplectic"]), np.array(rec["phases"]))

    def __eq__(self, other):
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.symplectic, other.symplectic)
                and np.array_equal(self.phases, other.phases))

    def __hash__(self):
        return hash((self.n, self.symplectic.tobytes(), self.phases.tobytes()))


# --------------------------------------------------------------------------
# sampling


def _complement_project(u: np.ndarray, pairs: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    # u -> u + sum <u,w> v + <u,v> w lands in the symplectic complement of the pairs
    for v, w in pairs:
        u = (u + symplectic_product(u, w) * v + symplectic_product(u, v) * w) % 2
    return u


def random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform element of Sp(2n, 2) by symplectic Gram-Schmidt.

    Each step draws uniformly from the symplectic complement of the pairs
    chosen so far, so every group element is produced with equal weight.
    """
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(n):
        while True:
            v = _complement_project(rng.integers(0, 2, 2 * n), pairs)
            if v.any():
                break
        while True:
            w = _complement_project(rng.integers(0, 2, 2 * n), pairs)
            if symplectic_product(v, w) == 1:
                break
        pairs.append((v, w))
    s = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    for j, (v, w) in enumerate(pairs):
        s[:, j] = v
        s[:, n + j] = w
    return s


def sample_clifford(n: int, rng: np.random.Generator | int) -> CliffordElement:
    """Uniformly random Clifford element modulo global phase."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    s = random_symplectic(n, rng)
    r = rng.integers(0, 2, 2 * n).astype(np.uint8)
    return CliffordElement(n, s, r)


# --------------------------------------------------------------------------
# synthesis


def canonical_phase(u: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """Rotate the global phase so the first nonzero entry is positive real."""
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > atol))
    ph = flat[idx] / abs(flat[idx])
    return u / ph


def clifford_to_unitary(c: CliffordElement) -> np.ndarray:
    """Unitary whose Pauli conjugation action reproduces the tableau.

    ``U|0..0>`` is the stabilizer state of the images of the ``Z_j``;
    ``U|x>`` is obtained by applying the images of the ``X_j`` selected by
    the bits of ``x``.
    """
    n = c.n
    if n > MAX_SYNTH_QUBITS:
        raise ValueError(f"matrix synthesis capped at {MAX_SYNTH_QUBITS} qubits")
    d = 2 ** n
    xs, zs = [], []
    for j in range(n):
        v, s = c.image(j)
        xs.append((-1) ** s * pauli_matrix(v))
        v, s = c.image(n + j)
        zs.append((-1) ** s * pauli_matrix(v))
    proj = np.eye(d, dtype=complex)
    for zp in zs:
        proj = proj @ (np.eye(d) + zp) / 2
    k = int(np.argmax(np.linalg.norm(proj, axis=0)))
    psi0 = proj[:, k] / np.linalg.norm(proj[:, k])
    u = np.zeros((d, d), dtype=complex)
    for x in range(d):
        col = psi0
        for j in range(n):
            if (x >> (n - 1 - j)) & 1:
                col = xs[j] @ col
        u[:, x] = col
    return canonical_phase(u)


def clifford_from_unitary(u: np.ndarray) -> CliffordElement:
    """Read the tableau off a Clifford unitary by conjugating the generators."""
    d = u.shape[0]
    n = d.bit_length() - 1
    s = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    r = np.zeros(2 * n, dtype=np.uint8)
    for j in range(2 * n):
        e = np.zeros(2 * n, dtype=np.int64)
        e[j] = 1
        v, sign = pauli_from_matrix(u @ pauli_matrix(e) @ u.conj().T)
        s[:, j] = v
        r[j] = sign
    return CliffordElement(n, s, r)


def compose(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Tableau of ``U_a U_b``."""
    return clifford_from_unitary(clifford_to_unitary(a) @ clifford_to_unitary(b))


def inverse(a: CliffordElement) -> CliffordElement:
    return clifford_from_unitary(clifford_to_unitary(a).conj().T)


# --------------------------------------------------------------------------
# ensembles


def unitary_key(u: np.ndarray) -> bytes:
    """Hashable fingerprint of a phase-canonical unitary."""
    return np.round(np.concatenate([u.real.ravel(), u.imag.ravel()]) * 1e6).astype(np.int64).tobytes()


@dataclass(frozen=True)
class UnitaryEnsemble:
    """Uniformly weighted finite set of unitaries, optionally with tableaux."""

    unitaries: np.ndarray
    tableaux: tuple[CliffordElement, ...] = ()
    label: str = ""

    def __post_init__(self):
        u = np.asarray(self.unitaries, dtype=complex)
        if u.ndim != 3 or u.shape[1] != u.shape[2]:
            raise ValueError("unitaries must have shape (K, d, d)")
        eye = np.eye(u.shape[1])
        dev = np.max(np.abs(np.einsum("kji,kjl->kil", u.conj(), u) - eye))
        if dev > 1e-10:
            raise ValueError(f"ensemble element not unitary (deviation {dev:.2e})")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "unitaries", u)

    def __len__(self) -> int:
        return self.unitaries.shape[0]

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    def index_of(self) -> dict[bytes, int]:
        return {unitary_key(canonical_phase(u)): k for k, u in enumerate(self.unitaries)}

    def conjugate_indices(self) -> np.ndarray:
        """``out[k]`` is the index of ``conj(U_k)``; requires closure under conjugation."""
        lookup = self.index_of()
        out = np.empty(len(self), dtype=np.int64)
        for k, u in enumerate(self.unitaries):
            key = unitary_key(canonical_phase(u.conj()))
            if key not in lookup:
                raise ValueError("ensemble is not closed under complex conjugation")
            out[k] = lookup[key]
        return out


def _all_symplectic(n: int) -> np.ndarray:
    m = 2 * n
    bits = np.array(list(product((0, 1), repeat=m * m)), dtype=np.int64).reshape(-1, m, m)
    om = symplectic_form(n).astype(np.int64)
    conj = np.einsum("kji,jl,klm->kim", bits, om, bits) % 2
    ok = np.all(conj == om, axis=(1, 2))
    return bits[ok].astype(np.uint8)


def group_order(n: int) -> int:
    """Order of the n-qubit Clifford group modulo phase: 2^(n^2+2n) prod (4^j - 1)."""
    out = 2 ** (n * n + 2 * n)
    for j in range(1, n + 1):
        out *= 4 ** j - 1
    return out


@lru_cache(maxsize=None)
def _enumerate(n: int) -> UnitaryEnsemble:
    tabs = []
    us = []
    for s in _all_symplectic(n):
        for bits in product((0, 1), repeat=2 * n):
            c = CliffordElement(n, s, np.array(bits, dtype=np.uint8))
            tabs.append(c)
            us.append(clifford_to_unitary(c))
    return UnitaryEnsemble(np.array(us), tuple(tabs), label=f"clifford-{n}")


def enumerate_clifford(n: int) -> UnitaryEnsemble:
    """Every n-qubit Clifford modulo phase (n = 1 or 2): 24 or 11520 elements."""
    if n not in (1, 2):
        raise ValueError("enumeration is only supported for n in {1, 2}")
    return _enumerate(n)


def sampled_ensemble(n: int, count: int, rng: np.random.Generator | int) -> UnitaryEnsemble:
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    tabs = tuple(sample_clifford(n, rng) for _ in range(count))
    return UnitaryEnsemble(np.array([clifford_to_unitary(c) for c in tabs]), tabs,
                           label=f"clifford-{n}-sampled")


# --------------------------------------------------------------------------
# design checks


def haar_twirl(x: np.ndarray, d: int, t: int) -> np.ndarray:
    """Closed-form Haar average of ``U^⊗t X U^†⊗t`` for t = 1, 2."""
    if t == 1:
        return np.trace(x) * np.eye(d) / d
    if t == 2:
        swap = np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)
        eye = np.eye(d * d)
        out = np.zeros((d * d, d * d), dtype=complex)
        for proj in ((eye + swap) / 2, (eye - swap) / 2):
            tr = np.real(np.trace(proj))
            if tr > 0:
                out += np.trace(x @ proj) / tr * proj
        return out
    raise ValueError("only t = 1 or 2 is supported")


def ensemble_twirl(ens: UnitaryEnsemble, x: np.ndarray, t: int) -> np.ndarray:
    u = ens.unitaries
    if t == 1:
        v = u
    elif t == 2:
        k, d, _ = u.shape
        v = np.einsum("kij,klm->kiljm", u, u).reshape(k, d * d, d * d)
    else:
        raise ValueError("only t = 1 or 2 is supported")
    return (v @ x @ v.conj().transpose(0, 2, 1)).sum(axis=0) / u.shape[0]


def twirl_deviation(ens: UnitaryEnsemble, x: np.ndarray, t: int) -> float:
    """Trace-norm distance between the ensemble twirl and the Haar twirl of ``x``."""
    x = np.asarray(x, dtype=complex)
    d = ens.dim
    if x.shape != (d ** t, d ** t):
        raise ValueError(f"X must be {d ** t} x {d ** t} for t={t}")
    diff = ensemble_twirl(ens, x, t) - haar_twirl(x, d, t)
    # X need not be Hermitian; use singular values for the trace norm
    return 0.5 * float(np.sum(np.linalg.svd(diff, compute_uv=False)))


def stabilizer_image(u: np.ndarray) -> bytes:
    """Fingerprint of the stabilizer state ``U|0..0>`` (phase-insensitive)."""
    psi = u[:, 0]
    return unitary_key(canonical_phase(np.outer(psi, psi.conj())))
