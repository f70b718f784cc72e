"""
One-shot decoupling and the guess-to-overlap lemma on explicit instances.

The discarding map is the partial trace onto the first ``m`` qubits of an
``n``-qubit register A.  Its Choi state is ``phi+`` on the kept qubits
tensored with the maximally mixed state on the rest, so its min-entropy is
``n - 2m`` and it is built analytically.  Trace distances use the
normalised ``1/2 ||.||_1`` convention throughout, so the decoupling bound
reads ``2^(-H_min(A|E)/2 - H_min(A|B)_tau/2 - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import UnitaryEnsemble
from .entropy import min_entropy, recovery_channel
from .linalg import DensityOperator, maximally_entangled, maximally_mixed, ptrace_array
from .moe import _comp_pvm, check_povms, helstrom_update

__all__ = [
    "DecouplingReport",
    "decoupling_choi_state",
    "decoupling_verify",
    "alice_pvms",
    "helstrom_bob_pvms",
    "lemma1_guess_bound",
    "lemma1_overlap_check",
]

EXACT_ATOL = 1e-8
BATCH = 2048


@dataclass(frozen=True)
class DecouplingReport:
    lhs: float
    lhs_stderr: float
    rhs: float
    mode: str
    hmin_ae: float
    hmin_tau: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.mode == "exact-2-design":
            return self.margin >= -EXACT_ATOL
        return self.margin >= -3.0 * self.lhs_stderr


def _qubits(d: int) -> int:
    n = int(round(np.log2(d)))
    if 2 ** n != d:
        raise ValueError(f"register of dimension {d} is not a qubit register")
    return n


def decoupling_choi_state(n: int, m: int) -> DensityOperator:
    """Choi state of the partial trace onto the first ``m`` of ``n`` qubits, on ``A ⊗ B``.

    A is ordered (kept qubits, traced qubits); B holds the m output qubits.
    """
    if not 0 < m <= n:
        raise ValueError("need 0 < m <= n")
    kept = maximally_entangled(2 ** m).matrix.reshape(2 ** m, 2 ** m, 2 ** m, 2 ** m)
    rest = maximally_mixed(2 ** (n - m)).matrix
    t = np.einsum("abcd,ef->aebcfd", kept, rest)
    d = 2 ** (n + m)
    return DensityOperator(t.reshape(d, d), (2 ** n, 2 ** m))


def _trace_norms(batch: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(batch)
    return 0.5 * np.abs(w).sum(axis=-1)


def _decoupling_distances(rho: np.ndarray, da: int, de: int, m: int, us: np.ndarray) -> np.ndarray:
    db = 2 ** m
    dt = da // db
    rho_e = ptrace_array(rho, (da, de), [1])
    target = np.kron(np.eye(db) / db, rho_e)
    r = rho.reshape(da, de, da, de)
    out = np.empty(len(us))
    for s in range(0, len(us), BATCH):
        u = us[s:s + BATCH]
        # (U ⊗ 1) rho (U ⊗ 1)^†, then discard all but the first m qubits
        t = np.einsum("kij,jelf,kml->kiemf", u, r, u.conj(), optimize=True)
        t = t.reshape(len(u), db, dt, de, db, dt, de)
        red = np.einsum("kaxebxf->kaebf", t).reshape(len(u), db * de, db * de)
        out[s:s + len(u)] = _trace_norms(red - target)
    return out


def decoupling_verify(rho: DensityOperator, m: int, ensemble: UnitaryEnsemble,
                      samples: int | None = None, rng: np.random.Generator | None = None,
                      mode: str | None = None, tol: float = 1e-8) -> DecouplingReport:
    """Compare the averaged decoupling distance with its min-entropy bound.

    Parameters
    ----------
    rho : DensityOperator
        State on ``A ⊗ E`` with dims ``(2^n, dE)``.
    m : int
        Number of leading qubits of A kept by the discarding map.
    ensemble : UnitaryEnsemble
        Unitaries on A.  In exact mode the average runs over every member.
    samples : int, optional
        Draw this many members uniformly (with replacement) from ``ensemble``.
    mode : {"exact", "mc"}, optional
        Defaults to ``"mc"`` when ``samples`` is given, else ``"exact"``.
        In ``"mc"`` mode the averaged unitaries are treated as i.i.d. draws
        and a standard error is reported.
    """
    if len(rho.dims) != 2:
        raise ValueError("rho must be bipartite A ⊗ E")
    da, de = rho.dims
    n = _qubits(da)
    if ensemble.dim != da:
        raise ValueError("ensemble does not act on A")
    if not 0 < m <= n:
        raise ValueError("need 0 < m <= n")
    mode = mode or ("mc" if samples is not None else "exact")
    if mode not in ("exact", "mc"):
        raise ValueError(f"unknown mode {mode!r}")
    us = ensemble.unitaries
    if samples is not None:
        if rng is None:
            raise ValueError("sampling needs an rng")
        us = us[rng.integers(0, len(us), size=samples)]
    dist = _decoupling_distances(rho.matrix, da, de, m, us)
    lhs = float(dist.mean())
    err = float(dist.std(ddof=1) / np.sqrt(dist.size)) if mode == "mc" and dist.size > 1 else 0.0

    h_ae, _ = min_entropy(rho, tol)
    tau = decoupling_choi_state(n, m)
    h_tau, _ = min_entropy(tau, tol)
    rhs = float(2.0 ** (-0.5 * h_ae - 0.5 * h_tau - 1.0))
    return DecouplingReport(lhs, err, rhs, "exact-2-design" if mode == "exact" else "monte-carlo",
                            h_ae, h_tau)


# --------------------------------------------------------------------------
# guess probability -> overlap


def alice_pvms(ensemble: UnitaryEnsemble) -> np.ndarray:
    """``U (|b><b| ⊗ I) U^†`` for each unitary, shape ``(K, 2, d, d)``."""
    base = _comp_pvm(ensemble.dim, 0)
    u = ensemble.unitaries
    return np.einsum("kij,xjl,kml->kxim", u, base, u.conj())


def _bob_scores(rho: DensityOperator, a: np.ndarray) -> np.ndarray:
    da, db = rho.dims
    r = rho.matrix.reshape(da, db, da, db)
    return np.einsum("kxij,jbia->kxba", a, r, optimize=True)


def helstrom_bob_pvms(rho: DensityOperator, ensemble: UnitaryEnsemble) -> np.ndarray:
    """Bob's optimal PVM per key for guessing Alice's outcome."""
    s = _bob_scores(rho, alice_pvms(ensemble))
    return helstrom_update(s[:, 0], s[:, 1])


def lemma1_guess_bound(rho: DensityOperator, bob_pvms: np.ndarray, ensemble: UnitaryEnsemble,
                       tol: float = 1e-8) -> tuple[float, float]:
    """Averaged guessing probability and the decoupling bound ``1/2 + 2^(-H_min(A|B)/2 - n/2)``."""
    if len(rho.dims) != 2:
        raise ValueError("rho must be bipartite A ⊗ B")
    da, db = rho.dims
    n = _qubits(da)
    bob = np.asarray(bob_pvms, dtype=complex)
    check_povms(bob, projective=True)
    if bob.shape[0] != len(ensemble) or bob.shape[1] != 2 or bob.shape[-1] != db:
        raise ValueError("need one binary PVM on B per ensemble member")
    s = _bob_scores(rho, alice_pvms(ensemble))
    guess = float(np.real(np.einsum("kxab,kxba->", bob, s))) / len(ensemble)
    h, _ = min_entropy(rho, tol)
    return guess, float(0.5 + 2.0 ** (-0.5 * h - 0.5 * n))


def lemma1_overlap_check(rho: DensityOperator, epsilon: float, alice_pvm: np.ndarray,
                         tol: float = 1e-8, atol: float = 1e-6) -> tuple[float, bool]:
    """``sum_x Tr[(A_x ⊗ conj(A_x)) (1 ⊗ E)(rho)]`` for the min-entropy recovery map E.

    Returns the score and whether it reaches ``epsilon^2 - atol``.
    """
    if len(rho.dims) != 2:
        raise ValueError("rho must be bipartite A ⊗ B")
    da, db = rho.dims
    a = np.asarray(alice_pvm, dtype=complex)
    check_povms(a[None], projective=True)
    if a.shape[-1] != da:
        raise ValueError("PVM does not act on A")
    _, sol = min_entropy(rho, tol)
    chan = recovery_channel(rho, sol)
    j = chan.choi.matrix.reshape(db, da, db, da) * db
    out = np.einsum("akbl,kilj->aibj", rho.matrix.reshape(da, db, da, db), j)
    out = out.reshape(da * da, da * da)
    ops = np.einsum("xij,xkl->ikjl", a, a.conj()).reshape(da * da, da * da)
    score = float(np.real(np.trace(ops @ out)))
    return score, bool(score >= epsilon ** 2 - atol)
