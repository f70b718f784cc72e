"""
Entropies of finite-dimensional states, in bits.

Von Neumann quantities come straight from spectra.  The conditional
min-entropy is the SDP solved in :mod:`uncloneable_lab.sdp`; the conditional
max-entropy is its purification dual ``H_max(A|B) = -H_min(A|E)``.  The gap
functions at the bottom evaluate the inequalities used in the security
proof on concrete states, each returning a quantity that must be
nonnegative up to solver tolerance.

Bipartitions are given by ``split``: the first ``split`` tensor factors of a
state's ``dims`` form A, the rest form B.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from .linalg import ChoiChannel, DensityOperator, ptrace_array
from .sdp import SDPSolution, solve_min_entropy_sdp

log = logging.getLogger(__name__)

LN2 = np.log(2.0)

__all__ = [
    "CqState",
    "RecoveryError",
    "von_neumann",
    "conditional_vn",
    "mutual_information",
    "min_entropy",
    "recovery_channel",
    "ebit_fraction",
    "purification",
    "max_entropy",
    "max_entropy_from_purification",
    "ssa_uncertainty_gap",
    "ssa_min_entropy_gap",
    "min_max_gap",
    "max_concavity_gap",
]


class RecoveryError(RuntimeError):
    """The extracted recovery channel misses the SDP value."""


def _split_dims(rho: DensityOperator, split: int) -> tuple[int, int]:
    dims = tuple(rho.dims)
    if not 1 <= split < len(dims):
        raise ValueError(f"split {split} does not cut dims {dims} into two nonempty parts")
    return int(np.prod(dims[:split])), int(np.prod(dims[split:]))


def _tripartite(rho: DensityOperator) -> tuple[int, int, int]:
    if len(rho.dims) != 3:
        raise ValueError(f"expected a tripartite state, got dims {tuple(rho.dims)}")
    return tuple(int(d) for d in rho.dims)


def _entropy_of(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(entr(np.clip(w, 0.0, None))) / LN2)


def von_neumann(rho: DensityOperator) -> float:
    """``-Tr rho log2 rho`` with ``0 log 0 = 0``."""
    return _entropy_of(rho.matrix)


def conditional_vn(rho: DensityOperator, split: int = 1) -> float:
    """``H(A|B) = H(AB) - H(B)``."""
    da, db = _split_dims(rho, split)
    return _entropy_of(rho.matrix) - _entropy_of(ptrace_array(rho.matrix, (da, db), [1]))


def mutual_information(rho: DensityOperator, split: int = 1) -> float:
    """``I(A;B) = H(A) + H(B) - H(AB)``."""
    da, db = _split_dims(rho, split)
    m = rho.matrix
    return (_entropy_of(ptrace_array(m, (da, db), [0])) + _entropy_of(ptrace_array(m, (da, db), [1]))
            - _entropy_of(m))


# --------------------------------------------------------------------------
# min- and max-entropy


def _hmin(m: np.ndarray, da: int, db: int, tol: float) -> tuple[float, SDPSolution]:
    sol = solve_min_entropy_sdp(m, (da, db), tol=tol)
    return -float(np.log2(sol.primal_value)), sol


def min_entropy(rho: DensityOperator, tol: float = 1e-8, split: int = 1) -> tuple[float, SDPSolution]:
    """Conditional min-entropy ``H_min(A|B)`` and its certified SDP solution.

    Parameters
    ----------
    rho : DensityOperator
        Normalised or subnormalised state on ``A ⊗ B``.
    tol : float
        Target duality gap in ``Tr sigma``.
    split : int
        Number of leading factors of ``rho.dims`` forming A.

    Raises
    ------
    SDPConvergenceError
        With ``lower``/``upper`` attributes bracketing ``2^(-H_min)``.
    """
    da, db = _split_dims(rho, split)
    return _hmin(rho.matrix, da, db, tol)


def _choi_from_certificate(x: np.ndarray, da: int, db: int) -> np.ndarray:
    # J[(k,i),(l,j)] = X[(j,l),(i,k)] gives dA <phi+|(id ⊗ E)(rho)|phi+> = Tr[rho X]
    t = x.reshape(da, db, da, db)
    return np.einsum("jlik->kilj", t).reshape(db * da, db * da)


def _apply_to_b(m: np.ndarray, j: np.ndarray, da: int, db: int, dout: int) -> np.ndarray:
    r = m.reshape(da, db, da, db)
    jj = j.reshape(db, dout, db, dout)
    return np.einsum("akbl,kilj->aibj", r, jj).reshape(da * dout, da * dout)


def ebit_fraction(rho: DensityOperator, channel: ChoiChannel, split: int = 1) -> float:
    """``|A| <phi+|(id ⊗ E)(rho)|phi+>``, i.e. ``|A| F^2`` against the maximally entangled state."""
    da, db = _split_dims(rho, split)
    if channel.d_in != db or channel.d_out != da:
        raise ValueError("recovery channel must map B to a copy of A")
    out = _apply_to_b(rho.matrix, channel.choi.matrix * db, da, db, da)
    phi = np.eye(da).reshape(-1) / np.sqrt(da)
    return float(da * np.real(phi.conj() @ out @ phi))


def recovery_channel(rho: DensityOperator, sol: SDPSolution, split: int = 1,
                     atol: float = 1e-5) -> ChoiChannel:
    """Channel ``B -> A'`` attaining the min-entropy's ebit fraction.

    Built from the dual certificate ``X``: its partial transpose-swap is the
    Choi matrix of a trace-preserving map whose ebit fraction equals
    ``Tr[rho X]``.  If the result misses ``2^(-H_min)`` by more than
    ``atol`` the SDP is re-solved at a much tighter gap before giving up.
    """
    da, db = _split_dims(rho, split)
    if sol.dims != (da, db):
        raise ValueError("solution does not belong to this bipartition")
    for attempt in range(2):
        j = _choi_from_certificate(sol.dual_certificate, da, db)
        chan = ChoiChannel(DensityOperator(j / db, (db, da), check=False), db, da)
        achieved = ebit_fraction(rho, chan, split)
        if abs(achieved - sol.primal_value) <= atol:
            return chan
        log.warning("recovery channel short by %.2e; re-solving", sol.primal_value - achieved)
        if attempt == 0:
            sol = solve_min_entropy_sdp(rho.matrix, (da, db), tol=min(1e-11, sol.gap / 100 or 1e-11))
    raise RecoveryError(f"ebit fraction {achieved:.8f} misses 2^-Hmin = {sol.primal_value:.8f}")


def purification(rho: DensityOperator, cutoff: float = 1e-12) -> tuple[np.ndarray, int]:
    """Canonical purification ``sum_k sqrt(l_k) |v_k>|k>_E`` over the support.

    Returns the vector on ``rho.dims + (dE,)`` and ``dE = rank``.
    """
    w, v = np.linalg.eigh(0.5 * (rho.matrix + rho.matrix.conj().T))
    keep = w > cutoff * max(1.0, float(w.max()))
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    psi = (v * np.sqrt(w)).reshape(-1)
    return psi, int(keep.sum())


def max_entropy_from_purification(psi: np.ndarray, da: int, db: int, de: int,
                                  tol: float = 1e-8) -> float:
    """``-H_min(A|E)`` for a pure state on ``A ⊗ B ⊗ E``."""
    t = np.asarray(psi, dtype=complex).reshape(da, db, de)
    rho_ae = np.einsum("ibk,jbl->ikjl", t, t.conj()).reshape(da * de, da * de)
    return -_hmin(rho_ae, da, de, tol)[0]


def max_entropy(rho: DensityOperator, tol: float = 1e-8, split: int = 1) -> float:
    """Conditional max-entropy ``H_max(A|B) = -H_min(A|E)`` on the canonical purification."""
    da, db = _split_dims(rho, split)
    psi, de = purification(rho)
    return max_entropy_from_purification(psi, da, db, de, tol)


# --------------------------------------------------------------------------
# inequality gaps


def ssa_uncertainty_gap(rho: DensityOperator) -> float:
    """``H(A|B) + H(A|C)`` for a state on ``A ⊗ B ⊗ C``; never negative."""
    da, db, dc = _tripartite(rho)
    m = rho.matrix
    ab = ptrace_array(m, (da, db, dc), [0, 1])
    ac = ptrace_array(m, (da, db, dc), [0, 2])
    b = ptrace_array(m, (da, db, dc), [1])
    c = ptrace_array(m, (da, db, dc), [2])
    return _entropy_of(ab) - _entropy_of(b) + _entropy_of(ac) - _entropy_of(c)


def ssa_min_entropy_gap(rho: DensityOperator, tol: float = 1e-8) -> float:
    """``H_min(A|B) - H_min(A|BC)``; conditioning on more cannot raise min-entropy."""
    da, db, dc = _tripartite(rho)
    ab = ptrace_array(rho.matrix, (da, db, dc), [0, 1])
    return _hmin(ab, da, db, tol)[0] - _hmin(rho.matrix, da, db * dc, tol)[0]


def min_max_gap(rho: DensityOperator, tol: float = 1e-8, split: int = 1) -> float:
    """``H_max(A|B) - H_min(A|B)``."""
    return max_entropy(rho, tol, split) - min_entropy(rho, tol, split)[0]


@dataclass(frozen=True)
class CqState:
    """``sum_j p_j rho_j ⊗ |j><j|_J`` with every ``rho_j`` on the same ``A ⊗ B``."""

    components: tuple[tuple[float, DensityOperator], ...]

    def __post_init__(self):
        comps = tuple((float(p), r) for p, r in self.components)
        if not comps:
            raise ValueError("a cq state needs at least one component")
        p = np.array([c[0] for c in comps])
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        dims = tuple(comps[0][1].dims)
        if len(dims) != 2 or any(tuple(r.dims) != dims for _, r in comps):
            raise ValueError("components must share one bipartite A ⊗ B profile")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for p, _ in self.components])

    def joint(self) -> DensityOperator:
        """State on ``A ⊗ B ⊗ J``."""
        k = len(self.components)
        dims = tuple(self.components[0][1].dims)
        d = int(np.prod(dims))
        out = np.zeros((d * k, d * k), dtype=complex)
        for j, (p, r) in enumerate(self.components):
            proj = np.zeros((k, k))
            proj[j, j] = 1.0
            out += p * np.kron(r.matrix, proj)
        return DensityOperator(out, dims + (k,), check=False)


def max_concavity_gap(cq: CqState, tol: float = 1e-8) -> float:
    """``H_max(A|BJ) - sum_j p_j H_max(A|B)_j`` for a cq state; never negative."""
    total = max_entropy(cq.joint(), tol, split=1)
    parts = sum(p * max_entropy(r, tol) for p, r in cq.components if p > 0)
    return total - parts
