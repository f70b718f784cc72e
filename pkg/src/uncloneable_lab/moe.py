"""
Monogamy-of-entanglement games and a see-saw optimiser for lower bounds.

A game is a list of questions, each with a binary PVM for the referee on
register A.  A strategy is a tripartite state on ``A ⊗ B ⊗ C`` plus one
binary POVM per question for each player.  Measurement families are stored
as arrays of shape ``(Q, 2, d, d)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .clifford import UnitaryEnsemble, enumerate_clifford
from .linalg import ChoiChannel, DensityOperator, permute_systems, random_unitary, trace_norm

log = logging.getLogger(__name__)

POVM_ATOL = 1e-9

__all__ = [
    "MoEGame",
    "Strategy",
    "SeesawResult",
    "build_game",
    "game_from_ensemble",
    "winning_probability",
    "helstrom_update",
    "seesaw_optimize",
    "choi_swap_symmetry",
    "check_povms",
]


def check_povms(povms: np.ndarray, projective: bool = False, atol: float = POVM_ATOL) -> None:
    """Raise ValueError unless every ``povms[q]`` is a valid (projective) measurement."""
    povms = np.asarray(povms)
    if povms.ndim != 4 or povms.shape[2] != povms.shape[3]:
        raise ValueError(f"measurement array must be (Q, X, d, d), got {povms.shape}")
    d = povms.shape[-1]
    herm = np.max(np.abs(povms - np.conj(np.swapaxes(povms, -1, -2))))
    if herm > atol:
        raise ValueError(f"measurement element not Hermitian ({herm:.2e})")
    mins = np.linalg.eigvalsh(povms).min()
    if mins < -atol:
        raise ValueError(f"measurement element not PSD (min eigenvalue {mins:.2e})")
    comp = np.max(np.abs(povms.sum(axis=1) - np.eye(d)))
    if comp > atol:
        raise ValueError(f"measurement elements do not sum to identity ({comp:.2e})")
    if projective:
        idem = np.max(np.abs(povms @ povms - povms))
        if idem > atol:
            raise ValueError(f"PVM element is not a projector ({idem:.2e})")


@dataclass(frozen=True)
class MoEGame:
    """Uniformly weighted questions with a binary PVM for the referee each."""

    alice_pvms: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.alice_pvms, dtype=complex)
        check_povms(a, projective=True)
        a.setflags(write=False)
        object.__setattr__(self, "alice_pvms", a)

    @property
    def num_questions(self) -> int:
        return self.alice_pvms.shape[0]

    @property
    def dim_a(self) -> int:
        return self.alice_pvms.shape[-1]


@dataclass(frozen=True)
class Strategy:
    state: DensityOperator
    bob_povms: np.ndarray
    charlie_povms: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bob_povms, dtype=complex)
        c = np.asarray(self.charlie_povms, dtype=complex)
        check_povms(b)
        check_povms(c)
        if b.shape[0] != c.shape[0]:
            raise ValueError("Bob and Charlie must answer the same number of questions")
        if len(self.state.dims) != 3:
            raise ValueError("strategy state must be tripartite")
        _, db, dc = self.state.dims
        if b.shape[-1] != db or c.shape[-1] != dc:
            raise ValueError("POVM dimensions do not match the state")
        object.__setattr__(self, "bob_povms", b)
        object.__setattr__(self, "charlie_povms", c)


def _comp_pvm(d: int, first: int) -> np.ndarray:
    p = np.zeros((2, d, d), dtype=complex)
    half = d // 2
    p[first, :half, :half] = np.eye(half)
    p[1 - first, half:, half:] = np.eye(d - half)
    return p


def game_from_ensemble(ens: UnitaryEnsemble, label: str = "") -> MoEGame:
    """Referee PVMs ``U (|b><b| ⊗ I) U^†`` for every ``U`` in the ensemble."""
    d = ens.dim
    base = _comp_pvm(d, 0)
    a = np.einsum("qij,xjk,qlk->qxil", ens.unitaries, base, ens.unitaries.conj())
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    return MoEGame(a, label=label or ens.label)


def build_game(kind: str, n: int = 1) -> MoEGame:
    """``bb84`` (n = 1, computational and Hadamard bases) or ``clifford-scheme``."""
    if kind == "bb84":
        if n != 1:
            raise ValueError("the BB84 game is defined for n = 1 only")
        h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        comp = _comp_pvm(2, 0)
        had = np.einsum("ij,xjk,kl->xil", h, comp, h)
        return MoEGame(np.stack([comp, had]), label="bb84")
    if kind in ("clifford", "clifford-scheme"):
        if n not in (1, 2):
            raise ValueError("the Clifford-scheme game needs the enumerated group (n in {1, 2})")
        return game_from_ensemble(enumerate_clifford(n), label=f"clifford-{n}")
    raise ValueError(f"unsupported game kind {kind!r}")


def _state_tensor(state: DensityOperator) -> np.ndarray:
    da, db, dc = state.dims
    return state.matrix.reshape(da, db, dc, da, db, dc)


def winning_probability(game: MoEGame, strat: Strategy) -> float:
    """Average over questions of ``sum_x Tr[(A_x ⊗ B_x ⊗ C_x) rho]``."""
    if strat.bob_povms.shape[0] != game.num_questions:
        raise ValueError("strategy and game disagree on the number of questions")
    if strat.state.dims[0] != game.dim_a:
        raise ValueError("state register A does not match the game")
    r = _state_tensor(strat.state)
    val = np.einsum("qxij,qxkl,qxmn,jlnikm->", game.alice_pvms, strat.bob_povms,
                    strat.charlie_povms, r, optimize=True)
    return float(np.real(val)) / game.num_questions


def helstrom_update(m0: np.ndarray, m1: np.ndarray) -> np.ndarray:
    """Optimal binary POVM for the scores ``Tr[B0 M0] + Tr[B1 M1]``.

    Returns an array ``[P, I - P]`` with ``P`` the projector onto the
    nonnegative eigenspace of ``M0 - M1``; null directions go to outcome 0.
    Leading batch dimensions are supported.
    """
    m0 = np.asarray(m0, dtype=complex)
    m1 = np.asarray(m1, dtype=complex)
    diff = m0 - m1
    scale = max(1.0, float(np.max(np.abs(diff))) if diff.size else 1.0)
    if np.max(np.abs(diff - np.conj(np.swapaxes(diff, -1, -2)))) > 1e-10 * scale:
        raise ValueError("score operators must be Hermitian")
    diff = 0.5 * (diff + np.conj(np.swapaxes(diff, -1, -2)))
    w, v = np.linalg.eigh(diff)
    keep = (w >= -1e-13 * scale).astype(float)
    p = np.einsum("...ik,...k,...jk->...ij", v, keep, v.conj())
    eye = np.broadcast_to(np.eye(diff.shape[-1]), p.shape)
    return np.stack([p, eye - p], axis=-3)


# --------------------------------------------------------------------------
# see-saw


@dataclass
class SeesawResult:
    strategy: Strategy
    value: float
    converged: bool
    traces: list[list[float]] = field(default_factory=list)
    restart_values: list[float] = field(default_factory=list)
    best_restart: int = 0


def _random_binary_povms(q: int, d: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((q, 2, d, d), dtype=complex)
    for i in range(q):
        u = random_unitary(d, rng)
        # rank 0 or d projectors start the restart at a trivial answer
        k = int(rng.integers(1, d)) if d > 1 else 1
        p = u[:, :k] @ u[:, :k].conj().T
        out[i, 0] = p
        out[i, 1] = np.eye(d) - p
    return out


def _bob_scores(a, c, r):
    return np.einsum("qxij,qxmn,jlnikm->qxlk", a, c, r, optimize=True)


def _charlie_scores(a, b, r):
    return np.einsum("qxij,qxkl,jlnikm->qxnm", a, b, r, optimize=True)


def _win_operator(a, b, c):
    q = a.shape[0]
    da, db, dc = a.shape[-1], b.shape[-1], c.shape[-1]
    w = np.einsum("qxij,qxkl,qxmn->ikmjln", a, b, c, optimize=True) / q
    w = w.reshape(da * db * dc, da * db * dc)
    return 0.5 * (w + w.conj().T)


def _value(a, b, c, r):
    return float(np.real(np.einsum("qxij,qxkl,qxmn,jlnikm->", a, b, c, r, optimize=True))) / a.shape[0]


def _best_response_b(a, c, r):
    s = _bob_scores(a, c, r)
    return helstrom_update(s[:, 0], s[:, 1])


def _best_response_c(a, b, r):
    s = _charlie_scores(a, b, r)
    return helstrom_update(s[:, 0], s[:, 1])


def _one_restart(game, dim_b, dim_c, iters, tol, rng):
    a = game.alice_pvms
    q, da = game.num_questions, game.dim_a
    d = da * dim_b * dim_c
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    b = _random_binary_povms(q, dim_b, rng)
    c = _random_binary_povms(q, dim_c, rng)
    trace = []
    converged = False
    prev = -np.inf
    for _ in range(iters):
        r = rho.reshape(da, dim_b, dim_c, da, dim_b, dim_c)
        b = _best_response_b(a, c, r)
        v_b = _value(a, b, c, r)
        c = _best_response_c(a, b, r)
        v_c = _value(a, b, c, r)
        w, v = np.linalg.eigh(_win_operator(a, b, c))
        psi = v[:, -1]
        rho = np.outer(psi, psi.conj())
        val = float(w[-1])
        # sub-step values; each update is a best response so none may drop
        for x, y in ((prev, v_b), (v_b, v_c), (v_c, val)):
            if y < x - 1e-12:
                log.warning("see-saw value decreased by %.3e", x - y)
        trace.append(val)
        if val - prev < tol:
            converged = True
            break
        prev = val
    return rho, b, c, trace, converged


def seesaw_optimize(game: MoEGame, dim_b: int, dim_c: int, restarts: int = 8,
                    iters: int = 200, tol: float = 1e-10, seed: int = 0) -> SeesawResult:
    """Alternating best-response lower bound on the quantum value of ``game``.

    Each restart starts from a Haar-random pure state and random PVMs drawn
    from its own stream ``SeedSequence([seed, restart])``.  Per iteration
    Bob and Charlie take Helstrom best responses, then the state becomes the
    top eigenvector of the question-averaged win operator.
    """
    if dim_b < 1 or dim_c < 1:
        raise ValueError("player dimensions must be >= 1")
    best = None
    traces, values = [], []
    for k in range(restarts):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k])))
        rho, b, c, trace, conv = _one_restart(game, dim_b, dim_c, iters, tol, rng)
        traces.append(trace)
        values.append(trace[-1])
        if best is None or trace[-1] > best[0]:
            best = (trace[-1], rho, b, c, conv, k)
    val, rho, b, c, conv, k = best
    state = DensityOperator(rho, (game.dim_a, dim_b, dim_c))
    strat = Strategy(state, b, c)
    return SeesawResult(strat, winning_probability(game, strat), conv, traces, values, k)


def choi_swap_symmetry(chan: ChoiChannel) -> float:
    """``||J - SWAP_BC J SWAP_BC||_Tr`` for a channel into ``B ⊗ C``."""
    if len(chan.out_dims) != 2 or chan.out_dims[0] != chan.out_dims[1]:
        raise ValueError("channel output must be B ⊗ C with equal dimensions")
    dims = (chan.d_in,) + tuple(chan.out_dims)
    j = chan.choi.matrix
    return trace_norm(j - permute_systems(j, dims, (0, 2, 1)))
