"""
Primal-dual interior point solver for the conditional min-entropy SDP.

Solves the pair

    minimise   Tr sigma        subject to  I_A ⊗ sigma - rho >= 0
    maximise   Tr[rho X]       subject to  Tr_A X = I_B,  X >= 0

with an HKM search direction and Mehrotra predictor-corrector steps.  The
variable ``sigma`` is parametrised in an orthonormal Hermitian basis of
``B(H_B)``, so the Schur complement system is a small real SPD matrix of
size ``dB^2``.

Both iterates stay feasible from the starting point onwards; at exit the
pair is polished into an exactly feasible certificate and the reported gap
is computed from the polished pair, never from the raw iterates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .linalg import ptrace_array

log = logging.getLogger(__name__)

__all__ = ["SDPSolution", "SDPConvergenceError", "solve_min_entropy_sdp", "hermitian_basis"]


class SDPConvergenceError(RuntimeError):
    """Raised when the duality gap is not closed within the iteration cap."""

    def __init__(self, msg: str, lower: float, upper: float):
        super().__init__(msg)
        self.lower = lower
        self.upper = upper


@dataclass(frozen=True)
class SDPSolution:
    """Certified solution of the min-entropy SDP.

    Attributes
    ----------
    sigma : ndarray
        Optimal (unnormalised) operator on B with ``I ⊗ sigma >= rho``.
    primal_value : float
        ``Tr sigma``; equals ``2^(-H_min(A|B))`` up to ``gap``.
    dual_certificate : ndarray
        ``X >= 0`` on ``A ⊗ B`` with ``Tr_A X = I``.
    dual_value : float
        ``Tr[rho X]``, a certified lower bound on the optimum.
    gap : float
        ``primal_value - dual_value``.
    iterations : int
    dims : tuple of int
        ``(dA, dB)``.
    """

    sigma: np.ndarray
    primal_value: float
    dual_certificate: np.ndarray
    dual_value: float
    gap: float
    iterations: int
    dims: tuple[int, int]

    def primal_slack_min(self, rho: np.ndarray) -> float:
        da, _ = self.dims
        return float(np.linalg.eigvalsh(np.kron(np.eye(da), self.sigma) - rho).min())

    def dual_slack_min(self) -> tuple[float, float]:
        da, db = self.dims
        t = ptrace_array(self.dual_certificate, (da, db), [1])
        return (float(np.linalg.eigvalsh(self.dual_certificate).min()),
                float(np.linalg.eigvalsh(np.eye(db) - t).min()))


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices, shape (d^2, d, d)."""
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
    s = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = s
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = -1j * s
            e[j, i] = 1j * s
            out.append(e)
    return np.array(out)


def _herm(m):
    return 0.5 * (m + m.conj().T)


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha dx >= 0 (x assumed positive definite)."""
    try:
        lc = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(x)
        lc = v * np.sqrt(np.maximum(w, 1e-300))
    linv = np.linalg.inv(lc)
    lam = np.linalg.eigvalsh(_herm(linv @ dx @ linv.conj().T)).min()
    return np.inf if lam >= 0 else -1.0 / lam


def _polish(rho, sigma, x, da, db):
    # dual: rescale so that Tr_A X = I exactly
    t = ptrace_array(x, (da, db), [1])
    w, v = np.linalg.eigh(_herm(t))
    tinv = (v / np.sqrt(np.maximum(w, 1e-300))) @ v.conj().T
    k = np.kron(np.eye(da), tinv)
    xc = _herm(k @ x @ k.conj().T)
    wx, vx = np.linalg.eigh(xc)
    if wx.min() < 0:
        xc = (vx * np.maximum(wx, 0)) @ vx.conj().T
    # primal: shift sigma until I ⊗ sigma - rho is PSD
    lam = np.linalg.eigvalsh(np.kron(np.eye(da), sigma) - rho).min()
    sc = _herm(sigma) + max(0.0, -lam) * np.eye(db)
    pv = float(np.real(np.trace(sc)))
    dv = float(np.real(np.trace(rho @ xc)))
    return sc, xc, pv, dv


def solve_min_entropy_sdp(rho: np.ndarray, dims: tuple[int, int], tol: float = 1e-8,
                          max_iter: int = 100) -> SDPSolution:
    """Solve ``min Tr sigma  s.t.  I ⊗ sigma >= rho`` to a certified gap ``<= tol``."""
    da, db = int(dims[0]), int(dims[1])
    rho = _herm(np.asarray(rho, dtype=complex))
    n = da * db
    if rho.shape != (n, n):
        raise ValueError(f"rho has shape {rho.shape}, expected {(n, n)}")

    basis = hermitian_basis(db)
    m = basis.shape[0]
    fmat = np.array([np.kron(np.eye(da), e) for e in basis])
    b = np.real(np.einsum("iaa->i", basis))

    def a_op(z):
        return np.real(np.einsum("iab,ba->i", fmat, z))

    def a_adj(y):
        return np.einsum("i,iab->ab", y, fmat)

    lmax = float(np.linalg.eigvalsh(rho).max())
    scale = max(lmax, 1e-12)
    y = np.zeros(m)
    y[:db] = 2.0 * scale
    x = np.eye(n, dtype=complex) / da
    s = a_adj(y) - rho

    best = None
    it = 0
    for it in range(1, max_iter + 1):
        mu = float(np.real(np.vdot(x, s))) / n
        rp = b - a_op(x)
        rd = rho - a_adj(y) + s
        sinv = np.linalg.inv(s)
        sinv = _herm(sinv)

        xf = np.einsum("ab,jbc->jac", x, fmat)
        xfs = xf @ sinv
        schur = np.real(np.einsum("iab,jba->ij", fmat, xfs))
        schur = 0.5 * (schur + schur.T)
        try:
            chol = np.linalg.cholesky(schur)
            solve = lambda r: np.linalg.solve(chol.T, np.linalg.solve(chol, r))  # noqa: E731
        except np.linalg.LinAlgError:
            solve = lambda r: np.linalg.lstsq(schur, r, rcond=None)[0]  # noqa: E731

        def direction(kmat):
            # HKM: dX = (K - X dS) S^-1, symmetrised; dS = A*(dy) - rd
            rhs = a_op(_herm(kmat @ sinv)) + a_op(_herm(x @ rd @ sinv)) - rp
            dy = solve(rhs)
            ds = a_adj(dy) - rd
            dx = _herm((kmat - x @ ds) @ sinv)
            return dx, dy, ds

        # predictor
        k_aff = -x @ s
        dx_a, dy_a, ds_a = direction(k_aff)
        ap = min(1.0, _max_step(x, dx_a))
        ad = min(1.0, _max_step(s, ds_a))
        mu_aff = float(np.real(np.vdot(x + ap * dx_a, s + ad * ds_a))) / n
        sig = min(1.0, max(0.0, mu_aff / mu)) ** 3
        # corrector
        k_cor = sig * mu * np.eye(n) - x @ s - dx_a @ ds_a
        dx, dy, ds = direction(k_cor)
        ap = min(1.0, 0.98 * _max_step(x, dx))
        ad = min(1.0, 0.98 * _max_step(s, ds))
        x = _herm(x + ap * dx)
        y = y + ad * dy
        s = _herm(s + ad * ds)

        sigma = np.einsum("i,iab->ab", y, basis)
        sc, xc, pv, dv = _polish(rho, sigma, x, da, db)
        gap = pv - dv
        if best is None or gap < best[4]:
            best = (sc, xc, pv, dv, gap)
        if gap <= tol:
            return SDPSolution(sc, pv, xc, dv, max(gap, 0.0), it, (da, db))
        if float(np.real(np.vdot(x, s))) < 1e-15 * max(1.0, pv):
            break

    sc, xc, pv, dv, gap = best
    if gap <= 10 * tol:
        log.warning("min-entropy SDP stopped at gap %.2e (tol %.1e)", gap, tol)
        return SDPSolution(sc, pv, xc, dv, max(gap, 0.0), it, (da, db))
    raise SDPConvergenceError(f"gap {gap:.3e} above tolerance {tol:.1e} after {it} iterations",
                              lower=dv, upper=pv)
