"""
Dense quantum-information primitives.

Everything here works on small dense complex matrices (dimension <= 64 or
so).  States carry an explicit subsystem dimension profile so that partial
traces and tensor products never have to guess the factorisation.

All spectral work goes through :func:`eigh_psd`, a thin wrapper around
``numpy.linalg.eigh`` that clamps round-off negative eigenvalues.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-9
TRACE_ATOL = 1e-9

__all__ = [
    "DensityOperator",
    "ChoiChannel",
    "StateError",
    "eigh_psd",
    "sqrtm_psd",
    "tensor_product",
    "partial_trace",
    "ptrace_array",
    "permute_systems",
    "trace_norm",
    "trace_distance",
    "fidelity",
    "generalized_fidelity",
    "purified_distance",
    "generalized_trace_distance",
    "apply_channel",
    "choi_of",
    "maximally_entangled",
    "maximally_mixed",
    "ket_to_dm",
    "basis_state",
    "random_state",
    "random_pure_state",
    "random_unitary",
    "state_to_json",
    "state_from_json",
    "save_state",
    "load_state",
    "kron_all",
]


class StateError(ValueError):
    """Raised when an operator violates a state or channel invariant."""


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise StateError(f"expected a matrix, got array of shape {arr.shape}")
    return arr


def eigh_psd(m: np.ndarray, clamp: float = PSD_ATOL) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with small negative eigenvalues set to zero.

    Eigenvalues in ``[-clamp, 0)`` are floating-point drift and are clamped;
    anything more negative is left alone so callers can detect it.
    """
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    w = np.where((w < 0) & (w >= -clamp), 0.0, w)
    return w, v


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = eigh_psd(m)
    if np.any(w < 0):
        raise StateError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass(frozen=True)
class DensityOperator:
    """A positive operator of trace one (or at most one) on a multipartite space.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix.
    dims : sequence of int
        Subsystem dimensions; their product must equal the matrix size.
    normalized : bool
        If False the operator is allowed to be subnormalised (trace <= 1).
    check : bool
        Validate Hermiticity, positivity and trace on construction.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    normalized: bool = True
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = _as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if mat.shape[0] != mat.shape[1]:
            raise StateError(f"matrix must be square, got {mat.shape}")
        if int(np.prod(dims)) != mat.shape[0]:
            raise StateError(f"dims {dims} do not multiply to {mat.shape[0]}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        if self.check:
            self.validate()

    def validate(self) -> None:
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm > HERMITIAN_ATOL * max(1.0, np.max(np.abs(m))):
            raise StateError(f"operator is not Hermitian (deviation {herm:.3e})")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w.min() < -PSD_ATOL:
            raise StateError(f"operator is not PSD (min eigenvalue {w.min():.3e})")
        tr = float(np.real(np.trace(m)))
        if self.normalized:
            if abs(tr - 1.0) > TRACE_ATOL:
                raise StateError(f"trace {tr!r} is not 1")
        elif not (0.0 < tr <= 1.0 + TRACE_ATOL):
            raise StateError(f"subnormalised trace {tr!r} outside (0, 1]")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigvals(self) -> np.ndarray:
        return eigh_psd(self.matrix)[0]

    def ptrace(self, keep: Iterable[int]) -> "DensityOperator":
        return partial_trace(self, keep)

    def __matmul__(self, other: "DensityOperator") -> "DensityOperator":
        return tensor_product(self, other)


@dataclass(frozen=True)
class ChoiChannel:
    """A channel stored through its normalised Choi state on ``[d_in, d_out]``.

    ``out_dims`` records the factorisation of the output space (for example
    ``(dB, dC)`` for a cloning channel).
    """

    choi: DensityOperator
    d_in: int
    d_out: int
    out_dims: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.out_dims:
            object.__setattr__(self, "out_dims", (self.d_out,))
        if int(np.prod(self.out_dims)) != self.d_out:
            raise StateError("out_dims do not multiply to d_out")
        if self.choi.dim != self.d_in * self.d_out:
            raise StateError("Choi matrix size does not match d_in * d_out")
        marg = ptrace_array(self.choi.matrix, (self.d_in, self.d_out), [0])
        dev = np.max(np.abs(marg - np.eye(self.d_in) / self.d_in))
        if dev > 1e-9:
            raise StateError(f"channel is not trace preserving (deviation {dev:.3e})")

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], out_dims: Sequence[int] | None = None):
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        d_out, d_in = kraus[0].shape
        return cls(choi_of(lambda r: sum(k @ r @ k.conj().T for k in kraus), d_in, d_out),
                   d_in, d_out, tuple(out_dims) if out_dims else (d_out,))

    @classmethod
    def from_map(cls, fn, d_in: int, d_out: int, out_dims: Sequence[int] | None = None):
        return cls(choi_of(fn, d_in, d_out), d_in, d_out,
                   tuple(out_dims) if out_dims else (d_out,))

    def __call__(self, rho):
        return apply_channel(self, rho)


# --------------------------------------------------------------------------
# structural operations


def tensor_product(a, b):
    """Kronecker product; dims are concatenated for states."""
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims,
                               normalized=a.normalized and b.normalized, check=False)
    if isinstance(a, DensityOperator) or isinstance(b, DensityOperator):
        raise TypeError("tensor_product needs two states or two matrices")
    return np.kron(_as_matrix(a), _as_matrix(b))


def ptrace_array(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a raw matrix, keeping ``keep`` in their original order."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < n:
            raise IndexError(f"subsystem index {k} out of range for {n} systems")
    t = np.asarray(m).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(dk, dk)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Marginal of ``rho`` on the subsystems listed in ``keep``."""
    keep = sorted(set(int(k) for k in keep))
    m = ptrace_array(rho.matrix, rho.dims, keep)
    dims = tuple(rho.dims[i] for i in keep) or (1,)
    return DensityOperator(m, dims, normalized=rho.normalized, check=False)


def permute_systems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new system ``i`` is old system ``perm[i]``."""
    dims = tuple(dims)
    n = len(dims)
    t = np.asarray(m).reshape(dims + dims)
    t = t.transpose(list(perm) + [n + p for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


# --------------------------------------------------------------------------
# distances


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOperator) else _as_matrix(x)


def _check_same(rho, sigma):
    a, b = _mat(rho), _mat(sigma)
    if a.shape != b.shape:
        raise StateError(f"dimension mismatch {a.shape} vs {b.shape}")
    if isinstance(rho, DensityOperator) and isinstance(sigma, DensityOperator):
        if rho.dims != sigma.dims:
            raise StateError(f"dims mismatch {rho.dims} vs {sigma.dims}")
    return a, b


def trace_norm(m: np.ndarray) -> float:
    """Normalised trace norm ``0.5 * ||M||_1`` of a Hermitian matrix."""
    m = _as_matrix(m)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))


def trace_distance(rho, sigma) -> float:
    a, b = _check_same(rho, sigma)
    return trace_norm(a - b)


def fidelity(rho, sigma) -> float:
    """``F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1`` (root fidelity)."""
    a, b = _check_same(rho, sigma)
    sa, sb = sqrtm_psd(a), sqrtm_psd(b)
    s = np.linalg.svd(sa @ sb, compute_uv=False)
    return float(min(np.sum(s), np.sqrt(max(np.real(np.trace(a)), 0) * max(np.real(np.trace(b)), 0))))


def generalized_fidelity(rho, sigma) -> float:
    a, b = _check_same(rho, sigma)
    ta = min(float(np.real(np.trace(a))), 1.0)
    tb = min(float(np.real(np.trace(b))), 1.0)
    return fidelity(a, b) + float(np.sqrt(max(0.0, (1 - ta) * (1 - tb))))


def purified_distance(rho, sigma) -> float:
    f = min(generalized_fidelity(rho, sigma), 1.0)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def generalized_trace_distance(rho, sigma) -> float:
    a, b = _check_same(rho, sigma)
    return trace_norm(a - b) + 0.5 * abs(float(np.real(np.trace(a) - np.trace(b))))


# --------------------------------------------------------------------------
# channels


def choi_of(fn, d_in: int, d_out: int) -> DensityOperator:
    """Normalised Choi state ``(id ⊗ fn)(phi+)`` of a linear map on matrices."""
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for k in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, k] = 1.0
            out = np.asarray(fn(e), dtype=complex)
            j[i * d_out:(i + 1) * d_out, k * d_out:(k + 1) * d_out] = out
    j /= d_in
    return DensityOperator(0.5 * (j + j.conj().T), (d_in, d_out))


def apply_channel(chan: ChoiChannel, rho):
    """Output ``d_in * Tr_in[(rho^T ⊗ I) J]`` of the channel on ``rho``."""
    is_state = isinstance(rho, DensityOperator)
    m = _mat(rho)
    if m.shape[0] != chan.d_in:
        raise StateError(f"input dimension {m.shape[0]} != channel d_in {chan.d_in}")
    j = chan.choi.matrix.reshape(chan.d_in, chan.d_out, chan.d_in, chan.d_out)
    out = chan.d_in * np.einsum("ik,iakb->ab", m, j)
    out = 0.5 * (out + out.conj().T)
    if is_state:
        return DensityOperator(out, chan.out_dims, normalized=rho.normalized, check=False)
    return out


# --------------------------------------------------------------------------
# constructors


def ket_to_dm(psi: np.ndarray, dims: Sequence[int] | None = None) -> DensityOperator:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return DensityOperator(np.outer(psi, psi.conj()), tuple(dims) if dims else (psi.size,))


def basis_state(index: int, dim: int) -> DensityOperator:
    m = np.zeros((dim, dim), dtype=complex)
    m[index, index] = 1.0
    return DensityOperator(m, (dim,))


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim, dtype=complex) / dim, (dim,))


def maximally_entangled(dim: int) -> DensityOperator:
    psi = np.eye(dim, dtype=complex).ravel() / np.sqrt(dim)
    return DensityOperator(np.outer(psi, psi.conj()), (dim, dim))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(dims: Sequence[int], rng: np.random.Generator) -> DensityOperator:
    d = int(np.prod(dims))
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return ket_to_dm(psi, dims)


def random_state(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random mixed state from the induced (Ginibre) measure of the given rank."""
    d = int(np.prod(dims))
    k = d if rank is None else int(rank)
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    m /= np.real(np.trace(m))
    return DensityOperator(0.5 * (m + m.conj().T), tuple(dims))


# --------------------------------------------------------------------------
# JSON state files: {"schema_version", "dims", "re", "im"}, entries row-major

STATE_SCHEMA_VERSION = 1


def state_to_json(rho) -> dict:
    m = _mat(rho)
    dims = list(rho.dims) if isinstance(rho, DensityOperator) else [m.shape[0]]
    flat = m.ravel()
    # float() round-trips IEEE doubles exactly through json's repr
    return {"schema_version": STATE_SCHEMA_VERSION, "dims": dims,
            "re": [float(x) for x in flat.real], "im": [float(x) for x in flat.imag]}


def state_from_json(obj: dict, check: bool = True) -> DensityOperator:
    if int(obj.get("schema_version", STATE_SCHEMA_VERSION)) > STATE_SCHEMA_VERSION:
        raise StateError(f"unsupported state schema version {obj['schema_version']}")
    dims = [int(d) for d in obj["dims"]]
    d = int(np.prod(dims))
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.size != d * d or im.size != d * d:
        raise StateError(f"entry count {re.size} does not match dims {dims}")
    m = (re + 1j * im).reshape(d, d)
    tr = float(np.real(np.trace(m)))
    return DensityOperator(m, dims, normalized=abs(tr - 1) <= TRACE_ATOL, check=check)


def save_state(rho, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(rho)))


def load_state(path, check: bool = True) -> DensityOperator:
    return state_from_json(json.loads(Path(path).read_text()), check=check)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)
