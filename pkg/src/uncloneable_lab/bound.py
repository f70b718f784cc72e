"""
Log-domain evaluation of the cloning-probability bound chain.

Every quantity is carried as a base-2 logarithm in multiprecision
arithmetic, because the bound multiplies factors like ``n^32`` with
``2^(-n/4)`` at ``n ~ 10^8``.  Natural-base exponentials are converted to
base 2 once, where they enter.

The working precision defaults to 128 bits and can be overridden with the
``UNCLONEABLE_LAB_PRECISION_BITS`` environment variable or per call.
"""

from __future__ import annotations

import contextvars
import functools
import os
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpf

__all__ = [
    "LogScalar",
    "BoundParams",
    "BoundReport",
    "ValidityError",
    "precision_bits",
    "binary_entropy",
    "aep_prefactor",
    "delta_aep",
    "gamma_term",
    "eta_definetti",
    "epsilon_bound",
    "theorem1_rhs",
    "reference_terms",
    "theorem1_schedule",
    "bound_report",
    "verify_theorem1",
    "schedule_grid",
]

PRECISION_ENV = "UNCLONEABLE_LAB_PRECISION_BITS"
DEFAULT_PRECISION = 128


class ValidityError(ValueError):
    """A smoothing-parameter pair violates the min/max-entropy relation's hypothesis."""


def precision_bits() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION
    bits = int(raw)
    if bits < 53:
        raise ValueError(f"{PRECISION_ENV} must be at least 53, got {bits}")
    return bits


_active = contextvars.ContextVar("bound_precision_active", default=False)


def _precise(fn):
    # nested calls inherit the precision of the outermost one
    @functools.wraps(fn)
    def wrapper(*args, prec: int | None = None, **kwargs):
        if prec is None and _active.get():
            return fn(*args, **kwargs)
        token = _active.set(True)
        try:
            with mp.workprec(prec or precision_bits()):
                return fn(*args, **kwargs)
        finally:
            _active.reset(token)
    return wrapper


@dataclass(frozen=True, order=False)
class LogScalar:
    """A nonnegative real stored as ``log2`` of its value; ``zero`` marks exactly 0.

    Arithmetic runs at the working precision even when called from outside
    the bound functions.
    """

    log2: mpf = field(default_factory=lambda: mpf(0))
    zero: bool = False

    @classmethod
    @_precise
    def from_log2(cls, v) -> "LogScalar":
        return cls(mpf(v))

    @classmethod
    @_precise
    def from_value(cls, v) -> "LogScalar":
        v = mpf(v)
        if v < 0:
            raise ValueError("LogScalar holds nonnegative values only")
        if v == 0:
            return cls(mpf(0), zero=True)
        return cls(mpmath.log(v, 2))

    @classmethod
    @_precise
    def from_ln(cls, v) -> "LogScalar":
        return cls(mpf(v) / mpmath.ln(2))

    @_precise
    def value(self) -> mpf:
        return mpf(0) if self.zero else mpmath.power(2, self.log2)

    def __float__(self) -> float:
        return float(self.value())

    @_precise
    def __add__(self, other: "LogScalar") -> "LogScalar":
        if self.zero:
            return other
        if other.zero:
            return self
        hi, lo = (self.log2, other.log2) if self.log2 >= other.log2 else (other.log2, self.log2)
        return LogScalar(hi + mpmath.log1p(mpmath.power(2, lo - hi)) / mpmath.ln(2))

    @_precise
    def __mul__(self, other: "LogScalar") -> "LogScalar":
        if self.zero or other.zero:
            return LogScalar(mpf(0), zero=True)
        return LogScalar(self.log2 + other.log2)

    @_precise
    def __truediv__(self, other: "LogScalar") -> "LogScalar":
        if other.zero:
            raise ZeroDivisionError("division by a zero LogScalar")
        if self.zero:
            return self
        return LogScalar(self.log2 - other.log2)

    @_precise
    def __pow__(self, k) -> "LogScalar":
        if self.zero:
            if k <= 0:
                raise ZeroDivisionError("nonpositive power of zero")
            return self
        return LogScalar(self.log2 * mpf(k))

    def sqrt(self) -> "LogScalar":
        return self ** mpf("0.5")

    def _key(self):
        return (0, 0) if self.zero else (1, self.log2)

    def __lt__(self, other):
        return self._key() < other._key()

    def __le__(self, other):
        return self._key() <= other._key()

    def __gt__(self, other):
        return self._key() > other._key()

    def __ge__(self, other):
        return self._key() >= other._key()

    def __repr__(self):
        return "LogScalar(0)" if self.zero else f"LogScalar(2^{mpmath.nstr(self.log2, 20)})"


def _log2_of(x) -> mpf:
    return mpmath.log(x, 2)


@_precise
def binary_entropy(x) -> mpf:
    """``h(x) = -x log2 x - (1-x) log2(1-x)`` with ``h(0) = h(1) = 0``."""
    x = mpf(x)
    if x < 0 or x > 1:
        raise ValueError(f"binary entropy needs 0 <= x <= 1, got {x}")
    if x == 0 or x == 1:
        return mpf(0)
    return -x * _log2_of(x) - (1 - x) * _log2_of(1 - x)


@_precise
def aep_prefactor(dim_a: int = 2) -> mpf:
    """``1 + 5/2 log2(dim_a + 3)``."""
    return 1 + mpf(5) / 2 * _log2_of(dim_a + 3)


@_precise
def delta_aep(eps: LogScalar, r: int, n: int, dim_a: int = 2, check: bool = True) -> mpf:
    """AEP correction ``[1 + 5/2 log2(d+3)] sqrt((log2(2/eps) + 4)/n + h(r/n))``.

    With ``check=False`` any ``eps <= 2`` is accepted, which allows the
    formal ``eps = 2`` reduction.
    """
    if n <= 0 or not 0 <= r <= n:
        raise ValueError("need n > 0 and 0 <= r <= n")
    if eps.zero:
        raise ValueError("eps must be positive")
    if check and not eps.log2 < 0:
        raise ValueError("eps must lie in (0, 1)")
    if eps.log2 > 1:
        raise ValueError("eps above 2 makes log2(2/eps) negative")
    radicand = (1 - eps.log2 + 4) / mpf(n) + binary_entropy(mpf(r) / n)
    return aep_prefactor(dim_a) * mpmath.sqrt(radicand)


@_precise
def gamma_term(eps0: LogScalar, eps1: LogScalar, check: bool = True) -> LogScalar:
    """``gamma = log2 1/(1 - (e1 e0^2 + sqrt(1-e0^4) sqrt(1-e1^2))^2)``, returned as a LogScalar.

    With ``a = asin(e0^2)`` and ``b = asin(e1)`` the inner expression is
    ``cos(a - b)``, so ``gamma = -2 log2 |sin(a - b)|`` without forming
    ``1 - (1 - tiny)^2``.  The validity hypothesis
    ``asin(e1) + asin(sqrt(1 - e0^4)) < pi/2`` is ``e1 < e0^2``.

    ``check=False`` skips the hypothesis (and allows ``e0 = 0``) so that the
    closed-form limits can be evaluated.
    """
    e0 = eps0.value()
    e1 = eps1.value()
    if check:
        if not (0 < e0 < 1 and 0 < e1 < 1):
            raise ValidityError("smoothing parameters must lie in (0, 1)")
        if not e1 < e0 ** 2:
            raise ValidityError(f"asin(eps1) + asin(sqrt(1-eps0^4)) >= pi/2 "
                                f"(log2 eps1 = {mpmath.nstr(eps1.log2, 8)}, "
                                f"log2 eps0^2 = {mpmath.nstr(2 * eps0.log2, 8)})")
    s = mpmath.sin(mpmath.asin(e0 ** 2) - mpmath.asin(e1))
    if s == 0:
        raise ValidityError("gamma is infinite on the validity boundary")
    return LogScalar.from_value(-2 * _log2_of(abs(s)))


@_precise
def eta_definetti(n: int, m: int, r: int) -> LogScalar:
    """``(n-m)^32 exp(-(n-m)(r+1)/(2n))``."""
    if not 0 <= m < n or r < 0:
        raise ValueError("need 0 <= m < n and r >= 0")
    k = mpf(n - m)
    return LogScalar(32 * _log2_of(k) - k * (r + 1) / (2 * mpf(n)) / mpmath.ln(2))


@dataclass(frozen=True)
class BoundParams:
    n: int
    m: int
    r: int
    eps0: LogScalar
    eps1: LogScalar
    dim_a: int = 2

    def __post_init__(self):
        if not 0 < self.m < self.n:
            raise ValueError("need 0 < m < n")
        if not 0 <= self.r <= self.m:
            raise ValueError("need 0 <= r <= m")
        for name in ("eps0", "eps1"):
            e = getattr(self, name)
            if e.zero or not e.log2 < 0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.dim_a < 1:
            raise ValueError("dim_a must be positive")


@_precise
def _radicand_terms(p: BoundParams) -> tuple[LogScalar, LogScalar, LogScalar, mpf, LogScalar]:
    eta = eta_definetti(p.n, p.m, p.r)
    delta = delta_aep(p.eps1, p.r, p.m, p.dim_a)
    gamma = gamma_term(p.eps0, p.eps1)
    third = LogScalar(-p.m * (1 - delta) + gamma.value())
    return eta, p.eps0, third, delta, gamma


@_precise
def epsilon_bound(p: BoundParams) -> LogScalar:
    """``sqrt(eta + eps0 + 2^(-m(1 - delta(eps1, r, m)) + gamma(eps0, eps1)))``."""
    eta, e0, third, _, _ = _radicand_terms(p)
    return (eta + e0 + third).sqrt()


@_precise
def theorem1_rhs(n: int) -> LogScalar:
    """``n^16 2^(-n/120000 - 8)``."""
    return LogScalar(16 * _log2_of(n) - mpf(n) / 120000 - 8)


def theorem1_schedule(n: int) -> BoundParams:
    """``m = n/2``, ``r = floor(n/20000)``, ``eps0 = 2^(3 - n/1600)``, ``eps1 = 2^(5 - n/800)``."""
    n = int(n)
    if n < 20000:
        raise ValueError("the schedule needs n >= 20000 so that r >= 1")
    if n % 2:
        raise ValueError("the schedule needs even n")
    with mp.workprec(mp.prec if _active.get() else precision_bits()):
        return BoundParams(n, n // 2, n // 20000,
                           LogScalar(3 - mpf(n) / 1600), LogScalar(5 - mpf(n) / 800))


@dataclass(frozen=True)
class BoundReport:
    params: BoundParams
    delta: mpf
    gamma: LogScalar
    eta: LogScalar
    eta_qdf: LogScalar
    gamma_piece: LogScalar
    eps_bound: LogScalar
    theorem1_rhs: LogScalar
    reference_terms: tuple[LogScalar, LogScalar, LogScalar]

    @property
    def log2_margin(self) -> mpf:
        return self.theorem1_rhs.log2 - self.eps_bound.log2

    @property
    def chain_ok(self) -> bool:
        return self.eps_bound <= self.theorem1_rhs

    @property
    def terms_dominated(self) -> tuple[bool, bool, bool]:
        p1, p2, p3 = self.reference_terms
        return (self.eta <= p1, self.params.eps0 <= p2, self.gamma_piece <= p3)


@_precise
def reference_terms(n: int) -> tuple[LogScalar, LogScalar, LogScalar]:
    """Closed-form radicand terms at the schedule: ``n^32 2^-32 e^(-n/80000)``,
    ``2^(3 - n/1600)`` and ``2^(-n/4) / 2^(9 - n/400)``."""
    n_ = mpf(n)
    p1 = LogScalar(32 * _log2_of(n_) - 32 - n_ / 80000 / mpmath.ln(2))
    p2 = LogScalar(3 - n_ / 1600)
    p3 = LogScalar(-n_ / 4 - (9 - n_ / 400))
    return p1, p2, p3


@_precise
def bound_report(p: BoundParams) -> BoundReport:
    eta, e0, third, delta, gamma = _radicand_terms(p)
    eps = (eta + e0 + third).sqrt()
    two = LogScalar(mpf(1))
    return BoundReport(p, delta, gamma, eta, two * eta, third, eps, theorem1_rhs(p.n),
                       reference_terms(p.n))


def schedule_grid(n_min: int, n_max: int, points: int) -> list[int]:
    """Geometrically spaced even sizes in ``[n_min, n_max]``, endpoints included."""
    if points < 1 or n_min > n_max:
        raise ValueError("need points >= 1 and n_min <= n_max")
    if points == 1:
        raw = [n_min]
    else:
        with mp.workprec(64):
            ratio = (mpf(n_max) / n_min) ** (mpf(1) / (points - 1))
            raw = [int(mpmath.nint(n_min * ratio ** i)) for i in range(points)]
    out = []
    for v in raw:
        v = min(max(v + (v % 2), n_min + (n_min % 2)), n_max - (n_max % 2))
        if not out or v > out[-1]:
            out.append(v)
    return out


@_precise
def verify_theorem1(n_min: int, n_max: int, points: int) -> tuple[list[BoundReport], int | None]:
    """Bound reports on a geometric grid and the smallest grid size where the chain closes."""
    if n_min < 20000:
        raise ValueError("n_min must be at least 20000")
    rows = [bound_report(theorem1_schedule(n)) for n in schedule_grid(n_min, n_max, points)]
    first = next((r.params.n for r in rows if r.chain_ok), None)
    return rows, first
