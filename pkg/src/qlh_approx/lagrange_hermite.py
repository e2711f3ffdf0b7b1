"""Multivariate q-Lagrange-Hermite coefficients and their generating identity.

The coefficients h_p are the Taylor coefficients in ``t`` of

    prod_i 1 / (z_i t**i; q)_{beta_i}

and have the explicit form of a sum over weighted compositions
``l_1 + 2 l_2 + ... + r l_r = p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import ParameterDomainError
from .qcalc import check_q, q_pochhammer


def weighted_compositions(p: int, r: int) -> Iterator[tuple[int, ...]]:
    """Yield every ``(l_1, ..., l_r)`` with ``sum(k * l_k) == p`` exactly once.

    The outermost index is ``l_r`` (ascending), then ``l_{r-1}`` and so on;
    ``l_1`` is determined by the others. The order is fixed so that sums
    over the compositions are bit-reproducible.

    >>> list(weighted_compositions(3, 2))
    [(3, 0), (1, 1)]
    """
    if p < 0 or r < 1:
        raise ParameterDomainError(f"need p >= 0 and r >= 1, got p={p}, r={r}")

    def rec(rest: int, k: int) -> Iterator[tuple[int, ...]]:
        if k == 1:
            yield (rest,)
            return
        for lk in range(rest // k + 1):
            for head in rec(rest - k * lk, k - 1):
                yield head + (lk,)

    yield from rec(p, r)


@dataclass(frozen=True)
class LHParams:
    """Parameters of h_{p,q}^{(beta_1..beta_r)}(z_1..z_r).

    ``betas`` are positive integer exponents (the generating factor uses
    ``q**beta``); ``z`` are the polynomial variables.
    """

    betas: tuple[int, ...]
    z: tuple[float, ...]
    q: float

    def __post_init__(self):
        check_q(self.q)
        if len(self.betas) != len(self.z) or not self.betas:
            raise ParameterDomainError("betas and z must be non-empty and of equal length")
        if any(int(b) != b or b < 1 for b in self.betas):
            raise ParameterDomainError(f"betas must be positive integers, got {self.betas}")

    @property
    def r(self) -> int:
        return len(self.betas)


@lru_cache(maxsize=65536)
def _factor(beta: int, q: float, l: int) -> float:
    # (q**beta; q)_l / (q; q)_l
    return q_pochhammer(q**beta, q, l) / q_pochhammer(q, q, l)


def lh_coefficient(p: int, params: LHParams) -> float:
    """Explicit composition sum for h_{p,q}; equals 1 at p = 0."""
    total = 0.0
    for comp in weighted_compositions(p, params.r):
        term = 1.0
        for lk, beta, zk in zip(comp, params.betas, params.z):
            if lk:
                term *= _factor(beta, params.q, lk) * zk**lk
        total += term
    return total


def _check_alphas(alphas: Sequence[float]) -> tuple[float, ...]:
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise ParameterDomainError("alphas must be non-empty")
    for i, a in enumerate(alphas, start=1):
        if not 0.0 < a < 1.0:
            raise ParameterDomainError(f"alpha^({i}) must lie in (0, 1), got {a!r}")
    return alphas


def prefactor(x: float, n: int, alphas: Sequence[float], q: float) -> float:
    """prod_{i=1..r} (alpha_i * x**i; q)_n, the normalising factor of the operator."""
    alphas = _check_alphas(alphas)
    if not 0.0 <= x <= 1.0:
        raise ParameterDomainError(f"x must lie in [0, 1], got {x!r}")
    out = 1.0
    for i, a in enumerate(alphas, start=1):
        out *= q_pochhammer(a * x**i, q, n)
    return out


def normalization_residual(x: float, n: int, alphas: Sequence[float], q: float, P_max: int) -> float:
    """|prefactor * sum_{p<=P_max} h_p(alphas) x**p - 1| with all betas equal to n.

    Partial sums of nonnegative terms approach the reciprocal of the
    prefactor from below, so the residual shrinks monotonically in P_max.
    """
    alphas = _check_alphas(alphas)
    params = LHParams(betas=(n,) * len(alphas), z=alphas, q=q)
    series = 0.0
    xp = 1.0
    for p in range(P_max + 1):
        series += lh_coefficient(p, params) * xp
        xp *= x
    return abs(prefactor(x, n, alphas, q) * series - 1.0)
