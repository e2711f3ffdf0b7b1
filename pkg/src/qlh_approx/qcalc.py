"""q-integers and finite q-Pochhammer symbols."""

from __future__ import annotations

import math

from .errors import ParameterDomainError


def check_q(q: float) -> float:
    """Validate a base ``q`` and return it as a float; requires 0 < q < 1."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ParameterDomainError(f"q must lie in (0, 1), got {q!r}")
    return q


def q_integer(n: int, q: float) -> float:
    """The q-analogue [n]_q = (1 - q**n) / (1 - q)."""
    q = check_q(q)
    if n < 0:
        raise ParameterDomainError(f"n must be nonnegative, got {n!r}")
    # -expm1(n log q) avoids cancellation in 1 - q**n for q near 1
    return -math.expm1(n * math.log1p(q - 1.0)) / (1.0 - q)


def q_pochhammer(rho: float, q: float, k: int) -> float:
    """Finite product (rho; q)_k = (1 - rho)(1 - rho*q)...(1 - rho*q**(k-1)).

    The empty product (k = 0) is 1.
    """
    q = check_q(q)
    if k < 0:
        raise ParameterDomainError(f"k must be nonnegative, got {k!r}")
    out = 1.0
    qj = 1.0
    for _ in range(k):
        out *= 1.0 - rho * qj
        qj *= q
    return out
