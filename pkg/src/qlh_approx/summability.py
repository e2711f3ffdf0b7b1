"""Sequence summability: natural density, deferred weighted means and
A-densities, matrix transforms, and the power series (P-summability) method.

Sequences, weights and indicators are callables on positive integers and
should accept numpy integer arrays.  Every infinite sum is truncated with an
explicit tail bound; functions that can only bound their truncation return an
:class:`Estimate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateWindowError,
    DivergenceError,
    InsufficientSamplesError,
    ParameterDomainError,
    UnboundedRowError,
)


class Estimate(NamedTuple):
    value: float
    error: float


def _call(f: Callable, idx: np.ndarray, dtype=float) -> np.ndarray:
    try:
        v = f(idx)
    except TypeError:
        v = np.vectorize(f, otypes=[dtype])(idx)
    v = np.asarray(v, dtype=dtype)
    if v.shape != idx.shape:
        v = np.broadcast_to(v, idx.shape).astype(dtype)
    return v


@dataclass(frozen=True)
class RealSequence:
    term: Callable
    label: str = "x"

    def values(self, ns) -> np.ndarray:
        return _call(self.term, np.asarray(ns, dtype=np.int64))

    def __call__(self, n):
        return self.term(n)


@dataclass(frozen=True)
class IndexIndicator:
    contains: Callable
    label: str = "K"

    def mask(self, ks) -> np.ndarray:
        return _call(self.contains, np.asarray(ks, dtype=np.int64), dtype=bool)


def perfect_squares() -> IndexIndicator:
    def contains(k):
        k = np.asarray(k, dtype=np.int64)
        r = np.floor(np.sqrt(k.astype(float))).astype(np.int64)
        # correct the float square root by one step either way
        r = np.where((r + 1) * (r + 1) <= k, r + 1, r)
        r = np.where(r * r > k, r - 1, r)
        return (k >= 1) & (r * r == k)

    return IndexIndicator(contains, "perfect squares")


def natural_density_estimate(ind: IndexIndicator, N: int) -> float:
    """|{k <= N : k in ind}| / N."""
    if N < 1:
        raise ParameterDomainError(f"N must be positive, got {N}")
    count = int(np.count_nonzero(ind.mask(np.arange(1, N + 1))))
    return count / N


# --------------------------------------------------------------------------
# deferred weighted means


@dataclass(frozen=True)
class DeferredScheme:
    """Window (b_n, c_n] with weights s_m; S_n is the weight of the window."""

    b: Callable[[int], int]
    c: Callable[[int], int]
    s: Callable
    label: str = "custom"

    def window(self, n: int) -> np.ndarray:
        lo, hi = int(self.b(n)), int(self.c(n))
        if lo < 0 or lo >= hi:
            raise ParameterDomainError(f"scheme needs 0 <= b_n < c_n, got b_{n}={lo}, c_{n}={hi}")
        return np.arange(lo + 1, hi + 1, dtype=np.int64)

    def weights(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        ms = self.window(n)
        sm = _call(self.s, ms)
        if np.any(sm < 0):
            raise ParameterDomainError("weights s_m must be nonnegative")
        return ms, sm

    def total(self, n: int) -> float:
        return float(self.weights(n)[1].sum())

    def check_growth(self, ns: Sequence[int], threshold: int = 16) -> bool:
        """Heuristic check of c_n -> infinity: c_n >= sqrt(n) for sampled n >= threshold."""
        return all(self.c(n) >= math.sqrt(n) for n in ns if n >= threshold)


def full_scheme() -> DeferredScheme:
    """b_n = 0, c_n = n, s_m = 1 (the Cesaro window)."""
    return DeferredScheme(lambda n: 0, lambda n: n, lambda m: np.ones(np.shape(m)), "full")


def half_deferred_scheme(b_rule: Callable[[int], int] | None = None) -> DeferredScheme:
    """b_n = floor(n/2) by default, c_n = n, s_m = 1."""
    b_rule = b_rule or (lambda n: n // 2)
    return DeferredScheme(b_rule, lambda n: n, lambda m: np.ones(np.shape(m)), "half-deferred")


def _window_total(ms, sm, n) -> float:
    S = float(sm.sum())
    if S <= 0.0:
        raise DegenerateWindowError(f"window for n={n} has zero total weight")
    return S


def deferred_weighted_mean(seq: RealSequence, scheme: DeferredScheme, n: int) -> float:
    """rho_n = (1/S_n) sum_{m=b_n+1}^{c_n} s_m x_m."""
    ms, sm = scheme.weights(n)
    S = _window_total(ms, sm, n)
    return float(np.dot(sm, seq.values(ms)) / S)


# --------------------------------------------------------------------------
# nonnegative summability matrices


class SummabilityMatrix:
    """Row-accessible nonnegative matrix (a_{n,k}), indices starting at 1.

    Subclasses provide ``entries`` (vectorised over column indices) and
    ``support`` (K(n), beyond which the row's mass is at most ``tail(n)``).
    """

    label = "matrix"

    def entries(self, n: int, ks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def support(self, n: int) -> int | None:
        raise NotImplementedError

    def tail(self, n: int) -> float:
        return 0.0

    def _support(self, n: int) -> int:
        K = self.support(n)
        if K is None:
            raise UnboundedRowError(f"row {n} of {self.label} has no declared finite support")
        return int(K)

    def row(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        ks = np.arange(1, self._support(n) + 1, dtype=np.int64)
        return ks, np.asarray(self.entries(n, ks), dtype=float)

    def row_sum(self, n: int) -> float:
        return float(self.row(n)[1].sum())

    def masked_row_sums(self, ms: np.ndarray, ind: IndexIndicator) -> np.ndarray:
        """sum_{k in ind, k <= K(m)} a_{m,k} for each row m."""
        out = np.empty(len(ms))
        for i, m in enumerate(ms):
            ks, vals = self.row(int(m))
            out[i] = vals[ind.mask(ks)].sum()
        return out


class IdentityMatrix(SummabilityMatrix):
    label = "identity"

    def entries(self, n, ks):
        return (np.asarray(ks) == n).astype(float)

    def support(self, n):
        return n

    def row(self, n):
        return np.array([n], dtype=np.int64), np.array([1.0])

    def row_sum(self, n):
        return 1.0

    def masked_row_sums(self, ms, ind):
        return ind.mask(ms).astype(float)


class CesaroMatrix(SummabilityMatrix):
    """a_{n,k} = 1/n for k <= n."""

    label = "cesaro"

    def entries(self, n, ks):
        ks = np.asarray(ks)
        return np.where((ks >= 1) & (ks <= n), 1.0 / n, 0.0)

    def support(self, n):
        return n

    def row_sum(self, n):
        return float(np.full(n, 1.0 / n).sum())


class ZeroMatrix(SummabilityMatrix):
    label = "zero"

    def entries(self, n, ks):
        return np.zeros(np.shape(ks))

    def support(self, n):
        return 1

    def row_sum(self, n):
        return 0.0


class FunctionMatrix(SummabilityMatrix):
    """Matrix given by an entry function, a support rule and a declared tail."""

    def __init__(self, entry: Callable, support: Callable[[int], int | None], tail=None, label="custom"):
        self._entry = entry
        self._supp = support
        self._tail = tail or (lambda n: 0.0)
        self.label = label

    def entries(self, n, ks):
        vals = np.asarray(self._entry(n, np.asarray(ks)), dtype=float)
        if np.any(vals < 0):
            raise ParameterDomainError(f"{self.label} has a negative entry in row {n}")
        return vals

    def support(self, n):
        return self._supp(n)

    def tail(self, n):
        return float(self._tail(n))


def matrix_row_transform(A: SummabilityMatrix, seq: RealSequence, n: int) -> Estimate:
    """(Ax)_n over the declared support; the row tail times max|x_k| is the error bar."""
    ks, vals = A.row(n)
    xs = seq.values(ks)
    bound = float(np.max(np.abs(xs))) if xs.size else 0.0
    return Estimate(float(np.dot(vals, xs)), A.tail(n) * bound)


def dwA_density(ind: IndexIndicator, A: SummabilityMatrix, scheme: DeferredScheme, n: int) -> float:
    """(1/S_n) sum_{m=b_n+1}^{c_n} sum_{k in K} s_m a_{m,k}.

    Row tails beyond the declared supports are excluded; they add at most
    :func:`deferred_tail` to the value.
    """
    ms, sm = scheme.weights(n)
    S = _window_total(ms, sm, n)
    return float(np.dot(sm, A.masked_row_sums(ms, ind)) / S)


def deferred_tail(A: SummabilityMatrix, scheme: DeferredScheme, n: int) -> float:
    ms, sm = scheme.weights(n)
    S = _window_total(ms, sm, n)
    return float(sum(s * A.tail(int(m)) for m, s in zip(ms, sm)) / S)


def dwA_rate_ratio(ind: IndexIndicator, A, scheme, ns: Sequence[int], gamma: Callable[[int], float]) -> np.ndarray:
    """dwA_density / gamma_n over ``ns``; a rate o(gamma_n) shows as a decreasing ratio."""
    return np.array([dwA_density(ind, A, scheme, n) / gamma(n) for n in ns])


def dw_regularity_residuals(
    A: SummabilityMatrix, scheme: DeferredScheme, n: int, k_probe: int = 32
) -> tuple[float, float, float]:
    """The three deferred-weighted-regularity quantities at index n.

    V1 = sum_k (1/S_n)|sum_m s_m a_{m,k}|  (bounded over n),
    V2 = max_{k <= k_probe} (1/S_n) sum_m s_m a_{m,k}  (-> 0),
    V3 = |(1/S_n) sum_m sum_k s_m a_{m,k} - 1|  (-> 0).

    V1 uses nonnegativity of A: the column sums are nonnegative, so their
    absolute values add up to the weighted row sums.
    """
    ms, sm = scheme.weights(n)
    S = _window_total(ms, sm, n)
    row_sums = np.array([A.row_sum(int(m)) for m in ms])
    weighted = float(np.dot(sm, row_sums)) / S
    probe = np.arange(1, k_probe + 1, dtype=np.int64)
    cols = np.zeros(k_probe)
    for m, s in zip(ms, sm):
        cols += s * np.asarray(A.entries(int(m), probe), dtype=float)
    return weighted, float(cols.max() / S), abs(weighted - 1.0)


# --------------------------------------------------------------------------
# power series method


@dataclass(frozen=True)
class PowerSeriesMethod:
    """p(u) = sum_{n>=1} p_n u**(n-1) with nonnegative p_n, p_1 > 0, radius R.

    ``tail(N, u)`` optionally bounds sum_{n>N} p_n u**(n-1); without it the
    tail is estimated from the ratio of the last computed terms.
    ``series_cap`` is the term count used when no rule applies (R infinite).
    ``log_coeff`` (log p_n) lets the weights be formed in the log domain
    when p_n and u**n separately under- or overflow.
    """

    coeff: Callable
    radius: float = 1.0
    series_cap: int | None = None
    tail: Callable[[int, float], float] | None = None
    label: str = "custom"
    log_coeff: Callable | None = None

    def coefficients(self, ns: np.ndarray) -> np.ndarray:
        return _call(self.coeff, ns)

    def terms_for(self, u: float, eps: float = 1e-12) -> int:
        """Term count N with (u/R)**N <= eps, i.e. about 28/(1 - u) for R = 1."""
        if self.series_cap is not None:
            return int(self.series_cap)
        if math.isinf(self.radius):
            raise ParameterDomainError("series_cap is required for an infinite radius")
        return int(math.ceil(math.log(eps) / math.log(u / self.radius)))


def ones_method() -> PowerSeriesMethod:
    """p_n = 1: Abel's method, p(u) = 1/(1 - u), R = 1."""
    return PowerSeriesMethod(
        coeff=lambda n: np.ones(np.shape(n)),
        radius=1.0,
        tail=lambda N, u: u**N / (1.0 - u),
        label="ones",
    )


def geometric_method(ratio: float) -> PowerSeriesMethod:
    """p_n = ratio**(n-1), p(u) = 1/(1 - ratio*u), R = 1/ratio."""
    if not ratio > 0:
        raise ParameterDomainError(f"geometric ratio must be positive, got {ratio}")
    return PowerSeriesMethod(
        coeff=lambda n: float(ratio) ** (np.asarray(n, dtype=float) - 1.0),
        radius=1.0 / ratio,
        tail=lambda N, u: (ratio * u) ** N / (1.0 - ratio * u),
        label=f"geometric:{ratio:g}",
        log_coeff=lambda n: (np.asarray(n, dtype=float) - 1.0) * math.log(ratio),
    )


class _Weights(NamedTuple):
    ns: np.ndarray
    w: np.ndarray  # p_n u**(n-1)
    total: float  # truncated p(u)
    tail: float  # bound on the omitted part of p(u)


def _weights(method: PowerSeriesMethod, u: float, n_max: int | None = None) -> _Weights:
    if not 0.0 < u < method.radius:
        raise ParameterDomainError(f"u must lie in (0, R={method.radius}), got {u}")
    N = n_max or method.terms_for(u)
    ns = np.arange(1, N + 1, dtype=np.int64)
    p = method.coefficients(ns)
    if np.any(p < 0) or p[0] <= 0:
        raise ParameterDomainError("need p_n >= 0 and p_1 > 0")
    if method.log_coeff is not None:
        w = np.exp(_call(method.log_coeff, ns) + (ns - 1) * math.log(u))
    else:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            w = p * np.exp((ns - 1) * math.log(u))
    if not np.all(np.isfinite(w)):
        raise DivergenceError(f"non-finite terms in p({u})")
    total = float(w.sum())
    if method.tail is not None:
        tail = float(method.tail(N, u))
    else:
        last = w[-min(10, N):]
        nz = last[:-1] > 0
        ratios = last[1:][nz] / last[:-1][nz]
        theta = float(ratios.max()) if ratios.size else 0.0
        if theta >= 1.0:
            raise DivergenceError(f"partial sums of p({u}) are not settling at N={N} (term ratio {theta:.3g})")
        tail = float(w[-1]) * theta / (1.0 - theta)
    if not math.isfinite(tail) or tail > total:
        raise DivergenceError(f"tail of p({u}) after {N} terms is not small (tail={tail:.3g}, sum={total:.3g})")
    return _Weights(ns, w, total, tail)


def power_series_transform(
    seq: RealSequence | Callable, method: PowerSeriesMethod, u: float, n_max: int | None = None
) -> Estimate:
    """(1/p(u)) sum_n x_n p_n u**(n-1), truncated with a bounded error.

    With T the omitted weight of p(u) and B the largest |x_n| seen, the
    truncated ratio is within 2 B T / p_N(u) of the full one.
    """
    if not isinstance(seq, RealSequence):
        seq = RealSequence(seq)
    wt = _weights(method, u, n_max)
    xs = seq.values(wt.ns)
    bound = float(np.max(np.abs(xs)))
    value = float(np.dot(xs, wt.w)) / wt.total
    return Estimate(value, 2.0 * bound * wt.tail / wt.total)


def power_series_regularity_residual(method: PowerSeriesMethod, n: int, u: float) -> float:
    """p_n u**(n-1) / p(u); tends to 0 as u -> R for a regular method."""
    wt = _weights(method, u)
    pn = float(method.coefficients(np.array([n], dtype=np.int64))[0])
    # the truncated p(u) is a lower bound, so this errs on the large side
    return pn * u ** (n - 1) / wt.total


def dyadic_u_grid(jmin: int = 4, jmax: int = 17, radius: float = 1.0) -> np.ndarray:
    """u_j = R (1 - 2**-j) for j = jmin..jmax."""
    if jmin > jmax or jmin < 1:
        raise ParameterDomainError(f"bad dyadic range {jmin}:{jmax}")
    return radius * (1.0 - 2.0 ** -np.arange(jmin, jmax + 1, dtype=float))


def limit_extrapolate(samples: Sequence[tuple[float, float]]) -> Estimate:
    """Last sampled value with the last gap |v_J - v_{J-1}| as its error estimate.

    No higher-order extrapolation is attempted.
    """
    if len(samples) < 3:
        raise InsufficientSamplesError(f"need at least 3 samples, got {len(samples)}")
    us = [u for u, _ in samples]
    if any(b <= a for a, b in zip(us, us[1:])):
        raise ParameterDomainError("sample abscissae must be strictly increasing")
    v_prev, v_last = samples[-2][1], samples[-1][1]
    return Estimate(float(v_last), abs(float(v_last) - float(v_prev)))
