"""The q-Lagrange-Hermite positive linear operator on C[0, 1].

For ``g`` continuous on [0, 1] the operator is

    R(g; x) = prod_i (a_i x**i; q)_n
              * sum_p [ sum_{l_1 + 2 l_2 + ... + r l_r = p}
                        prod_k (q**n; q)_{l_k} a_k**l_k / (q; q)_{l_k}
                        * g([l_1]_q / [n + l_1 - 1]_q) ] x**p

with ``a_k = alpha_n^(k)``.  The series weights are nonnegative and sum to
exactly one, so ``1 - (partial weight sum)`` bounds the truncated tail and
every returned value comes with an a-posteriori error certificate.

Evaluation exploits the product structure of the weights: writing
``z_k = a_k x**k``, factor ``k`` contributes the distribution

    d_k(l) = (z_k; q)_n (q**n; q)_l z_k**l / (q; q)_l

at degree ``k * l``, and the degree-``p`` composition sum is the
coefficient of ``t**p`` in the product of these series.  Those
coefficients are formed by exact (direct) convolution, in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ParameterDomainError, TruncationError
from .lagrange_hermite import prefactor
from .qcalc import check_q, q_integer, q_pochhammer

DEFAULT_TAIL_TOL = 1e-10
DEFAULT_MAX_TERMS = 10**6
_INITIAL_TERMS = 64


@dataclass(frozen=True)
class OperatorParams:
    """All parameters of one member R_{n,q}^{alpha(1..r)} of the family."""

    n: int
    q: float
    alphas: tuple[float, ...]
    tail_tol: float = DEFAULT_TAIL_TOL
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError(f"n must be a positive integer, got {self.n!r}")
        check_q(self.q)
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.alphas:
            raise ParameterDomainError("alphas must be non-empty")
        for k, a in enumerate(self.alphas, start=1):
            if not 0.0 < a < 1.0:
                raise ParameterDomainError(f"alpha^({k}) must lie in (0, 1), got {a!r}")
        if not 0.0 < self.tail_tol < 1.0:
            raise ParameterDomainError(f"tail_tol must lie in (0, 1), got {self.tail_tol!r}")

    @property
    def r(self) -> int:
        return len(self.alphas)

    @property
    def alpha1(self) -> float:
        return self.alphas[0]


@dataclass(frozen=True)
class TestFunction:
    """A labelled function on [0, 1].  ``fn`` should accept numpy arrays.

    ``coeffs`` may declare g = c0 + c1 s + c2 s**2 exactly; the Korovkin
    harness then bounds residuals of g through those of the monomials.
    """

    fn: Callable
    label: str = "g"
    coeffs: tuple[float, float, float] | None = None

    __test__ = False  # not a pytest class

    def __call__(self, s):
        return self.fn(s)


def monomial(i: int) -> TestFunction:
    """The Korovkin test function e_i(s) = s**i."""
    coeffs = tuple(1.0 if j == i else 0.0 for j in range(3)) if i <= 2 else None
    if i == 0:
        return TestFunction(lambda s: np.ones_like(np.asarray(s, dtype=float)), "e0", coeffs)
    return TestFunction(lambda s, i=i: np.asarray(s, dtype=float) ** i, f"e{i}", coeffs)


class OperatorValue(NamedTuple):
    value: float
    error_bound: float  # certified |value - R(g; x)|, with the sampled sup of |g|
    terms: int  # P*, the last degree included


@dataclass(frozen=True)
class ParamSchedule:
    """Maps the operator index to (alpha_n^(k), q_n)."""

    alpha_of: Callable[[int, int], float]
    q_of: Callable[[int], float]
    r: int = 1
    label: str = "custom"
    tail_tol: float = DEFAULT_TAIL_TOL

    def params(self, n: int) -> OperatorParams:
        alphas = tuple(float(self.alpha_of(n, k)) for k in range(1, self.r + 1))
        return OperatorParams(n=n, q=float(self.q_of(n)), alphas=alphas, tail_tol=self.tail_tol)

    def check_assumptions(self, ns: Sequence[int], eps: float = 1e-2, q_limit_tol: float = 5e-2) -> dict:
        """Spot-check alpha_n^(1) -> 1, q_n -> 1 and q_n**n -> a < 1 on sampled ``ns``.

        Only the tail of the sample is inspected; nothing here proves a limit.
        """
        ns = sorted(ns)
        tail = ns[len(ns) // 2:]
        a1 = [1.0 - self.alpha_of(n, 1) for n in tail]
        qs = [1.0 - self.q_of(n) for n in tail]
        qn = [self.q_of(n) ** n for n in tail]
        return {
            "alpha_to_one": a1[-1] <= eps and all(x >= y for x, y in zip(a1, a1[1:])),
            "q_to_one": qs[-1] <= eps,
            "q_power_limit": qn[-1],
            "q_power_below_one": qn[-1] < 1.0 - q_limit_tol and abs(qn[-1] - qn[-2]) <= q_limit_tol,
        }


def default_schedule(r: int = 1, tail_tol: float = DEFAULT_TAIL_TOL) -> ParamSchedule:
    """alpha_n^(k) = n/(n+1), q_n = 1 - 1/n (q_2 = 1/2; q_1 taken as 1/2 too)."""
    return ParamSchedule(
        alpha_of=lambda n, k: n / (n + 1.0),
        q_of=lambda n: 1.0 - 1.0 / np.maximum(n, 2),
        r=r,
        label="alpha=n/(n+1), q=1-1/n",
        tail_tol=tail_tol,
    )


def is_perfect_square(n: int) -> bool:
    return n >= 1 and math.isqrt(n) ** 2 == n


def node(l1: int, n: int, q: float) -> float:
    """Sample point [l1]_q / [n + l1 - 1]_q; the 0/0 case n = 1, l1 = 0 is 0."""
    if l1 == 0:
        return 0.0
    return q_integer(l1, q) / q_integer(n + l1 - 1, q)


def nodes(n: int, q: float, count: int) -> np.ndarray:
    """node(l, n, q) for l = 0 .. count-1."""
    ell = np.arange(count, dtype=float)
    out = np.zeros(count)
    # (1 - q**l) / (1 - q**(n+l-1)); expm1 keeps accuracy for q near 1
    lq = math.log(q)
    num = -np.expm1(ell[1:] * lq)
    den = -np.expm1((n + ell[1:] - 1.0) * lq)
    out[1:] = num / den
    return out


def _log_factor_distribution(z: np.ndarray, n: int, q: float, L: int) -> np.ndarray:
    """log d(l) for l = 0..L-1, one row per entry of ``z`` (z in [0, 1))."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ell = np.arange(L - 1, dtype=float)
    lq = math.log(q)
    with np.errstate(divide="ignore"):
        logz = np.log(z)
        # log (z; q)_n, accumulated in index order
        qj = np.exp(np.arange(n) * lq)
        log_pref = np.log1p(-np.outer(z, qj)).sum(axis=1)
        # d(l+1)/d(l) = (1 - q**(n+l)) z / (1 - q**(l+1))
        log_ratio = np.log(-np.expm1((n + ell) * lq)) - np.log(-np.expm1((ell + 1.0) * lq))
    out = np.empty((z.size, L))
    out[:, 0] = log_pref
    if L > 1:
        steps = log_ratio[None, :] + logz[:, None]
        out[:, 1:] = log_pref[:, None] + np.cumsum(steps, axis=1)
    # z = 0: all mass at l = 0
    zero = z == 0.0
    if zero.any():
        out[zero, 0] = 0.0
        out[zero, 1:] = -np.inf
    return out


def factor_distribution(z: float, n: int, q: float, L: int) -> np.ndarray:
    """d(l) = (z; q)_n (q**n; q)_l z**l / (q; q)_l for l < L; sums to 1 as L -> inf."""
    return np.exp(_log_factor_distribution(np.array([z]), n, q, L)[0])


def _spread(d: np.ndarray, k: int, P: int) -> np.ndarray:
    """Place d(l) at degree k*l, truncated to degrees 0..P."""
    out = np.zeros(P + 1)
    m = P // k + 1
    out[::k][: min(m, d.size)] = d[:m]
    return out


def _degree_arrays(x: float, params: OperatorParams, P: int, gvals_fn) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-degree weights W_p, g-weighted sums G_p (p <= P) and the node values used."""
    n, q = params.n, params.q
    d1 = np.exp(_log_factor_distribution(np.array([params.alphas[0] * x]), n, q, P + 1)[0])
    gv = gvals_fn(P + 1)
    W = d1
    G = d1 * gv
    for k in range(2, params.r + 1):
        z = params.alphas[k - 1] * x**k
        dk = np.exp(_log_factor_distribution(np.array([z]), n, q, P // k + 1)[0])
        a = _spread(dk, k, P)
        W = np.convolve(W, a)[: P + 1]
        G = np.convolve(G, a)[: P + 1]
    return W, G, gv


def _certify(W: np.ndarray, tol: float) -> int | None:
    """Smallest P* with 1 - sum_{p<=P*} W_p <= tol, or None."""
    cum = np.cumsum(W)
    hit = np.nonzero(1.0 - cum <= tol)[0]
    return int(hit[0]) if hit.size else None


def _as_values(g: Callable, s: np.ndarray) -> np.ndarray:
    try:
        v = g(s)
    except TypeError:
        v = np.vectorize(g, otypes=[float])(s)
    v = np.asarray(v, dtype=float)
    if v.shape != s.shape:
        v = np.broadcast_to(v, s.shape).astype(float)
    return v


def _node_values(g: Callable, params: OperatorParams):
    cache: dict[int, np.ndarray] = {}

    def values(count: int) -> np.ndarray:
        if count not in cache:
            cache[count] = _as_values(g, nodes(params.n, params.q, count))
        return cache[count]

    return values


def evaluate(g: Callable, x: float, params: OperatorParams) -> OperatorValue:
    """R(g; x) with adaptive, certified truncation.

    The series is cut at the smallest degree P* whose remaining weight is at
    most ``params.tail_tol``; the error bound is that weight times the largest
    |g| seen on the sampled nodes and at ``x``.
    """
    if not 0.0 <= x <= 1.0:
        raise ParameterDomainError(f"x must lie in [0, 1], got {x!r}")
    gvals = _node_values(g, params)
    if x == 0.0:
        g0 = float(gvals(1)[0])
        return OperatorValue(g0, 0.0, 0)
    P = _INITIAL_TERMS
    while True:
        W, G, gv = _degree_arrays(x, params, P, gvals)
        p_star = _certify(W, params.tail_tol)
        if p_star is not None:
            break
        if P >= params.max_terms:
            raise TruncationError(
                f"series not certified within {params.max_terms} terms "
                f"(n={params.n}, q={params.q}, x={x}); parameters too close to divergence"
            )
        P = min(2 * P, params.max_terms)
    tail = max(0.0, 1.0 - float(np.sum(W[: p_star + 1])))
    gnorm = max(float(np.max(np.abs(gv))), abs(float(_as_values(g, np.array([x]))[0])))
    value = float(np.sum(G[: p_star + 1]))
    return OperatorValue(value, gnorm * tail, p_star)


def apply(g: Callable, x: float, params: OperatorParams) -> float:
    """R(g; x); accurate to ``sup|g| * params.tail_tol``."""
    return evaluate(g, x, params).value


def apply_grid(g: Callable, xs: Sequence[float], params: OperatorParams) -> tuple[np.ndarray, np.ndarray]:
    """Values and certified error bounds of R(g; x) at every x in ``xs``.

    Each point is truncated at its own P*, as in :func:`evaluate`.
    """
    return apply_grid_many([g], xs, params)[0]


def apply_grid_many(
    gs: Sequence[Callable], xs: Sequence[float], params: OperatorParams
) -> list[tuple[np.ndarray, np.ndarray]]:
    """:func:`apply_grid` for several functions sharing one weight computation.

    For r = 1 the whole grid is processed as a single array.
    """
    xs = np.asarray(xs, dtype=float)
    if params.r > 1:
        out = []
        for g in gs:
            res = [evaluate(g, float(x), params) for x in xs]
            out.append((np.array([v.value for v in res]), np.array([v.error_bound for v in res])))
        return out
    if np.any((xs < 0) | (xs > 1)):
        raise ParameterDomainError("grid points must lie in [0, 1]")
    z = params.alphas[0] * xs
    # the largest z has the heaviest tail; size the array from that row alone
    P = _INITIAL_TERMS
    while True:
        d = np.exp(_log_factor_distribution(np.array([z.max()]), params.n, params.q, P + 1)[0])
        if 1.0 - d.sum() <= params.tail_tol:
            break
        if P >= params.max_terms:
            raise TruncationError(f"series not certified within {params.max_terms} terms (n={params.n})")
        P = min(2 * P, params.max_terms)
    while True:
        D = np.exp(_log_factor_distribution(z, params.n, params.q, P + 1))
        ok = (1.0 - np.cumsum(D, axis=1)) <= params.tail_tol
        if ok[:, -1].all():
            break
        if P >= params.max_terms:
            raise TruncationError(f"series not certified within {params.max_terms} terms (n={params.n})")
        P = min(2 * P, params.max_terms)
    p_star = np.argmax(ok, axis=1)
    D[np.arange(P + 1)[None, :] > p_star[:, None]] = 0.0
    tail = np.clip(1.0 - D.sum(axis=1), 0.0, None)
    s = nodes(params.n, params.q, P + 1)
    out = []
    for g in gs:
        gv = _as_values(g, s)
        gnorm = np.maximum(np.max(np.abs(gv)), np.abs(_as_values(g, xs)))
        out.append((D @ gv, gnorm * tail))
    return out


def apply_bruteforce(g: Callable, x: float, params: OperatorParams, P: int) -> float:
    """Fixed-degree reference evaluation by explicit composition enumeration.

    Every tuple (l_1, ..., l_r) with l_1 + 2 l_2 + ... + r l_r <= P is
    visited; the per-index factors come from fresh q-Pochhammer products
    (no log-domain ratios).  Tuples sharing (l_2, ..., l_r) are summed over
    l_1 with a running sum.  Intended as an independent check on
    :func:`evaluate`.
    """
    n, q, r = params.n, params.q, params.r
    ell = np.arange(P + 1)
    ratio = np.array([q_pochhammer(q**n, q, l) / q_pochhammer(q, q, l) for l in range(P + 1)])
    tables = [ratio * (a * x**k) ** ell for k, a in enumerate(params.alphas, start=1)]
    gv = np.array([float(_as_values(g, np.array([node(int(l), n, q)]))[0]) for l in ell])
    head = np.cumsum(tables[0] * gv)  # head[m] = sum over l_1 <= m
    # all (l_2, ..., l_r) with 2 l_2 + ... + r l_r <= P, and their weights
    rest = np.zeros(1, dtype=np.int64)
    weight = np.ones(1)
    for k in range(2, r + 1):
        lk = np.arange(P // k + 1)
        deg = rest[:, None] + k * lk[None, :]
        w = weight[:, None] * tables[k - 1][lk][None, :]
        keep = deg <= P
        rest, weight = deg[keep], w[keep]
    total = float(np.dot(weight, head[P - rest]))
    return prefactor(x, n, params.alphas, q) * total


def moment(i: int, x: float, params: OperatorParams) -> float:
    """R(s**i; x) for i in {0, 1, 2}."""
    if i not in (0, 1, 2):
        raise ParameterDomainError(f"moment index must be 0, 1 or 2, got {i!r}")
    return apply(monomial(i), x, params)


def second_moment_deviation_bound(x: float, params: OperatorParams) -> float:
    """Analytic bound 2 x**2 (1 - alpha1) + x alpha1 / [n]_q on |R(s**2; x) - x**2|."""
    a = params.alpha1
    return 2.0 * x * x * (1.0 - a) + x * a / q_integer(params.n, params.q)


def second_moment_upper_bound(x: float, params: OperatorParams) -> float:
    """Analytic bound q (x alpha1)**2 + x alpha1 / [n]_q on R(s**2; x)."""
    a = params.alpha1
    return params.q * (x * a) ** 2 + x * a / q_integer(params.n, params.q)


def central_second_moment_sup(params: OperatorParams, grid: Sequence[float]) -> float:
    """max over the grid of R((s - x)**2; x) = R(s**2) - 2x R(s) + x**2."""
    xs = np.asarray(grid, dtype=float)
    if xs.size == 0:
        raise ParameterDomainError("grid must be non-empty")
    m1, _ = apply_grid(monomial(1), xs, params)
    m2, _ = apply_grid(monomial(2), xs, params)
    return float(np.max(m2 - 2.0 * xs * m1 + xs * xs))


def perturbation(n: int) -> int:
    """y_n = 1 when n is a perfect square, else 0."""
    return 1 if is_perfect_square(n) else 0


def perturbed_apply(g: Callable, x: float, params: OperatorParams) -> float:
    """H_n(g; x) = (1 + y_n) R_n(g; x)."""
    return (1 + perturbation(params.n)) * apply(g, x, params)


def perturbed_apply_grid(g: Callable, xs: Sequence[float], params: OperatorParams) -> tuple[np.ndarray, np.ndarray]:
    factor = 1 + perturbation(params.n)
    v, e = apply_grid(g, xs, params)
    return factor * v, factor * e
