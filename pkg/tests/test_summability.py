import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlh_approx.errors import (
    DivergenceError,
    InsufficientSamplesError,
    ParameterDomainError,
)
from qlh_approx.summability import (
    CesaroMatrix,
    DeferredScheme,
    FunctionMatrix,
    IdentityMatrix,
    IndexIndicator,
    PowerSeriesMethod,
    RealSequence,
    ZeroMatrix,
    deferred_tail,
    deferred_weighted_mean,
    dwA_density,
    dwA_rate_ratio,
    dw_regularity_residuals,
    dyadic_u_grid,
    full_scheme,
    geometric_method,
    half_deferred_scheme,
    limit_extrapolate,
    matrix_row_transform,
    natural_density_estimate,
    ones_method,
    perfect_squares,
    power_series_regularity_residual,
    power_series_transform,
)

EMPTY = IndexIndicator(lambda k: np.zeros(np.shape(k), dtype=bool), "empty")
ALL = IndexIndicator(lambda k: np.ones(np.shape(k), dtype=bool), "all")
EVENS = RealSequence(lambda n: (np.asarray(n) % 2 == 0).astype(float), "alternating")


def _theta_oracle(u):
    # (1-u) sum_{m>=1} u**(m*m) ~ (1-u) (sqrt(pi / ln(1/u)) / 2 - 1/2)
    return (1 - u) * math.sqrt(math.pi / (4 * math.log(1 / u)))


def _squares_transform_exact(u):
    m = np.arange(1, int(math.sqrt(60 / (1 - u))) + 10)
    return (1 - u) / u * float(np.sum(u ** (m * m).astype(float)))


def test_natural_density_examples():
    assert natural_density_estimate(EMPTY, 1000) == 0.0
    assert natural_density_estimate(ALL, 1000) == 1.0
    assert natural_density_estimate(perfect_squares(), 10**4) == 0.01


def test_perfect_squares_indicator():
    ks = np.arange(0, 20000)
    expected = np.array([k >= 1 and math.isqrt(k) ** 2 == k for k in ks])
    assert np.array_equal(perfect_squares().mask(ks), expected)
    big = np.array([10**14, 10**14 - 1, (10**7 + 1) ** 2])
    assert list(perfect_squares().mask(big)) == [True, False, True]


def test_deferred_mean_examples():
    assert deferred_weighted_mean(RealSequence(lambda n: 7.0), half_deferred_scheme(), 17) == pytest.approx(7.0)
    assert deferred_weighted_mean(RealSequence(lambda n: n), full_scheme(), 40) == pytest.approx(20.5)
    wide = DeferredScheme(lambda n: 0, lambda n: 2 * n, lambda m: np.ones(np.shape(m)), "double")
    assert deferred_weighted_mean(EVENS, wide, 13) == 0.5


def test_scheme_validation():
    bad = DeferredScheme(lambda n: n, lambda n: n, lambda m: 1.0, "empty window")
    with pytest.raises(ParameterDomainError):
        bad.window(5)
    neg = DeferredScheme(lambda n: 0, lambda n: n, lambda m: -np.ones(np.shape(m)), "negative")
    with pytest.raises(ParameterDomainError):
        neg.weights(5)
    assert full_scheme().check_growth(range(1, 200))
    assert not DeferredScheme(lambda n: 0, lambda n: 3, lambda m: 1.0).check_growth(range(1, 200))


def test_matrix_row_examples():
    seq = RealSequence(lambda n: np.sin(np.asarray(n, dtype=float)))
    assert matrix_row_transform(IdentityMatrix(), seq, 9).value == pytest.approx(math.sin(9))
    assert matrix_row_transform(CesaroMatrix(), RealSequence(lambda n: n), 30).value == pytest.approx(15.5)
    assert matrix_row_transform(CesaroMatrix(), RealSequence(lambda n: 1.0), 30).value == pytest.approx(1.0)


@given(n=st.integers(1, 400))
def test_deferred_mean_is_cesaro(n):
    seq = RealSequence(lambda k: np.cos(np.asarray(k, dtype=float)) + 2)
    a = deferred_weighted_mean(seq, full_scheme(), n)
    b = matrix_row_transform(CesaroMatrix(), seq, n).value
    assert math.isclose(a, b, rel_tol=1e-12)


def test_dwA_density_examples():
    scheme = full_scheme()
    assert dwA_density(EMPTY, IdentityMatrix(), scheme, 50) == 0.0
    assert dwA_density(ALL, IdentityMatrix(), scheme, 50) == 1.0
    assert dwA_density(perfect_squares(), IdentityMatrix(), scheme, 10**4) == 0.01


def test_dwA_density_cesaro_ones():
    assert dwA_density(ALL, CesaroMatrix(), full_scheme(), 200) == pytest.approx(1.0, rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 300), mod=st.integers(2, 7))
def test_dwA_density_monotone(n, mod):
    small = IndexIndicator(lambda k: np.asarray(k) % (2 * mod) == 0, "fine")
    big = IndexIndicator(lambda k: np.asarray(k) % mod == 0, "coarse")
    for A in (IdentityMatrix(), CesaroMatrix()):
        for scheme in (full_scheme(), half_deferred_scheme()):
            slack = deferred_tail(A, scheme, n)
            assert dwA_density(small, A, scheme, n) <= dwA_density(big, A, scheme, n) + slack + 1e-15


def test_function_matrix_declared_tail():
    # a_{n,k} = 2**-k, support n terms, tail 2**-n
    A = FunctionMatrix(lambda n, k: 0.5 ** np.asarray(k, dtype=float), lambda n: n, lambda n: 0.5**n, "geometric rows")
    est = matrix_row_transform(A, RealSequence(lambda k: 1.0), 10)
    assert abs(est.value - 1.0) <= est.error + 1e-15
    assert deferred_tail(A, full_scheme(), 4) == pytest.approx((0.5 + 0.25 + 0.125 + 0.0625) / 4)


def test_regularity_examples():
    for n in (10, 100, 1000):
        v1, v2, v3 = dw_regularity_residuals(IdentityMatrix(), full_scheme(), n)
        assert v1 == 1.0 and v2 == pytest.approx(1 / n) and v3 == 0.0
    for n in (5, 50):
        assert dw_regularity_residuals(ZeroMatrix(), full_scheme(), n)[2] == 1.0
    v3 = [dw_regularity_residuals(CesaroMatrix(), full_scheme(), n)[2] for n in (100, 1000, 10000)]
    assert max(v3) <= 1e-12


def test_rate_ratio():
    ns = [100, 400, 1600, 6400]
    ratio = dwA_rate_ratio(perfect_squares(), IdentityMatrix(), full_scheme(), ns, lambda n: n**-0.25)
    assert all(b < a for a, b in zip(ratio, ratio[1:]))


def test_power_series_constant():
    for u in (0.5, 0.9, 0.999):
        assert power_series_transform(RealSequence(lambda n: 3.5), ones_method(), u).value == pytest.approx(3.5, rel=1e-12)


def test_alternating_converges_to_half():
    us = dyadic_u_grid()
    vals = [power_series_transform(EVENS, ones_method(), u).value for u in us]
    # exact value u/(1+u) approaches 1/2 from below
    for u, v in zip(us, vals):
        assert v == pytest.approx(u / (1 + u), abs=1e-11)
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert abs(power_series_transform(EVENS, ones_method(), 1 - 1e-4).value - 0.5) <= 1e-3


def test_squares_transform_matches_theta_sum():
    ind = perfect_squares()
    seq = RealSequence(lambda n: ind.mask(n).astype(float))
    for u in (0.99, 0.999, 1 - 1e-4):
        est = power_series_transform(seq, ones_method(), u)
        assert abs(est.value - _squares_transform_exact(u)) <= est.error + 1e-12
    u = 1 - 1e-4
    assert _theta_oracle(u) == pytest.approx(8.86e-3, abs=1e-4)
    # the theta approximation drops the -(1-u)/2 term of the Jacobi sum
    assert abs(_squares_transform_exact(u) - (_theta_oracle(u) - (1 - u) / 2)) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), u=st.floats(0.1, 0.99))
def test_transform_is_affine(a, b, u):
    x = RealSequence(lambda n: np.sin(np.asarray(n, dtype=float)))
    y = RealSequence(lambda n: 1.0 / np.asarray(n, dtype=float))
    z = RealSequence(lambda n: a * x.values(n) + b * y.values(n))
    N = ones_method().terms_for(u)
    tz = power_series_transform(z, ones_method(), u, N).value
    tx = power_series_transform(x, ones_method(), u, N).value
    ty = power_series_transform(y, ones_method(), u, N).value
    assert abs(tz - (a * tx + b * ty)) <= 1e-12 * (1 + abs(a) + abs(b))


def test_classical_limit_is_preserved():
    seq = RealSequence(lambda n: 2.0 + 1.0 / np.asarray(n, dtype=float))
    gaps = []
    for u in dyadic_u_grid():
        est = power_series_transform(seq, ones_method(), u)
        gaps.append(abs(est.value - 2.0))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 2e-4


def test_geometric_method_equals_rescaled_ones():
    g = geometric_method(0.5)
    seq = RealSequence(lambda n: np.cos(np.asarray(n, dtype=float)))
    for v in (0.9, 0.99, 0.9999):
        a = power_series_transform(seq, g, 2 * v).value
        b = power_series_transform(seq, ones_method(), v).value
        assert a == pytest.approx(b, abs=1e-10)


def test_regularity_residual_examples():
    assert power_series_regularity_residual(ones_method(), 1, 0.5) == pytest.approx(0.5, rel=1e-10)
    assert power_series_regularity_residual(ones_method(), 3, 1 - 1e-6) == pytest.approx(1e-6, rel=1e-4)
    vals = [power_series_regularity_residual(ones_method(), 5, u) for u in dyadic_u_grid()]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_method_validation():
    with pytest.raises(ParameterDomainError):
        power_series_transform(EVENS, ones_method(), 1.0)
    with pytest.raises(ParameterDomainError):
        geometric_method(0.0)
    bad = PowerSeriesMethod(lambda n: np.where(np.asarray(n) == 1, 0.0, 1.0), label="p1 zero")
    with pytest.raises(ParameterDomainError):
        power_series_transform(EVENS, bad, 0.5)
    # factorial growth is not summable at this term count
    wild = PowerSeriesMethod(lambda n: np.exp(np.asarray(n, dtype=float)), radius=1.0, label="exp")
    with pytest.raises(DivergenceError):
        power_series_transform(EVENS, wild, 0.9)


def test_method_without_declared_tail():
    m = PowerSeriesMethod(lambda n: 1.0 / np.asarray(n, dtype=float), label="harmonic")
    est = power_series_transform(RealSequence(lambda n: 1.0), m, 0.9)
    assert est.value == pytest.approx(1.0)
    assert est.error < 1e-9


def test_dyadic_grid():
    us = dyadic_u_grid()
    assert us.size == 14 and us[0] == 1 - 2**-4 and us[-1] == 1 - 2**-17
    assert np.all(np.diff(us) > 0)
    assert dyadic_u_grid(4, 6, radius=2.0)[0] == 2 * (1 - 2**-4)
    with pytest.raises(ParameterDomainError):
        dyadic_u_grid(5, 4)
    assert ones_method().terms_for(1 - 1e-4) == pytest.approx(28 / 1e-4, rel=0.02)


def test_limit_extrapolate_examples():
    us = list(dyadic_u_grid())
    est = limit_extrapolate([(u, 4.0) for u in us])
    assert est == (4.0, 0.0)
    est = limit_extrapolate([(u, 0.5 - (1 - u)) for u in us])
    assert est.value == pytest.approx(0.5, abs=1e-5)
    assert est.error == pytest.approx(us[-1] - us[-2])
    osc = limit_extrapolate([(u, (-1) ** j) for j, u in enumerate(us)])
    assert osc.error == 2.0
    with pytest.raises(InsufficientSamplesError):
        limit_extrapolate([(0.5, 1.0), (0.6, 1.0)])
    with pytest.raises(ParameterDomainError):
        limit_extrapolate([(0.5, 1.0), (0.4, 1.0), (0.6, 1.0)])
