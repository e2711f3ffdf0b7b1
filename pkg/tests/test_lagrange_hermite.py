import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlh_approx.errors import ParameterDomainError
from qlh_approx.lagrange_hermite import (
    LHParams,
    lh_coefficient,
    normalization_residual,
    prefactor,
    weighted_compositions,
)
from qlh_approx.qcalc import q_pochhammer


def _partition_count(p, r):
    # parts of size at most r, classic coin-change table
    ways = [1] + [0] * p
    for part in range(1, r + 1):
        for s in range(part, p + 1):
            ways[s] += ways[s - part]
    return ways[p]


def _generating_coefficients(params, P):
    """Taylor coefficients of prod_k prod_{j<beta_k} 1/(1 - z_k q**j t**k) up to t**P."""
    series = np.zeros(P + 1)
    series[0] = 1.0
    for k, (beta, z) in enumerate(zip(params.betas, params.z), start=1):
        for j in range(beta):
            c = z * params.q**j
            geo = np.zeros(P + 1)
            geo[:: k] = c ** np.arange(P // k + 1)
            series = np.convolve(series, geo)[: P + 1]
    return series


def test_composition_examples():
    assert list(weighted_compositions(0, 3)) == [(0, 0, 0)]
    assert list(weighted_compositions(3, 2)) == [(3, 0), (1, 1)]
    assert len(list(weighted_compositions(6, 3))) == 7


def test_six_three_against_triple_loop():
    brute = {
        (a, b, c) for a, b, c in itertools.product(range(7), repeat=3) if a + 2 * b + 3 * c == 6
    }
    assert set(weighted_compositions(6, 3)) == brute


@pytest.mark.parametrize("p", range(31))
@pytest.mark.parametrize("r", range(1, 6))
def test_composition_count_is_partition_count(p, r):
    comps = list(weighted_compositions(p, r))
    assert len(comps) == _partition_count(p, r)
    assert len(set(comps)) == len(comps)
    for c in comps:
        assert len(c) == r
        assert sum(k * l for k, l in enumerate(c, start=1)) == p


def test_composition_order_is_fixed():
    assert list(weighted_compositions(9, 4)) == list(weighted_compositions(9, 4))


def test_composition_domain():
    with pytest.raises(ParameterDomainError):
        list(weighted_compositions(-1, 2))
    with pytest.raises(ParameterDomainError):
        list(weighted_compositions(2, 0))


def test_coefficient_examples():
    params = LHParams(betas=(4,), z=(0.3,), q=0.6)
    assert lh_coefficient(0, params) == 1.0
    expected = q_pochhammer(0.6**4, 0.6, 1) * 0.3 / q_pochhammer(0.6, 0.6, 1)
    assert lh_coefficient(1, params) == pytest.approx(expected, rel=1e-15)
    assert lh_coefficient(1, params) == pytest.approx((1 - 0.6**4) / 0.4 * 0.3, rel=1e-14)

    p2 = LHParams(betas=(3, 3), z=(0.4, 0.7), q=0.5)

    def term(l1, l2):
        f = lambda l, z: q_pochhammer(0.5**3, 0.5, l) * z**l / q_pochhammer(0.5, 0.5, l)
        return f(l1, 0.4) * f(l2, 0.7)

    assert lh_coefficient(2, p2) == pytest.approx(term(2, 0) + term(0, 1), rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(
    betas=st.lists(st.integers(1, 6), min_size=1, max_size=3),
    zs=st.lists(st.floats(0.0, 0.99), min_size=3, max_size=3),
    q=st.floats(0.05, 0.95),
)
def test_coefficients_match_generating_product(betas, zs, q):
    params = LHParams(betas=tuple(betas), z=tuple(zs[: len(betas)]), q=q)
    P = 14
    oracle = _generating_coefficients(params, P)
    for p in range(P + 1):
        h = lh_coefficient(p, params)
        assert h >= 0.0
        assert math.isclose(h, oracle[p], rel_tol=1e-10, abs_tol=1e-14)


@given(beta=st.integers(1, 20), z=st.floats(0, 0.99), q=st.floats(0.05, 0.95), p=st.integers(0, 40))
def test_single_variable_reduction(beta, z, q, p):
    params = LHParams(betas=(beta,), z=(z,), q=q)
    direct = q_pochhammer(q**beta, q, p) * z**p / q_pochhammer(q, q, p)
    assert math.isclose(lh_coefficient(p, params), direct, rel_tol=1e-12, abs_tol=1e-300)


def test_params_validation():
    with pytest.raises(ParameterDomainError):
        LHParams(betas=(1, 2), z=(0.5,), q=0.5)
    with pytest.raises(ParameterDomainError):
        LHParams(betas=(0,), z=(0.5,), q=0.5)
    with pytest.raises(ParameterDomainError):
        LHParams(betas=(2,), z=(0.5,), q=1.0)


def test_prefactor_examples():
    assert prefactor(0.0, 7, (0.3, 0.9), 0.4) == 1.0
    assert prefactor(1.0, 1, (0.5,), 0.5) == pytest.approx(0.5)
    expected = (1 - 0.4) * (1 - 0.2) * (1 - 0.2) * (1 - 0.1)
    assert prefactor(0.5, 2, (0.8, 0.8), 0.5) == pytest.approx(expected, rel=1e-15)


def test_prefactor_domain():
    with pytest.raises(ParameterDomainError):
        prefactor(1.2, 2, (0.5,), 0.5)
    with pytest.raises(ParameterDomainError):
        prefactor(0.5, 2, (1.0,), 0.5)


def test_normalization_residual_examples():
    assert normalization_residual(0.0, 3, (0.5, 0.5), 0.5, 4) == 0.0
    assert normalization_residual(0.5, 5, (0.9, 0.9), 0.6, 120) <= 1e-8
    assert normalization_residual(0.9, 2, (0.99,), 0.9, 1) > 0.0


def test_normalization_residual_decreases():
    res = [normalization_residual(0.7, 3, (0.8, 0.6), 0.5, P) for P in range(0, 60, 5)]
    assert all(b <= a + 1e-15 for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-6
