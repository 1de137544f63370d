import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hartree_lab.errors import DivergentIntegral, WeightOverflow
from hartree_lab.gevrey_weights import (
    Variant,
    WeightParams,
    algebra_constant_B2,
    series_pair_batch,
    series_radial_batch,
    asymptotic_ratio_A8,
    check_lipschitz_family,
    check_submultiplicative,
    coefficient_ratio,
    eval_log_weight,
    eval_weight,
    pair_inequality_batch,
    log_ftilde_series,
    sample_pairs,
    series_log_coefficients,
)

mpmath.mp.dps = 40

rhos = st.sampled_from([0.1, 0.5, 1.0, 2.0])
nus = st.sampled_from([0.25, 0.5, 0.75, 1.0])
radii = st.floats(0.0, 500.0, allow_nan=False)


def _mp_ftilde(nu, y):
    nu, y = mpmath.mpf(nu), mpmath.mpf(y)
    return mpmath.nsum(lambda j: y ** j / mpmath.factorial(j) ** (1 / nu), [0, mpmath.inf])


# ---------------------------------------------------------------- trivial values

def test_f0_and_f_closed_forms():
    p = WeightParams(0.5, 0.5, Variant.F0)
    assert eval_weight(p, 4.0) == pytest.approx(math.exp(1.0), rel=1e-15)
    f = p.with_variant(Variant.F)
    assert eval_weight(f, 0.25) == pytest.approx(math.exp(0.5), rel=1e-15)
    assert eval_weight(f, 4.0) == pytest.approx(math.exp(1.0), rel=1e-15)


def test_ftilde_nu_one_is_exponential():
    p = WeightParams(1.3, 1.0, Variant.FTILDE)
    for x in (0.0, 0.2, 3.0, 40.0):
        assert eval_weight(p, x) == pytest.approx(math.exp(1.3 * x), rel=1e-13)


def test_weight_overflow_is_reported():
    with pytest.raises(WeightOverflow):
        eval_weight(WeightParams(2.0, 1.0, Variant.F0), 1000.0)
    assert eval_log_weight(WeightParams(2.0, 1.0, Variant.F0), 1000.0) == pytest.approx(2000.0)


def test_invalid_params():
    with pytest.raises(ValueError):
        WeightParams(-1.0, 0.5)
    with pytest.raises(ValueError):
        WeightParams(1.0, 1.5)
    with pytest.raises(ValueError):
        eval_log_weight(WeightParams(1.0, 0.5), -1.0)


# ---------------------------------------------------------------- series oracles

@pytest.mark.parametrize("nu,y", [(0.5, 0.3), (0.5, 50.0), (0.75, 80.0), (0.25, 7.0)])
def test_series_matches_high_precision_sum(nu, y):
    got = log_ftilde_series(nu, np.array([math.log(y)]))[0]
    assert got == pytest.approx(float(mpmath.log(_mp_ftilde(nu, y))), rel=1e-13)


def test_primitive_series_matches_oracle():
    nu, y = 0.5, 9.0
    ref = mpmath.nsum(lambda j: mpmath.mpf(y) ** (j + 1) / (j + 1)
                      / mpmath.factorial(j) ** (1 / mpmath.mpf(nu)), [0, mpmath.inf])
    got = log_ftilde_series(nu, np.array([math.log(y)]), "F")[0]
    assert got == pytest.approx(float(mpmath.log(ref)), rel=1e-13)


@pytest.mark.parametrize("nu,x", [(0.5, 50.0), (0.75, 80.0)])
def test_asymptotic_ratio_against_oracle(nu, x):
    ref = _mp_ftilde(nu, x) / (
        (2 * mpmath.pi) ** ((nu - 1) / (2 * nu)) * mpmath.sqrt(nu) * mpmath.mpf(x) ** ((nu - 1) / 2)
        * mpmath.exp(mpmath.mpf(x) ** nu / nu))
    r = asymptotic_ratio_A8(WeightParams(1.0, nu, Variant.FTILDE), x)
    assert r == pytest.approx(float(ref), rel=1e-12)
    assert abs(r - 1.0) < 0.02


def test_asymptotic_ratio_nu_one_exact():
    assert asymptotic_ratio_A8(WeightParams(1.0, 1.0, Variant.FTILDE), 50.0) == 1.0


def test_coefficient_ratio_against_oracle():
    nu, j = 0.5, 60
    a = [1 / mpmath.factorial(i) ** (1 / mpmath.mpf(nu)) for i in range(2 * j + 1)]
    b = mpmath.sqrt(sum(a[i] * a[2 * j - i] for i in range(2 * j + 1)))
    ref = b / (a[j] * (mpmath.pi * nu * j) ** 0.25)
    assert coefficient_ratio(nu, j) == pytest.approx(float(ref), rel=1e-12)
    log_a, log_b = series_log_coefficients(nu, j)
    assert log_b[j] == pytest.approx(float(mpmath.log(b)), rel=1e-13)


# ---------------------------------------------------------------- product constant

def _b2_oracle(rho, nu, k_low, k_high):
    k = max(k_low, k_high)

    def integrand(r):
        f1 = r ** k_high if r > 1 else r ** k_low
        fw = mpmath.exp(rho * max(r ** nu, 1))
        return (1 + 4 ** k * mpmath.exp(2 * nu * rho * r ** nu)) / (fw * f1) ** 2

    return 2 * mpmath.quad(integrand, [0, 1, 10, 100, mpmath.inf])


def test_algebra_constant_against_quadrature_oracle():
    got = algebra_constant_B2(WeightParams(1.0, 0.5), 0.25, 1.0, 1)
    assert got == pytest.approx(float(_b2_oracle(1.0, 0.5, 0.25, 1.0)), rel=1e-8)
    coarse = algebra_constant_B2(WeightParams(1.0, 0.5), 0.25, 1.0, 1, resolution="coarse")
    assert abs(coarse - got) / got < 1e-6


def test_algebra_constant_divergence_gates():
    with pytest.raises(DivergentIntegral):
        algebra_constant_B2(WeightParams(1.0, 0.5), 0.5, 1.0, 1)
    with pytest.raises(DivergentIntegral):
        algebra_constant_B2(WeightParams(1.0, 1.0), 0.25, 1.0, 1)


# ---------------------------------------------------------------- properties

@settings(max_examples=200, deadline=None)
@given(rhos, nus, radii, radii)
def test_weights_monotone_in_radius(rho, nu, x, y):
    lo, hi = sorted((x, y))
    for v in (Variant.F0, Variant.F, Variant.FTILDE):
        p = WeightParams(rho, nu, v)
        assert eval_log_weight(p, lo) <= eval_log_weight(p, hi) + 1e-12 * (1 + abs(eval_log_weight(p, hi)))


@settings(max_examples=200, deadline=None)
@given(nus, radii, st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_weights_monotone_in_rho(nu, x, r1, r2):
    lo, hi = sorted((r1, r2))
    for v in (Variant.F0, Variant.F):
        assert eval_log_weight(WeightParams(lo, nu, v), x) <= eval_log_weight(WeightParams(hi, nu, v), x)


@settings(max_examples=200, deadline=None)
@given(rhos, nus, radii)
def test_f_sandwiched_by_f0(rho, nu, x):
    l0 = eval_log_weight(WeightParams(rho, nu, Variant.F0), x)
    lf = eval_log_weight(WeightParams(rho, nu, Variant.F), x)
    assert l0 <= lf <= l0 + rho + 1e-14


@settings(max_examples=100, deadline=None)
@given(rhos, nus, st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_pair_inequalities_hold(rho, nu, n, seed):
    xi, eta = sample_pairs(np.random.default_rng(seed), 500, n)
    for v in (Variant.F, Variant.F0):
        for b in pair_inequality_batch(WeightParams(rho, nu, v), xi, eta).values():
            assert b.n_violations == 0
    s = rho ** (1 / nu)
    for b in series_pair_batch(nu, xi * s, eta * s).values():
        assert b.n_violations == 0


@settings(max_examples=100, deadline=None)
@given(nus, st.lists(st.floats(1e-3, 300.0), min_size=1, max_size=20),
       st.floats(1e-3, 300.0))
def test_radial_inequalities_hold(nu, xs, a):
    for b in series_radial_batch(nu, np.array(xs), a).values():
        assert b.n_violations == 0


def test_single_pair_reports():
    p = WeightParams(1.0, 0.5)
    r = check_submultiplicative(p, [3.0, 0.0], [1.0, 0.5])
    assert r.satisfied and r.constant_used == 1.0
    assert check_lipschitz_family(p, [1.0], [2.5]).satisfied


def test_flagged_region_constant():
    # |xi| <= |xi - eta| <= |eta| selects the 2^(1-nu) constant
    p = WeightParams(1.0, 0.5)
    batch = pair_inequality_batch(p, np.array([[1.0]]), np.array([[2.5]]))
    assert batch["lip_eta"].constant[0] == pytest.approx(2 ** 0.5)
