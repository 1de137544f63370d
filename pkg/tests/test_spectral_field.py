import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hartree_lab.errors import DilationOffGrid
from hartree_lab.gevrey_weights import Variant, WeightParams, eval_weight
from hartree_lab.spectral_field import (
    Grid,
    NormSpec,
    SpectralField,
    apply_MDU,
    dual_to_fourier,
    fourier_to_dual,
    fractional_multiplier,
    g0,
    gradient,
    k_norm,
    laplacian,
    physical_grid,
    product,
    split_low_high,
    y_norm,
)

G1 = Grid(1, 4 * math.pi, 128)
G2 = Grid(2, 4 * math.pi, 64)


def gauss(grid, a=1.0):
    return SpectralField.from_function(grid, lambda *x: a * np.exp(-sum(v * v for v in x) / 2))


def random_field(grid, seed, decay=1.0, reality=False):
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) \
        * np.exp(-decay * grid.kernel.ksq)
    c[grid.kernel.nyquist] = 0
    return SpectralField(grid, c, reality)


# ---------------------------------------------------------------- grid and transforms

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1, 4 * math.pi, 129)
    with pytest.raises(ValueError):
        Grid(1, 1.0, 64)  # spacing pi > 1/4
    with pytest.raises(ValueError):
        Grid(4, 20.0, 64)


def test_gaussian_coefficients_match_closed_form():
    # the unitary transform of exp(-x^2/2) is exp(-xi^2/2)
    u = gauss(G1)
    xi = G1.kernel.xi1
    expect = np.where(G1.kernel.nyquist, 0.0, np.exp(-xi ** 2 / 2))
    assert np.max(np.abs(u.coeffs - expect)) < 1e-13


def test_plancherel():
    u = gauss(G2)
    assert u.l2_norm() == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    v = u.to_real()
    assert np.sqrt(np.sum(np.abs(v) ** 2) * G2.dx ** 2) == pytest.approx(u.l2_norm(), rel=1e-12)


def test_serialization_round_trips():
    u = random_field(G2, 1)
    assert SpectralField.from_bytes(u.to_bytes()).allclose(u, rtol=0)
    assert SpectralField.from_json(u.to_json()).allclose(u, rtol=0)
    r = random_field(G1, 2, reality=True)
    back = SpectralField.from_bytes(r.to_bytes())
    assert back.reality and back.allclose(r, rtol=0)


def test_reality_projection():
    r = random_field(G1, 3, reality=True)
    assert r.hermitian_defect() < 1e-15
    assert np.isrealobj(r.to_real())


def test_dual_round_trip():
    u = gauss(Grid(1, 32.0, 256))
    w = fourier_to_dual(u)
    assert dual_to_fourier(w, u.grid).allclose(u, atol=1e-14)


# ---------------------------------------------------------------- norms

def test_single_mode_norm():
    A, idx = 2.0 - 1.0j, 3
    u = SpectralField.single_mode(G1, (idx,), A)
    xi0 = G1.kernel.xi1[idx]
    assert abs(xi0) <= 1
    spec = NormSpec(WeightParams(0.7, 0.5), k=3.0)
    expect = abs(A) * eval_weight(spec.weight, xi0) * G1.dxi ** 0.5
    assert k_norm(u, spec) == pytest.approx(expect, rel=1e-14)


def test_zero_radius_norm_is_l2():
    u = random_field(G2, 4)
    assert k_norm(u, NormSpec(WeightParams(0.0, 0.5))) == pytest.approx(u.l2_norm(), rel=1e-14)


def test_gaussian_norm_refined_grid():
    spec = NormSpec(WeightParams(0.5, 0.5), k=2.0)
    coarse = k_norm(gauss(G1), spec)
    fine = k_norm(gauss(G1.with_modes(256)), spec)
    assert coarse == pytest.approx(fine, rel=1e-8)


def test_gaussian_norm_against_quadrature():
    # lattice sum of a smooth integrand away from the |xi| = 1 kink: compare the high part
    spec = NormSpec(WeightParams(0.5, 0.5), k=2.0)
    _, hi = split_low_high(gauss(Grid(1, 64 * math.pi, 2048)))
    integrand = lambda x: x ** 4 * math.exp(2 * 0.5 * x ** 0.5) * math.exp(-x * x)  # noqa: E731
    ref = math.sqrt(2 * integrate.quad(integrand, 1.0, np.inf, epsabs=0, epsrel=1e-12)[0])
    assert k_norm(hi, spec) == pytest.approx(ref, rel=2e-3)


def test_y_norm_of_constant_vanishes():
    c = SpectralField.single_mode(G1, (0,), 1.0).with_reality(True)
    assert y_norm(c, NormSpec(WeightParams(0.3, 1.0), ell=1.0, ell_low=0.25)) == 0.0


def test_y_norm_equals_split_norms():
    phi = random_field(G1, 5, reality=True)
    spec = NormSpec(WeightParams(0.3, 1.0), ell=1.0, ell_low=0.25)
    lo, hi = split_low_high(phi)
    assert y_norm(phi, spec) ** 2 == pytest.approx(y_norm(lo, spec) ** 2 + y_norm(hi, spec) ** 2,
                                                   rel=1e-13)
    # high part alone: |xi|^(ell+2) f
    kn = G1.kernel.knorm
    expect = np.sqrt(np.sum((kn ** 3 * np.exp(0.3 * np.maximum(kn, 1)) * np.abs(hi.coeffs)) ** 2)
                     * G1.dxi)
    assert y_norm(hi, spec) == pytest.approx(expect, rel=1e-13)


def test_split_partition():
    u = random_field(G2, 6)
    lo, hi = split_low_high(u)
    assert np.array_equal((lo + hi).coeffs, u.coeffs)
    z, rest = split_low_high(u, 0.0)
    assert np.count_nonzero(z.coeffs) == 1
    full, none = split_low_high(u, 1e9)
    assert np.array_equal(full.coeffs, u.coeffs) and not np.any(none.coeffs)


# ---------------------------------------------------------------- products and multipliers

def test_product_with_one_is_identity():
    u = random_field(G1, 7)
    one = SpectralField.from_real(G1, np.ones(G1.shape))
    assert product(u, one).allclose(u, atol=1e-14)


def test_product_of_single_modes():
    a = SpectralField.single_mode(G1, (3,), 2.0)
    b = SpectralField.single_mode(G1, (5,), 1.5j)
    out = product(a, b)
    expect = np.zeros(G1.shape, dtype=complex)
    expect[8] = 2.0 * 1.5j * G1.dxi / math.sqrt(2 * math.pi)
    assert np.allclose(out.coeffs, expect, atol=1e-15)


def test_product_matches_pointwise_for_band_limited():
    u, v = random_field(G1, 8, 0.5), random_field(G1, 9, 0.5)
    direct = SpectralField.from_real(G1, u.to_real() * v.to_real())
    assert product(u, v).allclose(direct, atol=1e-12)


def test_fractional_multiplier_trivial_cases():
    u = random_field(G1, 10)
    assert fractional_multiplier(u, 0.0) is u
    m = SpectralField.single_mode(G1, (4,), 1.0)
    out = fractional_multiplier(m, -0.5)
    assert out.coeffs[4] == pytest.approx(G1.kernel.xi1[4] ** -0.5)
    with pytest.raises(ValueError):
        fractional_multiplier(u, -1.0)


def test_fractional_multiplier_against_inverse_transform():
    # |nabla|^(-1/2) of a Gaussian against quadrature of the inverse transform at x = 1.
    # The periodic box truncates the |x|^(-1/2) tail, so the error must shrink like L^(-1/2).
    ref = 2 * integrate.quad(lambda s: s ** -0.5 * math.exp(-s * s / 2) * math.cos(s),
                             0, np.inf, limit=200)[0] / math.sqrt(2 * math.pi)
    errs = []
    for half_width, modes in ((64.0, 1024), (256.0, 4096)):
        g = Grid(1, half_width, modes)
        out = fractional_multiplier(gauss(g), -0.5).to_real()
        j = int(np.argmin(np.abs(g.kernel.x1 - 1.0)))
        errs.append(out[j] / ref - 1)
    assert abs(errs[0] / errs[1] - 2.0) < 0.1
    assert abs(errs[1]) < 4e-3


def test_g0_real_and_scaled():
    w = gauss(G1, 0.3)
    a = g0(w, w, 1.0, 1.0)
    assert a.reality
    # mu = n: the multiplier is the identity, so g0 = kappa |w|^2
    assert np.allclose(a.to_real(), 0.09 * np.exp(-G1.kernel.x1 ** 2), atol=1e-14)
    assert g0(w, w, 0.0, 1.0).l2_norm() == 0.0


def test_derivatives_of_trig():
    u = SpectralField.from_function(G1, np.sin)
    assert np.allclose(gradient(u)[0].to_real(), np.cos(G1.kernel.x1), atol=1e-12)
    assert np.allclose(laplacian(u).to_real(), -np.sin(G1.kernel.x1), atol=1e-12)


# ---------------------------------------------------------------- M, D, U

def test_U_is_unitary_and_invertible():
    u = random_field(G2, 11)
    v = apply_MDU(u, 3.7, "U")
    assert v.l2_norm() == pytest.approx(u.l2_norm(), rel=1e-14)
    assert apply_MDU(v, 3.7, "Uinv").allclose(u, atol=1e-14)


def test_M_round_trip_for_slow_chirp():
    u = gauss(G1)
    v = apply_MDU(apply_MDU(u, 200.0, "M"), 200.0, "Minv")
    assert v.allclose(u, atol=1e-12)


def test_D_exact_path_round_trip():
    u = gauss(G1, 0.5)
    t = 8.0
    pg = physical_grid(G1, t)
    v = apply_MDU(u, t, "D", out_grid=pg)
    assert v.l2_norm() == pytest.approx(u.l2_norm(), rel=1e-13)
    back = apply_MDU(v, t, "Dinv", out_grid=G1)
    assert back.allclose(u, atol=1e-13)


def test_D_pointwise_definition():
    u = gauss(G1)
    t = 2.0
    v = apply_MDU(u, t, "D", out_grid=Grid(1, t * G1.half_width, 2 * G1.modes_per_dim))
    x = v.grid.kernel.x1
    expect = (1j * t) ** -0.5 * np.exp(-(x / t) ** 2 / 2)
    assert np.allclose(v.to_real(), expect, atol=1e-12)


def test_dilation_off_grid_detected():
    wide = SpectralField.from_function(G1, lambda x: np.exp(-x ** 2 / 50))
    with pytest.raises(DilationOffGrid):
        apply_MDU(wide, 4.0, "Dinv", out_grid=G1)


# ---------------------------------------------------------------- properties

seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds, seeds)
def test_product_commutes_and_conjugates(s1, s2):
    u, v = random_field(G1, s1, 0.3), random_field(G1, s2, 0.3)
    assert product(u, v).allclose(product(v, u), atol=1e-13)
    assert product(u, v).conj().allclose(product(u.conj(), v.conj()), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(seeds, seeds, st.floats(0.0, 1.0), st.floats(0.25, 1.0), st.floats(0.0, 4.0),
       st.complex_numbers(max_magnitude=10))
def test_k_norm_is_a_norm(s1, s2, rho, nu, k, c):
    spec = NormSpec(WeightParams(rho, nu, Variant.F), k=k)
    u, v = random_field(G1, s1), random_field(G1, s2)
    assert k_norm(u + v, spec) <= (k_norm(u, spec) + k_norm(v, spec)) * (1 + 1e-13)
    assert k_norm(u * c, spec) == pytest.approx(abs(c) * k_norm(u, spec), rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_norm_monotone_in_rho(s, r1, r2):
    lo, hi = sorted((r1, r2))
    u = random_field(G2, s)
    assert k_norm(u, NormSpec(WeightParams(lo, 0.5), k=1.0)) <= \
        k_norm(u, NormSpec(WeightParams(hi, 0.5), k=1.0)) * (1 + 1e-14)


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("variant", [Variant.F0, Variant.F])
def test_rho_derivative_identity(variant):
    from hartree_lab.spectral_field import rho_derivative_split
    u = random_field(G1, 12, 0.05)
    rho, h = 0.4, 1e-6
    spec = NormSpec(WeightParams(rho, 0.5, variant), k=1.5)
    fd = (k_norm(u, spec.with_rho(rho + h)) ** 2 - k_norm(u, spec.with_rho(rho - h)) ** 2) / (2 * h)
    high, low = rho_derivative_split(u, spec)
    assert fd == pytest.approx(high + low, rel=1e-5)
    if variant is Variant.F0:
        # for the uncapped weight the whole derivative is 2 |u|^2 at k + nu/2
        lo, hi = split_low_high(u)
        assert high == pytest.approx(2 * k_norm(hi, spec.with_k(1.75)) ** 2, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_norm_monotone_in_k_on_high_modes(s, k1, k2):
    lo_k, hi_k = sorted((k1, k2))
    _, hi = split_low_high(random_field(G1, s, 0.02))
    w = WeightParams(0.2, 0.5)
    assert k_norm(hi, NormSpec(w, k=lo_k)) <= k_norm(hi, NormSpec(w, k=hi_k)) * (1 + 1e-14)


def test_j_norm_conjugation_identity():
    from hartree_lab.spectral_field import j_weighted_norm
    w = gauss(G1, 0.5)
    t = 4.0
    u = apply_MDU(apply_MDU(w, t, "D", out_grid=physical_grid(G1, t)), t, "M")
    spec = NormSpec(WeightParams(0.3, 0.5), k=2.0)
    assert j_weighted_norm(u, t, spec, target_grid=G1) == pytest.approx(
        k_norm(w, spec, bracket="high"), rel=1e-12)
    zero = NormSpec(WeightParams(0.0, 0.5), k=0.0)
    assert j_weighted_norm(u, t, zero, target_grid=G1) == pytest.approx(u.l2_norm(), rel=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_j_norm_against_operator_polynomial(k):
    # <J>^2 = 1 + |J|^2 with J = x + i t grad applied directly on the physical grid
    from hartree_lab.spectral_field import j_weighted_norm
    t = 2.0
    pg = Grid(1, 32.0, 512)
    u = SpectralField.from_function(pg, lambda x: np.exp(-x * x / 8) * np.exp(0.5j * x) *
                                    (1 + 0.3 * x))
    x = pg.kernel.x1

    def J(v):
        return SpectralField.from_real(pg, x * v.to_real()) + gradient(v)[0] * (1j * t)

    terms = [u]
    for _ in range(2 * k):
        terms.append(J(terms[-1]))
    # || <J>^k u ||^2 = sum_j binom(k, j) || J^j u ||^2 since J is self-adjoint
    direct = math.sqrt(sum(math.comb(k, j) * terms[j].l2_norm() ** 2 for j in range(k + 1)))
    spec = NormSpec(WeightParams(0.0, 1.0), k=float(k))
    got = j_weighted_norm(u, t, spec, target_grid=Grid(1, 16.0, 512), bracket="all")
    assert got == pytest.approx(direct, rel=1e-6)


def test_product_constant_does_not_grow_with_rho():
    rng = np.random.default_rng(0)
    g = Grid(1, 8 * math.pi, 256)

    def draw():
        w = rng.choice([0.5, 2.0, 8.0])
        c = (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) \
            * np.exp(-0.5 * g.kernel.ksq / w ** 2)
        c[g.kernel.nyquist] = 0
        return SpectralField(g, c)

    pairs = [(draw(), draw()) for _ in range(100)]
    for variant in (Variant.F, Variant.F0):
        fitted = []
        for rho in (0.0, 0.25, 0.5):
            s = NormSpec(WeightParams(rho, 0.5, variant), k=1.0)
            fitted.append(max(k_norm(product(a, b), s) / (k_norm(a, s) * k_norm(b, s))
                              for a, b in pairs))
        assert max(fitted[1:]) <= fitted[0] * 1.05
