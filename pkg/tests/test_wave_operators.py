import math

import numpy as np
import pytest
from scipy import integrate

from hartree_lab.asymptotic_engine import solve_hierarchy
from hartree_lab.auxiliary_solver import SolverConfig
from hartree_lab.errors import LadderNotConverged
from hartree_lab.gevrey_weights import WeightParams
from hartree_lab.spectral_field import Grid, NormSpec, SpectralField, fourier_to_dual, k_norm
from hartree_lab.wave_operators import (
    LadderConfig,
    beta_exponent,
    check_asymptotic_estimate,
    delta_exponent,
    gauge_equivalent,
    gauge_equivalent_data,
    lambda_map,
    nls_residual,
    omega,
    omega0,
)

U_GRID = Grid(1, 16.0, 128)


def _u_plus():
    return SpectralField.from_function(U_GRID, lambda x: np.exp(-x * x / 2))


@pytest.mark.parametrize("t", [5.0, 20.0])
def test_lambda_of_free_data_against_free_evolution(t):
    # M D F u_+ differs from U(t) u_+ = M D F M u_+ by exactly |(M(t) - 1) u_+|_2
    w = fourier_to_dual(_u_plus())
    u = lambda_map(w, SpectralField.zeros(w.grid, reality=True), t)
    x = u.grid.kernel.x1
    free = (1 + 1j * t) ** -0.5 * np.exp(-x * x / (2 * (1 + 1j * t)))
    dist = math.sqrt(np.sum(np.abs(u.to_real() - free) ** 2) * u.grid.dx)
    ref = math.sqrt(integrate.quad(lambda y: abs(np.exp(1j * y * y / (2 * t)) - 1) ** 2
                                   * math.exp(-y * y), -np.inf, np.inf)[0])
    assert dist == pytest.approx(ref, rel=1e-10)
    assert u.l2_norm() == pytest.approx(w.l2_norm(), rel=1e-13)


def test_lambda_preserves_l2_with_phase():
    w = SpectralField.from_function(U_GRID, lambda x: 0.5 * np.exp(-x * x / 3) * (1 + 0.3j * x))
    phi = SpectralField.from_function(U_GRID, lambda x: np.exp(-x * x / 8), reality=True)
    assert lambda_map(w, phi, 3.0).l2_norm() == pytest.approx(w.l2_norm(), rel=1e-12)


def test_exponents():
    assert delta_exponent(3, 2.0) == 0.0
    assert delta_exponent(3, math.inf) == 1.5
    assert delta_exponent(2, 4.0) == pytest.approx(0.5)
    assert beta_exponent(1, math.inf, 0.25, 0.5, epsilon=0.01) == pytest.approx(0.52)
    assert beta_exponent(1, 2.0, 3.0, 1.0) == 0.0


def test_gauge_equivalent_data():
    w = SpectralField.from_function(U_GRID, lambda x: 0.5 * np.exp(-x * x / 4))
    om = SpectralField.from_function(U_GRID, lambda x: 0.7 * np.exp(-x * x / 4) * np.cos(x),
                                     reality=True)
    zero = SpectralField.zeros(U_GRID, reality=True)
    shifted = SpectralField.from_real(U_GRID, w.to_real() * np.exp(1j * om.to_real()))
    assert gauge_equivalent_data(w, zero, shifted, om, tol=1e-8).equivalent
    other = gauge_equivalent_data(w, zero, w, om, tol=1e-8)
    assert not other.equivalent and other.max_deviation > 1e-2
    with pytest.raises(ValueError):
        gauge_equivalent([(w, zero)], [(w, zero), (w, zero)])


def test_ladder_anchors():
    assert LadderConfig(T=10.0, rungs=3, first=2).anchors() == [40.0, 80.0, 160.0]


@pytest.fixture(scope="module")
def free_omega():
    # kappa = 0: the hierarchy is trivial and each rung is the free flow from w_+ at t0
    times = (10.0, 10.0 - 0.02, 10.0 - 0.01, 10.0 + 0.01, 10.0 + 0.02, 20.0, 40.0)
    ladder = LadderConfig(T=9.0, rungs=3, first=3, t_eval=tuple(sorted(times)),
                          solver=SolverConfig(rel_tol=1e-10))
    res = omega(_u_plus(), 1, ladder, gamma=0.6, kappa=0.0, mu=1.0, h3=lambda t: t ** -0.5)
    return ladder, res


def test_free_ladder_differences(free_omega):
    ladder, res = free_omega
    w_plus = res.w_plus
    k2 = w_plus.grid.kernel.ksq
    a = ladder.anchors()
    for j, d in enumerate(res.ladder.w_differences):
        diff = (np.exp(-0.5j * k2 / a[j]) - np.exp(-0.5j * k2 / a[j + 1])) * w_plus.coeffs
        assert d == pytest.approx(SpectralField(w_plus.grid, diff).l2_norm(), rel=1e-7)
    assert np.all(res.ladder.phi_differences == 0.0)
    assert res.ladder.converged


def test_free_estimate_closed_form(free_omega):
    ladder, res = free_omega
    w_plus = res.w_plus
    hier = solve_hierarchy(w_plus, 1, 0.6, 0.0, 1.0)
    spec = NormSpec(WeightParams(0.1, 1.0), k=2.0)
    rep = check_asymptotic_estimate(res, hier, spec, lambda t: t ** -0.5)
    t0 = ladder.anchors()[-1]
    k2 = w_plus.grid.kernel.ksq
    for t, j in zip(rep.times, rep.j_norm):
        field = SpectralField(w_plus.grid, (np.exp(-0.5j * k2 * (1 / t0 - 1 / t)) - 1)
                              * w_plus.coeffs)
        assert j == pytest.approx(k_norm(field, spec, bracket="high"), rel=1e-6, abs=1e-12)


def test_free_nls_residual(free_omega):
    _, res = free_omega
    r = nls_residual(res.ladder, [10.0], gamma=0.6, kappa=0.0, mu=1.0)
    assert r[0] < 1e-6


def test_ladder_failure_raises():
    w = fourier_to_dual(_u_plus())
    zero = SpectralField.zeros(w.grid, reality=True)
    ladder = LadderConfig(T=2.0, rungs=2, first=0, t_eval=(2.0,), tolerance_factor=1e-12)
    with pytest.raises(LadderNotConverged):
        omega0(w, zero, 0, ladder, gamma=0.6, kappa=0.0, mu=1.0, h3=lambda t: t ** -0.5)
    with pytest.raises(ValueError):
        omega0(w, zero, 0, LadderConfig(rungs=1), gamma=0.6, kappa=0.0, mu=1.0,
               h3=lambda t: 1.0)
