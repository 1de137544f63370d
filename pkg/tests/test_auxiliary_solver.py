import math

import numpy as np
import pytest

from hartree_lab.asymptotic_engine import transport_field
from hartree_lab.auxiliary_solver import (
    AuxState,
    TransportPair,
    _times_phase,
    SolverConfig,
    Trajectory,
    extract_w_plus,
    fd_weights,
    integrate,
    merge_times,
    residual,
    rhs_auxiliary,
    solve_transport,
)
from hartree_lab.errors import NormBlowup
from hartree_lab.gevrey_weights import WeightParams
from hartree_lab.spectral_field import Grid, NormSpec, SpectralField, apply_MDU

GRID = Grid(1, 8 * math.pi, 128)
X = GRID.kernel.x1
PARAMS = dict(gamma=0.6, kappa=1.0, mu=1.0)


def _w():
    return SpectralField.from_function(GRID, lambda x: 0.3 * np.exp(-x * x / 4) * (1 + 0.2j * x))


def _phi():
    return SpectralField.from_function(GRID, lambda x: 0.2 * np.exp(-x * x / 3), reality=True)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rel_tol=1e-2)
    with pytest.raises(ValueError):
        SolverConfig(stepper_order=3)
    with pytest.raises(ValueError):
        SolverConfig(theta=-1.0)
    with pytest.raises(ValueError):
        AuxState(0.5, _w(), _phi())


def test_free_dispersion_closed_form():
    # kappa = 0 and phi = 0: w_hat(t) = w_hat(t0) exp(-i |xi|^2 (1/t0 - 1/t) / 2)
    w0 = _w()
    zero = SpectralField.zeros(GRID, reality=True)
    tr = integrate(AuxState(2.0, w0, zero), (2.0, 30.0), gamma=0.6, kappa=0.0, mu=1.0)
    factor = np.exp(-0.5j * GRID.kernel.ksq * (1 / 2.0 - 1 / 30.0))
    assert np.max(np.abs(tr.w[-1].coeffs - factor * w0.coeffs)) < 1e-14
    assert tr.phi[-1].l2_norm() == 0.0


def test_dissipation_closed_form():
    w0 = _w()
    zero = SpectralField.zeros(GRID, reality=True)
    theta = 0.01
    tr = integrate(AuxState(2.0, w0, zero), (2.0, 6.0), SolverConfig(theta=theta),
                   gamma=0.6, kappa=0.0, mu=1.0)
    k2 = GRID.kernel.ksq
    factor = np.exp(-0.5j * k2 * (1 / 2.0 - 1 / 6.0)) * np.exp(-theta * k2 * 4.0)
    assert np.max(np.abs(tr.w[-1].coeffs - factor * w0.coeffs)) < 1e-14


def test_l2_norm_conserved():
    s = AuxState(1.0, _w(), _phi())
    tr = integrate(s, (1.0, 50.0), SolverConfig(rel_tol=1e-10), t_eval=[1.0, 5.0, 50.0],
                   **PARAMS)
    for w in tr.w:
        assert w.l2_norm() == pytest.approx(s.w.l2_norm(), rel=1e-8)


def test_forward_backward_consistency():
    s = AuxState(1.0, _w(), _phi())
    cfg = SolverConfig(rel_tol=1e-11, abs_tol=1e-12)
    fwd = integrate(s, (1.0, 20.0), cfg, **PARAMS)
    back = integrate(fwd.state(-1), (20.0, 1.0), cfg, **PARAMS)
    assert back.times[-1] == 1.0
    assert (back.w[-1] - s.w).l2_norm() < 1e-8
    assert (back.phi[-1] - s.phi).l2_norm() < 1e-8


def test_phase_stays_real():
    tr = integrate(AuxState(1.0, _w(), _phi()), (1.0, 10.0), **PARAMS)
    assert tr.phi[-1].reality
    assert np.max(np.abs(tr.phi[-1].to_real().imag)) < 1e-15 if \
        np.iscomplexobj(tr.phi[-1].to_real()) else True


def test_residual_small():
    times = np.linspace(2.0, 2.4, 9)
    tr = integrate(AuxState(2.0, _w(), _phi()), (2.0, 2.4), SolverConfig(rel_tol=1e-11,
                   abs_tol=1e-12), t_eval=times, **PARAMS)
    t, rw, rp = residual(tr, **PARAMS)
    assert len(t) == 5
    assert rw.max() < 1e-6 and rp.max() < 1e-6


def test_rhs_matches_definition():
    s = AuxState(3.0, _w(), _phi())
    dw, dphi = rhs_auxiliary(s, **PARAMS)
    c = 0.5 / 9.0
    expect = SpectralField(GRID, -1j * c * GRID.kernel.ksq * s.w.coeffs) + \
        transport_field(s.phi, s.w) * c
    assert dw.allclose(expect, atol=1e-15)
    assert dphi.reality


def test_fd_weights_exact_on_polynomials():
    nodes = np.array([0.0, 0.3, 0.7, 1.5, 2.0])
    w = fd_weights(nodes, 0.7)
    for deg in range(5):
        assert np.dot(w, nodes ** deg) == pytest.approx(deg * 0.7 ** (deg - 1) if deg else 0.0,
                                                        abs=1e-11)


def test_merge_times():
    out = merge_times([1.0, 2.0], [2.0 + 1e-14, 3.0])
    assert list(out) == [1.0, 2.0, 3.0]


def test_trajectory_round_trip(tmp_path):
    spec = NormSpec(WeightParams(0.1, 1.0), k=2.0, ell=1.0)
    tr = integrate(AuxState(1.0, _w(), _phi()), (1.0, 4.0), t_eval=[1.0, 2.0, 4.0],
                   norm_spec=spec, **PARAMS)
    back = Trajectory.load(tr.save(tmp_path / "traj"))
    assert np.array_equal(back.times, tr.times)
    for a, b in zip(back.w + back.phi, tr.w + tr.phi):
        assert a.allclose(b, rtol=0)
    assert np.array_equal(back.w_norms, tr.w_norms)
    assert back.config == tr.config


def test_norm_blowup():
    spec = NormSpec(WeightParams(0.1, 1.0), k=2.0, ell=1.0)
    with pytest.raises(NormBlowup):
        integrate(AuxState(1.0, _w(), _phi()), (1.0, 4.0), SolverConfig(norm_ceiling=1e-3),
                  norm_spec=spec, **PARAMS)


def test_transport_gauge_product_solves_amplitude_equation():
    # V exp(-i chi) solves the amplitude transport when V and chi solve theirs;
    # exp(-i chi) is not band limited, so this needs a finer grid than the others
    g = Grid(1, 8 * math.pi, 256)
    phi = SpectralField.from_function(g, lambda x: 0.2 * np.exp(-x * x / 3), reality=True)
    V0 = SpectralField.from_function(g, lambda x: 0.3 * np.exp(-x * x / 4) * (1 + 0.2j * x))
    psi = SpectralField.from_function(g, lambda x: 0.5 * np.cos(x / 4) * np.exp(-x * x / 40),
                                      reality=True)
    ref = lambda t: phi  # noqa: E731
    cfg = SolverConfig(rel_tol=1e-11, abs_tol=1e-12)
    te = [1.0, 3.0, 10.0]
    pair = TransportPair(solve_transport(ref, V0, 10.0, (1.0, 10.0), "V_EQ", cfg, te),
                         solve_transport(ref, psi, 10.0, (1.0, 10.0), "CHI_EQ", cfg, te))
    direct = solve_transport(ref, _times_phase(V0, psi, -1.0), 10.0, (1.0, 10.0), "V_EQ",
                             cfg, te)
    for t in te:
        assert (pair.gauge_product(t) - direct.at(t)).l2_norm() < 1e-10


def test_transport_with_zero_phase_is_constant():
    zero = SpectralField.zeros(GRID, reality=True)
    V = solve_transport(lambda t: zero, _w(), 5.0, (1.0, 5.0), "V_EQ", t_eval=[1.0, 5.0])
    assert V.at(1.0).allclose(_w(), atol=0)
    with pytest.raises(ValueError):
        solve_transport(lambda t: zero, _w(), 5.0, (1.0, 5.0), "BAD")


def test_extract_w_plus_free_flow():
    # kappa = 0, phi = 0: U(1/t) w(t) is constant, so the limit is reached exactly
    zero = SpectralField.zeros(GRID, reality=True)
    tr = integrate(AuxState(1.0, _w(), zero), (1.0, 100.0), t_eval=[1.0, 10.0, 100.0],
                   gamma=0.6, kappa=0.0, mu=1.0)
    limit, rep = extract_w_plus(tr)
    assert limit.allclose(apply_MDU(_w(), 1.0, "U"), atol=1e-14) and rep.distances.max() < 1e-15
    tr2 = integrate(AuxState(1.0, _w(), _phi()), (1.0, 1e3), t_eval=np.geomspace(1, 1e3, 13),
                    **PARAMS)
    limit, rep = extract_w_plus(tr2)
    assert rep.distances[-1] == 0.0
    assert np.all(np.diff(rep.distances) <= 0)



def test_phase_hermitian_drift():
    tr = integrate(AuxState(1.0, _w(), _phi()), (1.0, 100.0), t_eval=[1.0, 10.0, 100.0],
                   **PARAMS)
    for phi in tr.phi:
        assert phi.hermitian_defect() < 1e-11


def test_dissipation_rate_identity():
    # with theta > 0, d/dt |w|^2 = -2 theta |grad w|^2 (the transport part conserves |w|^2)
    theta, t, dt = 1e-3, 3.0, 1e-3
    cfg = SolverConfig(theta=theta, rel_tol=1e-11, abs_tol=1e-12)
    tr = integrate(AuxState(1.0, _w(), _phi()), (1.0, t + dt), cfg,
                   t_eval=[t - dt, t, t + dt], **PARAMS)
    rate = (tr.w[2].l2_norm() ** 2 - tr.w[0].l2_norm() ** 2) / (2 * dt)
    grad = SpectralField(GRID, 1j * GRID.kernel.xi1 * tr.w[1].coeffs).l2_norm()
    assert rate < 0
    assert rate == pytest.approx(-2 * theta * grad ** 2, rel=1e-4)


def test_gauge_equivalent_seeds_stay_equivalent():
    from hartree_lab.wave_operators import gauge_equivalent
    # the modulated seed is not band limited; 512 modes bring the deviation to ~1e-9
    g = Grid(1, 8 * math.pi, 512)
    w = SpectralField.from_function(g, lambda x: 0.3 * np.exp(-x * x / 4) * (1 + 0.2j * x))
    phi = SpectralField.from_function(g, lambda x: 0.2 * np.exp(-x * x / 3), reality=True)
    om = SpectralField.from_function(g, lambda x: 0.5 * np.exp(-x * x / 6) * np.sin(x),
                                     reality=True)
    w2 = _times_phase(w, om, 1.0)
    cfg = SolverConfig(rel_tol=1e-11, abs_tol=1e-12)
    te = [1.0, 3.0, 10.0]
    a = integrate(AuxState(1.0, w, phi), (1.0, 10.0), cfg, t_eval=te, **PARAMS)
    b = integrate(AuxState(1.0, w2, phi + om), (1.0, 10.0), cfg, t_eval=te, **PARAMS)
    cmp = gauge_equivalent(a, b, tol=1e-8)
    assert cmp.equivalent, cmp.deviations
    assert (a.w[-1] - b.w[-1]).l2_norm() > 1e-2
