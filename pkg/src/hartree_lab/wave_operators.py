"""The modified wave operator and the estimates on its range.

``u = Lambda(w, phi, t) = M(t) D(t) exp(-i phi) w`` turns a solution of the
amplitude/phase system into a solution of the Hartree equation. ``Omega_0``
maps asymptotic data ``(w_+, psi_+)`` to ``(w, phi)`` as the limit over a
ladder of anchor times ``t0 = T 2^j`` of the Cauchy problems solved by
:func:`hartree_lab.auxiliary_solver.cauchy_from_t0`; ``Omega`` composes
``Lambda`` with ``Omega_0(F u_+, 0)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _validation as val
from .asymptotic_engine import solve_hierarchy
from .auxiliary_solver import SolverConfig, _times_phase, cauchy_from_t0
from .errors import LadderNotConverged
from .estimators import RhoSchedule, rho_at
from .gevrey_weights import Variant, WeightParams
from .spectral_field import (
    NormSpec,
    SpectralField,
    apply_MDU,
    fourier_to_dual,
    fractional_multiplier,
    k_norm,
    physical_grid,
    y_norm,
)

__all__ = [
    "lambda_map",
    "LadderConfig",
    "LadderResult",
    "omega0",
    "OmegaResult",
    "omega",
    "GaugeComparison",
    "gauge_equivalent",
    "gauge_equivalent_data",
    "EstimateReport",
    "check_asymptotic_estimate",
    "nls_residual",
    "delta_exponent",
    "beta_exponent",
]


def lambda_map(w, phi, t, out_grid=None):
    """``M(t) D(t) exp(-i phi) w`` on the physical grid for time ``t``.

    The phase factor is applied on the padded real-space grid; ``D`` maps
    onto ``out_grid`` (default :func:`physical_grid`, where the dilation is
    an exact relabelling of coefficients).
    """
    t = val.check_real(t, "t", low=0.0, low_open=True)
    v = _times_phase(w, phi.with_reality(True), -1.0)
    target = out_grid or physical_grid(w.grid, t)
    return apply_MDU(apply_MDU(v, t, "D", out_grid=target), t, "M")


# ---------------------------------------------------------------------------
# Omega_0 by a ladder of anchor times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderConfig:
    """Anchor ladder ``t0_j = T * ratio^j`` for ``j = first .. first + rungs - 1``.

    ``t_eval`` are the output times (clipped to each rung's ``[T, t0]``).
    Successive rungs are compared on their common output times in the
    norms given by ``norm_spec``; the ladder is accepted when the last
    difference is below ``tolerance_factor * h3(t0)``.

    With a ``rho_schedule`` the comparison is the weighted metric
    ``max(sup_t h0(t) |dw(t)|_k, sup_t |dphi(t)|_ell)``, norms taken at radius
    ``rho(t)`` and ``h0(t) = t^-gamma / |rho'(t)|``; without one it is the
    plain sup of both norms at the radius of ``norm_spec``.
    """

    T: float = 10.0
    rungs: int = 6
    first: int = 1
    ratio: float = 2.0
    t_eval: tuple = ()
    tolerance_factor: float = 10.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    norm_spec: NormSpec = None
    rho_schedule: RhoSchedule = None

    def anchors(self):
        return [self.T * self.ratio ** j for j in range(self.first, self.first + self.rungs)]


@dataclass
class LadderResult:
    """Rungs of the ladder and the convergence certificate."""

    anchors: list
    results: list
    w_differences: np.ndarray
    phi_differences: np.ndarray
    h3_values: np.ndarray
    converged: bool

    @property
    def trajectory(self):
        return self.results[-1].trajectory

    @property
    def differences(self):
        return np.maximum(self.w_differences, self.phi_differences)

    @property
    def certificate_ratios(self):
        return self.differences / self.h3_values


def _common_indices(tr_a, tr_b):
    ia, ib = [], []
    for i, t in enumerate(tr_a.times):
        hit = np.flatnonzero(np.abs(tr_b.times - t) <= 1e-12 * t)
        if hit.size:
            ia.append(i)
            ib.append(int(hit[0]))
    return ia, ib


def _rung_difference(tr_a, tr_b, spec, gamma, rho_schedule=None):
    ia, ib = _common_indices(tr_a, tr_b)
    if not ia:
        raise ValueError("successive rungs share no output times")
    dw = dp = 0.0
    for i, j in zip(ia, ib):
        t = float(tr_a.times[i])
        sp, weight = spec, 1.0
        if rho_schedule is not None:
            sp = spec.with_rho(rho_at(rho_schedule, t))
            weight = t ** -gamma / float(rho_schedule.abs_rho_prime(t))
        dw = max(dw, weight * k_norm(tr_a.w[i] - tr_b.w[j], sp))
        dp = max(dp, y_norm((tr_a.phi[i] - tr_b.phi[j]).with_reality(True), sp))
    return dw, dp


def omega0(w_plus, psi_plus, p, ladder, *, gamma, kappa, mu, h3, hierarchy=None,
           raise_on_failure=True):
    """Run the anchor ladder and return the last trajectory with a certificate.

    Parameters
    ----------
    w_plus, psi_plus : SpectralField
    p : int
    ladder : LadderConfig
    gamma, kappa, mu : float
    h3 : callable
        Decay envelope used in the convergence certificate.
    hierarchy : AsymptoticHierarchy, optional
        Reused when given; otherwise built from ``w_plus``.

    Raises
    ------
    LadderNotConverged
        When the last successive difference exceeds
        ``ladder.tolerance_factor * h3(t0)`` and ``raise_on_failure``.
    """
    if ladder.rungs < 2:
        raise ValueError("a ladder needs at least two rungs")
    if hierarchy is None:
        hierarchy = solve_hierarchy(w_plus, p, gamma, kappa, mu)
    spec = ladder.norm_spec or NormSpec(WeightParams(0.0, 1.0, Variant.F), k=0.0, ell=0.0,
                                        ell_low=0.25 * w_plus.grid.n)
    anchors = ladder.anchors()
    te_all = np.asarray(ladder.t_eval, dtype=float)
    results = []
    for t0 in anchors:
        te = te_all[(te_all >= ladder.T * (1 - 1e-12)) & (te_all <= t0 * (1 + 1e-12))]
        results.append(cauchy_from_t0(w_plus, psi_plus, p, t0, ladder.T, ladder.solver,
                                      hierarchy=hierarchy, t_eval=te, transports=False))
    dws, dps = [], []
    for a, b in zip(results[:-1], results[1:]):
        dw, dp = _rung_difference(a.trajectory, b.trajectory, spec, gamma, ladder.rho_schedule)
        dws.append(dw)
        dps.append(dp)
    h3v = np.array([float(h3(t0)) for t0 in anchors[:-1]])
    out = LadderResult(anchors, results, np.array(dws), np.array(dps), h3v, False)
    out.converged = bool(out.differences[-1] <= ladder.tolerance_factor * h3v[-1])
    if raise_on_failure and not out.converged:
        raise LadderNotConverged(
            f"last ladder difference {out.differences[-1]:.3e} exceeds "
            f"{ladder.tolerance_factor:g} h3(t0) = {ladder.tolerance_factor * h3v[-1]:.3e}")
    return out


# ---------------------------------------------------------------------------
# Omega
# ---------------------------------------------------------------------------

@dataclass
class OmegaResult:
    """``u(t)`` on per-time physical grids plus the underlying ladder."""

    times: np.ndarray
    u: list
    w_plus: SpectralField
    ladder: LadderResult

    @property
    def trajectory(self):
        return self.ladder.trajectory


def omega(u_plus, p, ladder, *, gamma, kappa, mu, h3, times=None, raise_on_failure=True):
    """``u = Lambda(Omega_0(F u_+, 0))`` at ``times`` (default: all outputs).

    ``u_plus`` lives on a grid whose dual box carries ``w_+ = F u_+``.
    """
    w_plus = fourier_to_dual(u_plus)
    zero = SpectralField.zeros(w_plus.grid, reality=True)
    lad = omega0(w_plus, zero, p, ladder, gamma=gamma, kappa=kappa, mu=mu, h3=h3,
                 raise_on_failure=raise_on_failure)
    tr = lad.trajectory
    idx = range(len(tr)) if times is None else [tr.index_of(t) for t in times]
    ts = np.array([tr.times[i] for i in idx])
    us = [lambda_map(tr.w[i], tr.phi[i], float(tr.times[i])) for i in idx]
    return OmegaResult(ts, us, w_plus, lad)


# ---------------------------------------------------------------------------
# gauge equivalence
# ---------------------------------------------------------------------------

@dataclass
class GaugeComparison:
    equivalent: bool
    max_deviation: float
    deviations: np.ndarray


def _pairs_at(obj, t_set):
    if hasattr(obj, "times") and hasattr(obj, "phi"):
        if t_set is None:
            return list(zip(obj.w, obj.phi))
        return [(obj.w[obj.index_of(t)], obj.phi[obj.index_of(t)]) for t in t_set]
    if isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], SpectralField):
        return [obj]
    return list(obj)


def gauge_equivalent(pair1, pair2, t_set=None, tol=1e-8):
    """Compare ``w exp(-i phi)`` of two amplitude/phase pairs.

    Each argument is a :class:`Trajectory`, a single ``(w, phi)`` tuple or a
    sequence of them. ``t_set`` selects trajectory times.
    """
    a, b = _pairs_at(pair1, t_set), _pairs_at(pair2, t_set)
    if len(a) != len(b):
        raise ValueError("pairs are sampled at different numbers of times")
    dev = np.array([(_times_phase(w1, p1, -1.0) - _times_phase(w2, p2, -1.0)).l2_norm()
                    for (w1, p1), (w2, p2) in zip(a, b)])
    worst = float(dev.max()) if dev.size else 0.0
    return GaugeComparison(worst <= tol, worst, dev)


def gauge_equivalent_data(w1, psi1, w2, psi2, tol=1e-8):
    """Asymptotic data are equivalent when ``w_+ exp(-i psi_+)`` agree."""
    return gauge_equivalent((w1, psi1), (w2, psi2), tol=tol)


# ---------------------------------------------------------------------------
# estimates on the range
# ---------------------------------------------------------------------------

def delta_exponent(n, r):
    """``delta(r) = n/2 - n/r``."""
    return n / 2.0 - (0.0 if math.isinf(r) else n / r)


def beta_exponent(n, r, k, nu, epsilon=0.01):
    """Gevrey-radius exponent of the ``L^r`` estimate."""
    if math.isinf(r) and k <= n / 2.0:
        return (n / 2.0 - k + epsilon) / nu
    return max((delta_exponent(n, r) - k) / nu, 0.0)


@dataclass
class EstimateReport:
    """Per-time values of the ``J``-weighted and ``L^r`` distances."""

    times: np.ndarray
    j_norm: np.ndarray
    lr_norms: dict
    h3: np.ndarray
    slope: float
    h3_slope: float
    lr_slopes: dict
    lr_reference_slopes: dict
    beta: dict

    @property
    def slope_relative_error(self):
        return abs(self.slope - self.h3_slope) / abs(self.h3_slope)


def _slope(t, v):
    return float(np.polyfit(np.log(t), np.log(v), 1)[0])


def check_asymptotic_estimate(omega_result, hierarchy, spec, h3, r_values=(2.0, math.inf),
                              epsilon=0.01, rho_schedule=None):
    """Distances between ``u`` and its leading asymptotic form.

    The ``J``-weighted quantity uses that ``D(t)* M(t)*`` turns
    multiplication by ``exp(i phi_p(t, x/t))`` into multiplication by
    ``exp(i phi_p(t, x))``: ``u`` is pulled back once to the amplitude grid,
    the phase is applied there and ``w_+`` subtracted before taking the
    ``K`` norm. The ``L^r`` distances are taken on the physical grid against
    ``Lambda(w_+, phi_p, t)``, which resamples the phase through ``D(t)``.

    Parameters
    ----------
    omega_result : OmegaResult
    hierarchy : AsymptoticHierarchy
        Built from the same ``w_+``; supplies ``phi_p``.
    spec : NormSpec
        Weight and ``k`` of the ``J`` norm.
    h3 : callable
    r_values : iterable of float
    epsilon : float
        Enters ``beta`` for ``r = inf`` and ``k <= n/2``.
    rho_schedule : RhoSchedule, optional
        Take the ``J`` norm at radius ``rho(t)`` instead of ``spec``'s.
    """
    p = hierarchy.p
    w_plus = omega_result.w_plus
    n = w_plus.grid.n
    jn, lr = [], {r: [] for r in r_values}
    for t, u in zip(omega_result.times, omega_result.u):
        t = float(t)
        phi_p = hierarchy.phi_partial(p, t)
        pulled = apply_MDU(apply_MDU(u, t, "Minv"), t, "Dinv", out_grid=w_plus.grid)
        sp = spec if rho_schedule is None else spec.with_rho(rho_at(rho_schedule, t))
        jn.append(k_norm(_times_phase(pulled, phi_p, 1.0) - w_plus, sp, bracket="high"))
        dist = u - lambda_map(w_plus, phi_p, t, out_grid=u.grid)
        vals = np.abs(dist.to_real())
        for r in r_values:
            if math.isinf(r):
                lr[r].append(float(vals.max()))
            else:
                lr[r].append(float((np.sum(vals ** r) * u.grid.dx ** n) ** (1.0 / r)))
    times = np.asarray(omega_result.times, dtype=float)
    jn = np.array(jn)
    h3v = np.asarray(h3(times), dtype=float)
    lr = {r: np.array(v) for r, v in lr.items()}
    lr_slopes = {r: _slope(times, v) for r, v in lr.items()}
    ref = {r: _slope(times, times ** -delta_exponent(n, r) * h3v) for r in r_values}
    beta = {r: beta_exponent(n, r, spec.k, spec.weight.nu, epsilon) for r in r_values}
    return EstimateReport(times, jn, lr, h3v, _slope(times, jn), _slope(times, h3v), lr_slopes,
                          ref, beta)


def nls_residual(lad_or_traj, times, delta=0.01, *, gamma, kappa, mu):
    """``L^2`` defect of ``i u_t + lap u / 2 - kappa t^(mu-gamma) |nabla|^(mu-n) |u|^2 u``.

    ``u = Lambda(w, phi, t)`` is rebuilt at ``t + j delta``, ``|j| <= 2``,
    on the physical grid of ``t + 2 delta``; those five times must be output
    times of the trajectory. The time derivative is the five-point central
    difference, the Laplacian and the multiplier act spectrally on that
    common grid.
    """
    tr = getattr(lad_or_traj, "trajectory", lad_or_traj)
    out = []
    weights = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * delta)
    for t in times:
        t = float(t)
        grid = physical_grid(tr.grid, t + 2 * delta)
        us = []
        for j in range(-2, 3):
            i = tr.index_of(t + j * delta)
            us.append(lambda_map(tr.w[i], tr.phi[i], float(tr.times[i]), out_grid=grid))
        dudt = sum((u * c for u, c in zip(us, weights) if c != 0.0),
                   SpectralField.zeros(grid))
        u = us[2]
        lap = SpectralField(grid, -grid.kernel.ksq * u.coeffs)
        dens = np.abs(u.to_real()) ** 2
        pot = fractional_multiplier(SpectralField.from_real(grid, dens, reality=True), mu - grid.n)
        nonlin = SpectralField(grid, grid.kernel.product(pot.coeffs, u.coeffs))
        res = dudt * 1j + lap * 0.5 - nonlin * (kappa * t ** (mu - gamma))
        out.append(res.l2_norm())
    return np.array(out)

