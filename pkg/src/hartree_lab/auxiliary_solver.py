"""Amplitude/phase evolution, transport equations and extraction of asymptotic data.

The system for ``(w, phi)`` is

    dw/dt   = i (2t^2)^-1 lap w + (2t^2)^-1 (2 grad phi . grad w + (lap phi) w)
    dphi/dt = (2t^2)^-1 |grad phi|^2 + t^-gamma g0(w, w)

It is integrated for the rotated amplitude ``wt = U(1/t) w``, which removes
the dispersive term exactly, in the variable ``tau = ln t``. The optional
parabolic term ``theta lap`` acts on ``wt`` and ``phi`` and is always taken
dissipative in the direction of integration; it enters through an exact
integrating factor.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _validation as val
from . import rk
from .errors import NormBlowup, NotConverged
from .estimators import rho_at
from .spectral_field import (
    NormSpec,
    SpectralField,
    _fractional_symbol,
    apply_MDU,
    g0,
    k_norm,
    y_norm,
)
from .asymptotic_engine import grad_dot, transport_field

__all__ = [
    "AuxState",
    "SolverConfig",
    "Trajectory",
    "TransportSeries",
    "TransportPair",
    "CauchyResult",
    "RateReport",
    "rhs_auxiliary",
    "integrate",
    "solve_transport",
    "cauchy_from_t0",
    "extract_w_plus",
    "extract_psi_plus",
    "residual",
    "fd_weights",
    "merge_times",
]


@dataclass(frozen=True)
class AuxState:
    """``(w, phi)`` at time ``t``; ``phi`` is stored Hermitian-symmetric."""

    t: float
    w: SpectralField
    phi: SpectralField

    def __post_init__(self):
        val.check_real(self.t, "t", low=1.0)
        if self.w.grid != self.phi.grid:
            raise ValueError("w and phi must share a grid")
        if not self.phi.reality:
            object.__setattr__(self, "phi", self.phi.with_reality(True))

    @property
    def grid(self):
        return self.w.grid


@dataclass(frozen=True)
class SolverConfig:
    """Stepper settings.

    ``max_step`` bounds the step in ``ln t``. ``fixed_steps`` switches off
    error control and takes that many equal steps between output times.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    theta: float = 0.0
    max_step: float = 0.25
    stepper_order: int = 4
    fixed_steps: int = None
    norm_ceiling: float = 1e8
    max_steps: int = 200000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            val.check_real(getattr(self, name), name, low=1e-12, high=1e-4)
        val.check_real(self.theta, "theta", low=0.0)
        val.check_real(self.max_step, "max_step", low=0.0, low_open=True)
        rk.tableau_for_order(self.stepper_order)
        if self.fixed_steps is not None:
            val.check_int(self.fixed_steps, "fixed_steps", low=1)

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

class _RawSystem:
    """Array-level right side on one grid, with all products dealiased."""

    def __init__(self, grid, gamma, kappa, mu):
        self.grid = grid
        self.kern = grid.kernel
        self.gamma, self.kappa, self.mu = gamma, kappa, mu
        self.size = int(np.prod(grid.shape))
        self.frac = None if kappa == 0.0 else _fractional_symbol(grid, mu - grid.n)
        keep = self.kern.keep
        self.dxs = [np.where(keep, 1j * x, 0.0) for x in self.kern.xi]

    def split(self, y):
        return y[:self.size].reshape(self.grid.shape), y[self.size:].reshape(self.grid.shape)

    def join(self, a, b):
        return np.concatenate([a.ravel(), b.ravel()])

    def rotation(self, t):
        """Multiplier of ``U(1/t)``."""
        return np.exp(-0.5j * self.kern.ksq / t)

    def rhs_t(self, t, wc, pc):
        """``(dw/dt, dphi/dt)`` without the dispersive term."""
        k = self.kern
        R = k.to_real_padded
        w_r = R(wc)
        tw = R(-k.ksq * pc) * w_r
        s2 = 0.0
        for d in self.dxs:
            dphi = R(d * pc)
            tw = tw + 2.0 * dphi * R(d * wc)
            s2 = s2 + dphi * dphi
        c = 0.5 / t ** 2
        dw = c * k.from_real_padded(tw)
        dphi = c * k.from_real_padded(s2)
        if self.frac is not None:
            dens = k.hermitian_part(k.from_real_padded((w_r * np.conj(w_r)).real))
            dphi = dphi + t ** -self.gamma * self.kappa * self.frac * dens
        return dw, dphi

    def rhs_tau(self, tau, y):
        t = math.exp(tau)
        wt, pc = self.split(y)
        rot = self.rotation(t)
        dw, dphi = self.rhs_t(t, np.conj(rot) * wt, pc)
        return self.join(t * rot * dw, t * dphi)


def rhs_auxiliary(state, gamma, kappa, mu):
    """Time derivatives ``(dw/dt, dphi/dt)`` of the amplitude/phase system.

    Parameters
    ----------
    state : AuxState
    gamma, kappa, mu : float

    Returns
    -------
    (SpectralField, SpectralField)
    """
    t = val.check_real(state.t, "t", low=1.0)
    w, phi = state.w, state.phi
    c = 0.5 / t ** 2
    disp = SpectralField(w.grid, -1j * c * w.grid.kernel.ksq * w.coeffs)
    dw = disp + transport_field(phi, w) * c
    dphi = grad_dot(phi, phi) * c + g0(w, w, kappa, mu) * t ** -gamma
    return dw, dphi.with_reality(True)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Output of :func:`integrate`: states at the requested times.

    ``times`` are in the order of integration. When norms were requested,
    ``norm_times``, ``rho_values``, ``w_norms`` and ``phi_norms`` record
    ``|w|_k`` and ``|phi|_ell`` at ``rho(t)`` after every accepted step.
    """

    times: np.ndarray
    w: list
    phi: list
    gamma: float
    kappa: float
    mu: float
    config: SolverConfig
    norm_times: np.ndarray = None
    w_norms: np.ndarray = None
    phi_norms: np.ndarray = None
    rho_values: np.ndarray = None
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def grid(self):
        return self.w[0].grid

    def state(self, i):
        return AuxState(float(self.times[i]), self.w[i], self.phi[i])

    def w_tilde(self, i):
        return apply_MDU(self.w[i], 1.0 / float(self.times[i]), "U")

    def index_of(self, t, rtol=1e-12):
        hit = np.flatnonzero(np.abs(self.times - t) <= rtol * max(1.0, abs(t)))
        if hit.size == 0:
            raise KeyError(f"time {t} is not on the trajectory")
        return int(hit[0])

    def sorted(self):
        """Copy ordered by increasing time."""
        order = np.argsort(self.times)
        return Trajectory(self.times[order], [self.w[i] for i in order],
                          [self.phi[i] for i in order], self.gamma, self.kappa, self.mu,
                          self.config, self.norm_times, self.w_norms, self.phi_norms,
                          self.rho_values, dict(self.stats))

    def manifest(self):
        meta = {
            "format": "hartree-trajectory",
            "version": 1,
            "grid": self.grid.to_dict(),
            "gamma": self.gamma,
            "kappa": self.kappa,
            "mu": self.mu,
            "config": self.config.to_dict(),
            "times": [float(t) for t in self.times],
            "stats": self.stats,
        }
        if self.norm_times is not None:
            meta["norms"] = {
                "t": self.norm_times.tolist(),
                "rho": self.rho_values.tolist(),
                "w": self.w_norms.tolist(),
                "phi": self.phi_norms.tolist(),
            }
        meta["config_hash"] = hashlib.sha256(
            json.dumps(meta["config"], sort_keys=True).encode()).hexdigest()
        return meta

    def save(self, directory):
        """Write one binary snapshot per time plus ``manifest.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for i in range(len(self.times)):
            (d / f"w_{i:05d}.bin").write_bytes(self.w[i].to_bytes())
            (d / f"phi_{i:05d}.bin").write_bytes(self.phi[i].to_bytes())
        (d / "manifest.json").write_text(json.dumps(self.manifest(), indent=1, sort_keys=True))
        return d

    @classmethod
    def load(cls, directory):
        d = Path(directory)
        meta = json.loads((d / "manifest.json").read_text())
        if meta.get("format") != "hartree-trajectory":
            raise ValueError("not a trajectory directory")
        n = len(meta["times"])
        w = [SpectralField.from_bytes((d / f"w_{i:05d}.bin").read_bytes()) for i in range(n)]
        phi = [SpectralField.from_bytes((d / f"phi_{i:05d}.bin").read_bytes()) for i in range(n)]
        norms = meta.get("norms")
        arr = (lambda key: None) if norms is None else (lambda key: np.array(norms[key]))
        return cls(np.array(meta["times"]), w, phi, meta["gamma"], meta["kappa"], meta["mu"],
                   SolverConfig(**meta["config"]), arr("t"), arr("w"), arr("phi"), arr("rho"),
                   meta.get("stats", {}))


def _error_norm_blocks(size):
    """Worst of the relative RMS errors of the amplitude and phase blocks."""
    def norm(err, y_old, y_new, rtol, atol):
        worst = 0.0
        for sl in (slice(0, size), slice(size, None)):
            e = err[sl]
            scale = max(np.sqrt(np.mean(np.abs(y_old[sl]) ** 2)),
                        np.sqrt(np.mean(np.abs(y_new[sl]) ** 2)))
            worst = max(worst, np.sqrt(np.mean(np.abs(e) ** 2)) / (atol + rtol * scale))
        return worst
    return norm


def _decay_factory(grid, theta, size):
    if theta == 0.0:
        return None
    ksq = np.concatenate([grid.kernel.ksq.ravel()] * 2)

    def decay(tau_a, tau_b):
        return np.exp(-theta * ksq * abs(math.exp(tau_b) - math.exp(tau_a)))
    return decay


def merge_times(*groups, rtol=1e-12):
    """Sorted union of time arrays with near-duplicates (relative ``rtol``) merged.

    Exact members of earlier groups win over nearby values of later ones.
    """
    out = []
    for grp in groups:
        for t in np.atleast_1d(np.asarray(grp, dtype=float)):
            if not any(abs(t - s) <= rtol * max(1.0, abs(s)) for s in out):
                out.append(float(t))
    return np.array(sorted(out))


def _eval_times(t_start, t_span, t_eval):
    t_end = float(t_span[1])
    if t_eval is None:
        return np.array([t_start, t_end])
    direction = np.sign(t_end - t_start) or 1.0
    te = merge_times(t_eval)
    if direction < 0:
        te = te[::-1]
    lo, hi = min(t_start, t_end), max(t_start, t_end)
    if np.any((te < lo * (1 - 1e-12)) | (te > hi * (1 + 1e-12))):
        raise ValueError("t_eval must lie inside t_span")
    return te


def integrate(state, t_span, config=None, rho_schedule=None, *, gamma, kappa, mu,
              norm_spec=None, t_eval=None):
    """Integrate the amplitude/phase system from ``state`` across ``t_span``.

    Parameters
    ----------
    state : AuxState
        Data at ``t_span[0]``.
    t_span : (float, float)
        Start and end time; either order.
    config : SolverConfig
    rho_schedule : RhoSchedule, optional
        Gevrey radius used for the per-step norm diagnostics only.
    gamma, kappa, mu : float
    norm_spec : NormSpec, optional
        Exponents and weight family of the diagnostics; its ``rho`` is
        replaced by ``rho(t)`` at each step.
    t_eval : array_like, optional
        Output times inside ``t_span`` (default: both ends).

    Raises
    ------
    StepFailure, NormBlowup, NegativeRho
    """
    config = config or SolverConfig()
    t0 = val.check_real(t_span[0], "t_span[0]", low=1.0)
    val.check_real(t_span[1], "t_span[1]", low=1.0)
    if abs(state.t - t0) > 1e-12 * t0:
        raise ValueError("state.t must equal t_span[0]")
    grid = state.grid
    system = _RawSystem(grid, gamma, kappa, mu)
    te = _eval_times(t0, t_span, t_eval)
    if rho_schedule is not None:
        rho_at(rho_schedule, np.array([t0, float(t_span[1])]))
    rot0 = system.rotation(t0)
    y0 = system.join(rot0 * state.w.coeffs, state.phi.coeffs)
    log = []

    def record(tau, y):
        if norm_spec is None:
            return
        t = math.exp(tau)
        wt, pc = system.split(y)
        rho = rho_at(rho_schedule, t) if rho_schedule is not None else norm_spec.weight.rho
        spec = norm_spec.with_rho(rho)
        w = SpectralField(grid, np.conj(system.rotation(t)) * wt)
        nw = k_norm(w, spec)
        nphi = y_norm(SpectralField(grid, pc, reality=True), spec)
        log.append((t, rho, nw, nphi))
        if not (nw <= config.norm_ceiling and nphi <= config.norm_ceiling):
            raise NormBlowup(f"Gevrey norm exceeds {config.norm_ceiling:g}", t=t, rho=rho)

    record(math.log(t0), y0)
    tau_eval = np.log(te)
    tau_eval[np.abs(te - t0) <= 1e-14 * t0] = math.log(t0)
    ys, stats = rk.integrate(
        system.rhs_tau, y0, math.log(t0), tau_eval,
        tableau=rk.tableau_for_order(config.stepper_order),
        rtol=config.rel_tol, atol=config.abs_tol, max_step=config.max_step,
        fixed_steps=config.fixed_steps, decay=_decay_factory(grid, config.theta, system.size),
        error_norm=_error_norm_blocks(system.size), on_accept=record,
        max_steps=config.max_steps)
    ws, phis = [], []
    for t, y in zip(te, ys):
        wt, pc = system.split(y)
        ws.append(SpectralField(grid, np.conj(system.rotation(t)) * wt))
        phis.append(SpectralField(grid, pc, reality=True))
    arr = np.array(log) if log else None
    return Trajectory(
        te, ws, phis, float(gamma), float(kappa), float(mu), config,
        None if arr is None else arr[:, 0], None if arr is None else arr[:, 2],
        None if arr is None else arr[:, 3], None if arr is None else arr[:, 1],
        {"accepted": stats.accepted, "rejected": stats.rejected, "rhs_calls": stats.rhs_calls})


# ---------------------------------------------------------------------------
# transport equations
# ---------------------------------------------------------------------------

@dataclass
class TransportSeries:
    """Solution of one transport equation sampled at ``times``."""

    which: str
    times: np.ndarray
    values: list

    def at(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, t):
            raise KeyError(f"time {t} is not a sample of the transport solution")
        return self.values[i]


@dataclass
class TransportPair:
    """Amplitude ``V`` and phase ``chi`` on a common time set."""

    V: TransportSeries
    chi: TransportSeries

    def gauge_product(self, t):
        """``V exp(-i chi)`` at ``t``."""
        return _times_phase(self.V.at(t), self.chi.at(t), -1.0)


def _times_phase(w, phi, sign):
    """``w exp(sign i phi)`` with the product taken on the padded grid."""
    k = w.grid.kernel
    v = k.to_real_padded(w.coeffs) * np.exp(sign * 1j * k.to_real_padded(phi.coeffs).real)
    return SpectralField(w.grid, k.from_real_padded(v))


def solve_transport(phi_ref, seed, t0, t_span, which, config=None, t_eval=None):
    """Integrate a transport equation from ``seed`` at ``t0``.

    ``V_EQ``:  dV/dt = (2t^2)^-1 (2 grad phi . grad + lap phi) V
    ``CHI_EQ``: dchi/dt = t^-2 grad phi . grad chi

    Parameters
    ----------
    phi_ref : callable
        ``phi_ref(t)`` returning a real SpectralField.
    seed : SpectralField
    t0 : float
        Anchor time where the solution equals ``seed``.
    t_span : (float, float)
        Integration runs from ``t0`` to every output time in this window.
    which : {"V_EQ", "CHI_EQ"}
    """
    which = str(which).upper()
    if which not in ("V_EQ", "CHI_EQ"):
        raise ValueError("which must be V_EQ or CHI_EQ")
    config = config or SolverConfig()
    t0 = val.check_real(t0, "t0", low=1.0)
    lo, hi = sorted(float(x) for x in t_span)
    val.check_real(lo, "t_span", low=1.0)
    if not lo <= t0 <= hi:
        raise ValueError("t0 must lie in t_span")
    grid = seed.grid
    shape = grid.shape
    real = which == "CHI_EQ"

    def rhs(tau, y):
        t = math.exp(tau)
        phi = phi_ref(t)
        v = SpectralField(grid, y.reshape(shape), reality=real)
        if which == "V_EQ":
            d = transport_field(phi, v) * (0.5 / t ** 2)
        else:
            d = grad_dot(phi, v) * t ** -2
        return t * d.coeffs.ravel()

    if t_eval is None:
        t_eval = [lo, hi]
    te = merge_times(t_eval)
    if np.any((te < lo * (1 - 1e-12)) | (te > hi * (1 + 1e-12))):
        raise ValueError("t_eval must lie inside t_span")
    values = {}
    for branch in (te[te < t0][::-1], te[te >= t0]):
        if branch.size == 0:
            continue
        ys, _ = rk.integrate(rhs, seed.coeffs.ravel(), math.log(t0), np.log(branch),
                             tableau=rk.tableau_for_order(config.stepper_order),
                             rtol=config.rel_tol, atol=config.abs_tol,
                             max_step=config.max_step, fixed_steps=config.fixed_steps,
                             max_steps=config.max_steps)
        for t, y in zip(branch, ys):
            values[float(t)] = SpectralField(grid, y.reshape(shape), reality=real)
    times = np.array(sorted(values))
    return TransportSeries(which, times, [values[t] for t in times])


# ---------------------------------------------------------------------------
# Cauchy problem from an asymptotic anchor
# ---------------------------------------------------------------------------

@dataclass
class CauchyResult:
    """Trajectory on ``[T, t0]`` with the transport solutions that seeded it."""

    trajectory: Trajectory
    transports: TransportPair
    hierarchy: object
    t0: float
    T: float
    psi_plus: SpectralField


def cauchy_from_t0(w_plus, psi_plus, p, t0, T, config=None, *, hierarchy, t_eval=None,
                   rho_schedule=None, norm_spec=None, transports=True):
    """Solve backward from ``t0`` with data built from the asymptotic hierarchy.

    At ``t0`` the amplitude is ``V(t0) = W_p(t0)`` and the phase is
    ``phi_p(t0) + chi(t0)`` with ``chi(t0) = psi_plus``. The transports for
    ``V`` and ``chi`` use ``phi_{p-1}`` (zero when ``p = 0``) and are solved
    on the same output times for comparison.

    Parameters
    ----------
    w_plus, psi_plus : SpectralField
    p : int
    t0, T : float
        Anchor and lower end, ``1 <= T <= t0``.
    config : SolverConfig
    hierarchy : AsymptoticHierarchy
        Built from ``w_plus`` to level ``p`` with the same physical
        parameters.
    t_eval : array_like, optional
        Output times in ``[T, t0]`` (default ``T`` and ``t0``).
    """
    p = val.check_int(p, "p", low=0)
    t0 = val.check_real(t0, "t0", low=1.0)
    T = val.check_real(T, "T", low=1.0, high=t0)
    if hierarchy.p < p:
        raise ValueError("hierarchy does not reach level p")
    if not hierarchy.w_plus.allclose(w_plus, rtol=0.0, atol=0.0):
        raise ValueError("hierarchy was built from different asymptotic data")
    config = config or SolverConfig()
    te = merge_times([T, t0], [] if t_eval is None else t_eval)
    psi_plus = psi_plus.with_reality(True)
    W0 = hierarchy.W_partial(p, t0)
    phi0 = (hierarchy.phi_partial(p, t0) + psi_plus).with_reality(True)
    traj = integrate(AuxState(t0, W0, phi0), (t0, T), config, rho_schedule,
                     gamma=hierarchy.gamma, kappa=hierarchy.kappa, mu=hierarchy.mu,
                     norm_spec=norm_spec, t_eval=te).sorted()
    pair = None
    if transports:
        if p == 0:
            zero = SpectralField.zeros(w_plus.grid, reality=True)
            phi_ref = lambda t: zero  # noqa: E731
        else:
            phi_ref = lambda t: hierarchy.phi_partial(p - 1, t)  # noqa: E731
        V = solve_transport(phi_ref, W0, t0, (T, t0), "V_EQ", config, te)
        chi = solve_transport(phi_ref, psi_plus, t0, (T, t0), "CHI_EQ", config, te)
        pair = TransportPair(V, chi)
    return CauchyResult(traj, pair, hierarchy, t0, T, psi_plus)


# ---------------------------------------------------------------------------
# asymptotic data
# ---------------------------------------------------------------------------

@dataclass
class RateReport:
    """Distances to the extracted limit against a reference decay shape."""

    times: np.ndarray
    distances: np.ndarray
    reference: np.ndarray
    slope: float
    reference_slope: float

    @property
    def ratios(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.distances / self.reference


def _fit_slope(times, values):
    sel = values > 0
    if np.count_nonzero(sel) < 2:
        return float("nan")
    return float(np.polyfit(np.log(times[sel]), np.log(values[sel]), 1)[0])


def _rate_report(times, dists, shape, fit_fraction):
    t_final = times[-1]
    sel = times <= t_final * fit_fraction
    if np.count_nonzero(sel) >= 2 and dists[sel][-1] >= dists[sel][0]:
        raise NotConverged("distances to the final value do not decrease")
    ref = np.asarray(shape(times), dtype=float) if shape is not None else np.full_like(times, np.nan)
    slope = _fit_slope(times[sel], dists[sel])
    ref_slope = _fit_slope(times[sel], ref[sel]) if shape is not None else float("nan")
    return RateReport(times, dists, ref, slope, ref_slope)


def extract_w_plus(trajectory, h1=None, norm=None, fit_fraction=0.25):
    """``U(1/t) w(t)`` at the latest time, with its Cauchy-rate report.

    Parameters
    ----------
    trajectory : Trajectory
    h1 : callable, optional
        Reference decay shape for the report.
    norm : callable, optional
        Distance functional on fields (default ``L^2``).
    fit_fraction : float
        Slopes are fitted on ``t <= fit_fraction * t_final`` so that the
        artificial zero at ``t_final`` does not bias them.

    Raises
    ------
    NotConverged
        If the distances do not decrease over the fit window.
    """
    tr = trajectory.sorted()
    norm = norm or (lambda f: f.l2_norm())
    wt = [tr.w_tilde(i) for i in range(len(tr))]
    limit = wt[-1]
    dists = np.array([norm(x - limit) for x in wt])
    return limit, _rate_report(tr.times, dists, h1, fit_fraction)


def extract_psi_plus(trajectory, hierarchy, reference=None, norm=None, fit_fraction=0.25):
    """Final value of ``phi(t) - phi_p(t)`` and its distance report.

    ``reference`` is the comparison shape (for instance ``Pbar_p``).
    """
    tr = trajectory.sorted()
    p = hierarchy.p
    if (p + 2) * hierarchy.gamma <= 1.0:
        raise ValueError("the phase remainder converges only when (p+2) gamma > 1")
    norm = norm or (lambda f: f.l2_norm())
    psi = [(tr.phi[i] - hierarchy.phi_partial(p, float(t))).with_reality(True)
           for i, t in enumerate(tr.times)]
    limit = psi[-1]
    dists = np.array([norm(x - limit) for x in psi])
    return limit, _rate_report(tr.times, dists, reference, fit_fraction)


# ---------------------------------------------------------------------------
# residual
# ---------------------------------------------------------------------------

def fd_weights(nodes, x0):
    """Weights of the first derivative at ``x0`` from values at ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    scale = np.max(np.abs(nodes - x0)) or 1.0
    z = (nodes - x0) / scale
    m = z.size
    vander = np.vander(z, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs) / scale


def residual(trajectory, gamma, kappa, mu, stencil=5):
    """Defect of the amplitude/phase system along a trajectory.

    The time derivative is the ``stencil``-point finite difference over
    neighbouring output times; it is compared with :func:`rhs_auxiliary`
    and the difference is measured in ``L^2``. Returns ``(times, res_w,
    res_phi)`` for the times with a centred stencil.
    """
    tr = trajectory.sorted()
    half = stencil // 2
    n = len(tr)
    if n < stencil:
        raise ValueError(f"need at least {stencil} output times")
    times, rw, rp = [], [], []
    for i in range(half, n - half):
        idx = range(i - half, i + half + 1)
        wts = fd_weights(tr.times[list(idx)], tr.times[i])
        dw = sum((tr.w[j] * wt for j, wt in zip(idx, wts)), SpectralField.zeros(tr.grid))
        dp = sum((tr.phi[j] * wt for j, wt in zip(idx, wts)), SpectralField.zeros(tr.grid))
        fw, fp = rhs_auxiliary(tr.state(i), gamma, kappa, mu)
        times.append(tr.times[i])
        rw.append((dw - fw).l2_norm())
        rp.append((dp - fp).l2_norm())
    return np.array(times), np.array(rw), np.array(rp)

