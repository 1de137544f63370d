"""Asymptotic amplitude/phase hierarchy built by successive integrations.

The levels obey

    d/dt w_{m+1} = (2t^2)^-1 sum_{j<=m} (2 grad phi_j . grad + lap phi_j) w_{m-j}
    d/dt phi_{m+1} = (2t^2)^-1 sum_{j<=m} grad phi_j . grad phi_{m-j}
                     + t^-gamma sum_{j<=m+1} g0(w_j, w_{m+1-j})

with ``w_0 = w_+``, ``w_m(inf) = 0`` for ``m >= 1`` and ``phi_m(1) = 0``.
Every right side is bilinear in lower levels, so starting from the
separable ``w_0 = 1 * w_+`` each level is an exact finite sum
``sum_k T_k(t) F_k`` of scalar time functions times fixed fields. The
engine keeps that form at every level: fields are combined once, and only
the scalar factors ``T_k`` are integrated (see :mod:`hartree_lab.timefunc`).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _validation as val
from .estimators import H0Spec, compute_table
from .spectral_field import (
    NormSpec,
    SpectralField,
    g0,
    gradient,
    k_norm,
    laplacian,
    product,
    y_norm,
)
from .timefunc import DEFAULT_T_MAX, LogCheb

__all__ = [
    "Level",
    "AsymptoticHierarchy",
    "solve_hierarchy",
    "partial_sums",
    "verify_decay",
    "DecayReport",
    "gauge_shift_check",
    "GaugeReport",
    "transport_field",
    "grad_dot",
    "hierarchy_exponents",
]


def hierarchy_exponents(k, mu, n, p):
    """``(k_m, ell_m)`` for ``0 <= m <= p + 1`` with ``lambda = mu - n + 2``."""
    lam = mu - n + 2.0
    lam_bar = max(lam, 1.0)
    ks = [k - m * lam_bar for m in range(p + 2)]
    ells = [k - m * lam_bar - lam for m in range(p + 2)]
    return ks, ells


def transport_field(phi, w):
    """``2 grad phi . grad w + (lap phi) w``."""
    out = product(laplacian(phi), w)
    for dphi, dw in zip(gradient(phi), gradient(w)):
        out = out + 2.0 * product(dphi, dw)
    return out


def grad_dot(phi1, phi2):
    """``grad phi1 . grad phi2``."""
    g1, g2 = gradient(phi1), gradient(phi2)
    out = product(g1[0], g2[0])
    for a, b in zip(g1[1:], g2[1:]):
        out = out + product(a, b)
    return out


@dataclass
class Level:
    """One hierarchy level as ``sum_k T_k(t) F_k``.

    ``ids`` name the time functions so that terms sharing a factor can be
    merged; ``funcs`` are :class:`LogCheb` objects.
    """

    ids: list
    funcs: list
    fields: list

    def __len__(self):
        return len(self.fields)

    def at(self, t):
        out = None
        for f, F in zip(self.funcs, self.fields):
            term = F * float(f(t))
            out = term if out is None else out + term
        return out

    def coefficients(self, t):
        return np.array([float(f(t)) for f in self.funcs])


class _Builder:
    """Registry of time functions keyed by how they were formed."""

    def __init__(self, t_max):
        self.t_max = t_max
        self.ids = {}
        self.funcs = []

    def register(self, key, func):
        if key not in self.ids:
            self.ids[key] = len(self.funcs)
            self.funcs.append(func)
        return self.ids[key]

    def level_from(self, terms, transform, tag):
        """Integrate grouped integrands with ``transform`` into a new level."""
        ids, funcs, fields = [], [], []
        for key, (integrand, fld) in terms.items():
            tid = self.register((tag,) + key, None)
            if self.funcs[tid] is None:
                self.funcs[tid] = transform(integrand)
            ids.append(tid)
            funcs.append(self.funcs[tid])
            fields.append(fld)
        return Level(ids, funcs, fields)


def _accumulate(terms, key, integrand, fld):
    if key in terms:
        integrand_old, fld_old = terms[key]
        terms[key] = (integrand_old, fld_old + fld)
    else:
        terms[key] = (integrand, fld)


@dataclass
class AsymptoticHierarchy:
    """Levels ``w_0 .. w_{p+1}`` and ``phi_0 .. phi_p`` (plus optional ``phi_{p+1}``).

    ``w_levels[m]`` and ``phi_levels[m]`` are :class:`Level` objects;
    ``phi_extra`` is the level ``p + 1`` phase normalised to vanish at
    infinity, when it was requested.
    """

    p: int
    gamma: float
    kappa: float
    mu: float
    w_plus: SpectralField
    w_levels: list
    phi_levels: list
    phi_extra: Level = None
    time_grid: np.ndarray = None
    k: float = None
    exponents: tuple = field(default=None)

    @property
    def grid(self):
        return self.w_plus.grid

    def w_at(self, m, t):
        return self.w_levels[m].at(t)

    def phi_at(self, m, t):
        if m == self.p + 1 and self.phi_extra is not None:
            return self.phi_extra.at(t)
        return self.phi_levels[m].at(t)

    def W_partial(self, m, t):
        out = self.w_at(0, t)
        for j in range(1, m + 1):
            out = out + self.w_at(j, t)
        return out

    def phi_partial(self, m, t):
        out = self.phi_at(0, t)
        for j in range(1, m + 1):
            out = out + self.phi_at(j, t)
        return out

    def term_counts(self):
        return {"w": [len(lv) for lv in self.w_levels],
                "phi": [len(lv) for lv in self.phi_levels]}

    def norms_csv(self, weight, times=None):
        """CSV text: ``t`` then ``|w_m|_{k_m}`` and ``|phi_m|_{ell_m}`` per level."""
        if self.exponents is None:
            raise ValueError("hierarchy was built without k; exponents are undefined")
        ks, ells = self.exponents
        times = self.time_grid if times is None else np.asarray(times)
        head = ["t"] + [f"w_{m}" for m in range(len(self.w_levels))] + \
            [f"phi_{m}" for m in range(len(self.phi_levels))]
        lines = [",".join(head)]
        for t in times:
            row = [t]
            for m in range(len(self.w_levels)):
                row.append(k_norm(self.w_at(m, t), NormSpec(weight, k=ks[min(m, len(ks) - 1)])))
            for m in range(len(self.phi_levels)):
                row.append(y_norm(self.phi_at(m, t),
                                  NormSpec(weight, ell=ells[m], ell_low=_default_ell_low(self.grid))))
            lines.append(",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def _default_ell_low(grid):
    return 0.25 * grid.n


def _hbar0(gamma, t_max):
    if gamma == 1.0:
        return LogCheb.from_function(np.log, t_max)
    return LogCheb.from_function(lambda t: np.expm1((1.0 - gamma) * np.log(t)) / (1.0 - gamma),
                                 t_max)


def solve_hierarchy(w_plus, p, gamma, kappa, mu, time_grid=None, t_max=DEFAULT_T_MAX, k=None,
                    phi_extra=False):
    """Build the hierarchy up to ``w_{p+1}`` and ``phi_p``.

    Parameters
    ----------
    w_plus : SpectralField
    p : int
    gamma, kappa, mu : float
    time_grid : array_like, optional
        Times at which callers intend to sample; stored for export.
    t_max : float
        Upper end of the explicit time representation; integrals to
        infinity continue past it with a fitted power-law tail.
    k : float, optional
        Regularity of ``w_plus``; sets the exponent ladder ``(k_m, ell_m)``.
    phi_extra : bool
        Also build ``phi_{p+1}`` with ``phi_{p+1}(inf) = 0``; needs
        ``(p + 2) gamma > 1``.

    Raises
    ------
    TailFitFailure
        If an integrand to infinity is not a clean power law past ``t_max``.
    """
    p = val.check_int(p, "p", low=0)
    gamma = val.check_real(gamma, "gamma", low=0.0, high=1.0, low_open=True)
    kappa = val.check_real(kappa, "kappa")
    mu = val.check_real(mu, "mu", low=0.0, high=w_plus.grid.n, low_open=True)
    if phi_extra and (p + 2) * gamma <= 1.0:
        raise ValueError("phi_{p+1} vanishing at infinity needs (p+2) gamma > 1")
    b = _Builder(t_max)
    one = LogCheb.from_function(np.ones_like, t_max)
    s_minus_2 = LogCheb.power(-2.0, 0.5, t_max)
    s_minus_gamma = LogCheb.power(-gamma, 1.0, t_max)

    w_levels = [Level([b.register(("one",), one)], [one], [w_plus])]
    g_plus = g0(w_plus, w_plus, kappa, mu)
    hb = _hbar0(gamma, t_max)
    phi_levels = [Level([b.register(("hbar0",), hb)], [hb], [g_plus])]

    def w_terms(m):
        terms = {}
        for j in range(m + 1):
            for ia, fa, Fa in zip(phi_levels[j].ids, phi_levels[j].funcs, phi_levels[j].fields):
                for ib, fb, Fb in zip(w_levels[m - j].ids, w_levels[m - j].funcs,
                                      w_levels[m - j].fields):
                    _accumulate(terms, (ia, ib), s_minus_2 * fa * fb, transport_field(Fa, Fb))
        return terms

    def phi_terms(m):
        terms = {}
        for j in range(m + 1):
            for ia, fa, Fa in zip(phi_levels[j].ids, phi_levels[j].funcs, phi_levels[j].fields):
                for ib, fb, Fb in zip(phi_levels[m - j].ids, phi_levels[m - j].funcs,
                                      phi_levels[m - j].fields):
                    key = ("grad",) + tuple(sorted((ia, ib)))
                    _accumulate(terms, key, s_minus_2 * fa * fb, grad_dot(Fa, Fb))
        for j in range(m + 2):
            for ia, fa, Fa in zip(w_levels[j].ids, w_levels[j].funcs, w_levels[j].fields):
                for ib, fb, Fb in zip(w_levels[m + 1 - j].ids, w_levels[m + 1 - j].funcs,
                                      w_levels[m + 1 - j].fields):
                    key = ("g0",) + tuple(sorted((ia, ib)))
                    _accumulate(terms, key, s_minus_gamma * fa * fb, g0(Fa, Fb, kappa, mu))
        return terms

    for m in range(p + 1):
        # w_{m+1}(t) = -int_t^inf (...)
        w_levels.append(b.level_from(w_terms(m), lambda c: -c.tail(), "w"))
        if m + 1 <= p:
            phi_levels.append(b.level_from(phi_terms(m), lambda c: c.cumulative(), "phi"))
    extra = None
    if phi_extra:
        extra = b.level_from(phi_terms(p), lambda c: -c.tail(), "phi_inf")
    exps = None if k is None else hierarchy_exponents(k, mu, w_plus.grid.n, p)
    grid = None if time_grid is None else val.check_time_grid(time_grid)
    return AsymptoticHierarchy(p, gamma, kappa, mu, w_plus, w_levels, phi_levels, extra,
                               grid, k, exps)


def partial_sums(hierarchy, m, times=None):
    """``(W_m(t), phi_m(t))`` for each ``t`` in ``times`` (default: the stored grid)."""
    m = val.check_int(m, "m", low=0, high=hierarchy.p)
    times = hierarchy.time_grid if times is None else np.atleast_1d(times)
    if times is None:
        raise ValueError("no times given and the hierarchy has no stored grid")
    return ([hierarchy.W_partial(m, t) for t in times],
            [hierarchy.phi_partial(m, t) for t in times])


@dataclass
class DecayReport:
    """Ratios of level norms to their envelopes on a sample of times.

    ``variation[name] = max/min - 1`` of each ratio series; ``slopes`` are
    least-squares slopes of the log-norms against log-time.
    """

    times: np.ndarray
    ratios: dict
    variation: dict
    slopes: dict

    def within(self, tol):
        return all(v < tol for v in self.variation.values())


def verify_decay(hierarchy, table=None, norm_spec=None, times=None, t_range=(1e2, 1e4),
                 n_times=21):
    """Compare level norms with the envelopes ``Qbar_m`` and ``Nbar_m``.

    Reports ``|w_{m+1}|_{k_{m+1}} / Qbar_m``, ``|phi_m|_{ell_m} / Nbar_m``
    for ``0 <= m <= p`` and, if present, ``|phi_{p+1}|_{ell_{p+1}} / Pbar_p``.
    ``norm_spec`` provides the weight and ``ell_low``; the regularity
    exponents come from the hierarchy's ladder.
    """
    h = hierarchy
    if h.exponents is None:
        raise ValueError("hierarchy was built without k")
    ks, ells = h.exponents
    if table is None:
        table = compute_table(H0Spec.power(h.gamma), h.p + 1)
    if norm_spec is None:
        raise ValueError("norm_spec is required")
    times = np.geomspace(t_range[0], t_range[1], n_times) if times is None else np.asarray(times)
    ratios, slopes = {}, {}
    for m in range(h.p + 1):
        wn = np.array([k_norm(h.w_at(m + 1, t), norm_spec.with_k(ks[m + 1])) for t in times])
        pn = np.array([y_norm(h.phi_at(m, t), norm_spec.with_ell(ells[m])) for t in times])
        ratios[f"w_{m + 1}/Qbar_{m}"] = wn / table.Q_at(m, times)
        ratios[f"phi_{m}/Nbar_{m}"] = pn / table.N_at(m, times)
        slopes[f"w_{m + 1}"] = float(np.polyfit(np.log(times), np.log(wn), 1)[0])
        slopes[f"phi_{m}"] = float(np.polyfit(np.log(times), np.log(pn), 1)[0])
    if h.phi_extra is not None and h.p in table.P:
        m = h.p + 1
        pn = np.array([y_norm(h.phi_extra.at(t), norm_spec.with_ell(ells[m])) for t in times])
        ratios[f"phi_{m}/Pbar_{h.p}"] = pn / table.P_at(h.p, times)
        slopes[f"phi_{m}"] = float(np.polyfit(np.log(times), np.log(pn), 1)[0])
    variation = {k: float(v.max() / v.min() - 1.0) for k, v in ratios.items()}
    return DecayReport(times, ratios, variation, slopes)


@dataclass
class GaugeReport:
    """Phase deviations between hierarchies built from ``w_+`` and ``w_+ e^{i omega}``.

    ``max_relative`` is the largest ``|phi_m - phi'_m|_{ell_m}`` divided by
    the largest ``|phi_m|_{ell_m}`` seen; ``amplitude_change`` is the
    relative difference of ``w_1`` (expected to be nonzero).
    """

    max_deviation: float
    max_norm: float
    per_level: list
    amplitude_change: float

    @property
    def max_relative(self):
        return self.max_deviation / self.max_norm if self.max_norm > 0 else self.max_deviation


def gauge_shift_check(w_plus, omega, p, gamma, kappa, mu, norm_spec, k, times=None,
                      phi_extra=True):
    """Rebuild the hierarchy for ``w_+ exp(i omega)`` and compare the phases.

    ``omega`` is a real :class:`SpectralField` on the same grid; the
    modulation is applied in real space.
    """
    if not omega.reality:
        raise ValueError("omega must be a real field")
    times = np.geomspace(1.0, 1e4, 9) if times is None else np.asarray(times)
    shifted_vals = w_plus.to_real() * np.exp(1j * omega.to_real())
    w_shift = SpectralField.from_real(w_plus.grid, shifted_vals, reality=False)
    extra = phi_extra and (p + 2) * gamma > 1.0
    h1 = solve_hierarchy(w_plus, p, gamma, kappa, mu, k=k, phi_extra=extra)
    h2 = solve_hierarchy(w_shift, p, gamma, kappa, mu, k=k, phi_extra=extra)
    ks, ells = h1.exponents
    top = p + 1 if extra else p
    per_level, max_dev, max_norm = [], 0.0, 0.0
    for m in range(top + 1):
        spec = norm_spec.with_ell(ells[m])
        dev = max(y_norm(h1.phi_at(m, t) - h2.phi_at(m, t), spec) for t in times)
        nrm = max(y_norm(h1.phi_at(m, t), spec) for t in times)
        per_level.append({"m": m, "deviation": dev, "norm": nrm})
        max_dev, max_norm = max(max_dev, dev), max(max_norm, nrm)
    amp = 0.0
    if p >= 0:
        spec = norm_spec.with_k(ks[1])
        for t in times:
            a = k_norm(h1.w_at(1, t), spec)
            d = k_norm(h1.w_at(1, t) - h2.w_at(1, t), spec)
            amp = max(amp, d / a if a > 0 else d)
    return GaugeReport(max_dev, max_norm, per_level, amp)
