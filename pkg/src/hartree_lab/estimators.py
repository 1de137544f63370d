"""Estimating functions of time and the Gevrey-radius schedules.

Given a nonnegative ``h0'`` the module tabulates

* ``h(t) = int_1^inf (t v s)^-1 h0'(s) ds``
* ``N_m(t) = int_1^t h0' h^m``
* ``Q_m(t) = int_1^inf (t v s)^-1 h0' h^m``
* ``P_m(t) = int_1^inf h(t v s) h0' h^m`` (only when ``P_m(1)`` is finite)

and checks the identities and inequalities relating them. For the power
law ``h0' = t^-gamma`` with ``gamma < 1`` all of them are finite sums of
powers of ``t`` and are evaluated in closed form; otherwise they are
integrated with :class:`~hartree_lab.timefunc.LogCheb`.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

from . import _validation as val
from .errors import DivergentIntegral, NegativeRho, PInfinite, ScheduleInfeasible, TailFitFailure
from .timefunc import LogCheb

__all__ = [
    "H0Spec",
    "EstimatorTable",
    "compute_table",
    "log_time_grid",
    "check_table_monotonicity",
    "verify_lemma38",
    "EstimatorCheckReport",
    "CheckResult",
    "Direction",
    "RhoSchedule",
    "rho_at",
    "rho_prime_at",
    "PowerLaw",
    "ScheduleSet",
    "build_schedules",
]


def log_time_grid(t_min=1.0, t_max=1e4, per_decade=64):
    """Logarithmic grid with ``per_decade`` points per decade, endpoints included."""
    t_min = val.check_real(t_min, "t_min", low=1.0)
    t_max = val.check_real(t_max, "t_max", low=t_min, low_open=True)
    count = max(2, int(math.ceil(per_decade * math.log10(t_max / t_min))) + 1)
    return np.geomspace(t_min, t_max, count)


# ---------------------------------------------------------------------------
# h0'
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class H0Spec:
    """``h0'`` as a power law ``t^-gamma`` or a positive table.

    Tables are interpolated linearly in ``(log t, log h0')`` and continued
    past the last node along the last segment.
    """

    gamma: float = None
    table_t: tuple = None
    table_values: tuple = None

    def __post_init__(self):
        if self.gamma is not None:
            if self.table_t is not None:
                raise ValueError("give either gamma or a table, not both")
            object.__setattr__(self, "gamma",
                               val.check_real(self.gamma, "gamma", low=0.0, high=1.0, low_open=True))
            return
        if self.table_t is None or self.table_values is None:
            raise ValueError("a table needs both table_t and table_values")
        t = val.check_time_grid(self.table_t, "table_t")
        v = np.asarray(self.table_values, dtype=float)
        if v.shape != t.shape or t.size < 2:
            raise ValueError("table_t and table_values must match and have >= 2 entries")
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise ValueError("tabulated h0' must be positive and finite")
        if t[0] != 1.0:
            raise ValueError("table must start at t = 1")
        object.__setattr__(self, "table_t", tuple(float(x) for x in t))
        object.__setattr__(self, "table_values", tuple(float(x) for x in v))
        # t^-1 h0' must be integrable: the continued last segment must decay
        if self.tail_slope >= 0.0:
            raise ValueError("t^-1 h0'(t) is not integrable: last table segment does not decay")

    @classmethod
    def power(cls, gamma):
        return cls(gamma=gamma)

    @classmethod
    def table(cls, t, values):
        return cls(table_t=tuple(t), table_values=tuple(values))

    @property
    def is_power(self):
        return self.gamma is not None

    @property
    def tail_slope(self):
        if self.is_power:
            return -self.gamma
        lt = np.log(self.table_t[-2:])
        lv = np.log(self.table_values[-2:])
        return float((lv[1] - lv[0]) / (lt[1] - lt[0]))

    def hprime(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_power:
            return t ** (-self.gamma)
        lt = np.log(np.asarray(self.table_t))
        lv = np.log(np.asarray(self.table_values))
        x = np.log(t)
        out = np.interp(x, lt, lv)
        beyond = x > lt[-1]
        out = np.where(beyond, lv[-1] + self.tail_slope * (x - lt[-1]), out)
        return np.exp(out)

    def to_dict(self):
        if self.is_power:
            return {"gamma": self.gamma}
        return {"table_t": list(self.table_t), "table_values": list(self.table_values)}


# ---------------------------------------------------------------------------
# closed forms for the power law
# ---------------------------------------------------------------------------

class _PowerSum:
    """``sum_e c_e t^-e`` with the associated primitives."""

    def __init__(self, terms):
        merged = {}
        for c, e in terms:
            key = round(e, 14)
            merged[key] = merged.get(key, 0.0) + c
        self.terms = [(c, e) for e, c in sorted(merged.items()) if c != 0.0]

    def __call__(self, t):
        return sum(c * t ** (-e) for c, e in self.terms)

    def integral_from_one(self, t):
        lt = np.log(t)
        out = 0.0
        for c, e in self.terms:
            if e == 1.0:
                out = out + c * lt
            else:
                out = out + c * np.expm1((1.0 - e) * lt) / (1.0 - e)
        return out

    def integral_to_inf(self, t, extra_power=0.0):
        """``int_t^inf s^extra_power sum c s^-e ds``; needs ``e - extra_power > 1``."""
        out = 0.0
        for c, e in self.terms:
            a = e - extra_power
            if a <= 1.0:
                raise PInfinite("integral diverges at infinity")
            out = out + c * t ** (1.0 - a) / (a - 1.0)
        return out


def _power_hm(gamma, m):
    """Terms of ``h0' h^m`` for ``h0' = t^-gamma``, ``gamma < 1``."""
    a = 1.0 / (1.0 - gamma) + 1.0 / gamma
    b = -1.0 / (1.0 - gamma)
    terms = []
    for i in range(m + 1):
        c = math.comb(m, i) * a ** i * b ** (m - i)
        terms.append((c, gamma + i * gamma + (m - i)))
    return _PowerSum(terms)


class _ClosedForm:
    def __init__(self, gamma, m_max):
        self.gamma = gamma
        self.hm = [_power_hm(gamma, m) for m in range(m_max + 2)]
        self.h_terms = _PowerSum([(1.0 / (1.0 - gamma) + 1.0 / gamma, gamma),
                                  (-1.0 / (1.0 - gamma), 1.0)])

    def h(self, t):
        return self.h_terms(t)

    def N(self, m, t):
        return self.hm[m].integral_from_one(t)

    def Q(self, m, t):
        return self.hm[m].integral_from_one(t) / t + self.hm[m].integral_to_inf(t, -1.0)

    def P(self, m, t):
        return self.h(t) * self.N(m, t) + self.hm[m + 1].integral_to_inf(t)

    def p_finite(self, m):
        return (m + 2) * self.gamma > 1.0


class _Quadrature:
    def __init__(self, spec, m_max):
        hp = LogCheb.from_function(spec.hprime)
        self.h_fn = hp.cumulative().times_power(-1.0) + hp.times_power(-1.0).tail()
        self.N_fn, self.Q_fn, self.P_fn = [], [], []
        power = LogCheb.from_function(np.ones_like)
        for m in range(m_max + 1):
            integrand = hp * power
            n_m = integrand.cumulative()
            self.N_fn.append(n_m)
            self.Q_fn.append(n_m.times_power(-1.0) + integrand.times_power(-1.0).tail())
            power = power * self.h_fn
            try:
                tail = (hp * power).tail()
                self.P_fn.append(self.h_fn * n_m + tail)
            except TailFitFailure:
                self.P_fn.append(None)

    def h(self, t):
        return self.h_fn(t)

    def N(self, m, t):
        return self.N_fn[m](t)

    def Q(self, m, t):
        return self.Q_fn[m](t)

    def P(self, m, t):
        if self.P_fn[m] is None:
            raise PInfinite(f"P_{m}(1) is infinite")
        return self.P_fn[m](t)

    def p_finite(self, m):
        return self.P_fn[m] is not None


@dataclass
class EstimatorTable:
    """Tabulated estimating functions plus evaluators for arbitrary ``t``.

    ``N``, ``Q`` have shape ``(m_max + 1, len(time_grid))``; ``P`` maps each
    ``m`` with finite ``P_m(1)`` to its row. ``p_infinite`` lists the
    remaining ``m``.
    """

    spec: H0Spec
    m_max: int
    time_grid: np.ndarray
    h: np.ndarray
    N: np.ndarray
    Q: np.ndarray
    P: dict
    p_infinite: tuple
    method: str
    _engine: object = field(repr=False, default=None)

    def h_at(self, t):
        return self._engine.h(np.asarray(t, dtype=float))

    def N_at(self, m, t):
        self._check_m(m)
        return self._engine.N(m, np.asarray(t, dtype=float))

    def Q_at(self, m, t):
        if m == -1:
            return np.ones_like(np.asarray(t, dtype=float))
        self._check_m(m)
        return self._engine.Q(m, np.asarray(t, dtype=float))

    def P_at(self, m, t):
        self._check_m(m)
        if m in self.p_infinite:
            raise PInfinite(f"P_{m}(1) is infinite for this h0'")
        return self._engine.P(m, np.asarray(t, dtype=float))

    def hprime_at(self, t):
        return self.spec.hprime(t)

    def _check_m(self, m):
        if not 0 <= m <= self.m_max:
            raise ValueError(f"m = {m} outside the table range 0..{self.m_max}")

    def to_csv(self):
        """CSV text with columns ``t, h, N_0.., Q_0.., P_m`` (finite ``P`` only)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        ms = range(self.m_max + 1)
        p_ms = sorted(self.P)
        writer.writerow(["t", "h"] + [f"N_{m}" for m in ms] + [f"Q_{m}" for m in ms]
                        + [f"P_{m}" for m in p_ms])
        for i, t in enumerate(self.time_grid):
            row = [t, self.h[i]] + [self.N[m, i] for m in ms] + [self.Q[m, i] for m in ms]
            row += [self.P[m][i] for m in p_ms]
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def compute_table(spec, m_max, time_grid=None, method="auto"):
    """Tabulate ``h, N_m, Q_m, P_m`` for ``0 <= m <= m_max``.

    Parameters
    ----------
    spec : H0Spec
    m_max : int
        At most 6.
    time_grid : array_like, optional
        Increasing times in ``[1, 1e6]``; default 64 points per decade on
        ``[1, 1e4]``.
    method : {"auto", "closed", "quadrature"}
        ``auto`` uses the closed form for power laws with ``gamma < 1``.
    """
    m_max = val.check_int(m_max, "m_max", low=0, high=6)
    grid = log_time_grid() if time_grid is None else val.check_time_grid(time_grid)
    if grid[-1] > 1e6:
        raise ValueError("time_grid must stay within [1, 1e6]")
    closed_ok = spec.is_power and spec.gamma < 1.0
    if method == "auto":
        method = "closed" if closed_ok else "quadrature"
    if method == "closed":
        if not closed_ok:
            raise ValueError("closed forms need a power law with gamma < 1")
        engine = _ClosedForm(spec.gamma, m_max)
    elif method == "quadrature":
        engine = _Quadrature(spec, m_max)
    else:
        raise ValueError(f"unknown method {method!r}")
    h = np.asarray(engine.h(grid), dtype=float)
    N = np.array([engine.N(m, grid) for m in range(m_max + 1)], dtype=float)
    Q = np.array([engine.Q(m, grid) for m in range(m_max + 1)], dtype=float)
    P, p_inf = {}, []
    for m in range(m_max + 1):
        if engine.p_finite(m):
            P[m] = np.asarray(engine.P(m, grid), dtype=float)
        else:
            p_inf.append(m)
    return EstimatorTable(spec, m_max, grid, h, N, Q, P, tuple(p_inf), method, engine)


def check_table_monotonicity(table, rtol=1e-10):
    """Evaluate every monotonicity statement on the table grid.

    Returns a dict of booleans keyed by statement; a step counts as
    monotone when it does not go the wrong way by more than ``rtol``
    relative.
    """
    t = table.time_grid

    def nonincreasing(v):
        return bool(np.all(np.diff(v) <= rtol * np.abs(v[:-1])))

    def nondecreasing(v):
        return bool(np.all(np.diff(v) >= -rtol * np.abs(v[:-1])))

    out = {"h decreasing": nonincreasing(table.h), "t h increasing": nondecreasing(t * table.h)}
    for m in range(table.m_max + 1):
        out[f"N_{m} increasing"] = nondecreasing(table.N[m])
        out[f"Q_{m} decreasing"] = nonincreasing(table.Q[m])
        out[f"t Q_{m} increasing"] = nondecreasing(t * table.Q[m])
        if m in table.P:
            out[f"P_{m} decreasing"] = nonincreasing(table.P[m])
            out[f"P_{m}/h increasing"] = nondecreasing(table.P[m] / table.h)
    return out


# ---------------------------------------------------------------------------
# identities and inequalities between the estimating functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    params: tuple
    lhs: float
    rhs: float
    kind: str
    passed: bool


@dataclass
class EstimatorCheckReport:
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    def worst_identity_error(self):
        errs = [abs(r.lhs - r.rhs) / max(abs(r.lhs), abs(r.rhs), 1e-300)
                for r in self.results if r.kind == "identity"]
        return max(errs) if errs else 0.0


IDENTITY_RTOL = 1e-6
INEQUALITY_SLACK = 1e-9


def _quad(func, a, b, rtol=1e-9, max_decades=400):
    """Integral over ``[a, b]`` split at decades; ``b`` may be infinite.

    Infinite ranges are integrated decade by decade until the power-law
    estimate ``f(T) T / (alpha - 1)`` of the remainder, with ``alpha`` the
    local log-slope of ``f``, falls below ``rtol`` of the running total;
    that estimate is then added.
    """
    if a == b:
        return 0.0
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    if np.isfinite(b):
        edges = [a]
        while edges[-1] * 10.0 < b:
            edges.append(edges[-1] * 10.0)
        edges.append(b)
        return float(sum(integrate.quad(func, lo, hi, **opts)[0]
                         for lo, hi in zip(edges[:-1], edges[1:])))
    total, lo = 0.0, a
    for _ in range(max_decades):
        hi = lo * 10.0
        total += integrate.quad(func, lo, hi, **opts)[0]
        f_hi, f_mid = func(hi), func(hi / math.sqrt(10.0))
        if f_hi == 0.0:
            return total
        alpha = -math.log(f_hi / f_mid) / math.log(math.sqrt(10.0))
        if alpha > 1.0:
            rest = f_hi * hi / (alpha - 1.0)
            if abs(rest) <= rtol * abs(total):
                return total + rest
        lo = hi
    raise DivergentIntegral("tail did not settle within the decade budget; "
                            "the integral may diverge")


def verify_lemma38(table, sample_times, a_b_pairs, m_values=None, index_pairs=None):
    """Check the identities and inequalities linking ``h, N, Q, P``.

    Integrals are computed with adaptive quadrature on the table's
    evaluators, independently of how the table itself was built.
    Identities pass at ``1e-6`` relative error, inequalities with ``1e-9``
    absolute slack.

    Parameters
    ----------
    table : EstimatorTable
    sample_times : iterable of float
    a_b_pairs : iterable of (a, b) with ``1 <= a <= b``
    m_values : iterable of int, optional
        Defaults to ``0 .. m_max - 1`` (one level is reserved for ``m + 1``).
    index_pairs : iterable of (i, j), optional
        Defaults to all pairs with ``i + j + 1 <= m_max``.
    """
    m_top = table.m_max - 1
    if m_top < 0:
        raise ValueError("verify_lemma38 needs m_max >= 1")
    ms = list(range(m_top + 1)) if m_values is None else list(m_values)
    if index_pairs is None:
        index_pairs = [(i, j) for i in range(table.m_max) for j in range(table.m_max)
                       if i + j + 1 <= table.m_max]
    hp, h = table.hprime_at, table.h_at
    N, Q = table.N_at, table.Q_at
    results = []

    def identity(name, params, lhs, rhs):
        ok = abs(lhs - rhs) <= IDENTITY_RTOL * max(abs(lhs), abs(rhs))
        results.append(CheckResult(name, params, float(lhs), float(rhs), "identity", bool(ok)))

    def inequality(name, params, lhs, rhs):
        ok = lhs <= rhs + INEQUALITY_SLACK
        results.append(CheckResult(name, params, float(lhs), float(rhs), "inequality", bool(ok)))

    for t in sample_times:
        t = float(t)
        for m in ms:
            lhs = _quad(lambda s: s ** -2 * N(m, s), t, np.inf)
            identity("int_t^inf s^-2 N_m = Q_m(t)", (m, t), lhs, Q(m, t))
            lhs = _quad(lambda s: s ** -2 * N(0, s) * N(m, s), 1.0, t)
            rhs = N(m + 1, t) - h(t) * N(m, t)
            if t > 1.0:
                identity("int_1^t s^-2 N_0 N_m = N_{m+1} - h N_m", (m, t), lhs, rhs)
            inequality("N_{m+1} - h N_m <= N_{m+1}", (m, t), rhs, N(m + 1, t))
            if m in table.P:
                lhs = _quad(lambda s: s ** -2 * N(0, s) * N(m, s), t, np.inf)
                identity("int_t^inf s^-2 N_0 N_m = P_m(t)", (m, t), lhs, table.P_at(m, t))
            upper = _quad(lambda s: hp(s) * Q(m, s), t, np.inf)
            inequality("int_t^inf h0' h Q_{m-1} <= int_t^inf h0' Q_m", (m, t),
                       _quad(lambda s: hp(s) * h(s) * Q(m - 1, s), t, np.inf), upper)
            if m in table.P:
                inequality("int_t^inf h0' Q_m <= P_m(t)", (m, t), upper, table.P_at(m, t))
            inequality("int_1^t h0' h Q_{m-1} <= N_{m+1}(t)", (m, t),
                       _quad(lambda s: hp(s) * h(s) * Q(m - 1, s), 1.0, t), N(m + 1, t))
            inequality("int_1^t h0' Q_m <= N_{m+1}(t)", (m, t),
                       _quad(lambda s: hp(s) * Q(m, s), 1.0, t), N(m + 1, t))
        for i, j in index_pairs:
            inequality("N_i N_j <= N_0 N_{i+j}", (i, j, t), N(i, t) * N(j, t), N(0, t) * N(i + j, t))
            inequality("N_i Q_j <= h N_{i+j}", (i, j, t), N(i, t) * Q(j, t), h(t) * N(i + j, t))
            inequality("h N_{i+j} <= N_{i+j+1}", (i, j, t), h(t) * N(i + j, t), N(i + j + 1, t))
            inequality("Q_i Q_j <= h Q_{i+j}", (i, j, t), Q(i, t) * Q(j, t), h(t) * Q(i + j, t))
            inequality("h Q_{i+j} <= 2 Q_{i+j+1}", (i, j, t), h(t) * Q(i + j, t),
                       2.0 * Q(i + j + 1, t))
    h0_diff = lambda a, b: _quad(hp, a, b)  # noqa: E731
    for a, b in a_b_pairs:
        a, b = float(a), float(b)
        if not 1.0 <= a <= b:
            raise ValueError("a_b_pairs need 1 <= a <= b")
        for m in ms:
            inequality("int_a^b h0' Q_m <= Q_m(a) (h0(b) - h0(a))", (m, a, b),
                       _quad(lambda s: hp(s) * Q(m, s), a, b), Q(m, a) * h0_diff(a, b))
            inequality("int_a^b h0' h Q_{m-1} <= 2 Q_m(a) (h0(b) - h0(a))", (m, a, b),
                       _quad(lambda s: hp(s) * h(s) * Q(m - 1, s), a, b),
                       2.0 * Q(m, a) * h0_diff(a, b))
    return EstimatorCheckReport(results)


# ---------------------------------------------------------------------------
# Gevrey radius schedule
# ---------------------------------------------------------------------------

class Direction(str, Enum):
    DECREASING = "DECREASING"
    INCREASING = "INCREASING"


@dataclass(frozen=True)
class RhoSchedule:
    """``rho(t)`` with ``|rho'| = scale * t^(-1-epsilon)``.

    ``DECREASING`` peaks at the anchor ``t0`` where ``rho = rho_inf`` and
    falls off on both sides; ``INCREASING`` rises to ``rho_inf`` as
    ``t -> inf``.
    """

    rho_inf: float
    epsilon: float = 0.05
    scale: float = 1.0
    direction: Direction = Direction.INCREASING
    t0: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "rho_inf", val.check_real(self.rho_inf, "rho_inf", low=0.0))
        object.__setattr__(self, "epsilon",
                           val.check_real(self.epsilon, "epsilon", low=0.0, high=1.0,
                                          low_open=True, high_open=True))
        object.__setattr__(self, "scale", val.check_real(self.scale, "scale", low=0.0,
                                                         low_open=True))
        object.__setattr__(self, "direction", Direction(self.direction))
        if not (isinstance(self.t0, (int, float)) and self.t0 >= 1.0):
            raise ValueError("t0 must be >= 1 (or inf)")

    def abs_rho_prime(self, t):
        return self.scale * np.asarray(t, dtype=float) ** (-1.0 - self.epsilon)

    def _tail(self, t):
        # int_t^inf |rho'|
        return self.scale * np.asarray(t, dtype=float) ** (-self.epsilon) / self.epsilon

    def to_dict(self):
        return {"rho_inf": self.rho_inf, "epsilon": self.epsilon, "scale": self.scale,
                "direction": self.direction.value,
                "t0": None if math.isinf(self.t0) else self.t0}


def rho_at(schedule, t):
    """``rho(t)``; raises ``NegativeRho`` if it would drop below zero."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 1.0):
        raise ValueError("t must be >= 1")
    if schedule.direction is Direction.INCREASING or math.isinf(schedule.t0):
        rho = schedule.rho_inf - schedule._tail(t)
    else:
        rho = schedule.rho_inf - np.abs(schedule._tail(t) - schedule._tail(schedule.t0))
    if np.any(rho < 0.0):
        raise NegativeRho(
            f"rho becomes negative (min {np.min(rho):.3g}); raise rho_inf or shorten the interval")
    return float(rho) if rho.ndim == 0 else rho


def rho_prime_at(schedule, t):
    """Signed derivative ``rho'(t)``."""
    t = np.asarray(t, dtype=float)
    mag = schedule.abs_rho_prime(t)
    if schedule.direction is Direction.DECREASING and not math.isinf(schedule.t0):
        mag = np.where(t > schedule.t0, -mag, mag)
    return float(mag) if np.ndim(mag) == 0 else mag


# ---------------------------------------------------------------------------
# decay envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLaw:
    coefficient: float
    exponent: float

    def __call__(self, t):
        return self.coefficient * np.asarray(t, dtype=float) ** self.exponent


@dataclass
class ScheduleSet:
    """Envelopes ``hbar0, hbar1, h1, h2, h3`` and the constraint check."""

    gamma: float
    epsilon: float
    p: int
    hbar0: object
    hbar1: PowerLaw
    h1: PowerLaw
    h2: PowerLaw
    h3: PowerLaw
    constraints: dict
    check_grid: np.ndarray

    def exponents(self):
        return {"hbar1": self.hbar1.exponent, "h1": self.h1.exponent,
                "h2": self.h2.exponent, "h3": self.h3.exponent}


def _fit_coefficient(exponent, required, grid):
    """Smallest ``c`` with ``c t^exponent >= required`` on ``grid``."""
    return float(np.max(required / grid ** exponent)) * (1.0 + 1e-12)


def build_schedules(gamma, epsilon, p, rho_spec=None, t_range=(1.0, 1e4), per_decade=64):
    """Saturated power-law envelopes satisfying the transport-step constraints.

    With ``r = 1 / |rho'|`` the constraints are::

        hbar1 >= t^-2 r hbar0          h2 >= t^-2 r Nbar_p
        h2 >= Qbar_p  (p >= 1)         h3 >= t^-gamma r h2
        h1 >= t^-2 r h3 / h2           h3 >= hbar1

    Exponents are the smallest that can work: ``hbar1 ~ t^(eps - gamma)``,
    ``h2 ~ t^(eps - (p+1) gamma)`` when ``(p+1) gamma < 1`` and
    ``t^(eps - 1)`` otherwise (``Nbar_p`` is then bounded), ``h3`` the larger
    of ``t^(1 - gamma + eps) h2`` and ``hbar1``, and ``h1`` from the fourth
    constraint. Coefficients are the tightest that hold on the check grid.
    """
    gamma = val.check_real(gamma, "gamma", low=0.0, high=1.0, low_open=True, high_open=True)
    epsilon = val.check_real(epsilon, "epsilon", low=0.0, low_open=True)
    p = val.check_int(p, "p", low=0)
    if (p + 2) * gamma <= 1.0:
        raise ScheduleInfeasible("(p+2) gamma <= 1: h3 cannot decrease")
    if 2.0 * epsilon >= (p + 2) * gamma - 1.0:
        raise ScheduleInfeasible("need 2 epsilon < (p+2) gamma - 1")
    rho_spec = rho_spec or RhoSchedule(rho_inf=1.0, epsilon=epsilon)
    if abs(rho_spec.epsilon - epsilon) > 1e-15:
        raise ValueError("rho_spec.epsilon must equal epsilon")
    grid = log_time_grid(t_range[0], t_range[1], per_decade)
    table = compute_table(H0Spec.power(gamma), max(p, 0), grid)
    inv_rho = 1.0 / rho_spec.abs_rho_prime(grid)
    hbar0 = table.N[0]

    e_bar1 = -gamma + epsilon
    e2 = (-(p + 1) * gamma + epsilon) if (p + 1) * gamma < 1.0 else (-1.0 + epsilon)
    if p == 0:
        e2 = e_bar1
    e3 = max(1.0 - gamma + epsilon + e2, e_bar1)
    e1 = -1.0 + epsilon + e3 - e2
    for name, e in (("hbar1", e_bar1), ("h2", e2), ("h3", e3), ("h1", e1)):
        if e >= 0.0:
            raise ScheduleInfeasible(f"{name} would not decay (exponent {e:.3f})")

    req_bar1 = grid ** -2 * inv_rho * hbar0
    hbar1 = PowerLaw(_fit_coefficient(e_bar1, req_bar1, grid), e_bar1)
    req2 = grid ** -2 * inv_rho * table.N[p]
    if p >= 1:
        req2 = np.maximum(req2, table.Q[p])
    if p == 0:
        req2 = np.maximum(req2, hbar1(grid))
    h2 = PowerLaw(_fit_coefficient(e2, req2, grid), e2)
    req3 = np.maximum(grid ** -gamma * inv_rho * h2(grid), hbar1(grid))
    h3 = PowerLaw(_fit_coefficient(e3, req3, grid), e3)
    req1 = grid ** -2 * inv_rho * h3(grid) / h2(grid)
    h1 = PowerLaw(_fit_coefficient(e1, req1, grid), e1)

    constraints = {
        "hbar1 >= t^-2 r hbar0": bool(np.all(hbar1(grid) >= req_bar1)),
        "h2 >= t^-2 r Nbar_p": bool(np.all(h2(grid) >= grid ** -2 * inv_rho * table.N[p])),
        "h2 >= Qbar_p": bool(p == 0 or np.all(h2(grid) >= table.Q[p])),
        "h3 >= t^-gamma r h2": bool(np.all(h3(grid) >= grid ** -gamma * inv_rho * h2(grid))),
        "h1 >= t^-2 r h3 / h2": bool(np.all(h1(grid) >= req1)),
        "h3 >= hbar1": bool(np.all(h3(grid) >= hbar1(grid))),
    }
    if not all(constraints.values()):
        bad = [k for k, v in constraints.items() if not v]
        raise ScheduleInfeasible(f"constraints fail on the grid: {bad}")
    return ScheduleSet(gamma, epsilon, p, lambda t: table.N_at(0, t), hbar1, h1, h2, h3,
                       constraints, grid)
