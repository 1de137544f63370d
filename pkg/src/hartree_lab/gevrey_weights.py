"""Gevrey weight functions and the pointwise inequalities they satisfy.

Four weights are available, all radial in the frequency variable ``xi``:

``F0``
    ``f0(xi) = exp(rho |xi|^nu)``
``F``
    ``f(xi) = exp(rho (|xi|^nu v 1))``, the version capped below at ``e^rho``.
``FTILDE``
    ``sum_j (j!)^(-1/nu) y^j`` with ``y = rho^(1/nu) |xi|``.
``FCAP``
    ``sum_j (j+1)^(-1) (j!)^(-1/nu) y^(j+1)``, the primitive of ``FTILDE`` in ``y``.

The two series are summed in log space with log-gamma factorials. The
inequality checks compare logarithms, so arguments far beyond the double
precision exponent range are handled without overflow.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp

from . import _validation as val
from .errors import DivergentIntegral, SeriesNotConverged, WeightOverflow

__all__ = [
    "Variant",
    "WeightParams",
    "Region",
    "InequalityReport",
    "InequalityBatch",
    "eval_weight",
    "eval_log_weight",
    "log_ftilde_series",
    "check_submultiplicative",
    "check_lipschitz_family",
    "pair_inequality_batch",
    "series_pair_batch",
    "series_radial_batch",
    "series_coefficients",
    "series_log_coefficients",
    "coefficient_ratio",
    "asymptotic_ratio_A8",
    "algebra_constant_B2",
    "sample_pairs",
    "RELATIVE_SLACK",
]

RELATIVE_SLACK = 1e-12
TERM_RATIO_TOL = 1e-18
TAIL_REL_TOL = 1e-15
MAX_TERMS = 10_000
_LOG_MAX = np.log(np.finfo(float).max)
_LOG_SLACK = np.log1p(RELATIVE_SLACK)


class Variant(str, Enum):
    F0 = "F0"
    F = "F"
    FTILDE = "FTILDE"
    FCAP = "FCAP"


@dataclass(frozen=True)
class WeightParams:
    """Radius ``rho``, order ``nu`` and the weight ``variant``."""

    rho: float
    nu: float
    variant: Variant = Variant.F

    def __post_init__(self):
        object.__setattr__(self, "rho", val.check_real(self.rho, "rho", low=0.0))
        object.__setattr__(self, "nu", val.check_real(self.nu, "nu", low=0.0, high=1.0, low_open=True))
        object.__setattr__(self, "variant", Variant(self.variant))

    def with_variant(self, variant):
        return WeightParams(self.rho, self.nu, Variant(variant))

    def with_rho(self, rho):
        return WeightParams(rho, self.nu, self.variant)


class Region(str, Enum):
    """Position of ``|xi - eta|`` relative to ``|xi|`` and ``|eta|``."""

    DIFF_SMALLEST = "diff_smallest"
    DIFF_MIDDLE = "diff_middle"
    DIFF_LARGEST = "diff_largest"


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of one inequality at one pair, stored in log form."""

    name: str
    log_lhs: float
    log_rhs: float
    region: Region
    constant_used: float
    satisfied: bool

    @property
    def lhs(self):
        return float(np.exp(min(self.log_lhs, _LOG_MAX)))

    @property
    def rhs(self):
        return float(np.exp(min(self.log_rhs, _LOG_MAX)))


@dataclass(frozen=True)
class InequalityBatch:
    """Vectorized outcome of one inequality over many pairs.

    ``applicable`` masks pairs that lie in the inequality's region of
    validity; ``satisfied`` is true outside that region.
    """

    name: str
    log_lhs: np.ndarray
    log_rhs: np.ndarray
    applicable: np.ndarray
    constant: np.ndarray
    satisfied: np.ndarray

    @property
    def n_checked(self):
        return int(self.applicable.sum())

    @property
    def n_violations(self):
        return int((~self.satisfied).sum())

    @property
    def worst_log_margin(self):
        """Largest ``log lhs - log rhs`` over applicable pairs (``-inf`` if none)."""
        margin = np.where(self.applicable, self.log_lhs - self.log_rhs, -np.inf)
        margin = margin[~np.isnan(margin)]
        return float(margin.max()) if margin.size else -np.inf


def _batch(name, log_lhs, log_rhs, applicable, constant):
    with np.errstate(invalid="ignore"):
        ok = log_lhs <= log_rhs + _LOG_SLACK
    ok = np.where(np.isneginf(log_lhs), True, ok)
    satisfied = ~applicable | ok
    return InequalityBatch(name, log_lhs, log_rhs, applicable,
                           np.broadcast_to(constant, log_lhs.shape).copy(), satisfied)


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------

# (start index, power shift s, log multiplier) for sum_j c_j y^(j+s) a_j
_SERIES_KINDS = {
    "f": (0, 0, lambda j: np.zeros_like(j)),
    "fm1": (1, 0, lambda j: np.zeros_like(j)),
    "F": (0, 1, lambda j: -np.log(j + 1.0)),
    "df": (1, -1, lambda j: np.log(j)),
    "xdf": (0, 0, lambda j: np.log(j + 1.0)),
}

# value of each series at y = 0, in log form
_SERIES_AT_ZERO = {"f": 0.0, "fm1": -np.inf, "F": -np.inf, "df": 0.0, "xdf": 0.0}


def _log_series_nu1(logy, kind):
    y = np.exp(logy)
    with np.errstate(divide="ignore", over="ignore"):
        if kind == "f" or kind == "df":
            return y
        if kind == "xdf":
            return y + np.log1p(y)
        # F and fm1 both equal expm1(y)
        return np.where(y > 1.0, y + np.log(-np.expm1(-np.maximum(y, 1e-300))),
                        np.log(np.expm1(y)))


def _log_series_chunk(nu, logy, kind):
    start, shift, logmult = _SERIES_KINDS[kind]
    y_nu = np.exp(nu * logy.max())
    guess = int(np.ceil(y_nu + 12.0 * np.sqrt(nu * y_nu + 1.0) + 30.0))
    n_terms = max(guess, start + 8)
    while True:
        if n_terms > MAX_TERMS:
            raise SeriesNotConverged(
                f"series needs more than {MAX_TERMS} terms (max |xi|^nu ~ {y_nu:.3g})")
        j = np.arange(start, start + n_terms, dtype=float)
        coef = logmult(j) - gammaln(j + 1.0) / nu
        terms = coef[None, :] + (j + shift)[None, :] * logy[:, None]
        # rows are finite (y > 0), so a plain max shift is safe and much cheaper
        peak = terms.max(axis=1)
        total = peak + np.log(np.exp(terms - peak[:, None]).sum(axis=1))
        last = terms[:, -1]
        jl = j[-1]
        log_ratio = (logy + logmult(np.array([jl + 1.0]))[0] - logmult(np.array([jl]))[0]
                     - np.log(jl + 1.0) / nu)
        ratio = np.exp(log_ratio)
        with np.errstate(divide="ignore"):
            tail = last + log_ratio - np.log1p(-np.minimum(ratio, 1 - 1e-16))
        ok = (ratio < 1.0) & (last - total < np.log(TERM_RATIO_TOL)) & (
            tail - total < np.log(TAIL_REL_TOL))
        if np.all(ok):
            return total
        n_terms = int(n_terms * 1.6) + 16


def log_ftilde_series(nu, logy, kind="f"):
    """Log of one of the ``FTILDE`` family series at ``y = exp(logy)``.

    ``kind`` selects ``f`` (the series itself), ``fm1`` (the series minus 1),
    ``F`` (the primitive), ``df`` (the derivative) or ``xdf`` (the
    derivative of ``y`` times the series). Summation stops once the last
    term is below ``1e-18`` of the partial sum and the geometric tail bound
    is below ``1e-15`` of it.
    """
    if kind not in _SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    logy = np.asarray(logy, dtype=float)
    shape = logy.shape
    flat = logy.ravel()
    out = np.empty_like(flat)
    zero = np.isneginf(flat)
    out[zero] = _SERIES_AT_ZERO[kind]
    live = np.flatnonzero(~zero)
    if live.size:
        if nu == 1.0:
            out[live] = _log_series_nu1(flat[live], kind)
        else:
            order = live[np.argsort(flat[live])]
            y_nu = np.exp(nu * flat[order[-1]])
            chunk = max(64, int(2 ** 22 // max(64.0, y_nu + 64.0)))
            for lo in range(0, order.size, chunk):
                idx = order[lo:lo + chunk]
                out[idx] = _log_series_chunk(nu, flat[idx], kind)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def _log_power(x, p):
    if p == 0.0:
        return np.zeros_like(x)
    with np.errstate(divide="ignore"):
        return p * np.log(x)


def eval_log_weight(params, xi_norm):
    """Natural log of the selected weight at radius ``xi_norm``.

    Accepts scalars or arrays and returns the same shape. ``FCAP`` at
    ``xi_norm = 0`` gives ``-inf``.
    """
    x = np.asarray(xi_norm, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("xi_norm must be finite and nonnegative")
    rho, nu = params.rho, params.nu
    v = params.variant
    if v is Variant.F0:
        out = rho * x ** nu
    elif v is Variant.F:
        out = rho * np.maximum(x ** nu, 1.0)
    else:
        with np.errstate(divide="ignore"):
            logy = np.log(x) + (np.log(rho) / nu if rho > 0 else -np.inf)
        logy = np.where(x == 0, -np.inf, logy)
        out = log_ftilde_series(nu, logy, "f" if v is Variant.FTILDE else "F")
    return float(out) if np.ndim(out) == 0 else out


def eval_weight(params, xi_norm):
    """Value of the selected weight; raises ``WeightOverflow`` past ``exp(709)``."""
    logw = eval_log_weight(params, xi_norm)
    if np.any(np.asarray(logw) > _LOG_MAX):
        raise WeightOverflow(
            "weight exceeds the double range; use eval_log_weight instead")
    out = np.exp(logw)
    return float(out) if np.ndim(out) == 0 else out


def _log_abs_diff(la, lb):
    """``log |exp(la) - exp(lb)|`` without forming the exponentials."""
    hi = np.maximum(la, lb)
    d = -np.abs(la - lb)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = hi + np.log(-np.expm1(d))
    return np.where(la == lb, -np.inf, out)


def _log_expm1(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        big = z + np.log(-np.expm1(-np.maximum(z, 1e-300)))
        small = np.log(np.expm1(z))
    return np.where(z > 1.0, big, small)


def _geometry(xi, eta):
    xi = val.as_vectors(xi, "xi")
    eta = val.as_vectors(eta, "eta")
    if xi.shape != eta.shape:
        raise ValueError("xi and eta must have the same shape")
    a = np.linalg.norm(xi, axis=1)
    b = np.linalg.norm(eta, axis=1)
    c = np.linalg.norm(xi - eta, axis=1)
    return a, b, c


def _region(a, b, c):
    region = np.full(a.shape, Region.DIFF_MIDDLE.value, dtype=object)
    region[c <= np.minimum(a, b)] = Region.DIFF_SMALLEST.value
    region[c >= np.maximum(a, b)] = Region.DIFF_LARGEST.value
    return region


def pair_inequality_batch(params, xi, eta):
    """Check the five weight inequalities for ``f`` or ``f0`` over many pairs.

    Parameters
    ----------
    params : WeightParams
        Variant must be ``F`` or ``F0``.
    xi, eta : array_like, shape (m, n)

    Returns
    -------
    dict
        Keys ``submult``, ``submult_nu``, ``lip``, ``lip_eta``, ``lip_diff``
        mapping to :class:`InequalityBatch`. The last two use the constant
        ``2**(1 - nu)`` exactly when ``|xi| <= |xi - eta| <= |eta|``.
    """
    if params.variant not in (Variant.F, Variant.F0):
        raise ValueError("pair_inequality_batch needs the F or F0 variant")
    rho, nu = params.rho, params.nu
    a, b, c = _geometry(xi, eta)
    lf_a = eval_log_weight(params, a)
    lf_b = eval_log_weight(params, b)
    lf_c = eval_log_weight(params, c)
    lf0nu_b = nu * rho * b ** nu
    lf0nu_c = nu * rho * c ** nu
    one_minus = 1.0 - nu
    pow_b = _log_power(b, one_minus)
    pow_c = _log_power(c, one_minus)
    log_diff = _log_abs_diff(lf_a, lf_b)
    lhs_lip = log_diff + pow_b
    flagged = (a <= c) & (c <= b)
    log_c = np.where(flagged, one_minus * np.log(2.0), 0.0)
    everywhere = np.ones_like(a, dtype=bool)
    small_eta = np.minimum(a, b) <= c
    small_diff = np.minimum(a, c) <= b
    return {
        "submult": _batch("submult", lf_a, lf_c + lf_b, everywhere, 1.0),
        "submult_nu": _batch("submult_nu", lf_a, lf_c + lf0nu_b, small_eta, 1.0),
        "lip": _batch("lip", lhs_lip, pow_c + lf_c + lf_b, everywhere, 1.0),
        "lip_eta": _batch("lip_eta", lhs_lip, log_c + pow_c + lf0nu_c + lf_b,
                          small_diff, np.exp(log_c)),
        "lip_diff": _batch("lip_diff", lhs_lip, log_c + pow_c + lf_c + lf0nu_b,
                           small_eta, np.exp(log_c)),
    }


def series_pair_batch(nu, xi, eta):
    """Pair inequalities for the ``FTILDE`` weight at unit radius.

    A radius ``rho`` is handled by the caller through the rescaling
    ``xi -> rho**(1/nu) xi``.

    Returns
    -------
    dict
        Keys ``submult``, ``submult_exp``, ``lip_ordered``, ``lip``,
        ``lip_exp_diff`` and ``lip_exp_eta`` mapping to :class:`InequalityBatch`.
    """
    a, b, c = _geometry(xi, eta)
    with np.errstate(divide="ignore"):
        la, lb, lc = np.log(a), np.log(b), np.log(c)
    if nu == 1.0:
        # log f = |xi| exactly; a round trip through log|xi| would blur the
        # equality cases |xi| - |eta| = |xi - eta| of collinear pairs
        lf_a, lf_b, lf_c = a, b, c
        lfm1_c = _log_expm1(c)
    else:
        lf_a = log_ftilde_series(nu, la, "f")
        lf_b = log_ftilde_series(nu, lb, "f")
        lf_c = log_ftilde_series(nu, lc, "f")
        lfm1_c = log_ftilde_series(nu, lc, "fm1")
    one_minus = 1.0 - nu
    pow_b = _log_power(b, one_minus)
    pow_c = _log_power(c, one_minus)
    log_diff = _log_abs_diff(lf_a, lf_b)
    lhs_lip = log_diff + pow_b
    flagged = (a <= c) & (c <= b)
    log_const = np.where(flagged, one_minus * np.log(2.0), 0.0)
    everywhere = np.ones_like(a, dtype=bool)
    small_eta = np.minimum(a, b) <= c
    small_diff = np.minimum(a, c) <= b
    ordered = a <= b
    signed_lhs = np.where(lf_b >= lf_a, log_diff, -np.inf) + pow_b
    return {
        "submult": _batch("submult", lf_a, lf_c + lf_b, everywhere, 1.0),
        "submult_exp": _batch("submult_exp", lf_a, lf_c + b ** nu, small_eta, 1.0),
        "lip_ordered": _batch("lip_ordered", signed_lhs, lc + lf_b, ordered, 1.0),
        "lip": _batch("lip", lhs_lip, pow_c + lf_c + lf_b, everywhere, 1.0),
        "lip_exp_diff": _batch("lip_exp_diff", lhs_lip,
                               pow_c + _log_expm1(c ** nu) + lf_b, small_diff, 1.0),
        "lip_exp_eta": _batch("lip_exp_eta", lhs_lip,
                              log_const + pow_c + lfm1_c + b ** nu, small_eta,
                              np.exp(log_const)),
    }


def series_radial_batch(nu, x, a_ref):
    """Radial inequalities of the ``FTILDE`` family at unit radius.

    Parameters
    ----------
    nu : float
    x : array_like
        Sample radii (positive).
    a_ref : array_like
        Reference radii for the two-sided exponential sandwich (positive).

    Returns
    -------
    dict
        ``moment_low``, ``moment_high``, ``primitive``, ``log_deriv``,
        ``primitive_ratio``, ``xderiv``, ``sandwich_low``, ``sandwich_high``.
    """
    x = np.asarray(x, dtype=float).ravel()
    a_ref = np.broadcast_to(np.asarray(a_ref, dtype=float), x.shape).ravel()
    if np.any(x <= 0) or np.any(a_ref <= 0):
        raise ValueError("radii must be positive")
    lx = np.log(x)
    lf = log_ftilde_series(nu, lx, "f")
    lF = log_ftilde_series(nu, lx, "F")
    ldf = log_ftilde_series(nu, lx, "df")
    lxdf = log_ftilde_series(nu, lx, "xdf")
    lF_a = log_ftilde_series(nu, np.log(a_ref), "F")
    nu_lx = nu * lx
    every = np.ones_like(x, dtype=bool)
    xa = np.maximum(x, a_ref)
    low = lF_a + (nu - 1.0) * np.log(xa) + (x ** nu - a_ref ** nu) / nu
    return {
        # sum_{j>=1} j a_j x^j  <=  x^nu sum_j a_j x^j
        "moment_low": _batch("moment_low", lx + ldf, nu_lx + lf, every, 1.0),
        "moment_high": _batch("moment_high", nu_lx + lf, lxdf, every, 1.0),
        "primitive": _batch("primitive", lF, (1.0 - nu) * lx + lf, every, 1.0),
        "log_deriv": _batch("log_deriv", ldf - lf, (nu - 1.0) * lx, every, 1.0),
        "primitive_ratio": _batch("primitive_ratio", (nu - 1.0) * lx, lf - lF, every, 1.0),
        "xderiv": _batch("xderiv", nu_lx + lf, lxdf, every, 1.0),
        "sandwich_low": _batch("sandwich_low", low, lf, every, 1.0),
        "sandwich_high": _batch("sandwich_high", lf, x ** nu / nu, every, 1.0),
    }


def _single(batches, preferred, fallback):
    out = batches[preferred] if batches[preferred].applicable[0] else batches[fallback]
    return out


def _report(batch, region):
    return InequalityReport(
        name=batch.name,
        log_lhs=float(batch.log_lhs[0]),
        log_rhs=float(batch.log_rhs[0]),
        region=Region(region),
        constant_used=float(batch.constant[0]),
        satisfied=bool(batch.satisfied[0]),
    )


def check_submultiplicative(params, xi, eta):
    """Submultiplicativity at one pair.

    For ``F``/``F0`` the sharper bound with ``f0(eta)**nu`` is reported when
    ``|xi| ^ |eta| <= |xi - eta|``; otherwise the plain product bound. For
    ``FTILDE`` the analogous pair with ``exp(|eta|^nu)`` is used, at the
    radius given by ``params.rho``.
    """
    xi = val.as_vectors(xi, "xi")[:1]
    eta = val.as_vectors(eta, "eta")[:1]
    a, b, c = _geometry(xi, eta)
    region = _region(a, b, c)[0]
    if params.variant is Variant.FTILDE:
        scale = params.rho ** (1.0 / params.nu)
        batches = series_pair_batch(params.nu, xi * scale, eta * scale)
        return _report(_single(batches, "submult_exp", "submult"), region)
    if params.variant is Variant.FCAP:
        raise ValueError("FCAP is not submultiplicative; use F, F0 or FTILDE")
    batches = pair_inequality_batch(params, xi, eta)
    return _report(_single(batches, "submult_nu", "submult"), region)


def check_lipschitz_family(params, xi, eta):
    """Difference bound ``|f(xi) - f(eta)| |eta|^(1-nu)`` at one pair.

    Uses the region-appropriate sharper form when available and falls back
    to the bound valid for all pairs.
    """
    xi = val.as_vectors(xi, "xi")[:1]
    eta = val.as_vectors(eta, "eta")[:1]
    a, b, c = _geometry(xi, eta)
    region = _region(a, b, c)[0]
    if params.variant is Variant.FTILDE:
        scale = params.rho ** (1.0 / params.nu)
        batches = series_pair_batch(params.nu, xi * scale, eta * scale)
        first, second = "lip_exp_diff", "lip_exp_eta"
    elif params.variant is Variant.FCAP:
        raise ValueError("FCAP has no difference bound; use F, F0 or FTILDE")
    else:
        batches = pair_inequality_batch(params, xi, eta)
        first, second = "lip_eta", "lip_diff"
    for key in (first, second):
        if batches[key].applicable[0]:
            return _report(batches[key], region)
    return _report(batches["lip"], region)


# ---------------------------------------------------------------------------
# coefficient sequences and asymptotics
# ---------------------------------------------------------------------------

def series_log_coefficients(nu, j_max):
    """Logs of ``a_j = (j!)^(-1/nu)`` and of ``b_k`` with
    ``b_k^2 = sum_{0<=j<=2k} a_j a_{2k-j}``, for ``0 <= j, k <= j_max``."""
    nu = val.check_real(nu, "nu", low=0.0, high=1.0, low_open=True)
    j_max = val.check_int(j_max, "j_max", low=0)
    j = np.arange(2 * j_max + 1, dtype=float)
    log_a_ext = -gammaln(j + 1.0) / nu
    log_b = np.empty(j_max + 1)
    for k in range(j_max + 1):
        idx = np.arange(2 * k + 1)
        log_b[k] = 0.5 * logsumexp(log_a_ext[idx] + log_a_ext[2 * k - idx])
    return log_a_ext[: j_max + 1], log_b


def series_coefficients(nu, j_max):
    """``(a, b)`` as floating arrays; deep entries may underflow to zero."""
    log_a, log_b = series_log_coefficients(nu, j_max)
    return np.exp(log_a), np.exp(log_b)


def coefficient_ratio(nu, j):
    """``b_j / (a_j (pi nu j)^(1/4))``, computed in log space."""
    j = val.check_int(j, "j", low=1)
    log_a, log_b = series_log_coefficients(nu, j)
    return float(np.exp(log_b[j] - log_a[j] - 0.25 * np.log(np.pi * nu * j)))


def asymptotic_ratio_A8(params, xi_norm):
    """Ratio of ``FTILDE`` to its large-argument asymptotic form.

    The comparison function is
    ``(2 pi)^((nu-1)/(2 nu)) nu^(1/2) y^((nu-1)/2) exp(y^nu / nu)`` with
    ``y = rho^(1/nu) |xi|``.
    """
    if params.variant is not Variant.FTILDE:
        raise ValueError("asymptotic_ratio_A8 needs the FTILDE variant")
    x = val.check_real(xi_norm, "xi_norm", low=0.0, low_open=True)
    nu = params.nu
    if params.rho <= 0:
        raise ValueError("rho must be positive")
    logy = np.log(x) + np.log(params.rho) / nu
    log_series = log_ftilde_series(nu, np.array([logy]), "f")[0]
    log_model = ((nu - 1.0) / (2.0 * nu) * np.log(2.0 * np.pi) + 0.5 * np.log(nu)
                 + 0.5 * (nu - 1.0) * logy + np.exp(nu * logy) / nu)
    return float(np.exp(log_series - log_model))


# ---------------------------------------------------------------------------
# algebra constant
# ---------------------------------------------------------------------------

_QUAD_RESOLUTIONS = {
    "coarse": dict(epsabs=0.0, epsrel=1e-8, limit=50),
    "fine": dict(epsabs=0.0, epsrel=1e-13, limit=500),
}


def _sphere_area(n):
    from scipy.special import gamma

    return 2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0)


def algebra_constant_B2(params, k_low, k_high, n, resolution="fine"):
    """Squared product constant of the Gevrey-Sobolev algebra norm.

    Returns ``C^2 = int d eta fbar(eta)^-2 (1 + 2^(2k) f0(eta)^(2 nu))`` with
    ``fbar = w * f1``, ``w`` the ``F`` or ``F0`` weight of ``params``,
    ``f1 = |eta|^k_high`` above 1 and ``|eta|^k_low`` below, and
    ``k = max(k_low, k_high)``.

    The radial integral is split at ``|eta| = 1``: the inner piece is done
    with an algebraic endpoint weight and the outer one after the
    substitution ``u = r^nu``.
    """
    if params.variant not in (Variant.F, Variant.F0):
        raise ValueError("algebra_constant_B2 needs the F or F0 variant")
    n = val.check_int(n, "n", low=1, high=3)
    k_low = val.check_real(k_low, "k_low", low=0.0)
    k_high = val.check_real(k_high, "k_high", low=0.0)
    rho, nu = params.rho, params.nu
    if nu >= 1.0:
        raise DivergentIntegral("the large-|eta| tail diverges when nu = 1")
    if rho <= 0.0:
        raise DivergentIntegral("the large-|eta| tail diverges when rho = 0")
    if k_low >= n / 2.0:
        raise DivergentIntegral("the small-|eta| part diverges when k_low >= n/2")
    opts = _QUAD_RESOLUTIONS[resolution]
    k = max(k_low, k_high)
    boost = 2.0 ** (2.0 * k)

    if params.variant is Variant.F:
        def inner(r):
            return np.exp(-2.0 * rho) * (1.0 + boost * np.exp(2.0 * nu * rho * r ** nu))
    else:
        def inner(r):
            return np.exp(-2.0 * rho * r ** nu) + boost * np.exp(-2.0 * rho * (1.0 - nu) * r ** nu)

    low, _ = integrate.quad(inner, 0.0, 1.0, weight="alg",
                            wvar=(n - 1.0 - 2.0 * k_low, 0.0), **opts)

    s = (n - 2.0 * k_high) / nu

    def outer(u):
        return (u ** (s - 1.0) / nu) * (np.exp(-2.0 * rho * u)
                                        + boost * np.exp(-2.0 * rho * (1.0 - nu) * u))

    high, _ = integrate.quad(outer, 1.0, np.inf, **opts)
    return float(_sphere_area(n) * (low + high))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

SAMPLE_SCALES = (0.1, 1.0, 10.0, 100.0)


def sample_pairs(rng, size, n, near_fraction=0.25):
    """Random ``(xi, eta)`` pairs covering all three distance orderings.

    Components are isotropic Gaussians scaled by a factor drawn from
    ``SAMPLE_SCALES``; a fraction ``near_fraction`` of the pairs has
    ``eta = xi + small perturbation`` with relative size between 1e-6
    and 1e-1.
    """
    scales = np.asarray(SAMPLE_SCALES)
    xi = rng.standard_normal((size, n)) * rng.choice(scales, size)[:, None]
    eta = rng.standard_normal((size, n)) * rng.choice(scales, size)[:, None]
    near = rng.random(size) < near_fraction
    m = int(near.sum())
    if m:
        rel = 10.0 ** rng.uniform(-6.0, -1.0, m)
        size_xi = np.linalg.norm(xi[near], axis=1) + 1e-3
        eta[near] = xi[near] + rng.standard_normal((m, n)) * (rel * size_xi)[:, None]
    return xi, eta
