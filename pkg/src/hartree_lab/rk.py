"""Embedded explicit Runge-Kutta pairs with an optional diagonal integrating factor.

The integrator advances a flat complex vector ``y`` in a scalar variable
``tau`` (the solvers use ``tau = ln t``). A diagonal linear part can be
removed exactly through ``decay(tau_a, tau_b)``, the multiplier that
propagates the linear flow from ``tau_a`` to ``tau_b``; stages are then
combined Lawson style. Every tableau here has nondecreasing nodes, so the
multipliers only ever act forward within a step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StepFailure

__all__ = ["Tableau", "MERSON_43", "HEUN_EULER_21", "tableau_for_order", "integrate",
           "IntegrationStats"]


@dataclass(frozen=True)
class Tableau:
    """Butcher tableau with an embedded lower-order weight vector."""

    name: str
    c: tuple
    a: tuple
    b: tuple
    b_hat: tuple
    order: int

    @property
    def stages(self):
        return len(self.c)


# Merson: fourth order main solution, third order embedded one
MERSON_43 = Tableau(
    "merson-4(3)",
    c=(0.0, 1 / 3, 1 / 3, 1 / 2, 1.0),
    a=((), (1 / 3,), (1 / 6, 1 / 6), (1 / 8, 0.0, 3 / 8), (1 / 2, 0.0, -3 / 2, 2.0)),
    b=(1 / 6, 0.0, 0.0, 2 / 3, 1 / 6),
    b_hat=(1 / 10, 0.0, 3 / 10, 2 / 5, 1 / 5),
    order=4,
)

HEUN_EULER_21 = Tableau(
    "heun-euler-2(1)",
    c=(0.0, 1.0),
    a=((), (1.0,)),
    b=(0.5, 0.5),
    b_hat=(1.0, 0.0),
    order=2,
)


def tableau_for_order(order):
    if order == 4:
        return MERSON_43
    if order == 2:
        return HEUN_EULER_21
    raise ValueError("stepper_order must be 2 or 4")


@dataclass
class IntegrationStats:
    accepted: int = 0
    rejected: int = 0
    rhs_calls: int = 0


def _rms(v):
    return float(np.sqrt(np.mean(np.abs(v) ** 2))) if v.size else 0.0


def default_error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * max(_rms(y_old), _rms(y_new))
    return _rms(err) / scale


def _step(rhs, tab, tau, h, y, decay, stats):
    """One step; returns ``(y_new, err_vec)``."""
    taus = [tau + ci * h for ci in tab.c]
    ks = []
    for i in range(tab.stages):
        if i == 0:
            yi = y
        else:
            yi = y if decay is None else decay(taus[0], taus[i]) * y
            acc = 0.0
            for j, aij in enumerate(tab.a[i]):
                if aij != 0.0:
                    kj = ks[j] if decay is None else decay(taus[j], taus[i]) * ks[j]
                    acc = acc + aij * kj
            yi = yi + h * acc
        ks.append(rhs(taus[i], yi))
        stats.rhs_calls += 1
    tau_b = tau + h
    base = y if decay is None else decay(tau, tau_b) * y
    hi = 0.0
    err = 0.0
    for j in range(tab.stages):
        kj = ks[j] if decay is None else decay(taus[j], tau_b) * ks[j]
        hi = hi + tab.b[j] * kj
        err = err + (tab.b[j] - tab.b_hat[j]) * kj
    return base + h * hi, h * err


def integrate(rhs, y0, tau0, tau_eval, *, tableau=MERSON_43, rtol=1e-8, atol=1e-12,
              max_step=np.inf, first_step=None, fixed_steps=None, decay=None,
              error_norm=None, on_accept=None, max_steps=200000):
    """Advance ``dy/dtau = rhs(tau, y)`` from ``tau0`` through every ``tau_eval``.

    Parameters
    ----------
    rhs : callable
        ``rhs(tau, y)`` returning an array shaped like ``y``.
    y0 : ndarray
    tau0 : float
    tau_eval : array_like
        Output points, monotone in the direction of integration; steps land
        on each of them exactly.
    tableau : Tableau
    rtol, atol : float
        Tolerances for the adaptive controller.
    max_step : float
        Largest ``|h|``.
    fixed_steps : int, optional
        Take this many equal steps between consecutive output points and
        skip error control.
    decay : callable, optional
        ``decay(tau_a, tau_b)`` multiplier of the linear part.
    error_norm : callable, optional
        ``error_norm(err, y_old, y_new, rtol, atol)``; the step is accepted
        when it returns at most 1.
    on_accept : callable, optional
        ``on_accept(tau, y)`` after every accepted step; may raise.

    Returns
    -------
    list of ndarray, IntegrationStats

    Raises
    ------
    StepFailure
        If the step size underflows or the step budget is exhausted.
    """
    tau_eval = np.atleast_1d(np.asarray(tau_eval, dtype=float))
    y = np.array(y0, dtype=complex)
    stats = IntegrationStats()
    out = []
    tau = float(tau0)
    if tau_eval.size == 0:
        return out, stats
    direction = np.sign(tau_eval[-1] - tau) or 1.0
    if np.any(direction * np.diff(np.concatenate([[tau], tau_eval])) < 0):
        raise ValueError("tau_eval must be monotone in the direction of integration")
    err_fn = error_norm or default_error_norm
    tab = tableau
    span = max(abs(tau_eval[-1] - tau), 1e-300)
    h = abs(first_step) if first_step else min(max_step, 0.01 * span)
    # the local error estimate scales like h^order
    exponent = -1.0 / tab.order
    for target in tau_eval:
        if fixed_steps is not None:
            n = int(fixed_steps)
            hh = (target - tau) / n if n > 0 else 0.0
            for _ in range(n):
                y, _err = _step(rhs, tab, tau, hh, y, decay, stats)
                tau += hh
                stats.accepted += 1
                if on_accept is not None:
                    on_accept(tau, y)
            tau = float(target)
            out.append(y.copy())
            continue
        while direction * (target - tau) > 1e-14 * max(1.0, abs(target)):
            remaining = abs(target - tau)
            hh = min(h, max_step, remaining)
            landing = hh >= remaining * (1 - 1e-12)
            if landing:
                hh = remaining
            y_new, err_vec = _step(rhs, tab, tau, direction * hh, y, decay, stats)
            err = err_fn(err_vec, y, y_new, rtol, atol)
            if not np.isfinite(err):
                err = np.inf
            if err <= 1.0:
                tau = float(target) if landing else tau + direction * hh
                y = y_new
                stats.accepted += 1
                if on_accept is not None:
                    on_accept(tau, y)
                factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** exponent))
                # a shortened landing step says little about the natural step size
                h = max(h, hh * factor) if landing and hh < min(h, max_step) else hh * factor
            else:
                stats.rejected += 1
                h = hh * max(0.1, 0.9 * err ** exponent if np.isfinite(err) else 0.1)
            if h < 1e-12 * span:
                raise StepFailure(f"step size underflow at tau={tau:.6g}; tolerance unreachable")
            if stats.accepted + stats.rejected > max_steps:
                raise StepFailure(f"step budget of {max_steps} exhausted at tau={tau:.6g}")
        tau = float(target)
        out.append(y.copy())
    return out, stats

