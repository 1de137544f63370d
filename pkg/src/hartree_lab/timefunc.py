"""Smooth functions of time on ``[1, T_max]`` stored as piecewise Chebyshev
interpolants in ``u = ln t``.

Power laws and their products are entire in ``u``, so panels of width 1/2
with 17 Lobatto nodes reproduce them to rounding. Integrals are taken
panel by panel from the Chebyshev coefficients of ``a(e^u) e^u``; the part
of ``int_t^inf`` beyond ``T_max`` comes from a power-law fit over the last
decade.
"""

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import TailFitFailure

__all__ = ["LogCheb", "DEFAULT_T_MAX"]

DEFAULT_T_MAX = 1e14
_ORDER = 16
_PANEL = 0.5
TAIL_FIT_RESIDUAL = 0.01


def _lobatto(order):
    return -np.cos(np.pi * np.arange(order + 1) / order)


def _bary_weights(order):
    w = (-1.0) ** np.arange(order + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


class LogCheb:
    """A real function of ``t`` in ``[1, t_max]`` sampled at log-spaced
    Chebyshev-Lobatto panels.

    Instances are built with :meth:`from_function` and combined pointwise
    (``+``, ``-``, ``*`` and scalar multiples) or through :meth:`map`; all
    such combinations share the panel layout, so they act on node values.
    """

    def __init__(self, values, t_max=DEFAULT_T_MAX, order=_ORDER, panel=_PANEL):
        self.t_max = float(t_max)
        self.order = int(order)
        u_max = np.log(self.t_max)
        self.n_panels = max(1, int(np.ceil(u_max / panel - 1e-9)))
        self.width = u_max / self.n_panels
        vals = np.asarray(values, dtype=float)
        if vals.shape != (self.n_panels, self.order + 1):
            raise ValueError("node value array has the wrong shape")
        self.values = vals
        self._tail_model = None

    # construction -------------------------------------------------------
    @staticmethod
    def node_times(t_max=DEFAULT_T_MAX, order=_ORDER, panel=_PANEL):
        u_max = np.log(t_max)
        n_panels = max(1, int(np.ceil(u_max / panel - 1e-9)))
        width = u_max / n_panels
        s = _lobatto(order)
        u = (np.arange(n_panels)[:, None] + 0.5 * (s[None, :] + 1.0)) * width
        return np.exp(u)

    @classmethod
    def from_function(cls, func, t_max=DEFAULT_T_MAX, order=_ORDER, panel=_PANEL):
        """Sample a vectorized ``func(t)`` at the nodes."""
        t = cls.node_times(t_max, order, panel)
        return cls(np.asarray(func(t), dtype=float).reshape(t.shape), t_max, order, panel)

    @classmethod
    def power(cls, exponent, coefficient=1.0, t_max=DEFAULT_T_MAX):
        return cls.from_function(lambda t: coefficient * t ** exponent, t_max)

    def _like(self, values):
        out = LogCheb.__new__(LogCheb)
        out.t_max, out.order = self.t_max, self.order
        out.n_panels, out.width = self.n_panels, self.width
        out.values = values
        out._tail_model = None
        return out

    @property
    def nodes(self):
        s = _lobatto(self.order)
        u = (np.arange(self.n_panels)[:, None] + 0.5 * (s[None, :] + 1.0)) * self.width
        return np.exp(u)

    def _check_layout(self, other):
        if (other.t_max, other.order, other.n_panels) != (self.t_max, self.order, self.n_panels):
            raise ValueError("LogCheb operands use different panel layouts")

    # pointwise algebra --------------------------------------------------
    def __add__(self, other):
        if isinstance(other, LogCheb):
            self._check_layout(other)
            return self._like(self.values + other.values)
        return self._like(self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, LogCheb):
            self._check_layout(other)
            return self._like(self.values - other.values)
        return self._like(self.values - float(other))

    def __rsub__(self, other):
        return self._like(float(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, LogCheb):
            self._check_layout(other)
            return self._like(self.values * other.values)
        return self._like(self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.values)

    def map(self, func):
        """Apply ``func(t, value)`` at every node."""
        return self._like(np.asarray(func(self.nodes, self.values), dtype=float))

    def times_power(self, exponent):
        return self._like(self.values * self.nodes ** exponent)

    # evaluation ---------------------------------------------------------
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 1.0 - 1e-12):
            raise ValueError("LogCheb functions are defined for t >= 1")
        flat = t.ravel()
        out = np.empty_like(flat)
        beyond = flat > self.t_max * (1 + 1e-12)
        if np.any(beyond):
            c, alpha = self._fit_tail_power()
            out[beyond] = c * flat[beyond] ** (-alpha)
        inner = ~beyond
        if np.any(inner):
            out[inner] = self._interp(np.log(np.clip(flat[inner], 1.0, self.t_max)))
        out = out.reshape(t.shape)
        return float(out) if out.ndim == 0 else out

    def _interp(self, u):
        idx = np.clip((u / self.width).astype(int), 0, self.n_panels - 1)
        s = 2.0 * (u / self.width - idx) - 1.0
        nodes = _lobatto(self.order)
        w = _bary_weights(self.order)
        diff = s[:, None] - nodes[None, :]
        exact = diff == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            k = w[None, :] / diff
            vals = self.values[idx]
            res = np.sum(k * vals, axis=1) / np.sum(k, axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            res[hit] = vals[hit][exact[hit]]
        return res

    # integration --------------------------------------------------------
    def _panel_integrals(self):
        """Per-panel cumulative integrals of ``a(t) dt`` at the nodes."""
        s = _lobatto(self.order)
        g = self.values * self.nodes * (0.5 * self.width)
        coef = cheb.chebfit(s, g.T, self.order)
        prim = cheb.chebint(coef, lbnd=-1.0)
        # chebval with 2-D coefficients evaluates every column at every point
        return cheb.chebval(s, prim)

    def cumulative(self):
        """``int_1^t a(s) ds`` as a new function."""
        part = self._panel_integrals()
        offsets = np.concatenate([[0.0], np.cumsum(part[:, -1])[:-1]])
        return self._like(part + offsets[:, None])

    def _fit_tail_power(self):
        if self._tail_model is None:
            t = self.nodes.ravel()
            v = self.values.ravel()
            sel = t >= self.t_max / 10.0
            tt, vv = t[sel], v[sel]
            if np.all(vv == 0.0):
                self._tail_model = (0.0, np.inf)
            else:
                sign = np.sign(vv[np.argmax(np.abs(vv))])
                if np.any(sign * vv <= 0.0):
                    raise TailFitFailure("integrand changes sign in the tail window")
                slope, icpt = np.polyfit(np.log(tt), np.log(sign * vv), 1)
                model = sign * np.exp(icpt) * tt ** slope
                resid = np.max(np.abs(model / vv - 1.0))
                if resid > TAIL_FIT_RESIDUAL:
                    raise TailFitFailure(
                        f"power-law tail fit residual {resid:.2%} exceeds {TAIL_FIT_RESIDUAL:.0%}")
                self._tail_model = (sign * np.exp(icpt), -slope)
        return self._tail_model

    def beyond_integral(self):
        """``int_{t_max}^inf a(s) ds`` from the fitted tail ``c s^-alpha``."""
        c, alpha = self._fit_tail_power()
        if c == 0.0:
            return 0.0
        if alpha <= 1.0:
            raise TailFitFailure(f"tail decays like t^-{alpha:.3f}; the integral diverges")
        return c * self.t_max ** (1.0 - alpha) / (alpha - 1.0)

    def tail(self):
        """``int_t^inf a(s) ds`` accumulated from the right to avoid cancellation."""
        part = self._panel_integrals()
        totals = part[:, -1]
        right = np.concatenate([np.cumsum(totals[::-1])[::-1][1:], [0.0]])
        vals = (totals[:, None] - part) + right[:, None] + self.beyond_integral()
        return self._like(vals)

    def total(self):
        """``int_1^inf a(s) ds``."""
        return float(self._panel_integrals()[:, -1].sum() + self.beyond_integral())
