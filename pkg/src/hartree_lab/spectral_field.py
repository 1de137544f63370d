"""Fourier-coefficient fields on a periodic box and the operators acting on them.

Coefficient convention
----------------------
A field on the box ``[-L, L]^n`` with ``N`` modes per dimension stores the
samples of the unitary Fourier transform

    u_hat(xi) = (2 pi)^(-n/2) int exp(-i x.xi) u(x) dx

at the lattice ``xi_m = m pi / L``, ``-N/2 <= m < N/2``, in numpy FFT order.
Real-space samples sit at ``x_j = -L + j 2L/N``. With this convention the
lattice sums times ``dxi^n`` approximate the continuous ``L^2`` integrals,
and a single mode of amplitude ``A`` has norm ``|A| dxi^(n/2)``.

The product of two single modes ``A`` at ``xi_1`` and ``B`` at ``xi_2`` is a
single mode at ``xi_1 + xi_2`` of amplitude ``A B dxi^n (2 pi)^(-n/2)``, the
lattice version of ``(2 pi)^(-n/2) (u1_hat * u2_hat)``.

Nyquist modes (index ``-N/2`` in any dimension) are kept at zero by every
operation that could make them asymmetric.
"""

import functools
import json
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from . import _validation as val
from .errors import DilationOffGrid, WeightOverflow
from .gevrey_weights import Variant, WeightParams, eval_log_weight

__all__ = [
    "Grid",
    "SpectralField",
    "NormSpec",
    "k_norm",
    "y_norm",
    "split_low_high",
    "product",
    "fractional_multiplier",
    "g0",
    "gradient",
    "laplacian",
    "divergence",
    "apply_MDU",
    "j_weighted_norm",
    "physical_grid",
    "fourier_to_dual",
    "dual_to_fourier",
    "rho_derivative_split",
    "LEAKAGE_TOL",
]

LEAKAGE_TOL = 1e-8
_LOG_MAX = np.log(np.finfo(float).max)
FORMAT_NAME = "hartree-field"
FORMAT_VERSION = 1
_MAGIC = b"HFLD"
_HEADER = struct.Struct("<4sIIdI?")


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[-half_width, half_width]^n`` with ``modes_per_dim`` modes."""

    n: int
    half_width: float
    modes_per_dim: int

    def __post_init__(self):
        object.__setattr__(self, "n", val.check_int(self.n, "n", low=1, high=3))
        object.__setattr__(self, "half_width",
                           val.check_real(self.half_width, "half_width", low=0.0, low_open=True))
        m = val.check_int(self.modes_per_dim, "modes_per_dim", low=16)
        if m % 2:
            raise ValueError("modes_per_dim must be even")
        object.__setattr__(self, "modes_per_dim", m)
        # the |xi| = 1 split must fall between lattice shells
        if self.dxi > 0.25 + 1e-12:
            raise ValueError(
                f"frequency spacing {self.dxi:.4g} exceeds 1/4; widen the box")

    @property
    def dxi(self):
        return np.pi / self.half_width

    @property
    def dx(self):
        return 2.0 * self.half_width / self.modes_per_dim

    @property
    def xi_max(self):
        return self.dxi * (self.modes_per_dim // 2)

    @property
    def shape(self):
        return (self.modes_per_dim,) * self.n

    def with_modes(self, modes_per_dim):
        return Grid(self.n, self.half_width, modes_per_dim)

    def to_dict(self):
        return {"n": self.n, "half_width": self.half_width, "modes_per_dim": self.modes_per_dim}

    @property
    def kernel(self):
        return _kernel(self)


class _Kernel:
    """Cached lattice data and raw-array transforms for one grid."""

    def __init__(self, grid):
        self.grid = grid
        n, N = grid.n, grid.modes_per_dim
        self.m1 = np.fft.fftfreq(N, 1.0 / N)
        self.xi1 = self.m1 * grid.dxi
        self.x1 = -grid.half_width + grid.dx * np.arange(N)
        axes = np.meshgrid(*([self.xi1] * n), indexing="ij")
        self.xi = tuple(axes)
        self.ksq = sum(a * a for a in axes)
        self.knorm = np.sqrt(self.ksq)
        nyq1 = self.m1 == -(N // 2)
        nyq = np.zeros(grid.shape, dtype=bool)
        for d in range(n):
            shape = [1] * n
            shape[d] = N
            nyq |= nyq1.reshape(shape)
        self.nyquist = nyq
        self.keep = ~nyq
        self.sign = _sign_array(N, n)
        self.pad_modes = _pad_size(N)
        self.pad_sign = _sign_array(self.pad_modes, n)
        self.norm_const = (2.0 * np.pi) ** (-n / 2.0)

    def x_axes(self):
        return np.meshgrid(*([self.x1] * self.grid.n), indexing="ij")

    def to_real(self, c):
        g = self.grid
        scale = self.norm_const * g.dxi ** g.n * g.modes_per_dim ** g.n
        return scale * np.fft.ifftn(c * self.sign)

    def from_real(self, v):
        g = self.grid
        c = self.norm_const * g.dx ** g.n * self.sign * np.fft.fftn(v)
        c[self.nyquist] = 0.0
        return c

    def to_real_padded(self, c):
        g = self.grid
        M = self.pad_modes
        cp = _resize_centered(c, M)
        scale = self.norm_const * g.dxi ** g.n * M ** g.n
        return scale * np.fft.ifftn(cp * self.pad_sign)

    def from_real_padded(self, v):
        g = self.grid
        M = self.pad_modes
        dx = 2.0 * g.half_width / M
        cp = self.norm_const * dx ** g.n * self.pad_sign * np.fft.fftn(v)
        c = _resize_centered(cp, g.modes_per_dim)
        c[self.nyquist] = 0.0
        return c

    def product(self, a, b):
        return self.from_real_padded(self.to_real_padded(a) * self.to_real_padded(b))

    def conj(self, c):
        out = np.conj(c)
        for ax in range(c.ndim):
            out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
        return out

    def hermitian_part(self, c):
        return 0.5 * (c + self.conj(c))


def _sign_array(N, n):
    s1 = np.where(np.fft.fftfreq(N, 1.0 / N).astype(int) % 2 == 0, 1.0, -1.0)
    out = s1
    for _ in range(n - 1):
        out = np.multiply.outer(out, s1)
    return out


def _pad_size(N):
    M = -(-3 * N // 2)
    return M + (M % 2)


def _resize_centered(c, M):
    """Zero-pad or truncate FFT-ordered coefficients to ``M`` modes per axis."""
    N = c.shape[0]
    if M == N:
        return c.copy()
    shifted = np.fft.fftshift(c)
    if M > N:
        w = (M - N) // 2
        out = np.pad(shifted, [(w, w)] * c.ndim)
    else:
        w = (N - M) // 2
        out = shifted[tuple(slice(w, w + M) for _ in range(c.ndim))]
    return np.fft.ifftshift(out)


@functools.lru_cache(maxsize=64)
def _kernel(grid):
    return _Kernel(grid)


class SpectralField:
    """Immutable complex Fourier coefficients on a :class:`Grid`.

    Parameters
    ----------
    grid : Grid
    coeffs : array_like
        Shape ``grid.shape``, FFT order.
    reality : bool
        Mark the field as real-valued in space. Coefficients are projected
        onto the Hermitian-symmetric subspace on construction.
    """

    __slots__ = ("grid", "coeffs", "reality")

    def __init__(self, grid, coeffs, reality=False):
        c = np.array(coeffs, dtype=complex)
        if c.shape != grid.shape:
            raise ValueError(f"coeffs shape {c.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if reality:
            c = grid.kernel.hermitian_part(c)
        c.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "reality", bool(reality))

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, grid, reality=False):
        return cls(grid, np.zeros(grid.shape, dtype=complex), reality)

    @classmethod
    def from_real(cls, grid, values, reality=None):
        """Transform real-space samples on ``grid`` into a field.

        ``reality`` defaults to whether ``values`` has a real dtype.
        """
        v = np.asarray(values)
        if v.shape != grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {grid.shape}")
        if reality is None:
            reality = not np.iscomplexobj(v)
        if reality:
            v = np.real(v)
        return cls(grid, grid.kernel.from_real(v), reality)

    @classmethod
    def from_function(cls, grid, func, reality=None):
        """Sample ``func(*x_axes)`` on the grid and transform."""
        return cls.from_real(grid, func(*grid.kernel.x_axes()), reality)

    @classmethod
    def single_mode(cls, grid, index, amplitude=1.0):
        c = np.zeros(grid.shape, dtype=complex)
        c[tuple(index)] = amplitude
        return cls(grid, c)

    def _new(self, coeffs, reality=None):
        return SpectralField(self.grid, coeffs, self.reality if reality is None else reality)

    # real space ---------------------------------------------------------
    def to_real(self):
        v = self.grid.kernel.to_real(self.coeffs)
        return v.real if self.reality else v

    # arithmetic ---------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.reality and other.reality)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.reality and other.reality)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return product(self, scalar)
        s = complex(scalar)
        real = self.reality and s.imag == 0.0
        return SpectralField(self.grid, self.coeffs * s, real)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def conj(self):
        if self.reality:
            return self
        return SpectralField(self.grid, self.grid.kernel.conj(self.coeffs), False)

    def real_part(self):
        return SpectralField(self.grid, self.grid.kernel.hermitian_part(self.coeffs), True)

    def with_reality(self, reality):
        return SpectralField(self.grid, self.coeffs, reality)

    # diagnostics --------------------------------------------------------
    def l2_norm(self):
        """Lattice ``L^2`` norm ``(sum |c|^2 dxi^n)^(1/2)``."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * self.grid.dxi ** self.grid.n))

    def inner(self, other):
        """``<self, other> = sum conj(c1) c2 dxi^n``."""
        self._check(other)
        return complex(np.vdot(self.coeffs, other.coeffs) * self.grid.dxi ** self.grid.n)

    def hermitian_defect(self):
        """Largest ``|c(xi) - conj(c(-xi))|`` relative to the largest coefficient."""
        c = self.coeffs
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c - self.grid.kernel.conj(c))) / scale)

    def boundary_mass(self, fraction=0.05):
        """Relative ``L^2`` mass within ``fraction * 2L`` of the box faces."""
        v = np.abs(self.to_real()) ** 2
        total = v.sum()
        if total == 0:
            return 0.0
        L = self.grid.half_width
        edge = np.zeros(self.grid.shape, dtype=bool)
        for ax in self.grid.kernel.x_axes():
            edge |= np.abs(ax) > L * (1.0 - 2.0 * fraction)
        return float(np.sqrt(v[edge].sum() / total))

    def allclose(self, other, rtol=1e-12, atol=0.0):
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol))

    def __repr__(self):
        g = self.grid
        return (f"SpectralField(n={g.n}, L={g.half_width:g}, N={g.modes_per_dim}, "
                f"reality={self.reality}, l2={self.l2_norm():.4g})")

    # serialization ------------------------------------------------------
    def to_json(self):
        inter = np.empty(2 * self.coeffs.size)
        flat = self.coeffs.ravel()
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        return json.dumps({
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "grid": self.grid.to_dict(),
            "reality": self.reality,
            "coeffs": inter.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if data.get("format") != FORMAT_NAME or data.get("version") != FORMAT_VERSION:
            raise ValueError("not a hartree-field document of a supported version")
        grid = Grid(**data["grid"])
        inter = np.asarray(data["coeffs"], dtype=float)
        c = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
        return cls(grid, c, data["reality"])

    def to_bytes(self):
        g = self.grid
        head = _HEADER.pack(_MAGIC, FORMAT_VERSION, g.n, g.half_width, g.modes_per_dim,
                            self.reality)
        return head + self.coeffs.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob):
        magic, version, n, L, N, reality = _HEADER.unpack_from(blob)
        if magic != _MAGIC or version != FORMAT_VERSION:
            raise ValueError("not a hartree-field binary blob of a supported version")
        grid = Grid(n, L, N)
        data = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size)
        return cls(grid, data.reshape(grid.shape).astype(complex), reality)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    """Weight and regularity exponents for the ``K`` and ``Y`` norms."""

    weight: WeightParams
    k: float = 0.0
    ell: float = 0.0
    ell_low: float = 0.0

    def __post_init__(self):
        if self.weight.variant not in (Variant.F, Variant.F0):
            raise ValueError("norms use the F or F0 weight")
        object.__setattr__(self, "k", val.check_real(self.k, "k", low=0.0))
        object.__setattr__(self, "ell", val.check_real(self.ell, "ell"))
        object.__setattr__(self, "ell_low", val.check_real(self.ell_low, "ell_low", low=0.0))

    def with_rho(self, rho):
        return NormSpec(self.weight.with_rho(rho), self.k, self.ell, self.ell_low)

    def with_k(self, k):
        return NormSpec(self.weight, k, self.ell, self.ell_low)

    def with_ell(self, ell):
        return NormSpec(self.weight, self.k, ell, self.ell_low)


def _log_power(x, p):
    if p == 0:
        return np.zeros_like(x)
    with np.errstate(divide="ignore"):
        return p * np.log(x)


@functools.lru_cache(maxsize=256)
def _log_multiplier(grid, weight, p_high, p_low, bracket):
    """Log of ``w(xi) * |xi|^p`` (``<xi>^p`` when bracketed) on the lattice."""
    kn = grid.kernel.knorm
    logw = np.asarray(eval_log_weight(weight, kn))
    high = kn > 1.0
    if bracket == "none":
        base_high = _log_power(kn, p_high)
        base_low = _log_power(kn, p_low)
    elif bracket == "high":
        base_high = 0.5 * p_high * np.log1p(grid.kernel.ksq)
        base_low = _log_power(kn, p_low)
    elif bracket == "all":
        base_high = 0.5 * p_high * np.log1p(grid.kernel.ksq)
        base_low = base_high
    else:
        raise ValueError(f"unknown bracket mode {bracket!r}")
    out = logw + np.where(high, base_high, base_low)
    out.flags.writeable = False
    return out


def _weighted_norm(field, log_mult):
    """``(sum exp(2 log_mult) |c|^2 dxi^n)^(1/2)`` evaluated without overflow."""
    with np.errstate(divide="ignore"):
        logs = log_mult + np.log(np.abs(field.coeffs))
    top = np.max(logs)
    if not np.isfinite(top):
        return 0.0
    s = np.sum(np.exp(2.0 * (logs - top)))
    log_norm = top + 0.5 * np.log(s) + 0.5 * field.grid.n * np.log(field.grid.dxi)
    if log_norm > _LOG_MAX:
        raise WeightOverflow("weighted norm exceeds the double range; shrink rho or the grid")
    return float(np.exp(log_norm))


def k_norm(w, spec, bracket="none"):
    """Amplitude norm ``(|| |xi|^k f w_hat_> ||^2 + || f w_hat_< ||^2)^(1/2)``.

    ``bracket="high"`` replaces ``|xi|`` by ``<xi>`` on the high part,
    ``bracket="all"`` uses ``<xi>^k f`` on every mode.
    """
    return _weighted_norm(w, _log_multiplier(w.grid, spec.weight, spec.k, 0.0, bracket))


def y_norm(phi, spec):
    """Phase norm ``(|| |xi|^(ell+2) f phi_hat_> ||^2 + || |xi|^ell_low f phi_hat_< ||^2)^(1/2)``."""
    return _weighted_norm(
        phi, _log_multiplier(phi.grid, spec.weight, spec.ell + 2.0, spec.ell_low, "none"))


def rho_derivative_split(field, spec, kind="k"):
    """Split of ``d/d rho`` of the squared norm into high and low contributions.

    Returns ``(high, low)`` with ``high = 2 || |xi|^nu/2 (norm weight) c_> ||^2``.
    For the ``F0`` weight the low part has the same form; for the capped
    ``F`` weight the low part is ``2 || (norm weight) c_< ||^2`` since the
    exponent there is ``rho`` itself. The exact derivative is ``high + low``.
    """
    if kind == "k":
        log_mult = _log_multiplier(field.grid, spec.weight, spec.k, 0.0, "none")
    elif kind == "y":
        log_mult = _log_multiplier(field.grid, spec.weight, spec.ell + 2.0, spec.ell_low, "none")
    else:
        raise ValueError("kind must be 'k' or 'y'")
    kn = field.grid.kernel.knorm
    high = kn > 1.0
    nu = spec.weight.nu
    if spec.weight.variant is Variant.F0:
        extra = _log_power(kn, 0.5 * nu)
    else:
        extra = np.where(high, _log_power(kn, 0.5 * nu), 0.0)
    total = log_mult + extra
    hi = _weighted_norm(field, np.where(high, total, -np.inf))
    lo = _weighted_norm(field, np.where(high, -np.inf, total))
    return 2.0 * hi ** 2, 2.0 * lo ** 2


def split_low_high(u, threshold=1.0):
    """Partition ``u`` into modes with ``|xi| <= threshold`` and the rest."""
    mask = u.grid.kernel.knorm <= threshold
    low = np.where(mask, u.coeffs, 0.0)
    high = np.where(mask, 0.0, u.coeffs)
    return SpectralField(u.grid, low, u.reality), SpectralField(u.grid, high, u.reality)


# ---------------------------------------------------------------------------
# products and multipliers
# ---------------------------------------------------------------------------

def product(u1, u2):
    """Pointwise product, dealiased by 3/2 zero padding (exact for two factors)."""
    if u1.grid != u2.grid:
        raise ValueError("fields live on different grids")
    c = u1.grid.kernel.product(u1.coeffs, u2.coeffs)
    return SpectralField(u1.grid, c, u1.reality and u2.reality)


@functools.lru_cache(maxsize=32)
def _fractional_symbol(grid, exponent):
    kern = grid.kernel
    n = grid.n
    with np.errstate(divide="ignore"):
        sym = np.where(kern.knorm > 0, kern.knorm ** exponent, 0.0)
    # zero mode: mean of |xi|^e over the ball whose volume equals the cell volume
    radius = (grid.dxi ** n * gamma_fn(n / 2.0 + 1.0) / np.pi ** (n / 2.0)) ** (1.0 / n)
    sym.flat[0] = n / (n + exponent) * radius ** exponent
    sym.flags.writeable = False
    return sym


def fractional_multiplier(u, exponent):
    """Apply ``|nabla|^exponent`` for ``-n < exponent <= 0``.

    The zero mode receives the average of ``|xi|^exponent`` over the ball of
    volume ``dxi^n`` centred at the origin, which is exact for the
    one-dimensional cell.
    """
    exponent = val.check_real(exponent, "exponent", high=0.0)
    if exponent <= -u.grid.n:
        raise ValueError("exponent must exceed -n for a locally integrable symbol")
    if exponent == 0.0:
        return u
    return SpectralField(u.grid, u.coeffs * _fractional_symbol(u.grid, exponent), u.reality)


def g0(w1, w2, kappa, mu):
    """``kappa Re |nabla|^(mu-n) (w1 conj(w2))`` as a real field."""
    kappa = val.check_real(kappa, "kappa")
    mu = val.check_real(mu, "mu", low=0.0, high=w1.grid.n, low_open=True)
    if kappa == 0.0:
        return SpectralField.zeros(w1.grid, reality=True)
    prod = product(w1, w2.conj()).real_part()
    return fractional_multiplier(prod, mu - w1.grid.n) * kappa


def _zero_nyquist(grid, c):
    c = np.asarray(c)
    c[grid.kernel.nyquist] = 0.0
    return c


def gradient(u):
    """List of the ``n`` partial derivatives."""
    kern = u.grid.kernel
    return [SpectralField(u.grid, _zero_nyquist(u.grid, 1j * xi * u.coeffs), u.reality)
            for xi in kern.xi]


def laplacian(u):
    return SpectralField(u.grid, -u.grid.kernel.ksq * u.coeffs, u.reality)


def divergence(vector):
    out = gradient(vector[0])[0]
    for d in range(1, len(vector)):
        out = out + gradient(vector[d])[d]
    return out


# ---------------------------------------------------------------------------
# M, D, U and the J-weighted norm
# ---------------------------------------------------------------------------

def _unimodular_power(t, power):
    """``(i t)^power`` on the principal branch for ``t > 0``."""
    return t ** power * np.exp(0.5j * np.pi * power)


def physical_grid(grid, t, min_refine=1):
    """Box for ``u(t) = M(t) D(t) v`` with ``v`` on ``grid``.

    The half width is ``t L`` and the mode count is the smallest
    ``2^j N`` whose Nyquist frequency covers ``L + xi_max / t``, the local
    frequency of the chirp at the box edge plus the dilated bandwidth.
    """
    t = val.check_real(t, "t", low=0.0, low_open=True)
    L = grid.half_width
    need = 2.0 * L * (t * L + grid.xi_max) / np.pi
    N = grid.modes_per_dim * min_refine
    while N < need:
        N *= 2
    return Grid(grid.n, t * L, N)


def _chirp(grid, t, sign):
    axes = grid.kernel.x_axes()
    r2 = sum(a * a for a in axes)
    return np.exp(sign * 0.5j * r2 / t)


def _aligned(src, dst, scale):
    if src.n != dst.n:
        return False
    if abs(dst.half_width - scale * src.half_width) > 1e-12 * dst.half_width:
        return False
    ratio = max(src.modes_per_dim, dst.modes_per_dim) / min(src.modes_per_dim, dst.modes_per_dim)
    return ratio == int(ratio) and (int(ratio) & (int(ratio) - 1)) == 0


def _leak_check(value, total, what):
    if total > 0 and value > LEAKAGE_TOL * total:
        raise DilationOffGrid(
            f"dilation loses {value / total:.2e} of the L2 norm ({what})")


def _dilate(u, scale, prefactor, out_grid):
    """``g(x) = prefactor * u(x / scale)`` sampled on ``out_grid``."""
    src = u.grid
    kern = src.kernel
    total = u.l2_norm()
    n = src.n
    if _aligned(src, out_grid, scale):
        # exact lattice rescaling: g_hat(xi) = prefactor scale^n u_hat(scale xi)
        M = out_grid.modes_per_dim
        if M < src.modes_per_dim:
            kept = _resize_centered(_resize_centered(u.coeffs, M), src.modes_per_dim)
            kept[kern.nyquist] = 0.0
            # norm of the discarded modes, summed directly to avoid cancellation
            lost = np.sqrt(np.sum(np.abs(u.coeffs - kept) ** 2) * src.dxi ** n)
            _leak_check(lost, total, "spectral truncation")
        c = prefactor * scale ** n * _resize_centered(u.coeffs, M)
        c[out_grid.kernel.nyquist] = 0.0
        return SpectralField(out_grid, c, u.reality and np.isreal(prefactor))

    # general route: band-limited interpolation at the points x / scale
    reach = out_grid.half_width / scale
    if reach < src.half_width:
        vals = np.abs(u.to_real()) ** 2
        outside = np.zeros(src.shape, dtype=bool)
        for ax in kern.x_axes():
            outside |= np.abs(ax) > reach
        _leak_check(np.sqrt(vals[outside].sum() * src.dx ** n), total, "support leaves the box")
    band = out_grid.xi_max * scale
    if band < src.xi_max:
        high = kern.knorm >= band
        _leak_check(np.sqrt(np.sum(np.abs(u.coeffs[high]) ** 2) * src.dxi ** n), total,
                    "bandwidth exceeds the target grid")
    pts = out_grid.kernel.x1 / scale
    inside = np.abs(pts) <= src.half_width
    vals = u.coeffs * kern.norm_const * src.dxi ** n
    for axis in range(n):
        vals = _interp_axis(vals, kern.xi1, pts, inside, axis)
    return SpectralField.from_real(out_grid, prefactor * vals, reality=False)


def _interp_axis(c, xi1, pts, inside, axis, chunk=4096):
    """Contract FFT-ordered axis ``axis`` of ``c`` against ``exp(i xi y)``."""
    c = np.moveaxis(c, axis, -1)
    out = np.zeros(c.shape[:-1] + (pts.size,), dtype=complex)
    for lo in range(0, pts.size, chunk):
        p = pts[lo:lo + chunk]
        mat = np.exp(1j * np.outer(xi1, p)) * inside[lo:lo + chunk]
        out[..., lo:lo + chunk] = c @ mat
    return np.moveaxis(out, -1, axis)


def apply_MDU(u, t, which, out_grid=None):
    """Apply one of ``M, D, U`` or their inverses at time ``t``.

    ``M(t)`` multiplies by ``exp(i x^2 / 2t)`` in real space, ``D(t)``
    maps ``f`` to ``(it)^(-n/2) f(x/t)`` and ``U(t)`` is the Fourier
    multiplier ``exp(-i t |xi|^2 / 2)``. ``U`` and ``Uinv`` accept any real
    ``t``; the others need ``t > 0``.

    ``out_grid`` selects the target grid of ``D`` and ``Dinv`` (default: the
    input grid). When it is the input grid rescaled by ``t`` (or ``1/t``)
    with a power-of-two mode ratio, the map is an exact relabelling of
    coefficients.
    """
    which = str(which)
    if which in ("U", "Uinv"):
        t = val.check_real(t, "t")
        sign = -1.0 if which == "U" else 1.0
        mult = np.exp(sign * 0.5j * t * u.grid.kernel.ksq)
        return SpectralField(u.grid, u.coeffs * mult, u.reality and t == 0)
    t = val.check_real(t, "t", low=0.0, low_open=True)
    n = u.grid.n
    if which in ("M", "Minv"):
        v = u.grid.kernel.to_real(u.coeffs) * _chirp(u.grid, t, 1.0 if which == "M" else -1.0)
        return SpectralField(u.grid, u.grid.kernel.from_real(v), False)
    if which == "D":
        return _dilate(u, t, _unimodular_power(t, -n / 2.0), out_grid or u.grid)
    if which == "Dinv":
        return _dilate(u, 1.0 / t, _unimodular_power(t, n / 2.0), out_grid or u.grid)
    raise ValueError(f"unknown operator {which!r}")


def j_weighted_norm(u, t, spec, target_grid=None, bracket="high"):
    """``|| <J(t)>^k f(J(t)) u ||`` through ``J(t) = M(t) D(t) i nabla D(t)* M(t)*``.

    ``u`` lives on a physical grid; the norm is the ``K`` norm (with
    ``<xi>`` on the high part by default) of ``D(t)* M(t)* u`` on
    ``target_grid`` (default: ``u.grid`` contracted by ``t``).
    """
    if target_grid is None:
        target_grid = Grid(u.grid.n, u.grid.half_width / t, u.grid.modes_per_dim)
    v = apply_MDU(apply_MDU(u, t, "Minv"), t, "Dinv", out_grid=target_grid)
    return k_norm(v, spec, bracket=bracket)


def fourier_to_dual(u):
    """The Fourier transform of ``u`` viewed as a field on the dual box.

    Coefficient ``m`` of ``u`` becomes the real-space sample at
    ``y = m pi / L``; the dual box has half width ``N pi / (2L)``.
    """
    g = u.grid
    dual = Grid(g.n, g.modes_per_dim * np.pi / (2.0 * g.half_width), g.modes_per_dim)
    return SpectralField.from_real(dual, np.fft.fftshift(u.coeffs), reality=False)


def dual_to_fourier(w, grid):
    """Inverse of :func:`fourier_to_dual` onto ``grid``."""
    dual = Grid(grid.n, grid.modes_per_dim * np.pi / (2.0 * grid.half_width), grid.modes_per_dim)
    if w.grid != dual:
        raise ValueError("field does not live on the dual grid of the target")
    c = np.fft.ifftshift(w.grid.kernel.to_real(w.coeffs))
    c[grid.kernel.nyquist] = 0.0
    return SpectralField(grid, c)
