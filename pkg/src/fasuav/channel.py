"""Double-shadowed SNR statistics and the M-branch FAS output SNR.

A single link's SNR is ``avg_snr * X1^2 * X2^2 * Y1^2 * Y2^2`` where the
``Y_j^2`` are unit-mean Gamma(m_j) powers and the ``X_j^2`` unit-mean
inverse-Gamma(alpha_j) powers (scale ``alpha_j - 1``).  Its PDF and CDF are
Meijer G-functions of ``scale * gamma`` with::

    scale = m1 * m2 / ((alpha1 - 1) * (alpha2 - 1) * avg_snr)

The ``(alpha_j - 1)`` factors make ``E[gamma] = avg_snr`` hold exactly for
unit-mean shadowing.
"""

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .correlation import EigenModel
from .errors import DomainError, ParameterError
from .meijer import GSpec, meijer_g
from .specfun import log_gamma

__all__ = [
    "DSParams",
    "BASELINE",
    "s_ds",
    "ProductPowerDistribution",
    "DoubleShadowed",
    "ds_distribution",
    "ds_pdf",
    "ds_cdf",
    "ds_sf",
    "ds_cdf_inverse",
    "FasModel",
    "fas_cdf",
    "fas_sf",
    "fas_pdf",
]

TABLE_DENSITY = 150  # nodes per decade of x
TABLE_SPAN = (1e-8, 1e6)  # initial span (times the mean), widened until
TABLE_TAIL = 1e-18  # both tail probabilities at the ends fall below this
TABLE_MAX_DECADES = 200
PPF_RTOL = 1e-10


@dataclass(frozen=True)
class DSParams:
    """Nakagami shapes ``m1, m2`` and inverse-Gamma shadowing shapes ``alpha1, alpha2``."""

    m1: float
    m2: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        for name in ("m1", "m2", "alpha1", "alpha2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.m1 <= 0 or self.m2 <= 0:
            raise ParameterError("Nakagami shapes must be positive")
        if self.alpha1 <= 1 or self.alpha2 <= 1:
            raise ParameterError("shadowing shapes must exceed 1 (unit-mean IG power)")

    @property
    def diversity(self):
        """Single-link diversity order ``min(alpha1, alpha2, m1, m2)``."""
        return min(self.alpha1, self.alpha2, self.m1, self.m2)


BASELINE = DSParams(2.1, 2.4, 2.1, 2.4)


def _lgamma(x):
    return float(np.real(log_gamma(complex(x))))


def s_ds(params):
    """Normalising constant ``1 / [Gamma(m1) Gamma(m2) Gamma(alpha1) Gamma(alpha2)]``."""
    return math.exp(-sum(_lgamma(v) for v in
                         (params.m1, params.m2, params.alpha1, params.alpha2)))


class ProductPowerDistribution:
    """Product of independent unit-mean Gamma and inverse-Gamma powers.

    ``X = mean * prod_j G_j * prod_k I_k`` with ``G_j ~ Gamma(m_j, rate m_j)``
    and ``I_k ~ InvGamma(alpha_k, scale alpha_k - 1)``.  Exposes the usual
    frozen-distribution methods (``pdf``, ``cdf``, ``sf``, ``ppf``, ``rvs``).
    """

    def __init__(self, gamma_shapes, ig_shapes=(), mean=1.0):
        self.gamma_shapes = tuple(float(m) for m in gamma_shapes)
        self.ig_shapes = tuple(float(a) for a in ig_shapes)
        self.mean = float(mean)
        if not self.gamma_shapes:
            raise ParameterError("need at least one Gamma factor")
        if any(m <= 0 for m in self.gamma_shapes):
            raise ParameterError("Gamma shapes must be positive")
        if any(a <= 1 for a in self.ig_shapes):
            raise ParameterError("inverse-Gamma shapes must exceed 1")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ParameterError("mean must be positive")
        g, i = self.gamma_shapes, self.ig_shapes
        self.norm = math.exp(-sum(_lgamma(v) for v in g + i))
        self.scale = math.prod(g) / math.prod(a - 1.0 for a in i) / self.mean
        top = tuple(1.0 - a for a in i)
        self.pdf_spec = GSpec(len(g), len(i), top, g)
        self.cdf_spec = GSpec(len(g), len(i) + 1, top + (1.0,), g + (0.0,))
        # survival: same integrand with the s = 0 pole moved to the left family
        self.sf_spec = GSpec(len(g) + 1, len(i), top + (1.0,), g + (0.0,))

    def __repr__(self):
        return (f"{type(self).__name__}(gamma_shapes={self.gamma_shapes}, "
                f"ig_shapes={self.ig_shapes}, mean={self.mean!r})")

    @staticmethod
    def _prep(x):
        xa = np.asarray(x, dtype=float)
        if np.any(np.isnan(xa)):
            raise DomainError("SNR argument is NaN")
        if np.any(xa < 0):
            raise DomainError("SNR argument must be non-negative")
        return xa

    @staticmethod
    def _out(xa, vals):
        return vals[()] if xa.ndim == 0 else vals

    def pdf(self, x):
        xa = self._prep(x)
        out = np.zeros(xa.shape)
        pos = (xa > 0) & np.isfinite(xa)
        if np.any(xa == 0):
            if min(self.gamma_shapes) <= 1:
                raise DomainError("density is singular at the origin when min(m) <= 1")
        if np.any(pos):
            z = self.scale * xa[pos]
            out[pos] = self.norm * meijer_g(self.pdf_spec, z) / xa[pos]
        return self._out(xa, np.clip(out, 0.0, None))

    def cdf(self, x):
        xa = self._prep(x)
        out = np.zeros(xa.shape)
        out[np.isposinf(xa)] = 1.0
        pos = (xa > 0) & np.isfinite(xa)
        if np.any(pos):
            out[pos] = self.norm * meijer_g(self.cdf_spec, self.scale * xa[pos])
        return self._out(xa, np.clip(out, 0.0, 1.0))

    def sf(self, x):
        xa = self._prep(x)
        out = np.ones(xa.shape)
        out[np.isposinf(xa)] = 0.0
        pos = (xa > 0) & np.isfinite(xa)
        if np.any(pos):
            out[pos] = self.norm * meijer_g(self.sf_spec, self.scale * xa[pos])
        return self._out(xa, np.clip(out, 0.0, 1.0))

    def log_cdf(self, x):
        """``log F`` accurate in both tails (uses ``sf`` above the median)."""
        xa = self._prep(x)
        f = np.atleast_1d(self.cdf(xa)).astype(float)
        out = np.full(f.shape, -np.inf)
        lo = (f > 0) & (f <= 0.5)
        out[lo] = np.log(f[lo])
        hi = f > 0.5
        if np.any(hi):
            out[hi] = np.log1p(-np.atleast_1d(self.sf(np.atleast_1d(xa)[hi])))
        out = out.reshape(xa.shape)
        return self._out(xa, out)

    def rvs(self, size, rng):
        """Draw samples with the factors generated in a fixed order."""
        out = np.full(size, self.mean)
        for m in self.gamma_shapes:
            out *= rng.standard_gamma(m, size) / m
        for a in self.ig_shapes:
            out *= (a - 1.0) / rng.standard_gamma(a, size)
        return out

    # -- lookup table ----------------------------------------------------

    @cached_property
    def table(self):
        """Log-spaced table of (log x, F, S, x f(x)).

        Starts from ``TABLE_SPAN * mean`` and widens by four decades at a
        time until the tail probabilities at both ends drop below
        ``TABLE_TAIL`` (heavy inverse-Gamma tails need a wide span).
        """
        step = 4.0 * math.log(10.0)
        lo = math.log(TABLE_SPAN[0] * self.mean)
        hi = math.log(TABLE_SPAN[1] * self.mean)
        limit = TABLE_MAX_DECADES * math.log(10.0)
        while float(self.cdf(math.exp(lo))) > TABLE_TAIL and hi - lo < limit:
            lo -= step
        while float(self.sf(math.exp(hi))) > TABLE_TAIL and hi - lo < limit:
            hi += step
        n = int(TABLE_DENSITY * (hi - lo) / math.log(10.0)) + 1
        lx = np.linspace(lo, hi, n)
        x = np.exp(lx)
        f = self.cdf(x)
        s = self.sf(x)
        xpdf = x * self.pdf(x)
        return lx, f, s, xpdf

    @cached_property
    def _splines(self):
        lx, f, s, xpdf = self.table
        # each half reaches one node past the median so the two inverse
        # splines overlap instead of leaving a gap around u = 1/2
        idx = np.arange(len(lx))
        med = int(np.searchsorted(f, 0.5))
        # tails far beyond TABLE_TAIL are never needed and lose relative
        # accuracy for light (Gamma-only) tails, so they are left out
        floor = TABLE_TAIL * 1e-12
        lower = (f > floor) & (idx <= med) & (xpdf > 0)
        upper = (s > floor) & (idx >= med - 1) & (xpdf > 0)
        # key on log F below the median and -log S above; both strictly
        # increasing in log x with derivatives x f / F and x f / S
        lo_y = np.log(f[lower])
        lo_d = xpdf[lower] / f[lower]
        up_y = -np.log(s[upper])
        up_d = xpdf[upper] / s[upper]
        return {
            "lo_fwd": CubicHermiteSpline(lx[lower], lo_y, lo_d),
            "lo_inv": CubicHermiteSpline(lo_y, lx[lower], 1.0 / lo_d),
            "up_fwd": CubicHermiteSpline(lx[upper], up_y, up_d),
            "up_inv": CubicHermiteSpline(up_y, lx[upper], 1.0 / up_d),
            "lo_range": (lx[lower][0], lx[lower][-1], lo_y[0], lo_y[-1]),
            "up_range": (lx[upper][0], lx[upper][-1], up_y[0], up_y[-1]),
        }

    def cdf_table(self, x):
        """Fast vectorised CDF from the lookup table (exact outside it)."""
        xa = self._prep(x)
        flat = np.atleast_1d(xa).astype(float).ravel()
        out = np.empty(flat.shape)
        sp = self._splines
        lx = np.log(np.where(flat > 0, flat, 1.0))
        lo0, lo1 = sp["lo_range"][:2]
        up0, up1 = sp["up_range"][:2]
        in_lo = (flat > 0) & (lx >= lo0) & (lx <= lo1)
        in_up = (flat > 0) & ~in_lo & (lx >= up0) & (lx <= up1)
        out[in_lo] = np.exp(sp["lo_fwd"](lx[in_lo]))
        out[in_up] = -np.expm1(-sp["up_fwd"](lx[in_up]))
        rest = ~(in_lo | in_up)
        if np.any(rest):
            out[rest] = np.atleast_1d(self.cdf(flat[rest]))
        out = out.reshape(np.shape(xa))
        return self._out(xa, out)

    def ppf_table(self, u, upper=None):
        """Vectorised inverse CDF by Hermite interpolation of the table.

        ``upper`` may carry ``1 - u`` computed without cancellation (as in
        copula sampling); it is used above the median.  Points outside the
        table fall back to :meth:`ppf`.
        """
        shape = np.shape(u)
        u = np.asarray(u, dtype=float).ravel()
        v = 1.0 - u if upper is None else np.asarray(upper, dtype=float).ravel()
        if np.any((u <= 0) | (u >= 1) | (v <= 0)):
            raise DomainError("probabilities must lie in (0, 1)")
        sp = self._splines
        out = np.empty(u.shape)
        lo_mask = u <= 0.5
        y_lo = np.log(np.where(lo_mask, u, 0.5))
        y_up = -np.log(np.where(lo_mask, 0.5, v))
        a0, a1 = sp["lo_range"][2:]
        b0, b1 = sp["up_range"][2:]
        ok_lo = lo_mask & (y_lo >= a0) & (y_lo <= a1)
        ok_up = ~lo_mask & (y_up >= b0) & (y_up <= b1)
        out[ok_lo] = np.exp(sp["lo_inv"](y_lo[ok_lo]))
        out[ok_up] = np.exp(sp["up_inv"](y_up[ok_up]))
        rest = np.flatnonzero(~(ok_lo | ok_up))
        for i in rest:
            out[i] = self._ppf_scalar(u[i], v[i])
        return out.reshape(shape) if shape else out

    # -- exact inverse ---------------------------------------------------

    def _ppf_scalar(self, u, v):
        lx, f, s, _ = self.table
        use_sf = u > 0.5
        target = v if use_sf else u

        def g(logx):
            x = math.exp(logx)
            # positive when x lies above the quantile
            if use_sf:
                return target - float(self.sf(x))
            return float(self.cdf(x)) - target

        if use_sf:
            idx = int(np.searchsorted(-s, -target))
        else:
            idx = int(np.searchsorted(f, target))
        if 0 < idx < len(lx):
            a, b = lx[idx - 1], lx[idx]
        else:
            warnings.warn(f"quantile {u!r} outside the lookup table; extending bracket",
                          RuntimeWarning, stacklevel=3)
            a = b = lx[0] if idx == 0 else lx[-1]
            step = math.log(10.0)
            while g(a) > 0:
                a -= step
            while g(b) < 0:
                b += step
        while b - a > PPF_RTOL:
            mid = 0.5 * (a + b)
            if g(mid) > 0:
                b = mid
            else:
                a = mid
        return math.exp(0.5 * (a + b))

    def ppf(self, u):
        """Inverse CDF by bracketing bisection (relative accuracy 1e-10)."""
        ua = np.asarray(u, dtype=float)
        if np.any(~((ua > 0) & (ua < 1))):
            raise DomainError("probability must lie strictly inside (0, 1)")
        flat = [self._ppf_scalar(float(x), 1.0 - float(x)) for x in ua.ravel()]
        out = np.array(flat).reshape(ua.shape)
        return self._out(ua, out)


class DoubleShadowed(ProductPowerDistribution):
    """Single-link double-shadowed SNR with average ``avg_snr`` (linear)."""

    def __init__(self, params, avg_snr):
        if not (avg_snr > 0 and math.isfinite(avg_snr)):
            raise ParameterError("average SNR must be positive")
        self.params = params
        super().__init__((params.m1, params.m2), (params.alpha1, params.alpha2), avg_snr)

    def __repr__(self):
        return f"DoubleShadowed({self.params!r}, avg_snr={self.mean!r})"

    def rvs(self, size, rng):
        # fixed draw order: Y1^2, Y2^2, X1^2, X2^2
        return super().rvs(size, rng)


@lru_cache(maxsize=256)
def ds_distribution(params, avg_snr):
    """Cached :class:`DoubleShadowed` instance per ``(params, avg_snr)``."""
    return DoubleShadowed(params, float(avg_snr))


def ds_pdf(gamma, params, avg_snr):
    return ds_distribution(params, avg_snr).pdf(gamma)


def ds_cdf(gamma, params, avg_snr):
    return ds_distribution(params, avg_snr).cdf(gamma)


def ds_sf(gamma, params, avg_snr):
    return ds_distribution(params, avg_snr).sf(gamma)


def ds_cdf_inverse(u, params, avg_snr):
    return ds_distribution(params, avg_snr).ppf(u)


@dataclass(frozen=True)
class FasModel:
    """End-to-end M-branch model: eigenvalue weights, channel, average SNR."""

    eigen: EigenModel
    params: DSParams
    avg_snr: float

    def __post_init__(self):
        object.__setattr__(self, "avg_snr", float(self.avg_snr))
        if not (self.avg_snr > 0 and math.isfinite(self.avg_snr)):
            raise ParameterError("average SNR must be positive")

    @property
    def eigenvalues(self):
        return np.array(self.eigen.eigenvalues)

    @property
    def M(self):
        return self.eigen.rank

    @property
    def branch(self):
        return ds_distribution(self.params, self.avg_snr)

    def with_avg_snr(self, avg_snr):
        return FasModel(self.eigen, self.params, avg_snr)

    def _branch_args(self, gamma):
        ga = ProductPowerDistribution._prep(gamma)
        flat = np.atleast_1d(ga).astype(float).ravel()
        lam = self.eigenvalues
        return ga, flat, (flat[None, :] / lam[:, None])

    def cdf(self, gamma):
        ga, flat, args = self._branch_args(gamma)
        per = np.asarray(self.branch.cdf(args.ravel())).reshape(args.shape)
        out = np.prod(per, axis=0).reshape(ga.shape)
        return out[()] if ga.ndim == 0 else out

    def cdf_table(self, gamma):
        """Table-interpolated CDF, for large sample arrays."""
        ga, flat, args = self._branch_args(gamma)
        per = np.asarray(self.branch.cdf_table(args.ravel())).reshape(args.shape)
        out = np.prod(per, axis=0).reshape(ga.shape)
        return out[()] if ga.ndim == 0 else out

    def log_cdf(self, gamma):
        ga, flat, args = self._branch_args(gamma)
        per = np.asarray(self.branch.log_cdf(args.ravel())).reshape(args.shape)
        out = np.sum(per, axis=0).reshape(ga.shape)
        return out[()] if ga.ndim == 0 else out

    def sf(self, gamma):
        """``1 - F`` without cancellation in the upper tail."""
        out = -np.expm1(self.log_cdf(gamma))
        return out

    def pdf(self, gamma):
        ga, flat, args = self._branch_args(gamma)
        if np.any(flat == 0):
            raise DomainError("FAS density is evaluated for gamma > 0 only")
        lam = self.eigenvalues
        F = np.asarray(self.branch.cdf(args.ravel())).reshape(args.shape)
        out = np.zeros(flat.shape)
        for j in range(len(lam)):
            others = np.prod(np.delete(F, j, axis=0), axis=0)
            live = others > 0
            if np.any(live):
                out[live] += others[live] * np.asarray(
                    self.branch.pdf(args[j][live])).ravel() / lam[j]
        out = out.reshape(ga.shape)
        return out[()] if ga.ndim == 0 else out


def fas_cdf(gamma, model):
    return model.cdf(gamma)


def fas_sf(gamma, model):
    return model.sf(gamma)


def fas_pdf(gamma, model):
    return model.pdf(gamma)
