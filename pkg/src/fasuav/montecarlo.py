"""Seeded Monte-Carlo simulation of the FAS link and CI estimators.

Samples are produced in fixed-size batches.  Batch ``b`` always draws from
substream ``b`` of the root seed and writes into its own slice of a
preallocated array, so results do not depend on the number of workers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaincc

from .channel import ProductPowerDistribution, ds_distribution
from .correlation import build_jakes, eigen_decompose
from .errors import ParameterError
from .specfun import gaussian_q

__all__ = [
    "VARIANTS",
    "SimConfig",
    "EstimateWithCI",
    "default_workers",
    "rng_create",
    "rng_split",
    "sample_gamma_power",
    "sample_ig_power",
    "sample_ds_snr",
    "simulate_approx",
    "simulate_exact_copula",
    "CopulaPorts",
    "simulate",
    "estimate_outage",
    "estimate_ber",
    "estimate_capacity",
    "ks_distance",
]

VARIANTS = ("approximate_m_branch", "exact_copula")
MIN_SAMPLES = 10_000
DEFAULT_BATCH = 50_000
Z95 = 1.959963984540054


def default_workers():
    """Worker count from ``FASUAV_THREADS``, else the CPU count."""
    env = os.environ.get("FASUAV_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ParameterError(f"FASUAV_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ParameterError("FASUAV_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _auto_batch(samples):
    for b in range(min(samples, DEFAULT_BATCH), 0, -1):
        if samples % b == 0:
            return b
    return 1


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; ``batch=0`` picks the largest divisor <= 50000."""

    seed: int = 0
    samples: int = 2_000_000
    variant: str = "approximate_m_branch"
    batch: int = 0
    shared_shadowing: bool = False
    workers: int = 0

    def __post_init__(self):
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        if int(self.samples) != self.samples or self.samples < MIN_SAMPLES:
            raise ParameterError(f"samples must be an integer >= {MIN_SAMPLES}")
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}")
        if self.batch == 0:
            object.__setattr__(self, "batch", _auto_batch(int(self.samples)))
        if self.batch < 1 or self.samples % self.batch:
            raise ParameterError("batch must divide samples")
        if self.workers < 0:
            raise ParameterError("workers must be >= 0 (0 means automatic)")

    @property
    def n_batches(self):
        return self.samples // self.batch


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with a 95% interval ``[lower, upper]``.

    ``half_width_95`` is half the interval length.  For the score interval
    the interval is not centred on ``value``.
    """

    value: float
    half_width_95: float
    samples_used: int
    lower: float = math.nan
    upper: float = math.nan

    def __post_init__(self):
        if not self.half_width_95 >= 0:
            raise ParameterError("half width must be non-negative")
        if math.isnan(self.lower):
            object.__setattr__(self, "lower", self.value - self.half_width_95)
        if math.isnan(self.upper):
            object.__setattr__(self, "upper", self.value + self.half_width_95)

    def contains(self, x, widen=1.0):
        """``True`` if ``x`` lies in the interval scaled by ``widen`` about its centre."""
        mid = 0.5 * (self.lower + self.upper)
        half = 0.5 * (self.upper - self.lower) * widen
        return mid - half <= x <= mid + half


# -- random streams --------------------------------------------------------

def rng_create(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def rng_split(rng, stream_index):
    """Child generator keyed by ``stream_index``.

    Depends only on the parent's seed, never on how much of the parent
    has been consumed.
    """
    ss = rng.bit_generator.seed_seq
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (int(stream_index),),
                                   pool_size=ss.pool_size)
    return np.random.Generator(np.random.PCG64(child))


# -- constituent samplers ---------------------------------------------------

def sample_gamma_power(m, rng, size=None):
    """Unit-mean Gamma power (shape ``m``, rate ``m``)."""
    if not m > 0:
        raise ParameterError("Nakagami shape must be positive")
    return rng.standard_gamma(m, size) / m


def sample_ig_power(alpha, rng, size=None):
    """Unit-mean inverse-Gamma power ``(alpha - 1) / Gamma(alpha, 1)``."""
    if not alpha > 1:
        raise ParameterError("shadowing shape alpha must exceed 1")
    return (alpha - 1.0) / rng.standard_gamma(alpha, size)


def sample_ds_snr(params, avg_snr, rng, size=None):
    """``avg_snr * Y1^2 Y2^2 X1^2 X2^2``; draws in that order."""
    y1 = sample_gamma_power(params.m1, rng, size)
    y2 = sample_gamma_power(params.m2, rng, size)
    x1 = sample_ig_power(params.alpha1, rng, size)
    x2 = sample_ig_power(params.alpha2, rng, size)
    return (y1 * y2 * x1 * x2) * avg_snr


# -- batched drivers --------------------------------------------------------

def _run_batches(cfg, batch_fn):
    out = np.empty(cfg.samples)
    root = rng_create(cfg.seed)

    def work(b):
        out[b * cfg.batch:(b + 1) * cfg.batch] = batch_fn(rng_split(root, b), cfg.batch)

    workers = cfg.workers or default_workers()
    if workers == 1 or cfg.n_batches == 1:
        for b in range(cfg.n_batches):
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(cfg.n_batches)))
    return out


def simulate_approx(model, cfg):
    """``max_i lambda_i * gamma_i`` over ``M`` independent DS branches."""
    if cfg.variant != "approximate_m_branch":
        raise ParameterError("simulate_approx needs variant 'approximate_m_branch'")
    lam = model.eigenvalues

    def batch(rng, n):
        best = None
        for li in lam:
            g = sample_ds_snr(model.params, model.avg_snr, rng, n) * li
            best = g if best is None else np.maximum(best, g)
        return best

    return _run_batches(cfg, batch)


@lru_cache(maxsize=64)
def _nakagami_layer(m1, m2):
    return ProductPowerDistribution((m1, m2))


class CopulaPorts:
    """Per-port unit-mean SNRs of ``N`` Jakes-correlated DS ports.

    Quantiles scale with the mean, so one unit-mean table serves every
    average SNR.  Draw order per batch: real parts, imaginary parts, then
    (shared variant only) the two shadowing powers.
    """

    def __init__(self, jakes_cfg, params, shared_shadowing=False):
        w, u_vecs = eigen_decompose(build_jakes(jakes_cfg))
        self.mix = u_vecs * np.sqrt(np.clip(w, 0.0, None))[None, :]
        self.ports = jakes_cfg.ports
        self.params = params
        self.shared = shared_shadowing
        if shared_shadowing:
            self.dist = _nakagami_layer(params.m1, params.m2)
        else:
            self.dist = ds_distribution(params, 1.0)
        self.dist.table  # build once before threads start

    def draw(self, rng, n):
        zr = rng.standard_normal((n, self.ports))
        zi = rng.standard_normal((n, self.ports))
        # x = U Lambda^(1/2) z with z ~ CN(0, I); |x_n|^2 ~ Exp(1) per port
        e = 0.5 * ((zr @ self.mix.T) ** 2 + (zi @ self.mix.T) ** 2)
        g = self.dist.ppf_table(-np.expm1(-e), upper=np.exp(-e))
        if self.shared:
            x1 = sample_ig_power(self.params.alpha1, rng, n)
            x2 = sample_ig_power(self.params.alpha2, rng, n)
            g = g * (x1 * x2)[:, None]
        return g


def simulate_exact_copula(jakes_cfg, params, avg_snr, cfg):
    """Best of ``N`` correlated ports via a Gaussian copula on the Jakes matrix.

    The latent vector ``x = U Lambda^(1/2) z`` uses the full decomposition
    (negative round-off eigenvalues clamped to zero).  Each port maps
    ``|x_n|^2 ~ Exp(1)`` to a uniform and then through the exact DS
    inverse CDF.  With ``cfg.shared_shadowing`` only the Nakagami product
    goes through the copula and the two shadowing powers are drawn once per
    realization for all ports.
    """
    if cfg.variant != "exact_copula":
        raise ParameterError("simulate_exact_copula needs variant 'exact_copula'")
    sampler = CopulaPorts(jakes_cfg, params, cfg.shared_shadowing)

    def batch(rng, n):
        return sampler.draw(rng, n).max(axis=1) * avg_snr

    return _run_batches(cfg, batch)


def simulate(model, cfg, jakes_cfg=None):
    """Dispatch on ``cfg.variant``; the exact variant needs ``jakes_cfg``."""
    if cfg.variant == "approximate_m_branch":
        return simulate_approx(model, cfg)
    if jakes_cfg is None:
        raise ParameterError("exact_copula needs the port configuration")
    return simulate_exact_copula(jakes_cfg, model.params, model.avg_snr, cfg)


# -- estimators -------------------------------------------------------------

def _check(samples):
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise ParameterError("empty sample stream")
    return s


def _mean_ci(vals):
    n = vals.size
    if np.all(vals == vals[0]):
        return EstimateWithCI(float(vals[0]), 0.0, n)
    sd = float(np.std(vals, ddof=1)) if n > 1 else 0.0
    return EstimateWithCI(float(np.mean(vals)), Z95 * sd / math.sqrt(n), n)


def estimate_outage(samples, gamma_th):
    """Fraction below ``gamma_th`` with a Wilson score interval."""
    s = _check(samples)
    n = s.size
    k = np.count_nonzero(s < gamma_th)
    p = k / n
    z2 = Z95 * Z95
    denom = 1.0 + z2 / n
    mid = (p + z2 / (2 * n)) / denom
    half = Z95 / denom * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    # the score interval touches 0 (or 1) exactly when no (or every) sample fails
    lower = 0.0 if k == 0 else max(0.0, mid - half)
    upper = 1.0 if k == n else min(1.0, mid + half)
    return EstimateWithCI(p, half, n, lower, upper)


def estimate_ber(samples, mod):
    """Semi-analytic BER: mean of ``Gamma(beta, kappa g) / (2 Gamma(beta))``."""
    s = _check(samples)
    if mod.beta == 0.5:
        vals = gaussian_q(np.sqrt(2.0 * mod.kappa * s))
    else:
        vals = 0.5 * gammaincc(mod.beta, mod.kappa * s)
    return _mean_ci(np.asarray(vals, dtype=float))


def estimate_capacity(samples, bandwidth=1.0):
    """Mean of ``B log2(1 + g)`` with a normal interval."""
    s = _check(samples)
    return _mean_ci(bandwidth * np.log1p(s) / math.log(2.0))


def ks_distance(samples, cdf):
    """Kolmogorov sup distance between the ECDF of ``samples`` and ``cdf``."""
    s = np.sort(_check(samples))
    n = s.size
    f = np.asarray(cdf(s), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
