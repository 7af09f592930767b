"""Outage, average BER, ergodic capacity and diversity order of the FAS link."""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import s_ds
from .errors import DomainError, ParameterError
from .meijer import GSpec, meijer_g
from .quadrature import integrate
from .specfun import log_gamma

__all__ = [
    "ModulationSpec",
    "BPSK",
    "MODULATIONS",
    "CapacityConfig",
    "AsymptoticReport",
    "AberSeriesReport",
    "branch_constants",
    "outage",
    "outage_m2",
    "aber",
    "aber_from_cdf",
    "aber_series_m2",
    "moment_integral_m2",
    "capacity",
    "capacity_from_sf",
    "diversity_order",
    "default_slope_window",
    "fit_outage_slope",
    "asymptotic_report",
]

ABER_ABS_TOL = 1e-15
ABER_REL_TOL = 1e-7
CAP_TAIL_FLOOR = 1e-14


@dataclass(frozen=True)
class ModulationSpec:
    """Conditional error probability ``Gamma(beta, kappa g) / (2 Gamma(beta))``."""

    kappa: float
    beta: float
    label: str = ""

    def __post_init__(self):
        if not (self.kappa > 0 and self.beta > 0):
            raise ParameterError("kappa and beta must be positive")


BPSK = ModulationSpec(1.0, 0.5, "BPSK")
MODULATIONS = {
    "BPSK": BPSK,
    "BFSK": ModulationSpec(0.5, 0.5, "BFSK"),
    "DBPSK": ModulationSpec(1.0, 1.0, "DBPSK"),
    "NCBFSK": ModulationSpec(0.5, 1.0, "NCBFSK"),
}


@dataclass(frozen=True)
class CapacityConfig:
    bandwidth: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ParameterError("bandwidth must be positive")


@dataclass(frozen=True)
class AsymptoticReport:
    single_link_d: float
    system_Gd: float
    fitted_slope: float = math.nan
    fit_range: tuple = ()


def branch_constants(model):
    """``c_i`` such that branch ``i``'s CDF is ``S_DS G(c_i gamma)``."""
    return model.branch.scale / model.eigenvalues


def outage(model, gamma_th):
    """Probability that the selected-port SNR is below ``gamma_th``."""
    if not gamma_th > 0:
        raise DomainError("outage threshold must be positive")
    return float(model.cdf(gamma_th))


def outage_m2(model, gamma_th):
    """Dual-branch outage written out as ``S^2 G(c1 g) G(c2 g)``."""
    if model.M != 2:
        raise ParameterError("outage_m2 needs exactly two branches")
    c = branch_constants(model)
    spec = model.branch.cdf_spec
    g = meijer_g(spec, c * gamma_th)
    return float(s_ds(model.params) ** 2 * g[0] * g[1])


def aber_from_cdf(cdf, mod):
    """``kappa^beta / (2 Gamma(beta)) * int g^(beta-1) e^(-kappa g) F(g) dg``.

    The panel ``[0, 1/kappa]`` is integrated in ``t = g^beta`` which removes
    the ``g^(beta-1)`` singularity; the remainder is cut where the
    exponential weight is below ``e^-60``.
    """
    k, b = mod.kappa, mod.beta
    edge = 1.0 / k
    t_edge = edge ** b

    def head(t):
        g = t ** (1.0 / b)
        return np.exp(-k * g) * np.asarray(cdf(g), dtype=float) / b

    def tail(g):
        return g ** (b - 1.0) * np.exp(-k * g) * np.asarray(cdf(g), dtype=float)

    g_max = max(60.0, 2.0 * abs(b - 1.0) * math.log(60.0 / k + 1.0) + 60.0) / k
    v1, _ = integrate(head, 0.0, t_edge, abs_tol=ABER_ABS_TOL, rel_tol=ABER_REL_TOL)
    v2, _ = integrate(tail, edge, g_max, abs_tol=ABER_ABS_TOL, rel_tol=ABER_REL_TOL,
                      breakpoints=(2 * edge, 5 * edge, 15 * edge))
    lg = float(np.real(log_gamma(b)))
    return math.exp(b * math.log(k) - lg) / 2.0 * (v1 + v2)


def aber(model, mod=BPSK):
    """Average bit error rate through the CDF-weighted integral."""
    return aber_from_cdf(model.cdf, mod)


def capacity_from_sf(sf, bandwidth=1.0, knee=1e3, breakpoints=()):
    """``B / ln 2 * int_0^inf S(g) / (1 + g) dg`` with ``u = ln(1 + g)``.

    ``knee`` splits the range (SNR beyond which only the tail remains);
    the upper limit grows until ``S`` falls below ``CAP_TAIL_FLOOR``.
    """
    u_knee = math.log1p(knee)

    def f(u):
        return np.asarray(sf(np.expm1(u)), dtype=float)

    u_max = u_knee
    while float(f(np.array([u_max]))[0]) > CAP_TAIL_FLOOR:
        u_max += 5.0
        if u_max > 700:
            raise DomainError("survival function does not decay")
    bps = tuple(math.log1p(g) for g in breakpoints)
    total = 0.0
    for lo, hi in ((0.0, u_knee), (u_knee, u_max)):
        if hi > lo:
            inner = tuple(p for p in bps if lo < p < hi)
            v, _ = integrate(f, lo, hi, abs_tol=1e-12, rel_tol=1e-9, breakpoints=inner)
            total += v
    return bandwidth * total / math.log(2.0)


def capacity(model, cfg=CapacityConfig()):
    """Ergodic capacity in bit/s (bit/s/Hz for the default unit bandwidth)."""
    knee = 1e3 * model.avg_snr * model.eigenvalues[0]
    decades = tuple(model.avg_snr * 10.0 ** e for e in (-2, -1, 0, 1))
    return capacity_from_sf(model.sf, cfg.bandwidth, knee, decades)


def moment_integral_m2(model, rho, form="mellin"):
    """Closed-form ``int_0^inf g^(rho-1) F1(g) F2(g) dg`` for two branches.

    For ``-min(m) * 2 < rho < 0`` the integral converges and both forms can
    be compared against quadrature; for ``rho > 0`` the value is the
    analytic continuation in ``rho``.

    ``form="mellin"`` uses the Mellin-Parseval evaluation; ``form="literal"``
    uses the literal coefficient layout with ``a - rho`` applied to the
    first two entries of ``a``.
    """
    p = model.params
    c1, c2 = branch_constants(model)
    m1, m2, a1, a2 = p.m1, p.m2, p.alpha1, p.alpha2
    for attempt in range(3):
        r = rho + attempt * 1e-6
        try:
            if form == "mellin":
                spec = GSpec(5, 5,
                             (1 - a2, 1 - a1, 1.0, 1 - m1 - r, 1 - m2 - r, 1 - r),
                             (m1, m2, a2 - r, a1 - r, -r, 0.0))
            elif form == "literal":
                spec = GSpec(5, 5,
                             (1 - m1 - r, 1 - m2 - r, 1 - r, 1 - a2, 1 - a1, 1.0),
                             (1 - a2 - r, 1 - a1 - r, 1.0, m1, m2, 0.0))
            else:
                raise ValueError(f"unknown form {form!r}")
            break
        except ParameterError:
            continue
    else:
        raise ParameterError(f"moment integral coefficients collide for rho={rho}")
    g = float(meijer_g(spec, c2 / c1))
    return s_ds(p) ** 2 * math.exp(-r * math.log(c1)) * g


@dataclass
class AberSeriesReport:
    """Diagnostic record of the term-wise (Taylor) ABER series for M = 2."""

    moments: list
    terms: list
    partial_sums: list
    magnitudes: list
    n_star: int
    estimate: float
    growth_index: int
    divergent: bool
    quadrature: float
    consistent: bool
    literal_moments: list = field(default_factory=list)
    form: str = "mellin"

    def as_dict(self):
        return {
            "form": self.form,
            "n_star": self.n_star,
            "estimate": self.estimate,
            "growth_index": self.growth_index,
            "divergent_before_3": self.divergent,
            "quadrature": self.quadrature,
            "consistent": self.consistent,
            "partial_sums": self.partial_sums,
            "magnitudes": self.magnitudes,
            "moments": self.moments,
            "literal_moments": self.literal_moments,
        }


def aber_series_m2(model, mod=BPSK, n_max=20, form="mellin"):
    """Expand ``e^(-kappa g)`` in the ABER integral and sum term by term.

    The moment integrals diverge at infinity, so each closed-form ``I_n`` is
    an analytic continuation and the series is at best asymptotic.  The
    report gives all partial sums, the index ``n*`` of the smallest term,
    the optimally truncated estimate, and the quadrature ABER for
    comparison.  ``divergent`` flags ``n* < 3``.
    """
    if model.M != 2:
        raise ParameterError("the series diagnostic needs exactly two branches")
    c1, c2 = branch_constants(model)
    if abs(c1 - c2) <= 1e-9 * max(abs(c1), abs(c2)):
        raise ParameterError("branch constants coincide (c1 == c2)")
    k, b = mod.kappa, mod.beta
    pref = math.exp(b * math.log(k) - float(np.real(log_gamma(b)))) / 2.0
    moments, literal, terms, partial, mags = [], [], [], [], []
    acc = 0.0
    for n in range(n_max + 1):
        In = moment_integral_m2(model, b + n, form)
        try:
            Ip = moment_integral_m2(model, b + n, "literal" if form == "mellin" else "mellin")
        except (ParameterError, ArithmeticError):
            Ip = math.nan
        log_coef = n * math.log(k) - math.lgamma(n + 1)
        term = pref * (-1.0) ** n * math.exp(log_coef) * In
        if not math.isfinite(term):
            break
        acc += term
        moments.append(In)
        literal.append(Ip)
        terms.append(term)
        partial.append(acc)
        mags.append(abs(term))
    n_star = int(np.argmin(mags))
    growth = next((i for i in range(1, len(mags)) if mags[i] > mags[i - 1]), len(mags))
    estimate = partial[n_star]
    quad = aber(model, mod)
    consistent = abs(estimate - quad) <= mags[n_star] + 0.05 * quad
    return AberSeriesReport(
        moments=moments, terms=terms, partial_sums=partial, magnitudes=mags,
        n_star=n_star, estimate=estimate, growth_index=growth,
        divergent=n_star < 3, quadrature=quad, consistent=bool(consistent),
        literal_moments=literal, form=form)


def diversity_order(params, M):
    """Analytic diversity orders ``d = min(alpha, m)`` and ``G_d = M d``."""
    if M < 1:
        raise ParameterError("need at least one branch")
    d = params.diversity
    return AsymptoticReport(single_link_d=d, system_Gd=M * d)


def default_slope_window(d_times_m):
    """[40, 55] dB, moved 10 dB lower per extra 5 of ``d*M`` beyond 10."""
    shift = 0.0
    if d_times_m > 10:
        shift = 10.0 * math.ceil((d_times_m - 10.0) / 5.0)
    return (40.0 - shift, 55.0 - shift)


def fit_outage_slope(model, gamma_th=1.0, db_range=None, points=16):
    """Least-squares slope of log10(outage) against avg SNR in decades.

    Returned as a positive number comparable to ``G_d``.
    """
    if db_range is None:
        db_range = default_slope_window(model.params.diversity * model.M)
    db = np.linspace(db_range[0], db_range[1], points)
    logs = []
    for x in db:
        lp = float(model.with_avg_snr(10.0 ** (x / 10.0)).log_cdf(gamma_th))
        if lp / math.log(10.0) < -300:
            raise DomainError(
                f"outage underflows at {x:g} dB; lower the top of the dB window")
        logs.append(lp / math.log(10.0))
    if logs[0] > -3:
        raise ParameterError("window is not asymptotic: outage >= 1e-3 at its low end")
    slope = np.polyfit(db / 10.0, np.array(logs), 1)[0]
    return float(-slope)


def asymptotic_report(model, gamma_th=1.0, db_range=None, points=16):
    rep = diversity_order(model.params, model.M)
    if db_range is None:
        db_range = default_slope_window(rep.system_Gd)
    slope = fit_outage_slope(model, gamma_th, db_range, points)
    return AsymptoticReport(rep.single_link_d, rep.system_Gd, slope, tuple(db_range))
