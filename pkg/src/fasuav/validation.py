"""End-to-end acceptance checklist used by ``fasuav validate`` and the tests.

Every check returns a plain dict with ``id``, ``name``, ``passed``,
``measured``, ``tolerance`` and a ``details`` payload.  Nothing in a
check's output depends on wall-clock time or worker count, so the JSON
report is byte-reproducible for a fixed seed.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .channel import BASELINE, FasModel, ds_distribution
from .correlation import REFERENCE_RANK_TABLE, EigenModel, JakesConfig, jakes_eigen_model
from .meijer import GSpec, meijer_g, meijer_g_residue_series
from .metrics import BPSK, aber, aber_series_m2, capacity, diversity_order, fit_outage_slope, outage
from .montecarlo import (SimConfig, estimate_ber, estimate_capacity, estimate_outage, ks_distance,
                         simulate_approx, simulate_exact_copula)
from .quadrature import integrate
from .specfun import gamma_fn

__all__ = ["ValidationSettings", "CHECKS", "run_check", "run_all", "clean_json"]

QUICK_SAMPLES = 100_000
QUICK_WIDEN = 3.0


@dataclass(frozen=True)
class ValidationSettings:
    seed: int = 1
    quick: bool = False
    workers: int = 0

    @property
    def widen(self):
        return QUICK_WIDEN if self.quick else 1.0

    def samples(self, full):
        return QUICK_SAMPLES if self.quick else full

    def sim(self, full, variant="approximate_m_branch", offset=0, **kw):
        return SimConfig(seed=self.seed + offset, samples=self.samples(full), variant=variant,
                         workers=self.workers, **kw)


def db(x):
    return 10.0 ** (x / 10.0)


def clean_json(obj):
    """Recursively convert numpy scalars and map non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _result(cid, name, passed, measured, tolerance, **details):
    return {"id": cid, "name": name, "passed": bool(passed), "measured": measured,
            "tolerance": tolerance, "details": details}


def check_g_identities(st):
    zs = (0.01, 0.1, 1.0, 10.0, 50.0)
    exp_spec = GSpec(1, 0, (), (0.0,))
    alg_spec = GSpec(1, 1, (0.5,), (0.0,))
    worst = 0.0
    for z in zs:
        worst = max(worst, abs(meijer_g(exp_spec, z) / math.exp(-z) - 1.0))
        ref = gamma_fn(0.5) * (1.0 + z) ** -0.5
        worst = max(worst, abs(meijer_g(alg_spec, z) / ref - 1.0))
    spec = ds_distribution(BASELINE, 1.0).pdf_spec
    series_gap = 0.0
    for z in (0.05, 0.2, 0.5):
        mb = meijer_g(spec, z)
        rs = meijer_g_residue_series(spec, z, 400)
        series_gap = max(series_gap, abs(mb - rs) / abs(rs))
    passed = worst <= 1e-10 and series_gap <= 1e-7
    return _result(1, "G-function identity suite", passed,
                   {"identity_rel_err": worst, "mb_vs_series_rel": series_gap},
                   {"identity": 1e-10, "series": 1e-7})


def check_single_link(st):
    tol = 5e-3 * st.widen
    dists = {}
    one = EigenModel.from_eigenvalues([1.0])
    for i, x in enumerate((0.0, 10.0, 20.0)):
        model = FasModel(one, BASELINE, db(x))
        s = simulate_approx(model, st.sim(10_000_000, offset=10 + i))
        dists[x] = ks_distance(s, model.branch.cdf_table)
    worst = max(dists.values())
    return _result(2, "single-link oracle gate", worst <= tol, worst, tol,
                   ks_by_db={str(k): v for k, v in dists.items()})


def check_fas_cdf(st):
    tol = 5e-3 * st.widen
    dists = {}
    for i, (n, w) in enumerate(((2, 0.5), (4, 1.0))):
        model = FasModel(jakes_eigen_model(n, w), BASELINE, db(10.0))
        s = simulate_approx(model, st.sim(2_000_000, offset=20 + i))
        dists[f"M={model.M}"] = ks_distance(s, model.cdf_table)
    worst = max(dists.values())
    return _result(3, "FAS CDF gate", worst <= tol, worst, tol, ks=dists)


def check_normalization(st):
    model = FasModel(jakes_eigen_model(4, 1.0), BASELINE, db(10.0))
    c = math.log(model.avg_snr)
    mass, _ = integrate(lambda t: np.exp(t) * model.pdf(np.exp(t)), c - 30, c + 40,
                        abs_tol=1e-13, rel_tol=1e-12, breakpoints=(c - 5, c, c + 5))
    branch = model.branch
    mean, _ = integrate(lambda t: np.exp(2 * t) * branch.pdf(np.exp(t)), c - 30, c + 70,
                        abs_tol=1e-13, rel_tol=1e-12, breakpoints=(c - 5, c, c + 5, c + 20))
    mass_err = abs(mass - 1.0)
    mean_err = abs(mean / model.avg_snr - 1.0)
    passed = mass_err <= 1e-6 and mean_err <= 1e-4
    return _result(4, "normalization", passed, {"pdf_mass_err": mass_err, "mean_rel_err": mean_err},
                   {"pdf_mass": 1e-6, "mean_rel": 1e-4})


def check_metrics(st):
    widen = 1.5 * st.widen
    eig = jakes_eigen_model(4, 1.0)
    rows, passed = [], True
    for i, x in enumerate((5.0, 10.0, 15.0)):
        model = FasModel(eig, BASELINE, db(x))
        s = simulate_approx(model, st.sim(2_000_000, offset=30 + i))
        for name, ana, est in (("outage", outage(model, 1.0), estimate_outage(s, 1.0)),
                               ("aber", aber(model, BPSK), estimate_ber(s, BPSK)),
                               ("capacity", capacity(model), estimate_capacity(s, 1.0))):
            ok = est.contains(ana, widen)
            passed &= ok
            rows.append({"snr_db": x, "metric": name, "analytic": ana, "mc": est.value,
                         "lower": est.lower, "upper": est.upper, "inside": ok})
    n_in = sum(r["inside"] for r in rows)
    return _result(5, "metric cross-validation", passed, f"{n_in}/{len(rows)} inside",
                   {"ci_widen": widen}, rows=rows)


def check_rank_table(st):
    got = {}
    passed = True
    for (n, w), m in REFERENCE_RANK_TABLE:
        r = jakes_eigen_model(n, w).M
        got[f"N={n},W={w}"] = r
        passed &= r == m
    return _result(6, "rank table", passed, got,
                   {f"N={n},W={w}": m for (n, w), m in REFERENCE_RANK_TABLE})


def check_diversity(st):
    slopes, passed = {}, True
    for n, w in ((1, None), (2, 0.5), (4, 1.0)):
        eig = EigenModel.from_eigenvalues([1.0]) if n == 1 else jakes_eigen_model(n, w)
        model = FasModel(eig, BASELINE, 1.0)
        target = diversity_order(BASELINE, model.M).system_Gd
        slope = fit_outage_slope(model, 1.0, (40.0, 55.0))
        rel = abs(slope / target - 1.0)
        passed &= rel <= 0.10
        slopes[f"M={model.M}"] = {"fitted": slope, "Gd": target, "rel_err": rel}
    worst = max(v["rel_err"] for v in slopes.values())
    return _result(7, "diversity product law", passed, worst, 0.10, slopes=slopes)


def check_copula(st):
    # quick mode widens the 10% bar by three CI half-widths; the gap being
    # tested is systematic, so only the full-size run is conclusive
    jc = JakesConfig(4, 1.0)
    eig = jakes_eigen_model(4, 1.0)
    rows, passed = [], True
    for i, x in enumerate(np.arange(0.0, 30.0 + 1e-9, 2.5)):
        model = FasModel(eig, BASELINE, db(x))
        ana = outage(model, 1.0)
        if ana < 1e-2:
            continue
        s = simulate_exact_copula(jc, BASELINE, model.avg_snr,
                                  st.sim(2_000_000, "exact_copula", offset=40 + i))
        est = estimate_outage(s, 1.0)
        rel = abs(est.value / ana - 1.0)
        tol = 0.10 + (QUICK_WIDEN * est.half_width_95 / ana if st.quick else 0.0)
        passed &= rel <= tol
        rows.append({"snr_db": float(x), "analytic": ana, "exact_mc": est.value,
                     "rel_gap": rel, "tolerance": tol})
    worst = max(r["rel_gap"] for r in rows)
    return _result(8, "copula exact-sim correspondence", passed, worst,
                   max(r["tolerance"] for r in rows), rows=rows)


def check_aber_series(st):
    model = FasModel(jakes_eigen_model(2, 0.5), BASELINE, db(20.0))
    rep = aber_series_m2(model, BPSK, 20)
    passed = rep.consistent or rep.divergent
    outcome = "consistent" if rep.consistent else ("divergent" if rep.divergent else "neither")
    return _result(9, "ABER series diagnostic", passed, outcome, "consistent or divergent before n*=3",
                   report=rep.as_dict())


def check_determinism(st):
    model = FasModel(jakes_eigen_model(4, 1.0), BASELINE, db(10.0))
    runs = []
    for w in (1, 4, 8):
        cfg = SimConfig(seed=st.seed, samples=200_000, batch=10_000, workers=w)
        runs.append(simulate_approx(model, cfg).tobytes())
    same = all(r == runs[0] for r in runs)
    return _result(10, "batch determinism across workers", same, same, True, workers=[1, 4, 8])


CHECKS = {
    1: check_g_identities,
    2: check_single_link,
    3: check_fas_cdf,
    4: check_normalization,
    5: check_metrics,
    6: check_rank_table,
    7: check_diversity,
    8: check_copula,
    9: check_aber_series,
    10: check_determinism,
}


def run_check(cid, settings=ValidationSettings()):
    """Run one check; failures of any kind are recorded, never raised."""
    try:
        return clean_json(CHECKS[cid](settings))
    except Exception as exc:  # collected, not fail-fast
        return {"id": cid, "name": CHECKS[cid].__name__, "passed": False, "measured": None,
                "tolerance": None, "details": {"error": f"{type(exc).__name__}: {exc}"}}


def run_all(settings=ValidationSettings(), ids=None):
    ids = sorted(CHECKS) if ids is None else ids
    checks = [run_check(i, settings) for i in ids]
    return {"settings": asdict(settings) | {"workers": None},
            "checks": checks, "all_passed": all(c["passed"] for c in checks)}
