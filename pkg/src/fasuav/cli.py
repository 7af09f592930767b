"""Command-line front end: ``fasuav <command> [options]``.

Every CSV starts with ``# config: <canonical JSON>`` followed by a header
row.  Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
3 validation gate failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .channel import DSParams, FasModel
from .correlation import DEFAULT_RANK_THRESHOLD, EigenModel, JakesConfig, build_jakes, eigen_decompose, \
    effective_rank
from .errors import ConvergenceError, FasUavError, ParameterError
from .metrics import MODULATIONS, CapacityConfig, aber, asymptotic_report, capacity, outage
from .montecarlo import (VARIANTS, SimConfig, estimate_ber, estimate_capacity, estimate_outage,
                         simulate_approx, simulate_exact_copula)
from .validation import ValidationSettings, run_all

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GATE = 0, 1, 2, 3
QUICK_SAMPLES = 100_000
FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b")


@dataclass
class RunConfig:
    """Flat configuration; every key may appear in the JSON config file."""

    m1: float = 2.1
    m2: float = 2.4
    alpha1: float = 2.1
    alpha2: float = 2.4
    ports: int = 4
    aperture: float = 1.0
    rank_threshold: float = DEFAULT_RANK_THRESHOLD
    explicit_M: int = None
    eigenvalues: list = None
    snr_db_start: float = 0.0
    snr_db_stop: float = 30.0
    snr_db_step: float = 2.5
    gamma_th_db: float = 0.0
    modulation: str = "BPSK"
    bandwidth: float = 1.0
    seed: int = 0
    samples: int = 2_000_000
    variant: str = "approximate_m_branch"
    shared_shadowing: bool = False
    m_set: list = field(default_factory=lambda: [0.9, 1.5, 2.1, 3.5])
    alpha_set: list = field(default_factory=lambda: [1.2, 1.8, 2.4, 4.0])
    ports_set: list = field(default_factory=lambda: [8, 16])
    aperture_set: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    fig_shape: float = 2.1
    fig_ports: int = 8
    fig_aperture: float = 1.5
    out: str = None

    def validate(self):
        if not self.snr_db_start < self.snr_db_stop:
            raise ParameterError("snr_db_start must be below snr_db_stop")
        if not self.snr_db_step > 0:
            raise ParameterError("snr_db_step must be positive")
        if self.modulation not in MODULATIONS:
            raise ParameterError(f"unknown modulation {self.modulation!r}; choose from {sorted(MODULATIONS)}")
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}")
        if self.eigenvalues is not None and self.explicit_M is not None:
            raise ParameterError("give either eigenvalues or explicit_M, not both")
        self.params
        JakesConfig(self.ports, self.aperture)
        CapacityConfig(self.bandwidth)
        return self

    @property
    def params(self):
        return DSParams(self.m1, self.m2, self.alpha1, self.alpha2)

    @property
    def snr_grid(self):
        n = int(np.floor((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9)) + 1
        return [round(self.snr_db_start + i * self.snr_db_step, 10) for i in range(n)]

    @property
    def gamma_th(self):
        return 10.0 ** (self.gamma_th_db / 10.0)

    def canonical(self):
        d = asdict(self)
        d.pop("out")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


def load_config(path):
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**raw)


def eigen_model(cfg, ports=None, aperture=None):
    jc = JakesConfig(ports or cfg.ports, aperture or cfg.aperture)
    w, _ = eigen_decompose(build_jakes(jc))
    em = effective_rank(w, cfg.rank_threshold)
    if cfg.eigenvalues is not None:
        # explicit branch weights replace the Jakes spectrum in the model
        return jc, EigenModel.from_eigenvalues(cfg.eigenvalues)
    if cfg.explicit_M is not None:
        m = int(cfg.explicit_M)
        if not 1 <= m <= len(w) or w[m - 1] <= 0:
            raise ParameterError(f"explicit_M={m} is not a valid rank for N={jc.ports}")
        em = EigenModel(tuple(w[:m]), em.threshold, tuple(np.clip(w, 0, None)))
    return jc, em


# -- CSV ----------------------------------------------------------------------

def fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if v != 0 and abs(v) < 1e-3:
        return f"{v:.10e}"
    return f"{v:.12g}"


class CsvWriter:
    """Line-buffered CSV with the config comment; flushed row by row."""

    def __init__(self, path, cfg, columns):
        self.fh = open(path, "w", encoding="utf-8", newline="") if path else sys.stdout
        self.own = bool(path)
        self.fh.write(f"# config: {cfg.canonical()}\n")
        self.fh.write(",".join(columns) + "\n")
        self.fh.flush()

    def row(self, values):
        self.fh.write(",".join(fmt(v) for v in values) + "\n")
        self.fh.flush()

    def close(self):
        if self.own:
            self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def sim_config(cfg, variant=None, offset=0, shared=None):
    return SimConfig(seed=cfg.seed + offset, samples=cfg.samples, variant=variant or cfg.variant,
                     shared_shadowing=cfg.shared_shadowing if shared is None else shared)


def simulate_for(cfg, model, jc, variant=None, offset=0, shared=None):
    sc = sim_config(cfg, variant, offset, shared)
    if sc.variant == "approximate_m_branch":
        return simulate_approx(model, sc)
    return simulate_exact_copula(jc, model.params, model.avg_snr, sc)


# -- commands -------------------------------------------------------------------

def cmd_eigen(cfg, args):
    jc, em = eigen_model(cfg)
    lam = em.full
    print(f"N={jc.ports} W={jc.aperture} threshold={em.threshold:g} M={em.M}")
    for i, v in enumerate(lam, 1):
        print(f"  lambda_{i} = {v:.10g}{'' if i <= em.M else '  (dropped)'}")
    if cfg.out:
        with CsvWriter(cfg.out, cfg, ["index", "eigenvalue", "relative", "retained"]) as w:
            for i, v in enumerate(lam, 1):
                w.row([i, v, v / lam[0], int(i <= em.M)])
    return EXIT_OK


METRIC_FUNCS = {
    "outage": (lambda cfg, m: outage(m, cfg.gamma_th),
               lambda cfg, s: estimate_outage(s, cfg.gamma_th)),
    "aber": (lambda cfg, m: aber(m, MODULATIONS[cfg.modulation]),
             lambda cfg, s: estimate_ber(s, MODULATIONS[cfg.modulation])),
    "capacity": (lambda cfg, m: capacity(m, CapacityConfig(cfg.bandwidth)),
                 lambda cfg, s: estimate_capacity(s, cfg.bandwidth)),
}


def cmd_metric(name, cfg, args):
    jc, em = eigen_model(cfg)
    ana_fn, est_fn = METRIC_FUNCS[name]
    cols = ["snr_db", "analytic"]
    if not args.no_sim:
        cols += ["mc_value", "mc_ci_half", "abs_rel_gap"]
    with CsvWriter(cfg.out, cfg, cols) as w:
        for i, x in enumerate(cfg.snr_grid):
            model = FasModel(em, cfg.params, 10.0 ** (x / 10.0))
            ana = ana_fn(cfg, model)
            row = [x, ana]
            if not args.no_sim:
                est = est_fn(cfg, simulate_for(cfg, model, jc, offset=i))
                gap = abs(ana - est.value) / abs(ana) if ana else float("nan")
                row += [est.value, est.half_width_95, gap]
            w.row(row)
    return EXIT_OK


def cmd_slope(cfg, args):
    _, em = eigen_model(cfg)
    model = FasModel(em, cfg.params, 1.0)
    rng = tuple(args.range) if args.range else None
    rep = asymptotic_report(model, cfg.gamma_th, rng)
    print(f"M={em.M} d={rep.single_link_d:g} G_d={rep.system_Gd:g} "
          f"fitted={rep.fitted_slope:.6g} over {rep.fit_range[0]:g}-{rep.fit_range[1]:g} dB")
    if cfg.out:
        with CsvWriter(cfg.out, cfg, ["M", "d", "Gd", "fitted_slope", "db_lo", "db_hi"]) as w:
            w.row([em.M, rep.single_link_d, rep.system_Gd, rep.fitted_slope, *rep.fit_range])
    return EXIT_OK


def figure_curves(fig, cfg):
    """``(label, RunConfig)`` per curve of the requested figure."""
    s = cfg.fig_shape
    if fig == "fig2a":
        return [(f"m={m:g}", replace(cfg, m1=m, m2=m, alpha1=s, alpha2=s)) for m in cfg.m_set]
    if fig == "fig2b":
        return [(f"alpha={a:g}", replace(cfg, m1=s, m2=s, alpha1=a, alpha2=a)) for a in cfg.alpha_set]
    if fig == "fig3a":
        return [(f"N={n}", replace(cfg, ports=n, aperture=cfg.fig_aperture)) for n in cfg.ports_set]
    if fig == "fig3b":
        return [(f"W={w:g}", replace(cfg, ports=cfg.fig_ports, aperture=w)) for w in cfg.aperture_set]
    raise ParameterError(f"unknown figure {fig!r}; choose from {FIGURES}")


def cmd_figure(cfg, args):
    curves = figure_curves(args.figure, cfg)
    out_dir = cfg.out or "."
    os.makedirs(out_dir, exist_ok=True)
    cols = ["snr_db", "M", "analytic"]
    if not args.no_sim:
        cols += ["approx_mc", "approx_ci_half", "exact_mc", "exact_ci_half",
                 "exact_shared_mc", "exact_shared_ci_half"]
    for label, c in curves:
        c.validate()
        jc, em = eigen_model(c)
        path = os.path.join(out_dir, f"{args.figure}_{label}.csv")
        with CsvWriter(path, c, cols) as w:
            for i, x in enumerate(c.snr_grid):
                model = FasModel(em, c.params, 10.0 ** (x / 10.0))
                row = [x, em.M, outage(model, c.gamma_th)]
                if not args.no_sim:
                    for variant, shared in (("approximate_m_branch", False), ("exact_copula", False),
                                            ("exact_copula", True)):
                        est = estimate_outage(simulate_for(c, model, jc, variant, i, shared), c.gamma_th)
                        row += [est.value, est.half_width_95]
                w.row(row)
        print(path)
    return EXIT_OK


def cmd_validate(cfg, args):
    st = ValidationSettings(seed=cfg.seed, quick=args.quick)
    report = run_all(st)
    out_dir = cfg.out or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "validate_report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with CsvWriter(os.path.join(out_dir, "validate_summary.csv"), cfg,
                   ["id", "name", "passed", "measured"]) as w:
        for c in report["checks"]:
            measured = json.dumps(c["measured"], sort_keys=True).replace(",", ";")
            w.row([c["id"], c["name"], "PASS" if c["passed"] else "FAIL", measured])
    for c in report["checks"]:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['id']:2d} {c['name']}: {c['measured']}")
    return EXIT_OK if report["all_passed"] else EXIT_GATE


# -- argument parsing -----------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override it)")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--no-sim", action="store_true", help="analytic columns only")
    common.add_argument("--out", help="output CSV path (directory for figure/validate)")
    common.add_argument("--quick", action="store_true", help=f"{QUICK_SAMPLES} samples")
    common.add_argument("--ports", type=int)
    common.add_argument("--aperture", type=float)
    common.add_argument("--threshold", type=float, dest="rank_threshold")
    common.add_argument("--M", type=int, dest="explicit_M")
    common.add_argument("--eigenvalues", type=float, nargs="+", metavar="LAMBDA",
                        help="branch weights used instead of the Jakes spectrum")
    common.add_argument("--variant", choices=VARIANTS)

    p = argparse.ArgumentParser(prog="fasuav", description="FAS UAV-to-ground link analysis")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("eigen", parents=[common], help="Jakes spectrum and effective rank")
    for name in METRIC_FUNCS:
        sub.add_parser(name, parents=[common], help=f"{name} sweep over average SNR")
    sp = sub.add_parser("slope", parents=[common], help="high-SNR diversity slope")
    sp.add_argument("--range", type=float, nargs=2, metavar=("LO_DB", "HI_DB"))
    fp = sub.add_parser("figure", parents=[common], help="CSV bundle for one figure")
    fp.add_argument("figure", choices=FIGURES)
    sub.add_parser("validate", parents=[common], help="run the acceptance checklist")
    return p


def resolve(args):
    cfg = load_config(args.config)
    keys = ("seed", "samples", "ports", "aperture", "rank_threshold", "explicit_M", "eigenvalues",
            "variant", "out")
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.quick and args.samples is None:
        cfg.samples = QUICK_SAMPLES
    return cfg.validate()


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve(args)
        if args.command == "eigen":
            return cmd_eigen(cfg, args)
        if args.command in METRIC_FUNCS:
            return cmd_metric(args.command, cfg, args)
        if args.command == "slope":
            return cmd_slope(cfg, args)
        if args.command == "figure":
            return cmd_figure(cfg, args)
        return cmd_validate(cfg, args)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except ConvergenceError as exc:
        print(f"fasuav: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FasUavError, ValueError, TypeError) as exc:
        print(f"fasuav: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
