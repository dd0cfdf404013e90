"""Command-line entry point.

Subcommands: audit, evolve, trace, verify, sequence, kmc, demo. Every run
writes its artifacts plus a manifest (config snapshot, seeds, versions)
into the output directory.

Exit codes: 0 success, 1 check/audit failure, 2 configuration error,
3 infeasible size.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, InfeasibleSizeError, IpslabError
from .lattice import Distribution, ProductMeasure, SpinConfig, Volume
from .models import DrivenClock, GlauberIsing, IndependentFlip, SoftFA, audit as run_audit
from .models import non_reversibility_witness
from .exact import build_generator, evolve, stationarity_residual
from .entropy import entropy_trace
from .kmc import empirical_cylinder, positive_mass_scan
from .sequences import (
    counterexample_alpha,
    growth_check,
    candidate_sequence,
    max_admissible_amplitude,
    verify_vanishing,
)
from .verify import PROFILES, run_all_checks
from . import artifacts as art
from . import config as cfgmod


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_audit(args) -> int:
    cfg = cfgmod.load_config(args.config)
    volume = cfgmod.parse_volume(cfg)
    model = cfgmod.parse_model(cfg, volume)
    ladder = tuple(int(k) for k in cfg.get("ladder", []))
    report = run_audit(model, volume, ladder=ladder)
    out = _out_dir(args)
    art.write_audit_report(out / "audit.json", report, meta={"model": model.name})
    art.write_manifest(out, "audit", cfg, {"seed": None})
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} audit of {model.name}: c_min={report.c_min!r} "
          f"sup_rate={report.sup_rate!r} C1={report.c1!r} C2={report.c2!r}")
    for cond in report.conditions:
        print(f"  {'ok ' if cond.passed else 'BAD'} {cond.name}: {cond.note}")
    return 0 if report.passed else 1


def cmd_evolve(args) -> int:
    cfg = cfgmod.load_config(args.config)
    volume = cfgmod.parse_volume(cfg)
    model = cfgmod.parse_model(cfg, volume)
    mu = cfgmod.parse_mu(cfg, volume) if "mu" in cfg else None
    nu0 = cfgmod.parse_nu0(cfg, volume, mu)
    if "t" not in cfg:
        raise ConfigError("config: missing required field 't'")
    t = float(cfg["t"])
    tol = float(cfgmod.runtime(cfg, "evolve_tol"))
    gen = build_generator(model, volume)
    result = evolve(nu0, gen, t, tol=tol)
    out = _out_dir(args)
    art.write_distribution(out / "distribution.bin", result, volume)
    if volume.n_states <= 4096:
        art.write_distribution_json(out / "distribution.json", result, volume)
    art.write_manifest(out, "evolve", cfg, {"seed": cfg.get("nu0", {}).get("seed")})
    print(f"evolved to t={t}: {result.weights.size} weights, "
          f"min={result.weights.min():.3e}, wrote {out / 'distribution.bin'}")
    return 0


def cmd_trace(args) -> int:
    cfg = cfgmod.load_config(args.config)
    volume = cfgmod.parse_volume(cfg)
    model = cfgmod.parse_model(cfg, volume)
    mu = cfgmod.parse_mu(cfg, volume)
    nu0 = cfgmod.parse_nu0(cfg, volume, mu)
    window = cfgmod.parse_window(cfg, volume)
    times = cfgmod.parse_times(cfg)
    tol = float(cfgmod.runtime(cfg, "evolve_tol"))
    trace = entropy_trace(model, volume, nu0, mu, window, times, evolve_tol=tol)
    out = _out_dir(args)
    meta = {"model": model.name, "d": volume.d, "side": volume.side, "q": volume.q,
            "window": list(window)}
    art.write_trace_csv(out / "trace.csv", trace, meta=meta)
    art.write_site_tables(out / "site_tables.json", trace, meta=meta)
    art.write_manifest(out, "trace", cfg, {"seed": cfg.get("nu0", {}).get("seed")})
    print(f"trace over {len(times)} grid points -> {out / 'trace.csv'}")
    print(f"  h(0)={trace.rows[0].h:.6e}  h(T)={trace.rows[-1].h:.6e}")
    return 0


def cmd_verify(args) -> int:
    cfg = cfgmod.load_config(args.config) if args.config else {}
    profile = cfgmod.runtime(cfg, "tolerance_profile", args.tolerance_profile)
    if profile not in PROFILES:
        raise ConfigError(f"unknown tolerance profile {profile!r}")
    seed = int(cfgmod.runtime(cfg, "seed", args.seed))
    threads = int(cfgmod.runtime(cfg, "threads", args.threads))
    results = run_all_checks(profile=profile, seed=seed, threads=threads)
    out = _out_dir(args)
    art.write_verify_report(out / "verify_report.json", results, profile, seed)
    art.write_manifest(out, "verify", cfg, {"seed": seed, "profile": profile})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: trials={r.trials} "
              f"max_slack={r.max_slack:.3e} tol={r.tolerance:.1e}")
    ok = all(r.passed for r in results)
    print(f"{'PASS' if ok else 'FAIL'} verify: {sum(r.passed for r in results)}"
          f"/{len(results)} checks")
    return 0 if ok else 1


def cmd_sequence(args) -> int:
    cfg = cfgmod.load_config(args.config)
    mode = cfg.get("mode")
    out = _out_dir(args)
    payload = {"mode": mode}
    if mode == "amplitude":
        res = max_admissible_amplitude(
            C=float(cfg["C"]), d=int(cfg["d"]), tail_tol=float(cfg.get("tail_tol", 1e-10))
        )
        payload["amplitude"] = res.to_json()
        print(f"a*(C={res.C}, d={res.d}) = {res.value!r} +/- {res.width/2:.2e}")
    elif mode == "vanishing":
        rep = verify_vanishing(
            C=float(cfg["C"]), d=int(cfg["d"]), deltas=cfg["deltas"],
            max_enumeration=int(cfg.get("max_enumeration", 10 ** 7)),
        )
        payload["vanishing"] = rep.to_json()
        print(f"{rep.kind}: {rep.detail}")
    elif mode == "shells":
        table = counterexample_alpha(d=int(cfg["d"]), a=float(cfg["a"]), n=int(cfg["n"]))
        art.write_shell_csv(out / "shell_table.csv", table)
        payload["shells"] = {
            "c_d": table.c_d,
            "bounds_hold": table.bounds_hold,
            "interior_sum": table.interior_sum,
            "interior_bound": table.interior_bound,
            "boundary_sqrt_sum": table.boundary_sqrt_sum,
            "boundary_bound": table.boundary_bound,
        }
        print(f"shells d={table.d} n={table.n}: bounds hold = {table.bounds_hold}")
    elif mode == "growth":
        seq = candidate_sequence(float(cfg["a"]), int(cfg["d"]), int(cfg["N"]))
        gc = growth_check(float(cfg["C"]), int(cfg["d"]), seq)
        payload["growth"] = {
            "holds": gc.holds,
            "min_slack": gc.min_slack,
            "first_violation": gc.first_violation(),
            "N": gc.n,
        }
        print(f"growth bound holds: {gc.holds} (min slack {gc.min_slack:.3e})")
    else:
        raise ConfigError(f"sequence: unknown mode {mode!r}")
    art.write_json(out / "sequence_report.json", art.SEQUENCE_SCHEMA, payload)
    art.write_manifest(out, "sequence", cfg, {"seed": None})
    return 0


def cmd_kmc(args) -> int:
    cfg = cfgmod.load_config(args.config)
    volume = cfgmod.parse_volume(cfg)
    model = cfgmod.parse_model(cfg, volume)
    window = cfgmod.parse_window(cfg, volume)
    seed = int(cfgmod.runtime(cfg, "seed", args.seed))
    threads = int(cfgmod.runtime(cfg, "threads", args.threads))
    mode = cfg.get("mode", "ensemble")
    out = _out_dir(args)
    if mode == "ensemble":
        init = SpinConfig(tuple(cfg["init"])) if "init" in cfg else SpinConfig.constant(volume, 0)
        table = empirical_cylinder(
            model, volume, init, float(cfg["t"]), window,
            int(cfg["n_traj"]), seed, threads=threads,
        )
        art.write_cylinder_csv(out / "cylinder_estimates.csv", table,
                               meta={"model": model.name})
        print(f"{table.n_traj} trajectories -> {out / 'cylinder_estimates.csv'}")
    elif mode == "scan":
        scan = positive_mass_scan(
            model, volume, window,
            tau=float(cfg["tau"]), t_grid=cfg["t_grid"], master_seed=seed,
            n_traj=int(cfg.get("n_traj", 4000)),
            n_random_inits=int(cfg.get("n_random_inits", 2)),
            method=cfg.get("method", "auto"), threads=threads,
        )
        art.write_mass_floor_csv(out / "mass_floor.csv", scan, meta={"model": model.name})
        print(f"floor C(tau={scan.tau}) = {scan.empirical_floor!r} "
              f"-> {out / 'mass_floor.csv'}")
    else:
        raise ConfigError(f"kmc: unknown mode {mode!r}")
    art.write_manifest(out, "kmc", cfg, {"seed": seed})
    return 0


# -- canned demo --------------------------------------------------------------------


def cmd_demo(args) -> int:
    """Canned scenarios: the non-reversible product-stationary clock trace,
    the Glauber contrast, a positive-mass scan, and the shell tables."""
    out = _out_dir(args)
    fast = args.fast
    seed = int(args.seed)
    summary = {}

    # 1. driven clock on a d=1 torus: non-reversible, uniform product stationary
    v1 = Volume(d=1, side=5, q=3)
    clock = DrivenClock(q=3, eps=0.5, base=0.2)
    mu1 = ProductMeasure.uniform(v1)
    w1 = v1.centered_box(1)
    times = list(np.linspace(0.0, 3.0, 7 if fast else 13))
    nu0 = ProductMeasure.from_single([0.7, 0.2, 0.1], v1.n_sites).expand()
    tr = entropy_trace(clock, v1, nu0, mu1, w1, times)
    meta = {"model": clock.name, "d": 1, "side": 5, "q": 3, "window": list(w1),
            "scenario": "clock-relaxation"}
    art.write_trace_csv(out / "trace_clock.csv", tr, meta=meta)
    art.write_site_tables(out / "site_tables_clock.json", tr, meta=meta)
    wit = non_reversibility_witness(clock, v1)
    summary["clock"] = {
        "stationarity_residual": stationarity_residual(clock, v1, mu1),
        "cycle_ratio": wit.ratio,
        "h_final": tr.rows[-1].h,
    }

    # 2. the same model started at mu: every diagnostic column is zero
    tr0 = entropy_trace(clock, v1, mu1.expand(), mu1, w1, times)
    meta0 = dict(meta, scenario="clock-stationary-start")
    art.write_trace_csv(out / "trace_stationary.csv", tr0, meta=meta0)
    art.write_site_tables(out / "site_tables_stationary.json", tr0, meta=meta0)

    # 3. soft-FA in d=2: heatmap-friendly site tables
    side = 3 if fast else 4
    v2 = Volume(d=2, side=side, q=2)
    fa = SoftFA(eps=0.5, p_one=0.3)
    mu2 = ProductMeasure.bernoulli(v2, 0.3)
    w2 = v2.centered_box(1)
    nu2 = ProductMeasure.bernoulli(v2, 0.7).expand()
    times2 = list(np.linspace(0.0, 2.0, 5 if fast else 9))
    tr2 = entropy_trace(fa, v2, nu2, mu2, w2, times2)
    meta2 = {"model": fa.name, "d": 2, "side": side, "q": 2, "window": list(w2),
             "scenario": "soft-fa-2d"}
    art.write_trace_csv(out / "trace_softfa2d.csv", tr2, meta=meta2)
    art.write_site_tables(out / "site_tables_softfa2d.json", tr2, meta=meta2)

    # 4. product-stationarity contrast across the zoo
    v3 = Volume(d=1, side=4, q=2)
    residuals = {
        "independent-flip": stationarity_residual(
            IndependentFlip((0.3, 0.7)), v3, ProductMeasure.bernoulli(v3, 0.7)
        ),
        "soft-fa": stationarity_residual(
            SoftFA(eps=0.2, p_one=0.3), v3, ProductMeasure.bernoulli(v3, 0.3)
        ),
        "driven-clock": summary["clock"]["stationarity_residual"],
        "glauber-ising-beta0.5-vs-uniform": stationarity_residual(
            GlauberIsing(beta=0.5), v3, ProductMeasure.uniform(v3)
        ),
    }
    art.write_json(out / "residuals.json", "ipslab.residuals.v1", {"residuals": residuals})
    summary["residuals"] = residuals

    # 5. positive-mass floor scans: a healthy model and the frozen control
    v4 = Volume(d=1, side=3, q=2)
    scan = positive_mass_scan(
        IndependentFlip.uniform(2), v4, (v4.site_of((0,)),), 0.5,
        [0.5, 1.0, 2.0, 4.0], seed, n_traj=500 if fast else 4000, method="kmc",
        threads=args.threads,
    )
    art.write_mass_floor_csv(out / "mass_floor.csv", scan,
                             meta={"model": "independent-flip"})
    scan_frozen = positive_mass_scan(
        SoftFA(eps=0.0, p_one=0.5), v4, (v4.site_of((0,)),), 0.5,
        [0.5, 1.0], seed + 1, n_traj=200 if fast else 1000, method="kmc",
    )
    art.write_mass_floor_csv(out / "mass_floor_frozen.csv", scan_frozen,
                             meta={"model": "frozen-fa", "negative_control": True})
    summary["mass_floor"] = {
        "healthy": scan.empirical_floor,
        "frozen_control": scan_frozen.empirical_floor,
    }

    # 6. sequence-lemma artifacts
    amp = max_admissible_amplitude(C=1.0, d=3, tail_tol=1e-10)
    shells = counterexample_alpha(3, amp.value, 20 if fast else 50)
    art.write_shell_csv(out / "shell_table_d3.csv", shells)
    gc = growth_check(1.0, 3, candidate_sequence(amp.value, 3, 10 ** 4 if fast else 10 ** 5))
    art.write_json(
        out / "sequence_report.json",
        art.SEQUENCE_SCHEMA,
        {
            "mode": "demo",
            "amplitude": amp.to_json(),
            "growth": {"holds": gc.holds, "min_slack": gc.min_slack, "N": gc.n},
            "shells": {"c_d": shells.c_d, "bounds_hold": shells.bounds_hold},
        },
    )
    summary["sequence"] = {"a_star": amp.value, "growth_holds": gc.holds}

    art.write_json(out / "demo_summary.json", "ipslab.demo-summary.v1", summary)
    art.write_manifest(out, "demo", {"fast": fast}, {"seed": seed})
    print(f"demo artifacts written to {out}")
    for name in sorted(p.name for p in out.iterdir()):
        print(f"  {name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipslab",
        description="Interacting-particle-system laboratory: exact dynamics, "
                    "kMC, and certified entropy diagnostics on finite tori.",
    )
    parser.add_argument("--version", action="version", version=f"ipslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="JSON run configuration")
        p.add_argument("--out-dir", default="ipslab-out", help="artifact directory")
        p.add_argument("--seed", type=int, default=cfgmod.DEFAULTS["seed"])
        p.add_argument("--threads", type=int, default=cfgmod.DEFAULTS["threads"])
        p.add_argument("--tolerance-profile", choices=sorted(PROFILES),
                       default=cfgmod.DEFAULTS["tolerance_profile"])

    common(sub.add_parser("audit", help="run the rate-conditions audit"))
    common(sub.add_parser("evolve", help="evolve a distribution exactly"))
    common(sub.add_parser("trace", help="entropy diagnostics along a grid"))
    common(sub.add_parser("verify", help="run every registered certification check"),
           config_required=False)
    common(sub.add_parser("sequence", help="growth-bound dichotomy tools"))
    common(sub.add_parser("kmc", help="stochastic ensembles and mass scans"))
    demo = sub.add_parser("demo", help="canned scenario suite")
    common(demo, config_required=False)
    demo.add_argument("--fast", action="store_true", help="smaller canned runs")
    return parser


HANDLERS = {
    "audit": cmd_audit,
    "evolve": cmd_evolve,
    "trace": cmd_trace,
    "verify": cmd_verify,
    "sequence": cmd_sequence,
    "kmc": cmd_kmc,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleSizeError as exc:
        print(f"infeasible size: {exc}", file=sys.stderr)
        return 3
    except IpslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
