"""Batch command-line front end.

Subcommands:

    coeffs    Lipschitz weight table as CSV (rows k, columns i, plus diagonal)
    simulate  one trajectory as CSV
    bounds    tail-bound curves as CSV for requested kinds
    verify    empirical tails vs theoretical bounds; JSON + CSV + manifest
    oracle    exact small-instance martingale decomposition checks
    report    human-readable summary, summary CSV and figures from stored runs

Exit codes: 0 success, 1 domain errors (certificate violations, out-of-domain
bounds, inapplicable bound/family pairs, oracle violations), 2 configuration
or I/O errors (argparse uses 2 for usage errors as well).
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import bounds as tb
from . import montecarlo as mc
from . import oracle as orc
from . import reporting as rep
from . import rng
from .errors import ConfigError, DomainError
from .functionals import FunctionalSpec
from .processes import (
    GDescription,
    ProcessSpec,
    c2_supported,
    contraction_certificate,
    simulate,
)
from .profiles import ContractionProfile, build_lipschitz_table
from .serde import SCHEMA_VERSION, digest, load_json, require_keys

_THREADS_ENV = "LIPTAIL_THREADS"


# ---------------------------------------------------------------------------
# shared parsing helpers


def parse_profile(text: str) -> ContractionProfile:
    """zeros | geometric:first,ratio | explicit:a1,a2,... | power:constant,exponent"""
    if text == "zeros":
        return ContractionProfile.zeros()
    try:
        name, _, rest = text.partition(":")
        parts = [float(v) for v in rest.split(",")] if rest else []
        if name == "geometric" and len(parts) == 2:
            return ContractionProfile.geometric(parts[0], parts[1])
        if name == "explicit" and parts:
            return ContractionProfile.from_coeffs(parts)
        if name == "power" and len(parts) == 2:
            return ContractionProfile.power(parts[0], parts[1])
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise ConfigError(f"cannot parse profile spec {text!r}") from exc
    raise ConfigError(f"cannot parse profile spec {text!r}")


def resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get(_THREADS_ENV)
        value = int(env) if env else 1
    if value == 0:
        value = os.cpu_count() or 1
    if value < 0:
        raise ConfigError("--threads must be >= 0")
    return value


def _vec(value, n, name):
    if isinstance(value, (int, float)):
        return (float(value),) * n
    out = tuple(float(v) for v in value)
    if len(out) != n:
        raise ConfigError(f"{name} must be a scalar or a length-{n} list")
    return out


# ---------------------------------------------------------------------------
# dominating constants: explicit or estimated


_ESTIMATE_KIND = {
    "bernstein": "bernstein",
    "hoeffding": "hoeffding",
    "cramer": "cramer",
    "semiexp_g": "semiexp_g",
    "semiexp_h": "semiexp_h",
    "subgaussian": "subgaussian",
    "fuk_nagaev_pth": "pth_moment",
    "von_bahr_esseen": "pth_moment",
    "weak_von_bahr_esseen": "weak_pth",
    "mcdiarmid": "mcdiarmid",
    "rosenthal_weak": "rosenthal",
}

_DEFAULT_P = {"fuk_nagaev_pth": 3.0, "von_bahr_esseen": 1.5,
              "weak_von_bahr_esseen": 1.5, "semiexp_g": 0.5, "rosenthal_weak": 2.0}


def dominating_from_constants(kind: str, c: dict, n: int):
    builders = {
        "bernstein": lambda: tb.BernsteinSpec(m=float(c["m"]), v_k=_vec(c["v_k"], n, "v_k")),
        "hoeffding": lambda: tb.BoundedSpec(m_k=_vec(c["m_k"], n, "m_k"),
                                            v_k=_vec(c["v_k"], n, "v_k")),
        "cramer": lambda: tb.CramerSpec(t0=float(c["t0"]), k_k=_vec(c["k_k"], n, "k_k")),
        "semiexp_g": lambda: tb.SemiexpGSpec(p=float(c["p"]), k_k=_vec(c["k_k"], n, "k_k")),
        "semiexp_h": lambda: tb.SemiexpHSpec(alpha=float(c["alpha"]), c1=float(c["c1"])),
        "subgaussian": lambda: tb.SubgaussianSpec(epsilon=float(c["epsilon"]),
                                                  h2_k=_vec(c["h2_k"], n, "h2_k")),
        "fuk_nagaev_pth": lambda: tb.PthMomentSpec(p=float(c["p"]), a_k=_vec(c["a_k"], n, "a_k"),
                                                   v_k=_vec(c["v_k"], n, "v_k")),
        "von_bahr_esseen": lambda: tb.PthMomentSpec(p=float(c["p"]), a_k=_vec(c["a_k"], n, "a_k")),
        "weak_von_bahr_esseen": lambda: tb.WeakPthSpec(p=float(c["p"]),
                                                       a_k=_vec(c["a_k"], n, "a_k")),
        "mcdiarmid": lambda: tb.McDiarmidSpec(m_k=_vec(c["m_k"], n, "m_k")),
        "rosenthal_weak": lambda: tb.RosenthalSpec(v_k=_vec(c["v_k"], n, "v_k"),
                                                   weak_max=float(c.get("weak_max", 0.0)),
                                                   p=float(c.get("p", 2.0))),
    }
    try:
        return builders[kind]()
    except KeyError as exc:
        raise ConfigError(f"bound kind {kind!r} or missing constant {exc}") from exc


def resolve_dominating(entry: dict, spec: ProcessSpec, table, n: int, seed: int,
                       threads: int):
    require_keys(entry, {"kind", "constants", "estimate"},
                 optional={"constants", "estimate"}, context="bounds entry")
    kind = entry["kind"]
    if "constants" in entry and "estimate" in entry:
        raise ConfigError(f"bound {kind}: give constants or estimate, not both")
    if "constants" in entry:
        return dominating_from_constants(kind, entry["constants"], n)
    est = dict(entry.get("estimate", {}))
    require_keys(est, {"samples", "ci_level", "t0", "p", "alpha"},
                 optional={"samples", "ci_level", "t0", "p", "alpha"},
                 context=f"estimate for {kind}")
    mc_kind = _ESTIMATE_KIND.get(kind)
    if mc_kind is None:
        raise ConfigError(f"unknown bound kind {kind!r}")
    dom = mc.estimate_dominating_constants(
        spec, mc_kind, n,
        samples=int(est.get("samples", 20000)),
        seed=seed, ci_level=float(est.get("ci_level", 0.99)),
        t0=float(est.get("t0", 1.0)),
        p=float(est.get("p", _DEFAULT_P.get(kind, 2.0))) if kind in _DEFAULT_P or "p" in est else None,
        alpha=float(est.get("alpha", 0.5)) if kind == "semiexp_h" else None,
        threads=threads,
    )
    if kind == "rosenthal_weak":
        p = dom.p
        weak = mc.estimate_max_term_weak(spec, table, p,
                                         int(est.get("samples", 20000)), seed,
                                         float(est.get("ci_level", 0.99)))
        dom = dataclasses.replace(dom, weak_max=weak)
    return dom


def dominating_to_config(dom) -> dict:
    out = {"class": type(dom).__name__}
    for f in dataclasses.fields(dom):
        v = getattr(dom, f.name)
        if f.name == "provenance":
            out[f.name] = {k: (p.to_config() if isinstance(p, tb.Provenance) else p)
                           for k, p in v.items()}
        elif isinstance(v, tuple):
            out[f.name] = list(v)
        else:
            out[f.name] = v
    return out


# ---------------------------------------------------------------------------
# x-grid resolution


def resolve_grid(cfg: dict, spec: ProcessSpec, table, n: int, seed: int) -> np.ndarray:
    require_keys(cfg, {"explicit", "count", "lo", "hi", "spacing", "units"},
                 optional={"explicit", "count", "lo", "hi", "spacing", "units"},
                 context="x_grid")
    if "explicit" in cfg:
        return np.asarray(cfg["explicit"], dtype=float)
    count = int(cfg.get("count", 24))
    lo, hi = float(cfg["lo"]), float(cfg["hi"])
    spacing = cfg.get("spacing", "linear")
    if spacing == "linear":
        grid = np.linspace(lo, hi, count)
    elif spacing == "log":
        grid = np.geomspace(lo, hi, count)
    else:
        raise ConfigError(f"unknown x_grid spacing {spacing!r}")
    units = cfg.get("units", "absolute")
    if units == "absolute":
        return grid
    if units != "sqrt_v":
        raise ConfigError(f"unknown x_grid units {units!r}")
    return grid * math.sqrt(reference_variance(spec, table, n, seed))


def reference_variance(spec: ProcessSpec, table, n: int, seed: int) -> float:
    """V = sum w_k^2 E[G^2] (or E[H^2] when only past-dependent constants exist)."""
    if c2_supported(spec):
        desc = GDescription(spec)
        v = desc.moment(lambda g: g * g)
        if v is None:
            draws = desc.sample(rng.stream(seed, rng.CONSTANTS, 7), 20000)
            v = float(np.mean(draws**2))
        v_k = (v,) * n
    else:
        h = mc._h_matrix(spec, n, 20000, seed)
        v_k = tuple((h * h).mean(axis=0).tolist())
    return tb.aggregate_v(table, v_k)


# ---------------------------------------------------------------------------
# subcommands


def cmd_coeffs(args) -> int:
    profile = parse_profile(args.profile)
    table = build_lipschitz_table(profile, args.n)
    if args.out:
        rep.coefficient_table_csv(table, args.out)
        print(f"wrote {args.out}")
    else:
        n = table.horizon
        print(",".join(["k", *[f"i={i}" for i in range(n)]]))
        for k in range(n):
            cells = [str(k)] + ["" if i < k else repr(float(table.table[k, i]))
                                for i in range(n)]
            print(",".join(cells))
        print(",".join(["diagonal", *[repr(float(v)) for v in table.diagonal]]))
    return 0


def cmd_simulate(args) -> int:
    cfg = load_json(args.config)
    proc_cfg = cfg.get("process", cfg) if isinstance(cfg, dict) else cfg
    spec = ProcessSpec.from_config(proc_cfg)
    traj = simulate(spec, args.n, args.seed)
    if traj.truncations:
        print(f"warning: {traj.truncations} lag draws clamped to the window",
              file=sys.stderr)
    if args.out:
        rep.trajectory_csv(traj, args.out)
        print(f"wrote {args.out}")
    else:
        print("t,value")
        for t, v in enumerate(traj.values, start=1):
            print(f"{t},{float(v)!r}")
    return 0


def cmd_bounds(args) -> int:
    profile = parse_profile(args.profile)
    table = build_lipschitz_table(profile, args.n)
    n = args.n
    constants = load_json(args.constants) if args.constants else {}
    if args.x is not None:
        grid = np.array([args.x], dtype=float)
    else:
        space = np.geomspace if args.x_spacing == "log" else np.linspace
        grid = space(args.x_lo, args.x_hi, args.x_count)
    results = []
    for kind in args.kind:
        defaults = _default_constants(kind, n)
        defaults.update(constants.get(kind, constants) if constants else {})
        dom = dominating_from_constants(kind, defaults, n)
        for x in grid:
            x_eval = x / n if kind == "semiexp_h" else x
            results.append(mc.evaluate_bound(kind, dom, table, float(x_eval)))
    header = ["kind", "x", "value", "raw_value", "side", "validity", "clamped",
              "aggregates"]
    rows = rep.bound_curve_rows(results)
    if args.out:
        rep.write_csv(args.out, header, rows)
        print(f"wrote {args.out}")
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(rep.format_number(v) for v in row))
    return 0


def _default_constants(kind: str, n: int) -> dict:
    base = {
        "bernstein": {"m": 1.0, "v_k": 1.0},
        "hoeffding": {"m_k": 1.0, "v_k": 1.0},
        "cramer": {"t0": 1.0, "k_k": 1.0},
        "semiexp_g": {"p": 0.5, "k_k": 1.0},
        "semiexp_h": {"alpha": 0.5, "c1": 1.0},
        "subgaussian": {"epsilon": 1.0, "h2_k": 1.0},
        "fuk_nagaev_pth": {"p": 3.0, "a_k": 1.0, "v_k": 1.0},
        "von_bahr_esseen": {"p": 1.5, "a_k": 1.0},
        "weak_von_bahr_esseen": {"p": 1.5, "a_k": 1.0},
        "mcdiarmid": {"m_k": 1.0},
        "rosenthal_weak": {"v_k": 1.0, "weak_max": 1.0, "p": 2.0},
    }.get(kind)
    if base is None:
        raise ConfigError(f"unknown bound kind {kind!r}")
    return base


_CONFIG_KEYS = {"schema_version", "process", "functional", "horizon", "replicates",
                "seed", "ci_level", "x_grid", "bounds", "out_dir"}


def load_experiment_config(path: str) -> dict:
    cfg = load_json(path)
    require_keys(cfg, _CONFIG_KEYS, optional={"ci_level", "out_dir"}, context="config")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg['schema_version']}")
    return cfg


def cmd_verify(args) -> int:
    cfg = load_experiment_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    threads = resolve_threads(args.threads)
    out_dir = rep.ensure_out_dir(args.out or cfg.get("out_dir", "."))

    spec = ProcessSpec.from_config(cfg["process"])
    func = FunctionalSpec.from_config(cfg["functional"])
    n = int(cfg["horizon"])
    replicates = int(cfg["replicates"])
    ci_level = float(cfg.get("ci_level", 0.999))

    job_digest = digest({"config": cfg, "seed": seed})
    manifest = rep.RunManifest.load(out_dir)
    stem = f"verify-{job_digest}-seed{seed}"
    json_path = os.path.join(out_dir, f"{stem}.report.json")
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    if manifest.completed(job_digest) and not args.force:
        print(f"job {job_digest} already completed in {out_dir} (use --force to re-run)")
        return 0

    profile = contraction_certificate(spec, horizon=n)
    table = build_lipschitz_table(profile, n)
    grid = resolve_grid(cfg["x_grid"], spec, table, n, seed)
    estimate = mc.empirical_tail(spec, func, n, grid, replicates, seed, ci_level,
                                 threads)

    reports, rows, constants_used = {}, [], {}
    for entry in cfg["bounds"]:
        kind = entry["kind"]
        dom = resolve_dominating(entry, spec, table, n, seed, threads)
        report = mc.verify_bound(spec, func, n, kind, dom, grid, replicates,
                                 seed, ci_level, threads, estimate=estimate)
        reports[kind] = report
        constants_used[kind] = dominating_to_config(dom)
        for i, x in enumerate(report.x_grid):
            rows.append((kind, x, report.tail_freq[i], report.empirical_lower[i],
                         report.empirical_upper[i], report.theoretical[i],
                         report.passes[i], report.certified[i], report.validity[i]))

    payload = {
        "schema_version": SCHEMA_VERSION,
        "config_digest": job_digest,
        "seed": seed,
        "spec_digest": spec.digest(),
        "estimate": estimate.to_config(),
        "constants": constants_used,
        "reports": {k: r.to_config() for k, r in reports.items()},
    }
    rep.write_json(json_path, payload)
    rep.write_csv(csv_path,
                  ["kind", "x", "tail_freq", "empirical_lower", "empirical_upper",
                   "bound", "pass", "certified", "validity"], rows)
    manifest.record(stem, job_digest, [os.path.basename(json_path),
                                       os.path.basename(csv_path)])
    for line in rep.summary_lines(reports.values()):
        print(line)
    worst = min((r.coverage for r in reports.values()), default=1.0)
    print(f"wrote {json_path}")
    print(f"wrote {csv_path}")
    if worst < 1.0:
        print("warning: some thresholds evidence a bound violation", file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    from .profiles import build_lipschitz_table as build

    out_dir = rep.ensure_out_dir(args.out) if args.out else None
    summaries = []
    failures = 0
    for i in range(args.instances):
        inst = orc.random_finite_instance(args.seed + i, max_horizon=args.max_horizon)
        table = build(inst.profile, inst.horizon)
        report = orc.enumerate_decomposition(inst, table)
        ok = (report.max_conditional_mean <= 1e-12
              and report.max_telescoping_gap <= 1e-12
              and report.domination_ratio <= 1.0 + 1e-9
              and report.lipschitz_ratio <= 1.0 + 1e-9)
        failures += 0 if ok else 1
        summaries.append({
            "label": inst.label, "horizon": inst.horizon,
            "paths": report.path_count,
            "max_conditional_mean": report.max_conditional_mean,
            "max_telescoping_gap": report.max_telescoping_gap,
            "domination_ratio": report.domination_ratio,
            "lipschitz_ratio": report.lipschitz_ratio,
            "ok": ok,
        })
        print(f"{inst.label:<24} n={inst.horizon} paths={report.path_count:<6} "
              f"dom={report.domination_ratio:.3e} lip={report.lipschitz_ratio:.3e} "
              f"{'ok' if ok else 'VIOLATION'}")
        if out_dir and args.dump_paths:
            path = os.path.join(out_dir, f"oracle-{args.seed + i}.json")
            rep.atomic_write_text(path, report.to_json())
    if out_dir:
        rep.write_json(os.path.join(out_dir, f"oracle-summary-seed{args.seed}.json"),
                       {"schema_version": SCHEMA_VERSION, "instances": summaries})
    if failures:
        raise DomainError(f"{failures} oracle instance(s) violated the decomposition "
                          "guarantees")
    return 0


def cmd_report(args) -> int:
    run_dir = args.run
    paths = sorted(glob.glob(os.path.join(run_dir, "*.report.json")))
    if not paths:
        raise ConfigError(f"no *.report.json files under {run_dir}")
    out_dir = rep.ensure_out_dir(args.out or run_dir)
    all_rows = []
    for path in paths:
        payload = load_json(path)
        reports = [_report_from_config(r) for r in payload["reports"].values()]
        for line in rep.summary_lines(reports):
            print(line)
        print()
        for r in reports:
            all_rows.append((payload["config_digest"], payload["seed"], r.bound_kind,
                             r.coverage, r.certified_fraction, len(r.x_grid),
                             r.experimental))
            if not args.no_figures:
                fig = os.path.join(
                    out_dir, f"fig-{payload['config_digest']}-seed{payload['seed']}"
                             f"-{r.bound_kind}.png")
                rep.render_verification_figure(r, fig)
                print(f"wrote {fig}")
    summary_csv = os.path.join(out_dir, "summary.csv")
    rep.write_csv(summary_csv,
                  ["config_digest", "seed", "bound", "coverage",
                   "certified_fraction", "thresholds", "experimental"], all_rows)
    print(f"wrote {summary_csv}")
    return 0


def _report_from_config(obj: dict) -> mc.VerificationReport:
    theoretical = tuple(float("nan") if t is None else t for t in obj["theoretical"])
    return mc.VerificationReport(
        bound_kind=obj["bound_kind"], spec_digest=obj["spec_digest"],
        seed=obj["seed"], horizon=obj["horizon"], x_grid=tuple(obj["x_grid"]),
        empirical_upper=tuple(obj["empirical_upper"]),
        empirical_lower=tuple(obj["empirical_lower"]),
        tail_freq=tuple(obj["tail_freq"]), theoretical=theoretical,
        passes=tuple(obj["passes"]), certified=tuple(obj["certified"]),
        coverage=obj["coverage"], certified_fraction=obj["certified_fraction"],
        center=obj["center"], center_se=obj["center_se"],
        ci_level=obj["ci_level"], experimental=obj["experimental"],
        aggregates=obj["aggregates"], provenance=obj["provenance"],
        validity=tuple(obj["validity"]),
    )


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liptail",
        description="Contractive infinite-memory processes: coefficient tables, "
                    "simulation, deviation bounds and Monte-Carlo verification.",
    )
    parser.add_argument("--version", action="version", version=f"liptail {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="emit the Lipschitz weight table as CSV")
    p.add_argument("--profile", required=True,
                   help="zeros | geometric:first,ratio | explicit:a1,a2,... | "
                        "power:constant,exponent")
    p.add_argument("--n", type=int, required=True, help="horizon")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("simulate", help="simulate one trajectory to CSV")
    p.add_argument("--config", required=True,
                   help="process JSON (or an experiment config with a 'process' field)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bounds", help="evaluate tail-bound curves to CSV")
    p.add_argument("--kind", action="append", required=True,
                   help="bound kind (repeatable)")
    p.add_argument("--profile", default="zeros")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--constants", help="JSON file of constants per kind")
    p.add_argument("--x", type=float, help="single threshold")
    p.add_argument("--x-lo", type=float, default=0.1)
    p.add_argument("--x-hi", type=float, default=10.0)
    p.add_argument("--x-count", type=int, default=50)
    p.add_argument("--x-spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run a verification experiment from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads (0 = auto; "
                   f"default ${_THREADS_ENV} or 1)")
    p.add_argument("--out", help="output directory (default: config out_dir or .)")
    p.add_argument("--force", action="store_true",
                   help="re-run even if the manifest marks this job completed")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="exact martingale decomposition checks")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-horizon", type=int, default=6)
    p.add_argument("--out", help="directory for JSON reports")
    p.add_argument("--dump-paths", action="store_true",
                   help="write full per-path decomposition JSON per instance")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="summarize stored verification runs")
    p.add_argument("--run", required=True, help="directory holding *.report.json")
    p.add_argument("--out", help="directory for summary.csv and figures "
                                 "(default: the run directory)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
