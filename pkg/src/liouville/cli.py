"""Command line entry points.

Subcommands map one-to-one onto library operations; liouville-run drives
the full pipeline from a config file.  Exit codes: 0 on success, 1 when
an invariant or acceptance-style check fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .chaos import WeightSpec, build_regularized_measure
from .config import RunConfig, validate_config
from .covariance import (CutoffSequence, kernel_km, kernel_km_closed_form,
                         layer_covariance)
from .dbm import AnnulusDomain, simulate_path
from .errors import ConfigError, ContractError, DomainError
from .gff import GridSpec, get_sampler
from .gridio import write_field, write_grid_binary
from .pipeline import checks_passed, run_pipeline
from .potential import polar_probe_lattice, s00_report, singular_integral_check
from .clock import consistency_check


def _json_dump(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_grid_args(p, halfwidth=2.0, size=64):
    p.add_argument("--halfwidth", type=float, default=halfwidth,
                   help="grid half width (square grid centered at 0)")
    p.add_argument("--grid-size", type=int, default=size,
                   help="nodes per axis")
    p.add_argument("--excluded-radius", type=float, default=0.0,
                   help="zero density cells within this radius of 0")


def _add_field_args(p):
    p.add_argument("--level", type=int, default=6)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draw", type=int, default=0)


def _cutoffs(level: int) -> CutoffSequence:
    return CutoffSequence.dyadic(max(level + 1, 8))


def _cmd_kernel_table(args) -> int:
    seq = _cutoffs(max(args.layers, default=1))
    radii = np.geomspace(args.r_min, args.r_max, args.count)
    lines = ["r,kernel,kernel_closed_form"
             + "".join(f",layer_{n}" for n in args.layers)]
    worst = 0.0
    for r in radii:
        kq = kernel_km(float(r), args.mass)
        kc = kernel_km_closed_form(float(r), args.mass)
        worst = max(worst, abs(kq - kc))
        cells = [f"{r:.17g}", f"{kq:.17g}", f"{kc:.17g}"]
        cells += [f"{layer_covariance(float(r), n, seq, args.mass):.17g}"
                  for n in args.layers]
        lines.append(",".join(cells))
    lines.append(f"# closed_form_max_abs_err={worst:.3e}")
    text = "\n".join(lines) + "\n"
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0 if worst < 1e-8 else 1


def _cmd_sample_field(args) -> int:
    grid = GridSpec.square(args.halfwidth, args.grid_size, args.excluded_radius)
    sampler = get_sampler(grid, _cutoffs(args.level), args.mass)
    field = sampler.field(args.level, args.seed, args.draw)
    write_field(args.out, field)
    print(f"wrote level-{field.level} field ({grid.resolution[0]}x"
          f"{grid.resolution[1]}) to {args.out}; variance {field.variance:.6f}")
    return 0


def _cmd_build_measure(args) -> int:
    grid = GridSpec.square(args.halfwidth, args.grid_size, args.excluded_radius)
    sampler = get_sampler(grid, _cutoffs(args.level), args.mass)
    field = sampler.field(args.level, args.seed, args.draw)
    weight = None
    if not args.no_weight:
        weight = WeightSpec(args.alpha, allow_relaxed=args.allow_relaxed_alpha)
    dens = build_regularized_measure(field, args.gamma, weight)
    write_grid_binary(args.out, grid, dens.density, args.level,
                      field.variance, args.seed)
    summary = {
        "gamma": args.gamma,
        "level": args.level,
        "weighted": not args.no_weight,
        "alpha": None if args.no_weight else args.alpha,
        "seed": args.seed,
        "draw": args.draw,
        "total_mass": dens.total_mass(),
        "max_density": float(dens.density.max()),
        "min_density": float(dens.density.min()),
    }
    if args.summary:
        _json_dump(args.summary, summary)
    print(f"wrote density to {args.out}; total mass {summary['total_mass']:.6f}")
    return 0


def _cmd_simulate_dbm(args) -> int:
    annuli = tuple(int(k) for k in args.annuli.split(",") if k)
    path = simulate_path(tuple(args.start), args.horizon, args.dt, args.alpha,
                         args.seed, stream_index=args.stream, annuli=annuli)
    with open(args.out, "w") as fh:
        fh.write("t,x,y\n")
        for t, (x, y) in zip(path.times, path.points):
            fh.write(f"{t:.17g},{x:.17g},{y:.17g}\n")
    exits = {str(k): {"first_nonnegative": et.first_nonnegative
                      if math.isfinite(et.first_nonnegative) else "inf",
                      "first_positive": et.first_positive
                      if math.isfinite(et.first_positive) else "inf"}
             for k, et in path.exit_times.items()}
    payload = {"exits": exits, "guard_events": list(path.guard_events),
               "flagged_steps": list(path.flagged_steps)}
    if args.exits:
        _json_dump(args.exits, payload)
    print(f"wrote {len(path.times)} samples to {args.out}; "
          f"guard events: {len(path.guard_events)}")
    return 0


def _run_config_from_args(args, parser) -> RunConfig:
    raw = {}
    if args.config:
        from .config import parse_config_file
        raw.update(parse_config_file(args.config))
    overrides = {
        "gamma": args.gamma, "alpha": args.alpha, "mass": args.mass,
        "level": args.level, "grid_halfwidth": args.halfwidth,
        "grid_size": args.grid_size, "excluded_radius": args.excluded_radius,
        "dt": args.dt, "horizon": args.horizon, "seed": args.seed,
        "n_paths": args.n_paths, "output_dir": args.outdir,
        "tier": args.tier,
    }
    if args.allow_relaxed_alpha:
        overrides["allow_relaxed_alpha"] = True
    if args.start is not None:
        overrides["start"] = args.start
    if args.annuli is not None:
        overrides["annuli"] = args.annuli
    for key, val in overrides.items():
        if val is not None:
            raw[key] = val
    return validate_config(raw)


def _cmd_run(args, parser) -> int:
    config = _run_config_from_args(args, parser)
    manifest = run_pipeline(config, resume=args.resume)
    ok = checks_passed(manifest)
    for name, val in sorted(manifest["checks"].items()):
        if isinstance(val, bool):
            print(f"{'PASS' if val else 'FAIL'}  {name}")
    print(f"manifest: {Path(config.output_dir) / 'manifest.json'}")
    return 0 if ok else 1


def _probe_field(args):
    grid = GridSpec.square(args.halfwidth, args.grid_size)
    sampler = get_sampler(grid, _cutoffs(max(args.level, 8)), args.mass)
    return sampler, sampler.field(args.level, args.seed, args.draw)


def _cmd_estimate_resolvent(args) -> int:
    sampler, field = _probe_field(args)
    dom = AnnulusDomain(args.k)
    probes = polar_probe_lattice(dom, args.n_r, args.n_theta)
    report = s00_report(probes, field, args.gamma, dom, args.alpha,
                        args.paths, args.dt, args.seed, horizon=args.horizon)
    payload = {
        "sup_estimate": report.sup_estimate,
        "estimates": list(report.estimates),
        "ses": list(report.ses),
        "points": [list(p) for p in report.points],
        "gamma": report.gamma, "level": report.level, "k": report.domain_k,
        "alpha": report.alpha, "n_paths": report.n_paths, "dt": report.dt,
        "horizon": report.horizon, "seed": report.master_seed,
    }
    _json_dump(args.out, payload)
    print(f"sup 1-potential over {len(report.points)} probes: "
          f"{report.sup_estimate:.6f}")
    return 0 if math.isfinite(report.sup_estimate) else 1


def _cmd_check_s00(args) -> int:
    sampler, field = _probe_field(args)
    field_next = sampler.extend_field(field, args.level + 1)
    dom = AnnulusDomain(args.k)
    probes = polar_probe_lattice(dom, args.n_r, args.n_theta)
    rep_a = s00_report(probes, field, args.gamma, dom, args.alpha,
                       args.paths, args.dt, args.seed, horizon=args.horizon)
    rep_b = s00_report(probes, field_next, args.gamma, dom, args.alpha,
                       args.paths, args.dt, args.seed, horizon=args.horizon)
    dens = build_regularized_measure(field, args.gamma)
    sing = singular_integral_check(dens, dom, args.delta, probes)
    drift_ok = (abs(rep_b.sup_estimate - rep_a.sup_estimate)
                <= args.band * rep_a.sup_estimate)
    finite = all(map(math.isfinite,
                     (rep_a.sup_estimate, rep_b.sup_estimate,
                      sing.sup_probe, sing.double_integral)))
    payload = {
        "sup_level_n": rep_a.sup_estimate,
        "sup_level_next": rep_b.sup_estimate,
        "relative_band": args.band,
        "within_band": drift_ok,
        "singular_sup": sing.sup_probe,
        "singular_double": sing.double_integral,
        "delta": args.delta,
        "finite": finite,
        "level": args.level, "k": args.k, "gamma": args.gamma,
        "alpha": args.alpha, "n_paths": args.paths, "seed": args.seed,
    }
    _json_dump(args.out, payload)
    print(f"{'PASS' if finite and drift_ok else 'FAIL'}  sup potentials "
          f"{rep_a.sup_estimate:.4f} -> {rep_b.sup_estimate:.4f}, "
          f"singular sup {sing.sup_probe:.4f}")
    return 0 if (finite and drift_ok) else 1


def _cmd_consistency_test(args) -> int:
    grid = GridSpec.square(args.halfwidth, args.grid_size)
    sampler = get_sampler(grid, _cutoffs(max(args.level, 8)), args.mass)
    results = []
    worst = 0.0
    all_pass = True
    for f_idx in range(args.fields):
        field = sampler.field(args.level, args.seed, f_idx)
        for p_idx in range(args.paths_per_field):
            path = simulate_path(tuple(args.start), args.horizon, args.dt,
                                 args.alpha, args.seed,
                                 stream_index=f_idx * args.paths_per_field + p_idx)
            res = consistency_check(path, field, args.gamma, args.k)
            worst = max(worst, res.residual)
            all_pass = all_pass and res.passed
            results.append({"field": f_idx, "path": p_idx,
                            "residual": res.residual,
                            "tolerance": res.tolerance,
                            "passed": res.passed})
    payload = {"k": args.k, "pairs": len(results), "max_residual": worst,
               "all_passed": all_pass, "gamma": args.gamma,
               "level": args.level, "seed": args.seed, "results": results}
    _json_dump(args.out, payload)
    print(f"{'PASS' if all_pass else 'FAIL'}  {len(results)} pairs, "
          f"max residual {worst:.3e}")
    return 0 if all_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouville",
        description="layered-field chaos measures and distorted-path "
                    "time changes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-table", help="tabulate the covariance kernel "
                                            "and layer covariances as CSV")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--layers", type=lambda s: [int(x) for x in s.split(",") if x],
                   default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--out", default=None)

    p = sub.add_parser("sample-field", help="draw a layered field, write "
                                            "binary grid")
    _add_field_args(p)
    _add_grid_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-measure", help="exponentiate a field draw into "
                                             "a chaos density")
    _add_field_args(p)
    _add_grid_args(p)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--no-weight", action="store_true")
    p.add_argument("--allow-relaxed-alpha", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None)

    p = sub.add_parser("simulate-dbm", help="simulate the distorted diffusion")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--start", type=float, nargs=2, default=(1.0, 0.0))
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--annuli", default="2,3")
    p.add_argument("--out", required=True)
    p.add_argument("--exits", default=None)

    p = sub.add_parser("liouville-run", help="full pipeline from a config")
    p.add_argument("--config", default=None)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--allow-relaxed-alpha", action="store_true")
    p.add_argument("--mass", type=float, default=None)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--halfwidth", type=float, default=None)
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--excluded-radius", type=float, default=None)
    p.add_argument("--start", type=float, nargs=2, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--annuli", default=None)
    p.add_argument("--n-paths", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--outdir", default=None)
    p.add_argument("--tier", default=None)

    def probe_args(p):
        p.add_argument("--k", type=int, default=3)
        p.add_argument("--gamma", type=float, default=0.5)
        p.add_argument("--alpha", type=float, default=2.0)
        p.add_argument("--level", type=int, default=6)
        p.add_argument("--mass", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--draw", type=int, default=0)
        p.add_argument("--paths", type=int, default=200)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--horizon", type=float, default=10.0)
        p.add_argument("--n-r", type=int, default=5)
        p.add_argument("--n-theta", type=int, default=5)
        _add_grid_args(p, halfwidth=3.2, size=64)
        p.add_argument("--out", default=None)

    p = sub.add_parser("estimate-resolvent", help="killed 1-potential over a "
                                                  "probe lattice")
    probe_args(p)

    p = sub.add_parser("check-s00", help="potential boundedness and level "
                                         "stability checks")
    probe_args(p)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--band", type=float, default=0.5)

    p = sub.add_parser("consistency-test", help="nested-annulus clock "
                                                "agreement over an ensemble")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--fields", type=int, default=5)
    p.add_argument("--paths-per-field", type=int, default=4)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--level", type=int, default=6)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=float, nargs=2, default=(1.0, 0.0))
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=1e-3)
    _add_grid_args(p, halfwidth=3.2, size=64)
    p.add_argument("--out", default=None)

    return parser


_COMMANDS = {
    "kernel-table": _cmd_kernel_table,
    "sample-field": _cmd_sample_field,
    "build-measure": _cmd_build_measure,
    "simulate-dbm": _cmd_simulate_dbm,
    "estimate-resolvent": _cmd_estimate_resolvent,
    "check-s00": _cmd_check_s00,
    "consistency-test": _cmd_consistency_test,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "liouville-run":
            return _cmd_run(args, parser)
        return _COMMANDS[args.command](args)
    except (ConfigError, DomainError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
