"""End-to-end run: field -> density -> path -> clock -> time change.

Every artifact is written deterministically (fixed float formatting,
sorted JSON keys), so rerunning the same configuration reproduces the
same bytes.  The manifest records the configuration, its hash, every
stream consumed, per-artifact checksums, and the results of the
invariant checks; resume compares hashes and skips recomputation when
the outputs already exist for this exact configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .chaos import WeightSpec, build_regularized_measure
from .clock import accumulate_pcaf, consistency_check, time_change
from .config import RunConfig
from .covariance import CutoffSequence
from .dbm import AnnulusDomain, simulate_path
from .errors import ConfigError
from .gff import GridSpec, get_sampler
from .gridio import write_field
from .rng import stream_label


def config_hash(config: RunConfig) -> str:
    blob = json.dumps(config.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_csv(path: Path, header: str, columns) -> None:
    rows = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _cutoff_sequence(config: RunConfig) -> CutoffSequence:
    if config.cutoffs == "dyadic":
        return CutoffSequence.dyadic(max(config.level + 1, 8))
    return CutoffSequence(tuple(config.cutoffs))


def run_pipeline(config: RunConfig, resume: bool = False) -> dict:
    """Execute one configured run; returns the manifest dict.

    manifest["checks"] holds the invariant results; the CLI maps them
    to the exit status.
    """
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_path = outdir / "manifest.json"
    chash = config_hash(config)

    if manifest_path.exists():
        previous = json.loads(manifest_path.read_text())
        if resume:
            if previous.get("config_hash") == chash:
                return previous
            raise ConfigError([
                "resume requested but the existing manifest in "
                f"{outdir} was produced by a different configuration"])

    seq = _cutoff_sequence(config)
    grid = GridSpec.square(config.grid_halfwidth, config.grid_size,
                           config.excluded_radius)
    sampler = get_sampler(grid, seq, config.mass)

    streams = {}
    checks = {}
    artifacts = {}

    # field
    field = sampler.field(config.level, config.seed, draw=0)
    streams["field"] = [stream_label(config.seed, "layer", n, 0)
                        for n in range(1, config.level + 1)]
    field_path = outdir / "field.bin"
    write_field(field_path, field)

    # density
    weight = None
    if config.alpha != 0.0:
        weight = WeightSpec(config.alpha,
                            allow_relaxed=config.allow_relaxed_alpha)
    density = build_regularized_measure(field, config.gamma, weight)
    density_path = outdir / "density.bin"
    from .gridio import write_grid_binary
    write_grid_binary(density_path, grid, density.density, config.level,
                      field.variance, config.seed)

    # path
    path = simulate_path(config.start, config.horizon, config.dt,
                         config.alpha, config.seed, stream_index=0,
                         annuli=config.annuli)
    streams["path"] = stream_label(config.seed, "path", 0)
    if path.guard_events:
        streams["guard"] = [stream_label(config.seed, "guard", 0, s)
                            for s in path.guard_events]
    path_path = outdir / "path.csv"
    _write_csv(path_path, "t,x,y",
               (path.times, path.points[:, 0], path.points[:, 1]))
    checks["path_finite"] = bool(np.isfinite(path.points).all())
    checks["no_guard_flags"] = not path.flagged_steps

    # clock on the full grid
    clock = accumulate_pcaf(path, field, config.gamma)
    clock_path = outdir / "clock.csv"
    _write_csv(clock_path, "t,F", (clock.times, clock.values))
    checks["clock_monotone"] = bool(np.all(np.diff(clock.values) >= 0.0))

    # nested-domain consistency at each configured annulus with the
    # start point inside
    consistency = {}
    for k in config.annuli:
        dom = AnnulusDomain(int(k))
        if not dom.contains(np.asarray(config.start)[None, :])[0]:
            consistency[str(k)] = {"skipped": "start outside annulus"}
            continue
        res = consistency_check(path, field, config.gamma, int(k))
        consistency[str(k)] = {
            "residual": res.residual,
            "tolerance": res.tolerance,
            "exit_time": res.exit_time if math.isfinite(res.exit_time) else "inf",
            "passed": res.passed,
        }
        checks[f"consistency_k{k}"] = bool(res.passed)

    # time change on the grid times the clock can invert
    mask = path.times < clock.total
    out_times = path.times[mask]
    z = time_change(path, clock, out_times)
    z_path = outdir / "timechange.csv"
    _write_csv(z_path, "t,zx,zy", (out_times, z[:, 0], z[:, 1]))

    if config.gamma == 0.0:
        x_at = path.points[: len(out_times)]
        err = float(np.abs(z - x_at).max()) if len(out_times) else 0.0
        checks["identity_time_change"] = bool(err <= 1e-10)
        checks["identity_time_change_error"] = err

    for name, p in (("field", field_path), ("density", density_path),
                    ("path", path_path), ("clock", clock_path),
                    ("timechange", z_path)):
        artifacts[name] = {"file": p.name, "sha256": _sha256(p)}

    manifest = {
        "package_version": __version__,
        "config": config.as_dict(),
        "config_hash": chash,
        "streams": streams,
        "artifacts": artifacts,
        "consistency": consistency,
        "clock_total": clock.total,
        "clock_truncated_at_grid": clock.truncated,
        "guard_events": list(path.guard_events),
        "checks": checks,
    }
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2)
                             + "\n")
    return manifest


def checks_passed(manifest: dict) -> bool:
    return all(v for k, v in manifest["checks"].items()
               if isinstance(v, bool))
