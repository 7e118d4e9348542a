"""Run configuration: a flat key = value file with a typed schema.

Unknown keys are rejected and all violations are reported together, so
a bad file produces one complete complaint instead of a scavenger hunt.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .dbm import MAX_DT
from .errors import ConfigError


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true/false, got {s!r}")


def _parse_pair(s: str) -> tuple:
    parts = [p for p in s.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"expected two numbers, got {s!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_int_list(s: str) -> tuple:
    parts = [p for p in s.replace(",", " ").split() if p]
    return tuple(int(p) for p in parts)


def _parse_cutoffs(s: str):
    v = s.strip()
    if v == "dyadic":
        return "dyadic"
    parts = [p for p in v.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("cutoffs must be 'dyadic' or a list of numbers")
    return tuple(float(p) for p in parts)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one end-to-end run."""

    gamma: float = 0.5
    alpha: float = 2.0
    allow_relaxed_alpha: bool = False
    mass: float = 1.0
    cutoffs: object = "dyadic"
    level: int = 6
    grid_halfwidth: float = 2.0
    grid_size: int = 64
    excluded_radius: float = 0.0
    start: tuple = (1.0, 0.0)
    horizon: float = 5.0
    dt: float = 1e-4
    annuli: tuple = (2, 3)
    n_paths: int = 1
    seed: int = 0
    output_dir: str = "runs/out"
    tier: str = "default"

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_PARSERS = {
    "gamma": float,
    "alpha": float,
    "allow_relaxed_alpha": _parse_bool,
    "mass": float,
    "cutoffs": _parse_cutoffs,
    "level": int,
    "grid_halfwidth": float,
    "grid_size": int,
    "excluded_radius": float,
    "start": _parse_pair,
    "horizon": float,
    "dt": float,
    "annuli": _parse_int_list,
    "n_paths": int,
    "seed": int,
    "output_dir": str,
    "tier": str,
}


def parse_config_file(path) -> dict:
    """Read key = value lines; '#' starts a comment.  Returns raw strings
    keyed by name; validation happens in validate_config."""
    raw = {}
    problems = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                problems.append(f"line {lineno}: expected key = value, got {line.strip()!r}")
                continue
            key, val = stripped.split("=", 1)
            key = key.strip()
            if key in raw:
                problems.append(f"line {lineno}: duplicate key {key!r}")
                continue
            raw[key] = val.strip()
    if problems:
        raise ConfigError(problems)
    return raw


def validate_config(raw: dict) -> RunConfig:
    """Type-check and range-check a raw mapping; collects every problem."""
    problems = []
    values = {}
    for key, val in raw.items():
        if key not in _PARSERS:
            problems.append(f"unknown key {key!r}")
            continue
        if isinstance(val, str):
            try:
                values[key] = _PARSERS[key](val)
            except (ValueError, TypeError) as exc:
                problems.append(f"{key}: {exc}")
        else:
            values[key] = val

    # range-check whatever parsed, with defaults standing in for the
    # rest, so one bad key does not mask every other problem
    cfg = None
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        problems.append(str(exc))

    if cfg is not None:
        if not (0.0 <= cfg.gamma < 2.0):
            problems.append(f"gamma must lie in [0, 2), got {cfg.gamma}")
        if cfg.alpha <= -2.0:
            problems.append(f"alpha must exceed -2, got {cfg.alpha}")
        elif cfg.alpha < 2.0 and not cfg.allow_relaxed_alpha:
            problems.append(
                f"alpha must lie in [2, inf), got {cfg.alpha}; set "
                "allow_relaxed_alpha = true to explore (-2, 2)")
        if cfg.mass <= 0:
            problems.append(f"mass must be positive, got {cfg.mass}")
        if cfg.level < 1:
            problems.append(f"level must be at least 1, got {cfg.level}")
        if isinstance(cfg.cutoffs, tuple):
            if cfg.level > len(cfg.cutoffs):
                problems.append(
                    f"level {cfg.level} exceeds the {len(cfg.cutoffs)} "
                    "cutoffs provided")
            if any(b <= a for a, b in zip(cfg.cutoffs, cfg.cutoffs[1:])) \
                    or (cfg.cutoffs and cfg.cutoffs[0] < 1.0):
                problems.append("cutoffs must be >= 1 and strictly increasing")
        if not (0.0 < cfg.dt <= MAX_DT):
            problems.append(f"dt must lie in (0, {MAX_DT:g}], got {cfg.dt}")
        if cfg.horizon <= 0:
            problems.append(f"horizon must be positive, got {cfg.horizon}")
        elif 0.0 < cfg.dt <= MAX_DT:
            n = round(cfg.horizon / cfg.dt)
            if n < 1 or abs(n * cfg.dt - cfg.horizon) > 1e-9 * max(1.0, cfg.horizon):
                problems.append(
                    f"horizon {cfg.horizon} is not an integer multiple of dt {cfg.dt}")
        if cfg.grid_size < 2:
            problems.append(f"grid_size must be at least 2, got {cfg.grid_size}")
        if cfg.grid_halfwidth <= 0:
            problems.append(f"grid_halfwidth must be positive, got {cfg.grid_halfwidth}")
        if cfg.excluded_radius < 0:
            problems.append("excluded_radius must be nonnegative")
        if cfg.start == (0.0, 0.0):
            problems.append("start must not be the origin")
        if any(k < 2 for k in cfg.annuli):
            problems.append(f"annulus indices must be >= 2, got {cfg.annuli}")
        if cfg.n_paths < 1:
            problems.append(f"n_paths must be at least 1, got {cfg.n_paths}")
        if cfg.seed < 0:
            problems.append(f"seed must be nonnegative, got {cfg.seed}")
        if cfg.tier not in ("default", "extended"):
            problems.append(f"tier must be 'default' or 'extended', got {cfg.tier!r}")

    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> RunConfig:
    return validate_config(parse_config_file(path))
