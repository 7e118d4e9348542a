"""Regularized multiplicative-chaos densities.

From a level-n field X_n with node variance v_n = log c_n, the
normalized exponential

    exp(gamma * X_n - gamma^2 / 2 * v_n)

has unit mean at every node, so the measure with this density (times an
optional radial weight |x|^alpha) is a positive measure whose ensemble
mean is the weighted Lebesgue measure.  Everything here is grid-level:
measures are represented by their density at the nodes and integrals by
cell sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, ResolutionError
from .gff import FieldState, GridSpec

GAMMA_CRITICAL = 2.0


def _validate_gamma(gamma: float) -> float:
    g = float(gamma)
    if not (0.0 <= g < GAMMA_CRITICAL) or not math.isfinite(g):
        raise DomainError(
            f"gamma must lie in [0, {GAMMA_CRITICAL}), got {gamma!r}")
    return g


@dataclass(frozen=True)
class WeightSpec:
    """Radial weight |x|^alpha.

    The supported range is alpha in [2, inf); alpha in (-2, 2) keeps the
    weight locally integrable and is allowed for exploratory use only
    behind allow_relaxed, since several guarantees are only established
    for alpha >= 2.
    """

    alpha: float
    allow_relaxed: bool = False

    def __post_init__(self):
        a = float(self.alpha)
        object.__setattr__(self, "alpha", a)
        if not math.isfinite(a):
            raise DomainError("alpha must be finite")
        if a <= -2.0:
            raise DomainError(
                f"alpha must exceed -2 for local integrability, got {a}")
        if a < 2.0 and not self.allow_relaxed:
            raise DomainError(
                f"alpha must lie in [2, inf), got {a}; pass allow_relaxed "
                "to explore (-2, 2) without the standing guarantees")

    def rho(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        with np.errstate(divide="ignore"):
            return r ** self.alpha


@dataclass(eq=False)
class ChaosDensity:
    """Chaos density at the nodes of a grid, with provenance."""

    grid: GridSpec
    gamma: float
    level: int
    field_variance: float
    weighted: bool
    alpha: float | None
    density: np.ndarray
    master_seed: int
    draw: int

    def total_mass(self) -> float:
        return float(self.density.sum() * self.grid.cell_area)


@dataclass(frozen=True)
class Box:
    """Axis-aligned closed box."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise DomainError("box must have positive side lengths")

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return ((pts[:, 0] >= self.xmin) & (pts[:, 0] <= self.xmax)
                & (pts[:, 1] >= self.ymin) & (pts[:, 1] <= self.ymax))


@dataclass(frozen=True)
class Ball:
    """Closed ball."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center",
                           (float(self.center[0]), float(self.center[1])))
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (np.hypot(pts[:, 0] - self.center[0],
                         pts[:, 1] - self.center[1]) <= self.radius)


def build_regularized_measure(field: FieldState, gamma: float,
                              weight: WeightSpec | None = None) -> ChaosDensity:
    """Density of the level-n chaos measure, optionally carrying |x|^alpha.

    Cells inside the grid's excluded ball are zeroed.
    """
    g = _validate_gamma(gamma)
    dens = np.exp(g * field.values - 0.5 * g * g * field.variance)
    grid = field.grid
    if weight is not None:
        dens = dens * weight.rho(grid.centers).reshape(grid.resolution)
    if grid.excluded_radius > 0.0:
        radii = np.hypot(grid.centers[:, 0], grid.centers[:, 1])
        dens = dens * (radii > grid.excluded_radius).reshape(grid.resolution)
    return ChaosDensity(grid, g, field.level, field.variance,
                        weight is not None,
                        None if weight is None else weight.alpha,
                        dens, field.master_seed, field.draw)


def measure_of_set(density: ChaosDensity, region) -> float:
    """Cell-sum mass of the region under the density.

    The region is anything with a vectorized contains(points) method.
    An empty intersection with the grid warns and returns 0.
    """
    mask = region.contains(density.grid.centers)
    if not mask.any():
        warnings.warn("region does not meet any grid cell; mass is 0",
                      stacklevel=2)
        return 0.0
    return float(density.density.ravel()[mask].sum() * density.grid.cell_area)


@dataclass(frozen=True)
class DominationReport:
    weighted_mass: float
    plain_mass: float
    sup_weight: float
    bound: float
    holds: bool


def check_weight_domination(weighted: ChaosDensity, plain: ChaosDensity,
                            region) -> DominationReport:
    """Verify mass_with_weight(G) <= sup_G |x|^alpha * mass_without(G).

    Both densities must come from the same field realization; the check
    is then a deterministic inequality between two cell sums against the
    exact sup of the weight over the covered cells.
    """
    if not weighted.weighted or plain.weighted:
        raise ContractError("pass (weighted, plain) densities in that order")
    if weighted.grid != plain.grid:
        raise ContractError("densities live on different grids")
    same_draw = ((weighted.master_seed, weighted.draw, weighted.level,
                  weighted.gamma)
                 == (plain.master_seed, plain.draw, plain.level, plain.gamma))
    if not same_draw:
        raise ContractError(
            "domination compares one realization against itself; the two "
            "densities have different provenance")
    grid = weighted.grid
    mask = region.contains(grid.centers)
    if not mask.any():
        warnings.warn("region does not meet any grid cell", stacklevel=2)
        return DominationReport(0.0, 0.0, 0.0, 0.0, True)
    w = WeightSpec(weighted.alpha, allow_relaxed=True)
    sup_rho = float(w.rho(grid.centers[mask]).max())
    lhs = float(weighted.density.ravel()[mask].sum() * grid.cell_area)
    plain_mass = float(plain.density.ravel()[mask].sum() * grid.cell_area)
    bound = sup_rho * plain_mass
    return DominationReport(lhs, plain_mass, sup_rho, bound, lhs <= bound)


@dataclass(frozen=True)
class ScalingFit:
    """Log-log fit of mean small-ball mass against radius."""

    slope: float
    intercept: float
    radii: tuple
    mean_mass: tuple
    se_mass: tuple
    n_ensemble: int

    @property
    def amplitude(self) -> float:
        return math.exp(self.intercept)


def ball_masses(densities, center, radii) -> np.ndarray:
    """(n_ensemble, n_radii) matrix of ball masses by cell sums."""
    first = densities[0]
    grid = first.grid
    c = np.asarray(center, dtype=float)
    dist = np.hypot(grid.centers[:, 0] - c[0], grid.centers[:, 1] - c[1])
    flat = np.stack([d.density.ravel() for d in densities])
    out = np.empty((len(densities), len(radii)))
    for j, r in enumerate(radii):
        mask = dist <= r
        out[:, j] = flat[:, mask].sum(axis=1) * grid.cell_area
    return out


def smallball_scaling(densities, center, radii) -> ScalingFit:
    """Fit log E[mass(B_r)] ~ slope * log r + intercept.

    Radii must span at least a decade and each ball must be resolvable
    on the grid (radius at least two cells wide, covering at least four
    cells), otherwise the fit would measure the grid instead of the
    measure.
    """
    if len(densities) == 0:
        raise ContractError("need at least one density")
    grid = densities[0].grid
    for d in densities:
        if d.grid != grid:
            raise ContractError("ensemble densities live on different grids")
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if len(radii) < 4:
        raise DomainError("need at least four radii for a scaling fit")
    if radii[0] < 10.0 * radii[-1] * (1.0 - 1e-12):
        raise DomainError("radii must span at least one decade")
    cell = max(grid.cell_size)
    if radii[-1] < 2.0 * cell:
        raise ResolutionError(
            f"smallest radius {radii[-1]:g} is under two cells ({cell:g}); "
            "refine the grid or enlarge the balls")
    c = np.asarray(center, dtype=float)
    dist = np.hypot(grid.centers[:, 0] - c[0], grid.centers[:, 1] - c[1])
    for r in radii:
        if int((dist <= r).sum()) < 4:
            raise ResolutionError(
                f"ball of radius {r:g} covers fewer than 4 cells")
    masses = ball_masses(densities, center, radii)
    mean = masses.mean(axis=0)
    if np.any(mean <= 0.0):
        raise ResolutionError("a ball has zero mean mass; nothing to fit")
    se = masses.std(axis=0, ddof=1) / math.sqrt(len(densities)) \
        if len(densities) > 1 else np.zeros_like(mean)
    slope, intercept = np.polyfit(np.log(radii), np.log(mean), 1)
    return ScalingFit(float(slope), float(intercept), tuple(radii),
                      tuple(mean), tuple(se), len(densities))
