"""Potential-theory diagnostics for the time-change clock.

Two kinds of evidence that the chaos measure restricted to an annulus G
is a smooth-enough time-change measure:

* Monte Carlo 1-potentials  E_x int_0^{sigma_G} e^-t dF_t  stay bounded
  over probe lattices in G and stable as the field level grows.
* Grid-level bounds: discretized singular integrals against |x - y|^-d
  stay finite, and ensemble ball masses satisfy a dyadic shell bound
  with a fitted growth exponent and envelope constant.

All estimators here are diagnostics; they report numbers and leave the
pass/fail thresholds to their callers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .chaos import ChaosDensity, ScalingFit, ball_masses, smallball_scaling
from .clock import pcaf_integrand
from .dbm import AnnulusDomain, simulate_path
from .errors import ContractError, DomainError
from .gff import FieldState


@dataclass(frozen=True)
class PointEstimate:
    x: tuple
    mean: float
    se: float
    n_paths: int


def _discounted_clock_total(path, field, gamma, domain, horizon) -> float:
    """int_0^{sigma ^ horizon} e^-t dF_t by the trapezoid rule."""
    pts = path.points
    weights = pcaf_integrand(field, gamma, pts) * np.exp(-path.times)
    inside = domain.contains(pts) & field.grid.in_hull(pts)
    exits = np.flatnonzero(~inside)
    incs = 0.5 * path.dt * (weights[:-1] + weights[1:])
    if exits.size:
        incs[int(exits[0]):] = 0.0
    return float(incs.sum())


def resolvent_potential_mc(x, field: FieldState, gamma: float,
                           domain: AnnulusDomain, alpha: float,
                           n_paths: int, dt: float, master_seed: int,
                           horizon: float = 10.0,
                           stream_offset: int = 0) -> PointEstimate:
    """Monte Carlo estimate of the killed 1-potential of the clock at x.

    Paths are killed at the domain boundary (and at the field grid hull,
    which must cover the domain for the estimate to be meaningful).
    """
    x = np.asarray(x, dtype=float)
    if not domain.contains(x[None, :])[0]:
        raise ContractError(f"start point {tuple(x)} is outside the domain")
    if n_paths < 200:
        raise DomainError("resolvent estimates need at least 200 paths")
    vals = np.empty(n_paths)
    for i in range(n_paths):
        path = simulate_path(x, horizon, dt, alpha, master_seed,
                             stream_index=stream_offset + i)
        vals[i] = _discounted_clock_total(path, field, gamma, domain, horizon)
    return PointEstimate(tuple(x), float(vals.mean()),
                         float(vals.std(ddof=1) / math.sqrt(n_paths)),
                         n_paths)


def polar_probe_lattice(domain: AnnulusDomain, n_r: int = 5,
                        n_theta: int = 5, radial_margin: float = 0.1) -> np.ndarray:
    """Log-spaced radii x uniform angles, strictly inside the annulus."""
    radii = np.geomspace(domain.inner * (1 + radial_margin),
                         domain.outer * (1 - radial_margin), n_r)
    angles = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    return np.column_stack([(rr * np.cos(aa)).ravel(),
                            (rr * np.sin(aa)).ravel()])


@dataclass(frozen=True)
class PotentialReport:
    """Killed 1-potential estimates over a probe lattice."""

    points: tuple
    estimates: tuple
    ses: tuple
    sup_estimate: float
    gamma: float
    level: int
    domain_k: int
    alpha: float
    n_paths: int
    dt: float
    horizon: float
    master_seed: int


def s00_report(points, field: FieldState, gamma: float,
               domain: AnnulusDomain, alpha: float, n_paths: int,
               dt: float, master_seed: int,
               horizon: float = 10.0) -> PotentialReport:
    """Resolvent potentials at each probe, plus their supremum."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    est, ses = [], []
    for j, p in enumerate(points):
        pe = resolvent_potential_mc(p, field, gamma, domain, alpha, n_paths,
                                    dt, master_seed,
                                    horizon=horizon,
                                    stream_offset=j * n_paths)
        est.append(pe.mean)
        ses.append(pe.se)
    return PotentialReport(tuple(map(tuple, points)), tuple(est), tuple(ses),
                           float(max(est)), float(gamma), field.level,
                           domain.k, float(alpha), int(n_paths), float(dt),
                           float(horizon), int(master_seed))


@dataclass(frozen=True)
class SingularIntegralReport:
    delta: float
    probe_values: tuple
    sup_probe: float
    double_integral: float
    n_cells: int
    self_distance: float


def singular_integral_check(density: ChaosDensity, domain, delta: float,
                            probes) -> SingularIntegralReport:
    """Grid sums of |x - y|^-delta against the density over the domain.

    The probe's own cell contributes with the distance replaced by half
    a cell width, a standard finite-resolution stand-in for the local
    singularity; likewise the diagonal of the double integral.
    """
    delta = float(delta)
    if not (0.0 < delta < 2.0):
        raise DomainError(f"delta must lie in (0, 2), got {delta}")
    grid = density.grid
    centers = grid.centers
    mask = domain.contains(centers)
    if not mask.any():
        raise ContractError("domain does not meet the density grid")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if not domain.contains(probes).all():
        raise ContractError("all probes must lie inside the domain")
    cellw = max(grid.cell_size)
    self_dist = 0.5 * cellw
    sel = centers[mask]
    dens = density.density.ravel()[mask]
    area = grid.cell_area

    vals = []
    for p in probes:
        d = np.hypot(sel[:, 0] - p[0], sel[:, 1] - p[1])
        own = np.argmin(d)
        if d[own] <= 0.5 * math.hypot(*grid.cell_size):
            d = d.copy()
            d[own] = self_dist
        np.maximum(d, self_dist, out=d)
        vals.append(float(np.sum(dens * d ** (-delta)) * area))

    dmat = np.hypot(sel[:, 0][:, None] - sel[:, 0][None, :],
                    sel[:, 1][:, None] - sel[:, 1][None, :])
    np.fill_diagonal(dmat, self_dist)
    double = float(dens @ (dmat ** (-delta)) @ dens * area * area)
    return SingularIntegralReport(delta, tuple(vals), float(max(vals)),
                                  double, int(mask.sum()), self_dist)


@dataclass(frozen=True)
class ShellReport:
    center: tuple
    base_radius: float
    delta: float
    zeta: float
    c2: float
    shell_radii: tuple
    shell_masses: tuple
    shell_sum: float
    bound: float
    holds: bool


def dyadic_shell_bound(density: ChaosDensity, center, base_radius: float,
                       delta: float, zeta: float, c2: float) -> ShellReport:
    """Check sum_n (2^-n R)^-delta M(B(x, 2^(1-n) R)) <= c2 R^(zeta-delta)
    2^zeta / (1 - 2^(delta-zeta)).

    Requires delta < zeta so the comparison series converges.  Shells
    whose ball radius falls under two grid cells are dropped (the grid
    cannot see them); if that leaves only the first shell the check
    degenerates to a single term, which is still a valid lower bound on
    the full sum.
    """
    delta = float(delta)
    zeta = float(zeta)
    if not (0.0 < delta < zeta):
        raise DomainError(
            f"need 0 < delta < zeta for a convergent bound, got "
            f"delta={delta}, zeta={zeta}")
    if base_radius <= 0:
        raise DomainError("base radius must be positive")
    grid = density.grid
    c = np.asarray(center, dtype=float)
    dist = np.hypot(grid.centers[:, 0] - c[0], grid.centers[:, 1] - c[1])
    flat = density.density.ravel()
    cellw = max(grid.cell_size)

    radii, masses, terms = [], [], []
    n = 0
    while True:
        ball_r = 2.0 ** (1 - n) * base_radius
        if n > 0 and ball_r < 2.0 * cellw:
            break
        mass = float(flat[dist <= ball_r].sum() * grid.cell_area)
        radii.append(ball_r)
        masses.append(mass)
        terms.append((2.0 ** (-n) * base_radius) ** (-delta) * mass)
        n += 1
        if ball_r < 2.0 * cellw:
            break
    shell_sum = float(sum(terms))
    bound = (c2 * base_radius ** (zeta - delta) * 2.0 ** zeta
             / (1.0 - 2.0 ** (delta - zeta)))
    return ShellReport(tuple(c), float(base_radius), delta, zeta, float(c2),
                       tuple(radii), tuple(masses), shell_sum, float(bound),
                       shell_sum <= bound)


@dataclass(frozen=True)
class HolderFit:
    """Growth exponent and envelope constant fitted from an ensemble."""

    zeta: float
    c2: float
    quantile: float
    radii: tuple
    member_constants: tuple


def fit_holder_envelope(densities, center, radii,
                        quantile: float = 0.95) -> HolderFit:
    """Fit M(B_r) ~ c2 r^zeta: zeta from the ensemble-mean log-log slope,
    c2 as the given quantile of each member's max_r mass / r^zeta.

    A mean-level constant would be violated by roughly half the members
    (the masses are heavy-tailed), so the envelope quantile is what a
    per-member bound has to use.
    """
    fit = smallball_scaling(densities, center, radii)
    zeta = fit.slope
    radii = np.asarray(fit.radii, dtype=float)
    masses = ball_masses(densities, center, radii)
    member_c = (masses / radii[None, :] ** zeta).max(axis=1)
    c2 = float(np.quantile(member_c, quantile))
    return HolderFit(float(zeta), c2, float(quantile), tuple(radii),
                     tuple(member_c))


def origin_mass_decay(densities, radii) -> ScalingFit:
    """Small-ball scaling of the weighted measure at the origin."""
    return smallball_scaling(densities, (0.0, 0.0), radii)


@dataclass(frozen=True)
class KernelSingularityReport:
    source: tuple
    delta: float
    bin_width: float
    bin_centers: tuple
    kernel_values: tuple
    sup_product: float
    sup_product_se: float
    n_paths: int
    n_valid_bins: int
    coarsened: bool


def resolvent_kernel_singularity(domain: AnnulusDomain, source, alpha: float,
                                 bins: int, n_paths: int, dt: float,
                                 master_seed: int, delta: float = 0.25,
                                 horizon: float = 10.0,
                                 n_groups: int = 20) -> KernelSingularityReport:
    """Discounted-occupation estimate of the resolvent kernel near its
    singularity.

    Bins the bounding box of the domain, deposits e^-t dt along killed
    paths, divides by the weighted reference mass of each bin, and
    reports sup over visited bins of kernel * |source - y|^delta with a
    group-split standard error.  If most domain bins go unvisited the
    binning is coarsened once (with a warning) before reporting.
    """
    src = np.asarray(source, dtype=float)
    if not domain.contains(src[None, :])[0]:
        raise ContractError("source point must lie inside the domain")
    if n_paths < 10_000:
        # occupation histograms are hopeless below this; the sup over
        # bins is then driven by single-visit bins
        raise DomainError(f"need at least 10000 paths, got {n_paths}")
    if n_paths < n_groups:
        raise DomainError(f"need at least {n_groups} paths")

    def run(nbins):
        lo = -domain.outer
        width = 2.0 * domain.outer / nbins
        deposits = np.zeros((n_groups, nbins, nbins))
        for i in range(n_paths):
            path = simulate_path(src, horizon, dt, alpha, master_seed,
                                 stream_index=i)
            inside = domain.contains(path.points)
            exits = np.flatnonzero(~inside)
            stop = int(exits[0]) if exits.size else len(path.points)
            pts = path.points[:stop]
            w = dt * np.exp(-path.times[:stop])
            ix = np.clip(((pts[:, 0] - lo) / width).astype(np.int64), 0, nbins - 1)
            iy = np.clip(((pts[:, 1] - lo) / width).astype(np.int64), 0, nbins - 1)
            np.add.at(deposits[i % n_groups], (ix, iy), w)

        # weighted reference mass of each bin, 4x4 midpoint refinement
        refine = 4
        sub = (np.arange(refine) + 0.5) / refine
        edges = lo + width * np.arange(nbins)
        qx = edges[:, None] + width * sub[None, :]
        xs = qx.reshape(-1)
        gx, gy = np.meshgrid(xs, xs, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        rho = (np.hypot(pts[:, 0], pts[:, 1]) ** alpha
               * domain.contains(pts))
        rho = rho.reshape(nbins, refine, nbins, refine)
        bin_mass = rho.sum(axis=(1, 3)) * (width / refine) ** 2
        return deposits, bin_mass, width, edges

    coarsened = False
    deposits, bin_mass, width, edges = run(int(bins))
    in_domain = bin_mass > 0.0
    visited = deposits.sum(axis=0) > 0.0
    if (visited & in_domain).sum() < 0.5 * in_domain.sum():
        warnings.warn("over half the domain bins were never visited; "
                      "coarsening the binning by 2", stacklevel=2)
        coarsened = True
        deposits, bin_mass, width, edges = run(max(int(bins) // 2, 4))
        in_domain = bin_mass > 0.0
        visited = deposits.sum(axis=0) > 0.0

    centers_1d = edges + 0.5 * width
    cx, cy = np.meshgrid(centers_1d, centers_1d, indexing="ij")
    dist = np.hypot(cx - src[0], cy - src[1])
    src_bin = dist <= (width / math.sqrt(2.0))
    valid = in_domain & visited & ~src_bin
    if not valid.any():
        raise ContractError("no valid bins; increase paths or coarsen bins")

    per_path_share = n_paths / n_groups
    group_kernel = deposits[:, valid] / per_path_share / bin_mass[valid]
    group_stat = (group_kernel * dist[valid] ** delta).max(axis=1)
    kernel = deposits.sum(axis=0)[valid] / n_paths / bin_mass[valid]
    product = kernel * dist[valid] ** delta
    sup = float(product.max())
    se = float(group_stat.std(ddof=1) / math.sqrt(n_groups))
    return KernelSingularityReport(tuple(src), float(delta), float(width),
                                   tuple(map(tuple, np.column_stack(
                                       [cx[valid], cy[valid]]))),
                                   tuple(kernel), sup, se, int(n_paths),
                                   int(valid.sum()), coarsened)
