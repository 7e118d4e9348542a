import math

import numpy as np
import pytest

from liouville.chaos import Ball, Box, build_regularized_measure
from liouville.dbm import AnnulusDomain
from liouville.errors import ContractError, DomainError
from liouville.gff import FieldState, GridSpec
from liouville.potential import (dyadic_shell_bound, fit_holder_envelope,
                                 origin_mass_decay, polar_probe_lattice,
                                 resolvent_kernel_singularity,
                                 resolvent_potential_mc,
                                 singular_integral_check, s00_report,
                                 smallball_scaling)

# int over [-0.5,0.5]^2 of |y|^(-1/2) dy, mpmath quadrature at 30
# digits; regenerate with scripts/compute_oracles.py
SINGULAR_BOX_INTEGRAL = 1.7677476267894528056
# the 64x64 grid sum of the same integral with the half-cell stand-in
# at the singular cell; regression anchor for the summation convention
SINGULAR_BOX_GRID64 = 1.8097701347204833

BIG = GridSpec.square(50.0, 16)


def _flat(grid):
    return build_regularized_measure(FieldState.zero(grid), 0.0)


def test_singular_integral_against_quadrature():
    d = _flat(GridSpec.square(0.5, 64))
    rep = singular_integral_check(d, Box(-0.5, 0.5, -0.5, 0.5), 0.5,
                                  [(0.0, 0.0)])
    assert rep.probe_values[0] == pytest.approx(SINGULAR_BOX_GRID64, rel=1e-12)
    assert rep.probe_values[0] == pytest.approx(SINGULAR_BOX_INTEGRAL, rel=0.05)
    assert rep.n_cells == 64 * 64
    assert rep.sup_probe == rep.probe_values[0]
    assert 0.0 < rep.double_integral < math.inf


def test_singular_integral_validation():
    d = _flat(GridSpec.square(0.5, 16))
    box = Box(-0.5, 0.5, -0.5, 0.5)
    for bad in (0.0, 2.0, -0.5):
        with pytest.raises(DomainError):
            singular_integral_check(d, box, bad, [(0.0, 0.0)])
    with pytest.raises(ContractError):
        singular_integral_check(d, box, 0.5, [(3.0, 0.0)])  # probe outside
    with pytest.raises(ContractError):
        singular_integral_check(d, Ball((9.0, 9.0), 0.1), 0.5, [(9.0, 9.0)])


def test_resolvent_potential_gamma_zero_bound():
    # with gamma = 0 the clock is t, so the discounted total is at most
    # 1 - e^-horizon < 1 regardless of the path
    pe = resolvent_potential_mc((1.0, 0.0), FieldState.zero(BIG), 0.0,
                                AnnulusDomain(2), 2.0, 200, 1e-3, 7,
                                horizon=2.0)
    assert 0.0 < pe.mean < 1.0
    assert pe.se < 0.05
    assert pe.n_paths == 200


def test_resolvent_potential_validation():
    f = FieldState.zero(BIG)
    with pytest.raises(DomainError):
        resolvent_potential_mc((1.0, 0.0), f, 0.0, AnnulusDomain(2), 2.0,
                               100, 1e-3, 7)
    with pytest.raises(ContractError):
        resolvent_potential_mc((3.0, 0.0), f, 0.0, AnnulusDomain(2), 2.0,
                               200, 1e-3, 7)


def test_polar_probe_lattice_inside():
    dom = AnnulusDomain(2)
    pts = polar_probe_lattice(dom, n_r=5, n_theta=5)
    assert pts.shape == (25, 2)
    assert dom.contains(pts).all()
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert r.min() > dom.inner and r.max() < dom.outer


def test_s00_report_shapes():
    dom = AnnulusDomain(2)
    pts = polar_probe_lattice(dom, n_r=2, n_theta=2)
    rep = s00_report(pts, FieldState.zero(BIG), 0.0, dom, 2.0, 200, 1e-3, 5,
                     horizon=1.0)
    assert len(rep.estimates) == 4 and len(rep.ses) == 4
    assert rep.sup_estimate == max(rep.estimates)
    assert rep.domain_k == 2 and rep.level == 0
    assert all(0.0 < e < 1.0 for e in rep.estimates)


def test_shell_bound_flat_density():
    d = _flat(GridSpec.square(2.0, 128))
    rep = dyadic_shell_bound(d, (0.0, 0.0), 1.0, 0.25, 2.0, math.pi * 1.1)
    # Lebesgue ball masses, every shell term sits under the geometric
    # comparison with the 1.1 margin
    assert rep.holds
    assert len(rep.shell_radii) >= 4
    assert rep.shell_masses[0] == pytest.approx(math.pi * 4.0, rel=0.25)
    assert rep.shell_sum < rep.bound


def test_shell_bound_degenerate_single_shell():
    grid = GridSpec.square(2.0, 128)
    d = _flat(grid)
    r0 = 1.5 * max(grid.cell_size)
    rep = dyadic_shell_bound(d, (0.0, 0.0), r0, 0.25, 2.0, math.pi * 1.1)
    assert len(rep.shell_radii) == 1
    assert rep.holds


def test_shell_bound_validation():
    d = _flat(GridSpec.square(2.0, 32))
    with pytest.raises(DomainError):
        dyadic_shell_bound(d, (0, 0), 1.0, 2.0, 2.0, 1.0)  # delta == zeta
    with pytest.raises(DomainError):
        dyadic_shell_bound(d, (0, 0), 1.0, 2.5, 2.0, 1.0)  # delta > zeta
    with pytest.raises(DomainError):
        dyadic_shell_bound(d, (0, 0), -1.0, 0.25, 2.0, 1.0)


def test_holder_envelope_flat():
    d = _flat(GridSpec.square(2.0, 128))
    fit = fit_holder_envelope([d, d, d], (0.0, 0.0),
                              np.geomspace(0.15, 1.5, 6))
    assert fit.zeta == pytest.approx(2.0, abs=0.05)
    assert fit.c2 == pytest.approx(math.pi, rel=0.05)
    assert len(fit.member_constants) == 3
    # identical members: the envelope quantile is their common constant
    assert fit.c2 == fit.member_constants[0]


def test_origin_decay_alias():
    d = _flat(GridSpec.square(2.0, 64))
    radii = np.geomspace(0.15, 1.5, 6)
    a = origin_mass_decay([d], radii)
    b = smallball_scaling([d], (0.0, 0.0), radii)
    assert a.slope == b.slope and a.intercept == b.intercept


def test_kernel_singularity_validation():
    dom = AnnulusDomain(2)
    with pytest.raises(DomainError):
        resolvent_kernel_singularity(dom, (1.0, 0.0), 2.0, bins=16,
                                     n_paths=500, dt=1e-3, master_seed=1)
    with pytest.raises(ContractError):
        resolvent_kernel_singularity(dom, (3.0, 0.0), 2.0, bins=16,
                                     n_paths=20000, dt=1e-3, master_seed=1)
