import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouville.covariance import (CutoffSequence, LayerCovarianceTable,
                                  green_massive, kernel_closed_form_error,
                                  kernel_km, kernel_km_closed_form,
                                  layer_covariance)
from liouville.errors import DomainError

# Frozen reference values, mpmath quadrature at 30 digits; regenerate
# with scripts/compute_oracles.py.
KM_R1_M1 = 0.60190723019723457474
KM_R10_M2 = 1.1766115939114076355e-8
KM_RHALF_M1 = 0.82822056000165044685
LAYER2_RHALF_M1 = 0.50339463298695752845
GREEN_R01_M1_U1E4 = 2.4270690247020166125
GREEN_R5_M2_U1E4 = 1.7780062316167651811e-5


def test_kernel_zero_lag_is_one():
    for m in (0.5, 1.0, 2.0):
        assert kernel_km(0.0, m) == pytest.approx(1.0, abs=1e-10)


def test_kernel_oracle_values():
    assert kernel_km(1.0, 1.0) == pytest.approx(KM_R1_M1, abs=1e-11)
    assert kernel_km(10.0, 2.0) == pytest.approx(KM_R10_M2, rel=1e-9)
    assert kernel_km(0.5, 1.0) == pytest.approx(KM_RHALF_M1, abs=1e-11)


def test_closed_form_validated_against_quadrature():
    # the gate that allows the Bessel fast path inside layer integrals
    radii = np.geomspace(1e-3, 20.0, 40)
    for m in (0.5, 1.0, 2.0):
        assert kernel_closed_form_error(m, radii) < 1e-8


def test_closed_form_limits():
    assert kernel_km_closed_form(0.0, 1.0) == 1.0
    assert kernel_km_closed_form(1000.0, 1.0) == 0.0  # underflow regime
    vec = kernel_km_closed_form(np.array([0.0, 1.0]), 1.0)
    assert vec[0] == 1.0
    assert vec[1] == pytest.approx(KM_R1_M1, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(r1=st.floats(0.0, 30.0), dr=st.floats(1e-3, 10.0))
def test_kernel_monotone_decreasing(r1, dr):
    assert kernel_km_closed_form(r1 + dr, 1.0) <= kernel_km_closed_form(r1, 1.0)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(allow_nan=True, allow_infinity=True).filter(
    lambda x: not (x >= 0 and math.isfinite(x))))
def test_kernel_rejects_bad_radius(r):
    with pytest.raises(DomainError):
        kernel_km(r, 1.0)


def test_kernel_rejects_bad_mass_and_tol():
    with pytest.raises(DomainError):
        kernel_km(1.0, 0.0)
    with pytest.raises(DomainError):
        kernel_km(1.0, -1.0)
    with pytest.raises(DomainError):
        kernel_km(1.0, 1.0, tol=0.0)


def test_cutoff_sequence_dyadic():
    seq = CutoffSequence.dyadic(8)
    assert seq.cutoff(0) == 1.0
    assert seq.cutoff(1) == 1.0  # degenerate first layer
    assert seq.cutoff(8) == 128.0
    assert seq.log_ratio(1) == 0.0
    assert seq.log_ratio(5) == pytest.approx(math.log(2), abs=0)
    with pytest.raises(IndexError):
        seq.cutoff(9)
    with pytest.raises(IndexError):
        seq.cutoff(-1)


def test_cutoff_sequence_validation():
    with pytest.raises(DomainError):
        CutoffSequence(())
    with pytest.raises(DomainError):
        CutoffSequence((0.5, 2.0))  # starts below c_0 = 1
    with pytest.raises(DomainError):
        CutoffSequence((1.0, 2.0, 2.0))  # not strictly increasing


def test_layer_covariance_zero_lag(dyadic):
    for n in range(1, 9):
        want = dyadic.log_ratio(n)
        assert layer_covariance(0.0, n, dyadic, 1.0) == pytest.approx(
            want, abs=1e-9)


def test_layer_covariance_oracle(dyadic):
    assert layer_covariance(0.5, 2, dyadic, 1.0) == pytest.approx(
        LAYER2_RHALF_M1, abs=1e-10)


def test_layer_covariance_positive_and_decaying(dyadic):
    vals = [layer_covariance(r, 3, dyadic, 1.0)
            for r in (0.0, 0.1, 0.5, 1.0, 4.0)]
    assert all(v >= 0.0 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_layer_covariance_rejects_bad_layer(dyadic):
    with pytest.raises(DomainError):
        layer_covariance(0.5, 0, dyadic, 1.0)
    with pytest.raises(IndexError):
        layer_covariance(0.5, 9, dyadic, 1.0)


def test_layers_sum_to_truncated_green(dyadic):
    # interval additivity: layers 1..n tile [1, c_n]
    for r in (0.05, 0.3, 1.0):
        total = sum(layer_covariance(r, n, dyadic, 1.0) for n in range(1, 7))
        assert total == pytest.approx(green_massive(r, 1.0, dyadic.cutoff(6)),
                                      abs=1e-9)


def test_green_oracle_values():
    assert green_massive(0.1, 1.0, 1e4) == pytest.approx(
        GREEN_R01_M1_U1E4, abs=1e-10)
    assert green_massive(5.0, 2.0, 1e4) == pytest.approx(
        GREEN_R5_M2_U1E4, rel=1e-9)


def test_green_log_divergence():
    # green(r) + log r settles to a constant as r -> 0
    a = green_massive(1e-3, 1.0, 1e7) + math.log(1e-3)
    b = green_massive(1e-4, 1.0, 1e7) + math.log(1e-4)
    assert abs(a - b) < 1e-3


def test_green_rejects_zero_radius_and_bad_upper():
    with pytest.raises(DomainError):
        green_massive(0.0, 1.0, 1e4)
    with pytest.raises(DomainError):
        green_massive(1.0, 1.0, 1.0)


def test_table_matches_quadrature(dyadic):
    tab = LayerCovarianceTable(4, dyadic, 1.0, 6.0)
    rs = np.array([0.0, 1e-5, 0.01, 0.3, 1.7, 5.9])
    want = [layer_covariance(float(r), 4, dyadic, 1.0) for r in rs]
    got = tab(rs)
    assert np.max(np.abs(got - want)) < 1e-8


def test_table_rejects_out_of_range(dyadic):
    tab = LayerCovarianceTable(2, dyadic, 1.0, 2.0)
    with pytest.raises(DomainError):
        tab(np.array([2.5]))
    with pytest.raises(DomainError):
        tab(np.array([-0.1]))
