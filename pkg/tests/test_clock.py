import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from liouville.clock import (REVUZ_REFERENCE, ClockSample, accumulate_pcaf,
                             consistency_check, invert_clock, pcaf_integrand,
                             time_change)
from liouville.dbm import AnnulusDomain, simulate_path
from liouville.errors import (ClockExhaustedError, ContractError, DomainError)
from liouville.gff import FieldState, GridSpec

BIG = GridSpec.square(50.0, 16)  # hull large enough that paths never leave


def _synthetic_clock(increments, dt=1.0):
    inc = np.asarray(increments, dtype=float)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    times = dt * np.arange(len(values))
    return ClockSample(times, values, 0.5, 6, None, dt, None, False, 0, 0, 0)


def test_reference_measure_is_weighted():
    # the integrand carries no extra weight factor: on a zero field the
    # clock equals t even along a path with varying radius
    assert REVUZ_REFERENCE == "weighted"
    p = simulate_path((1.0, 0.0), 1.0, 1e-3, 2.0, 3)
    assert p.radii().std() > 0.01
    c = accumulate_pcaf(p, FieldState.zero(BIG), 0.5)
    assert np.max(np.abs(c.values - p.times)) == 0.0


def test_gamma_zero_identity_exact():
    p = simulate_path((1.0, 0.0), 2.0, 1e-4, 2.0, 123)
    c = accumulate_pcaf(p, FieldState.zero(BIG), 0.0)
    assert np.max(np.abs(c.values - p.times)) == 0.0
    assert c.total == pytest.approx(2.0)
    assert c.kill_index is None and not c.truncated
    assert math.isinf(c.sigma())


def test_integrand_gamma_zero_is_one():
    pts = np.array([[0.3, 0.4], [1.0, -1.0]])
    out = pcaf_integrand(FieldState.zero(GridSpec.square(2.0, 8)), 0.0, pts)
    assert np.array_equal(out, np.ones(2))


def test_clock_monotone(sampler_default64):
    field = sampler_default64.field(6, 2024, 0)
    p = simulate_path((1.0, 0.0), 0.5, 1e-3, 2.0, 9)
    c = accumulate_pcaf(p, field, 0.8)
    assert np.all(np.diff(c.values) >= 0.0)
    assert c.values[0] == 0.0


def test_freeze_after_domain_exit():
    p = simulate_path((1.0, 0.0), 5.0, 1e-3, 2.0, 14)
    dom = AnnulusDomain(2)
    c = accumulate_pcaf(p, FieldState.zero(BIG), 0.0, dom)
    assert c.domain_k == 2
    if c.kill_index is None:
        pytest.skip("path never left E_2 in horizon")
    k = c.kill_index
    # the exit step's own increment still counts, later ones are zero
    assert c.values[k] > c.values[k - 1]
    assert np.all(c.values[k:] == c.values[k])
    assert c.sigma() == pytest.approx(p.times[k])


def test_truncation_on_small_grid():
    small = GridSpec.square(0.2, 8)
    p = simulate_path((0.05, 0.0), 1.0, 1e-3, 2.0, 6)
    c = accumulate_pcaf(p, FieldState.zero(small), 0.0)
    assert c.truncated
    assert c.kill_index is not None
    assert c.total < 1.0 - 1e-6
    assert np.all(c.values[c.kill_index:] == c.total)


def test_accumulate_contracts():
    p_out = simulate_path((3.0, 0.0), 0.01, 1e-4, 2.0, 2)
    with pytest.raises(ContractError):
        accumulate_pcaf(p_out, FieldState.zero(GridSpec.square(2.0, 8)), 0.0)
    with pytest.raises(ContractError):
        accumulate_pcaf(p_out, FieldState.zero(BIG), 0.0, AnnulusDomain(2))


def test_consistency_exact_zero(sampler_default64):
    field = sampler_default64.field(6, 88, 0)
    for i in range(10):
        p = simulate_path((1.0, 0.0), 1.0, 1e-3, 2.0, 88, stream_index=i)
        res = consistency_check(p, field, 0.5, 2)
        assert res.passed
        assert res.residual == 0.0
        assert res.n_compared > 0


def test_plateau_inversion():
    c = _synthetic_clock([1.0, 0.0, 0.0, 1.0])
    # F sits at 1 on [1, 3]; the right-continuous inverse skips to the
    # start of the next rise
    assert invert_clock(c, 1.0) == 3.0
    assert invert_clock(c, 0.5) == 0.5
    assert invert_clock(c, 1.5) == 3.5
    assert invert_clock(c, 0.0) == 0.0


def test_inversion_domain_errors():
    c = _synthetic_clock([1.0, 1.0])
    with pytest.raises(ClockExhaustedError):
        invert_clock(c, 2.0)
    with pytest.raises(ClockExhaustedError):
        invert_clock(c, 5.0)
    with pytest.raises(DomainError):
        invert_clock(c, -0.1)
    with pytest.raises(DomainError):
        invert_clock(c, math.nan)


@settings(max_examples=60, deadline=None)
@given(inc=st.lists(st.one_of(st.just(0.0), st.floats(0.01, 10.0)),
                    min_size=2, max_size=40),
       frac=st.floats(0.0, 1.0, exclude_max=True))
def test_inversion_round_trip(inc, frac):
    assume(sum(inc) > 0.01)
    c = _synthetic_clock(inc, dt=0.25)
    tau = frac * c.total
    assume(tau < c.total)
    s = invert_clock(c, tau)
    back = float(np.interp(s, c.times, c.values))
    assert abs(back - tau) <= 1e-10 * (1.0 + tau)


def test_time_change_identity():
    p = simulate_path((1.0, 0.0), 1.0, 1e-3, 2.0, 42)
    c = accumulate_pcaf(p, FieldState.zero(BIG), 0.0)
    z = time_change(p, c, p.times[:-1])
    assert np.max(np.abs(z - p.points[:-1])) <= 1e-10


def test_time_change_contracts():
    p = simulate_path((1.0, 0.0), 0.1, 1e-3, 2.0, 42)
    q = simulate_path((1.0, 0.0), 0.1, 1e-3, 2.0, 42, stream_index=1)
    short = simulate_path((1.0, 0.0), 0.05, 1e-3, 2.0, 42)
    c = accumulate_pcaf(p, FieldState.zero(BIG), 0.0)
    with pytest.raises(ContractError):
        time_change(q, c, np.array([0.01]))
    with pytest.raises(ContractError):
        time_change(short, c, np.array([0.01]))
    with pytest.raises(ClockExhaustedError):
        time_change(p, c, np.array([0.2]))
