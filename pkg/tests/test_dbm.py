import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from liouville.dbm import (AnnulusDomain, GUARD_RADIUS, MAX_DT,
                           annulus_exit_times, conservativeness_diagnostic,
                           drift, kill_path, simulate_path)
from liouville.errors import ContractError, DomainError
from liouville.rng import substream


def test_drift_formula():
    b = drift(np.array([[3.0, 4.0]]), 2.0)
    # alpha/2 * x / |x|^2 with alpha = 2: x / 25
    assert np.allclose(b, [[3.0 / 25.0, 4.0 / 25.0]], atol=0)
    b = drift(np.array([1.0, 0.0]), 3.0)
    assert b.shape == (2,)
    assert np.allclose(b, [1.5, 0.0], atol=0)


def test_drift_rejects_origin():
    with pytest.raises(DomainError):
        drift(np.array([[0.0, 0.0]]), 2.0)
    with pytest.raises(DomainError):
        drift(np.array([[1.0, 0.0], [0.0, 0.0]]), 2.0)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(0.1, 10.0), theta=st.floats(0.0, 2 * math.pi),
       alpha=st.floats(-1.5, 6.0))
def test_drift_matches_potential_gradient(r, theta, alpha):
    # b = grad of (alpha/2) log |x|; check against central differences
    assume(abs(alpha) > 0.05)
    x = np.array([r * math.cos(theta), r * math.sin(theta)])
    h = 1e-6 * max(1.0, r)
    got = drift(x, alpha)
    fd = np.empty(2)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd[axis] = (alpha / 2) * (np.log(np.linalg.norm(x + e))
                                  - np.log(np.linalg.norm(x - e))) / (2 * h)
    assert np.linalg.norm(got - fd) <= 1e-6 * max(np.linalg.norm(got), 1e-3)


def test_simulate_validations():
    with pytest.raises(DomainError):
        simulate_path((0.0, 0.0), 1.0, 1e-4, 2.0, master_seed=1)
    with pytest.raises(DomainError):
        simulate_path((1.0, 0.0), 1.0, 2e-3, 2.0, master_seed=1)
    with pytest.raises(DomainError):
        simulate_path((1.0, 0.0), 1.0, -1e-4, 2.0, master_seed=1)
    with pytest.raises(DomainError):
        simulate_path((1.0, 0.0), 1.05e-4, 1e-4, 2.0, master_seed=1)
    with pytest.raises(DomainError):
        simulate_path((1.0, 0.0), 1.0, 1e-4, -2.0, master_seed=1)


def test_simulate_shapes_and_determinism():
    p1 = simulate_path((1.0, 0.0), 0.02, 1e-4, 2.0, 7, stream_index=3)
    p2 = simulate_path((1.0, 0.0), 0.02, 1e-4, 2.0, 7, stream_index=3)
    p3 = simulate_path((1.0, 0.0), 0.02, 1e-4, 2.0, 7, stream_index=4)
    n = 201
    assert p1.points.shape == (n, 2)
    assert p1.times.shape == (n,)
    assert p1.times[0] == 0.0 and p1.times[-1] == pytest.approx(0.02)
    assert np.array_equal(p1.points, p2.points)
    assert not np.array_equal(p1.points, p3.points)
    assert p1.guard_events == ()
    assert p1.flagged_steps == ()


def test_noise_override():
    steps = 50
    rng = substream(11, "path", 0)
    noise = rng.standard_normal((steps, 2))
    pa = simulate_path((1.0, 0.0), steps * 1e-4, 1e-4, 2.0, 11)
    pb = simulate_path((1.0, 0.0), steps * 1e-4, 1e-4, 2.0, 11, noise=noise)
    assert np.array_equal(pa.points, pb.points)
    with pytest.raises(ContractError):
        simulate_path((1.0, 0.0), steps * 1e-4, 1e-4, 2.0, 11,
                      noise=noise[:, :1])


def test_zero_noise_is_deterministic_flow():
    steps = 100
    dt = 1e-4
    noise = np.zeros((steps, 2))
    p = simulate_path((1.0, 0.0), steps * dt, dt, 2.0, 0, noise=noise)
    # Euler flow of dx = x/|x|^2 dt from (1,0): stays on the x axis,
    # r' = 1/r so r(t) ~ sqrt(1 + 2t)
    assert np.allclose(p.points[:, 1], 0.0, atol=0)
    r_end = p.points[-1, 0]
    assert r_end == pytest.approx(math.sqrt(1 + 2 * steps * dt), rel=1e-3)


def test_annulus_domain():
    with pytest.raises(DomainError):
        AnnulusDomain(1)
    with pytest.raises(DomainError):
        AnnulusDomain(2.5)
    dom = AnnulusDomain(2)
    assert dom.inner == 0.5 and dom.outer == 2.0
    assert dom.contains(np.array([[1.0, 0.0]]))[0]
    # open annulus: boundary excluded
    assert not dom.contains(np.array([[2.0, 0.0]]))[0]
    assert not dom.contains(np.array([[0.5, 0.0]]))[0]
    assert not dom.contains(np.array([[0.0, 0.0]]))[0]


def test_exit_time_semantics():
    p = simulate_path((1.0, 0.0), 0.5, 1e-4, 2.0, 21, annuli=(2, 10))
    d2, s2 = p.exit_times[2]
    # E_10 is huge, a path of horizon 0.5 should not leave it
    d10, s10 = p.exit_times[10]
    assert math.isinf(d10) and math.isinf(s10)
    if math.isfinite(s2):
        assert d2 <= s2
        j = round(s2 / 1e-4)
        r = math.hypot(*p.points[j])
        assert r <= 0.5 or r >= 2.0
    # start outside: first nonnegative exit is 0, first positive is not
    q = simulate_path((3.0, 0.0), 0.01, 1e-4, 2.0, 21, stream_index=1,
                      annuli=(2,))
    dq, sq = q.exit_times[2]
    assert dq == 0.0
    assert sq > 0.0


def test_annulus_exit_times_helper():
    p = simulate_path((1.0, 0.0), 0.2, 1e-4, 2.0, 5)
    for k in (2, 3):
        et = annulus_exit_times(p, AnnulusDomain(k))
        assert et.first_nonnegative <= et.first_positive


def test_kill_path_truncation():
    p = simulate_path((1.0, 0.0), 2.0, 1e-3, 2.0, 33, stream_index=2)
    dom = AnnulusDomain(2)
    killed = kill_path(p, dom)
    d, s = killed.exit_times[2]
    if math.isfinite(s):
        j = round(s / p.dt)
        # retained points all lie strictly before the exit step
        assert killed.points.shape[0] == j
        assert killed.times[-1] == pytest.approx(s - p.dt)
        assert dom.contains(killed.points).all()
    else:
        assert killed.points.shape[0] == p.points.shape[0]
    with pytest.raises(ContractError):
        kill_path(simulate_path((3.0, 0.0), 0.01, 1e-4, 2.0, 33,
                                stream_index=3), dom)


def test_kill_path_never_exits():
    p = simulate_path((1.0, 0.0), 0.01, 1e-4, 2.0, 8)
    killed = kill_path(p, AnnulusDomain(10))
    assert killed.points.shape == p.points.shape
    d, s = killed.exit_times[10]
    assert math.isinf(s)


def test_origin_guard_triggers():
    # start just inside the guard ball; the first step must be handled
    # by substeps and produce a finite, reproducible path
    x0 = (GUARD_RADIUS / 2, 0.0)
    p1 = simulate_path(x0, 0.005, 1e-4, 2.0, 77)
    p2 = simulate_path(x0, 0.005, 1e-4, 2.0, 77)
    assert p1.guard_events[:1] == (0,)
    assert np.isfinite(p1.points).all()
    assert np.array_equal(p1.points, p2.points)


def test_conservativeness_requires_ensemble():
    with pytest.raises(DomainError):
        conservativeness_diagnostic(100, 1.0, 1e-3, 2.0, ks=(2,),
                                    master_seed=1)


def test_conservativeness_small_run():
    rep = conservativeness_diagnostic(500, 0.5, 1e-3, 2.0, ks=(2, 3, 4),
                                      master_seed=451)
    assert rep.n_paths == 500
    assert rep.n_nonfinite == 0
    assert rep.monotone()
    probs = [rep.survival[k] for k in (2, 3, 4)]
    assert probs == sorted(probs)
    assert all(0.0 <= q <= 1.0 for q in probs)
    for k in (2, 3, 4):
        assert rep.survival_se[k] < 0.03
    assert rep.min_radius > 0.0
    assert rep.max_radius < math.inf


def test_max_dt_constant():
    assert MAX_DT == 1e-3
