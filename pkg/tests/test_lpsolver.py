import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import body
from bmk.errors import ContinuationStall, PositivityViolation, ShapeMismatch
from bmk.lpsolver import (
    NEWTON_TOL,
    NodalSource,
    RoundTripSource,
    Schedule,
    homotopy_solve,
    linearized_check_at_one,
    monitors,
    newton_solve,
    residual,
    solve,
    uniqueness_probe,
)
from bmk.sphere import constant_field, mode_field, working_grid


def _bumped(dim, L=16):
    return constant_field(dim, L) + mode_field(dim, L, 2, 2, 0.1)


@pytest.mark.parametrize("dim,expected", [(2, 2 - 2 ** -0.5), (3, 4 - 2 ** -0.5)])
def test_residual_of_a_constant(dim, expected):
    u = constant_field(dim, 8, 2.0)
    np.testing.assert_allclose(residual(u, 1.0, 0.5), expected, rtol=1e-14)


@pytest.mark.parametrize("dim", [2, 3])
def test_newton_recovers_the_unit_constant(dim):
    res = newton_solve(1.0, 0.5, constant_field(dim, 8, 1.1))
    assert res.residual_sup < NEWTON_TOL
    assert np.abs(res.solution.coefficients[1:]).max() < 1e-12
    assert np.abs(residual(res.solution, 1.0, 0.5)).max() < NEWTON_TOL
    assert res.history[0] > res.history[-1]


def test_newton_is_idle_at_a_solution():
    res = newton_solve(1.0, 0.9, constant_field(2, 8))
    assert res.iterations == 0 and res.residual_sup == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_homotopy_with_unit_source_stays_at_one(dim):
    trace = homotopy_solve(1.0, 0.3, dim=dim, band_limit=8)
    assert trace.converged and trace.rejected == 0
    assert trace.steps[-1].t == 1.0
    assert all(s.newton_iters == 0 for s in trace.steps)
    assert all(abs(s.bound_low - 1) < 1e-14 and abs(s.bound_high - 1) < 1e-14 for s in trace.steps)


@pytest.mark.parametrize("dim", [2, 3])
def test_round_trip_recovers_the_support_function(dim):
    h = body("perturbed_ball", dim, 16).field
    res = solve(RoundTripSource(h, 0.4), 0.4)
    assert np.abs(res.solution.coefficients - h.coefficients).max() < 1e-8
    assert res.iterations == 0
    assert res.certificate < 10 * NEWTON_TOL
    steps = res.trace.steps
    assert all(s.residual_sup < NEWTON_TOL for s in steps[1:])
    assert steps[-1].nodal_residual_sup < NEWTON_TOL
    assert all(b.t > a.t for a, b in zip(steps, steps[1:]))


def test_spectral_source_solution_is_even_and_positive():
    res = solve(_bumped(2), 0.5)
    u = res.solution
    assert u.even
    assert np.all(u.coefficients[u.basis.odd_index] == 0.0)
    lo, hi, _ = monitors(u)
    assert 0 < lo < hi
    json.dumps(res.to_json())
    json.dumps(res.trace.to_json())


@pytest.mark.parametrize("dim", [2, 3])
def test_linearized_multipliers_match_oracle(dim):
    chk = linearized_check_at_one(0.5, dim)
    np.testing.assert_allclose(chk.multipliers[:4], oracles.linearized_multipliers(dim, 0.5)[:4],
                               atol=1e-9)


@given(p_star=st.floats(0.01, 0.99), dim=st.sampled_from([2, 3]))
@settings(max_examples=15, deadline=None)
def test_linearization_at_one_is_never_singular(p_star, dim):
    assert linearized_check_at_one(p_star, dim, band_limit=8).smallest > 1.0 - 1e-9


def test_uniqueness_probe_finds_one_cluster():
    f = _bumped(2)
    rep = uniqueness_probe(f, 0.5, trials=5, noise=0.05, seed=1)
    assert rep.distinct == 1
    assert all(t.converged and t.seed_noise > 0 for t in rep.trials)


def test_uniqueness_probe_without_noise_is_idle():
    f = _bumped(2)
    base = solve(f, 0.5).solution
    rep = uniqueness_probe(f, 0.5, trials=3, noise=0.0, base=base, workers=2)
    assert rep.distinct == 1 and all(t.iterations == 0 for t in rep.trials)
    assert np.array_equal(rep.clusters[0].coefficients, base.coefficients)


def test_monitor_breach_stalls_the_continuation():
    trace = homotopy_solve(_bumped(2), 0.5, schedule=Schedule(c2_ceiling=0.5))
    assert not trace.converged and trace.failure
    with pytest.raises(ContinuationStall):
        trace.raise_if_failed()


def test_argument_checks():
    g = working_grid(2, 8)
    with pytest.raises(ValueError):
        homotopy_solve(1.0, 1.0, dim=2)
    with pytest.raises(ValueError):
        homotopy_solve(1.0, 0.5)
    with pytest.raises(ValueError):
        homotopy_solve(1.0, 0.5, p_star=0.0, dim=2)
    with pytest.raises(PositivityViolation):
        homotopy_solve(-1.0, 0.5, dim=2)
    with pytest.raises(ShapeMismatch):
        newton_solve(NodalSource(np.ones(g.size), g), 0.5, constant_field(2, 16))
    with pytest.raises(ValueError):
        newton_solve(1.0, 0.5, constant_field(2, 8), measure="l2")
    with pytest.raises(TypeError):
        residual(constant_field(2, 8), "one", 0.5)
    with pytest.raises(ValueError):
        uniqueness_probe(1.0, 0.5)
