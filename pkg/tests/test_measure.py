import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import body
from bmk.body import dilate, make_body
from bmk.measure import (
    cone_volume_density,
    ma_density,
    verify_bm,
    verify_lp_bm,
    verify_lp_minkowski,
    verify_p_bm,
    volume,
)
from bmk.sphere import integrate

# frozen from oracles.ellipse_perimeter(2, 1) (complete elliptic integral)
ELLIPSE_21_PERIMETER = 9.688448220547675
# frozen from oracles.smoothed_cube_area_2d(4, 0.25) (adaptive quadrature)
ROUNDED_SQUARE_Q4_AREA = 4.191896544082217


def test_ellipse_area_and_perimeter():
    K = body("ellipsoid", 2)
    assert volume(K) == pytest.approx(oracles.ellipsoid_volume([2, 1]), rel=1e-14)
    assert integrate(ma_density(K), K.grid) == pytest.approx(ELLIPSE_21_PERIMETER, rel=1e-13)


def test_ellipsoid_volume_and_surface_area():
    K = body("ellipsoid", 3)
    assert volume(K) == pytest.approx(oracles.ellipsoid_volume([2, 1, 1]), rel=1e-7)
    area = oracles.ellipsoid_surface_area(2.0, 1.0, 1.0)
    assert integrate(ma_density(K), K.grid) == pytest.approx(area, rel=1e-7)


def test_rounded_square_area():
    assert volume(body("smoothed_cube", 2)) == pytest.approx(ROUNDED_SQUARE_Q4_AREA, rel=1e-8)


@pytest.mark.parametrize("dim", [2, 3])
def test_cone_volume_density_is_a_probability_density(dim):
    K = body("smoothed_cube_q8", dim)
    dens = cone_volume_density(K)
    assert np.all(dens > 0)
    assert integrate(dens, K.grid) == pytest.approx(1.0, abs=1e-13)


def test_bm_report_shape_and_endpoints():
    rep = verify_bm(body("ellipsoid", 2), body("smoothed_cube", 2))
    assert rep.passed and len(rep.records) == 11
    assert rep.metadata["endpoint_max_gap"] < 1e-13
    assert rep.margin > 0 and not rep.equality_flag
    js = rep.to_json()
    assert js["pass"] is True and "records" not in js
    assert {"name", "K", "L", "lambda", "margin"} <= set(rep.rows()[0])


def test_bm_of_a_body_with_itself_is_equality():
    K = body("perturbed_ball", 3)
    rep = verify_bm(K, K)
    assert rep.passed and rep.equality_flag


def test_firey_ball_pair():
    r1 = make_body({"name": "a", "kind": "ball", "params": {"radius": 1.0}}, dim=2)
    r2 = make_body({"name": "b", "kind": "ball", "params": {"radius": 2.0}}, dim=2)
    rep = verify_lp_bm(r1, r2, 2.0, [0.5])
    lhs, rhs = oracles.firey_ball_pair(1.0, 2.0, 2.0, 0.5, 2)
    assert lhs == pytest.approx(2.5 * np.pi) and rhs == pytest.approx(2 * np.pi)
    assert abs(rep.lhs - lhs) < 1e-10 and abs(rep.rhs - rhs) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", [0.3, 0.5, 2.0])
def test_dilates_are_equality_cases(dim, p):
    K = body("smoothed_cube", dim)
    cK = dilate(K, 1.7)
    rep = verify_p_bm(K, cK, p, [0.2, 0.5, 0.8])
    assert max(abs(r["margin"]) for r in rep.records) < 1e-8
    assert abs(verify_lp_minkowski(K, cK, p).margin) < 1e-8


def test_lp_bm_planar_pairs_hold():
    for p in (0.0, 0.5):
        rep = verify_lp_bm(body("ellipse_a3", 2), body("smoothed_cube_q8", 2), p, np.linspace(0, 1, 5))
        assert rep.passed and rep.margin > 1e-4


def test_verifier_argument_checks():
    K = body("ball", 2)
    with pytest.raises(ValueError):
        verify_p_bm(K, K, 1.0)
    with pytest.raises(ValueError):
        verify_bm(K, K, [1.2])
    with pytest.raises(ValueError):
        verify_lp_minkowski(K, K, 0.0)


@given(a=st.floats(1.0, 4.0), b=st.floats(1.0, 4.0), c=st.floats(0.5, 3.0))
@settings(max_examples=12, deadline=None)
def test_bm_holds_for_random_ellipse_pairs(a, b, c):
    K = make_body({"name": "K", "kind": "ellipsoid", "params": {"semiaxes": [a, 1.0]}}, dim=2)
    L = make_body({"name": "L", "kind": "ellipsoid", "params": {"semiaxes": [c, b]}}, dim=2)
    assert verify_bm(K, L, np.linspace(0, 1, 7)).margin >= -1e-9


@given(a=st.floats(1.0, 3.0), p=st.floats(1.0, 4.0))
@settings(max_examples=12, deadline=None)
def test_lp_minkowski_inequality_for_p_at_least_one(a, p):
    K = body("smoothed_cube", 2)
    L = make_body({"name": "L", "kind": "ellipsoid", "params": {"semiaxes": [a, 1.0]}}, dim=2)
    assert verify_lp_minkowski(K, L, p).margin >= -1e-9
