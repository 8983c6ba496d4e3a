import numpy as np
import pytest
from scipy import special

import oracles
from conftest import body
from bmk.body import (
    CandidateField,
    CatalogEntry,
    _polytope_volume,
    body_from_field,
    dilate,
    lp_combination,
    make_body,
    mean_jets,
    naive_volume,
    wulff_body,
    wulff_vertices,
)
from bmk.kernels import support_max
from bmk.errors import CatalogError, ConvexityViolation, PositivityViolation, SymmetryViolation
from bmk.measure import volume
from bmk.sphere import analyze, constant_field, mode_field, working_grid


def test_ellipse_curvature_radius_matches_closed_form():
    K = body("ellipsoid", 2)
    ref = oracles.ellipse_radius_of_curvature(2.0, 1.0, K.grid.theta)
    assert np.abs(K.detW - ref).max() < 1e-10
    assert np.abs(K.h - oracles.ellipse_support(2.0, 1.0, K.grid.theta)).max() < 1e-12


def test_ellipsoid_density_matches_closed_form():
    K = body("ellipsoid", 3)
    ref = oracles.ellipsoid_gauss_curvature_inverse([2.0, 1.0, 1.0], K.grid.nodes)
    assert np.abs(K.detW - ref).max() / ref.max() < 1e-5


def test_ball_jets_are_trivial():
    for dim in (2, 3):
        K = body("ball", dim)
        assert np.abs(K.h - 1).max() < 1e-12
        assert np.abs(K.detW - 1).max() < 1e-10
        assert K.convexity_margin == pytest.approx(1.0, abs=1e-10)


def test_perturbed_ball_amplitudes_are_unit_peak_harmonics():
    K = body("perturbed_ball", 2)
    t = K.grid.theta
    assert np.abs(K.h - (1 + 0.1 * np.cos(2 * t) + 0.02 * np.sin(4 * t))).max() < 1e-14
    entry = CatalogEntry("zonal", "perturbed_ball", {"amplitudes": [{"l": 2, "m": 0, "a": 0.1}]})
    Z = make_body(entry, dim=3)
    z = Z.grid.nodes[:, 2]
    assert np.abs(Z.h - (1 + 0.1 * special.eval_legendre(2, z))).max() < 1e-14


def test_perturbed_ball_rejects_odd_and_malformed_modes():
    with pytest.raises(SymmetryViolation):
        make_body({"name": "x", "kind": "perturbed_ball",
                   "params": {"amplitudes": [{"l": 3, "m": 3, "a": 0.1}]}}, dim=2)
    with pytest.raises(CatalogError):
        make_body({"name": "x", "kind": "perturbed_ball",
                   "params": {"amplitudes": [{"l": 2, "m": 1, "a": 0.1}]}}, dim=2)
    with pytest.raises(ConvexityViolation):
        make_body({"name": "x", "kind": "perturbed_ball",
                   "params": {"amplitudes": [{"l": 4, "m": 4, "a": 0.2}]}}, dim=2)


def test_unrounded_smoothed_square_is_not_strictly_convex():
    with pytest.raises(ConvexityViolation):
        make_body({"name": "sq", "kind": "smoothed_cube", "params": {"q": 8}}, dim=2)
    K = make_body({"name": "sq", "kind": "smoothed_cube", "params": {"q": 8, "rounding": 0.25}}, dim=2)
    assert K.convexity_margin > 0.2


def test_catalog_entry_validation():
    with pytest.raises(CatalogError):
        CatalogEntry.from_json({"name": "a", "kind": "torus"})
    with pytest.raises(CatalogError):
        CatalogEntry.from_json({"kind": "ball"})
    with pytest.raises(CatalogError):
        make_body({"name": "e", "kind": "ellipsoid", "params": {"semiaxes": [1, -1]}}, dim=2)
    with pytest.raises(CatalogError):
        make_body({"name": "e", "kind": "ellipsoid", "params": {"semiaxes": [1, 2, 3]}}, dim=2)
    with pytest.raises(CatalogError):
        make_body({"name": "c", "kind": "smoothed_cube", "params": {"q": 3}}, dim=2)


def test_body_from_field_validation():
    with pytest.raises(PositivityViolation):
        body_from_field(constant_field(2, 8, -1.0))
    with pytest.raises(SymmetryViolation):
        body_from_field(constant_field(2, 8) + mode_field(2, 8, 1, 1, 0.1))


def test_mean_jets_match_finite_differences():
    K, L = body("ellipsoid", 2), body("smoothed_cube", 2)
    eps = 1e-4
    for p in (0.0, 0.5, 2.0):
        lam = 0.3
        jets = mean_jets(K.jets, L.jets, p, lam)

        def G(t):
            pts = np.stack([np.cos(t), np.sin(t)], axis=1)
            a, b = K.field.evaluate(pts), L.field.evaluate(pts)
            if p == 0:
                return a ** (1 - lam) * b ** lam
            return ((1 - lam) * a ** p + lam * b ** p) ** (1 / p)

        t = K.grid.theta[::7]
        fd2 = (G(t + eps) - 2 * G(t) + G(t - eps)) / eps ** 2
        fd1 = (G(t + eps) - G(t - eps)) / (2 * eps)
        assert np.abs(jets.value[::7] - G(t)).max() < 1e-13
        assert np.abs(jets.grad[::7, 0] - fd1).max() < 1e-7
        assert np.abs(jets.hess[::7, 0, 0] - fd2).max() < 1e-5


def test_lp_combination_validation():
    K = body("ball", 2)
    with pytest.raises(ValueError):
        lp_combination(K, K, 1.0, 0.5)
    with pytest.raises(ValueError):
        lp_combination(K, K, 0.5, 1.5)


@pytest.mark.parametrize("dim, tol", [(2, 1e-12), (3, 1e-11)])
def test_wulff_body_of_a_support_function_is_the_body(dim, tol):
    K = body("smoothed_cube", dim)
    W = wulff_body(CandidateField(K.h, K.grid), name="w")
    assert np.abs(W.h - K.h).max() < tol
    assert volume(W) == pytest.approx(volume(K), rel=1e-10)


@pytest.mark.parametrize("dim", [2, 3])
def test_wulff_polytope_matches_halfspace_intersection(dim):
    grid = working_grid(dim)
    g = 1.0 + 0.5 * np.exp(-200.0 * (1.0 - np.abs(grid.nodes[:, 0])))
    normals, _ = wulff_vertices(g, grid)
    _, vol = oracles.halfspace_polytope(grid.nodes, g)
    assert _polytope_volume(normals, dim) == pytest.approx(vol, rel=1e-12)
    hw = support_max(grid.nodes, normals)
    assert np.all(hw <= g + 1e-12)
    assert np.max(g - hw) > 0.1


def test_naive_volume_overcounts_nonconvex_wulff_function():
    K = body("ball", 2)
    g = lp_combination(K, body("ellipse_a5", 2), 0.0, 0.5)
    W = wulff_body(g)
    assert naive_volume(g) == pytest.approx(volume(W), rel=1e-2)


@pytest.mark.parametrize("dim", [2, 3])
def test_dilation_scales_volume(dim):
    K = body("perturbed_ball", dim)
    assert volume(dilate(K, 1.7)) == pytest.approx(1.7 ** dim * volume(K), rel=1e-13)


def test_body_from_projection_of_nodal_values():
    grid = working_grid(2)
    K = body_from_field(analyze(oracles.ellipse_support(3.0, 1.0, grid.theta), grid))
    assert K.field.even and K.convexity_margin > 0
