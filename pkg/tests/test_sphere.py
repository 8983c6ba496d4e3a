import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bmk import kernels
from bmk.errors import GridResolutionError, ShapeMismatch, SymmetryViolation
from bmk.sphere import (
    HarmonicBasis,
    SpectralField,
    analyze,
    build_grid,
    constant_field,
    integrate,
    mode_field,
    random_even_field,
    synthesize,
    tabulate,
    working_grid,
)


@pytest.mark.parametrize("dim", [2, 3])
def test_working_grid_is_cached_per_band_limit(dim):
    assert working_grid(dim) is working_grid(dim, working_grid(dim).band_limit)


@pytest.mark.parametrize("dim, L", [(2, 12), (3, 8)])
def test_basis_orthonormal_on_working_grid(dim, L):
    grid = working_grid(dim, L)
    V = tabulate(HarmonicBasis(dim, L), grid).values
    G = V.T @ (grid.weights[:, None] * V)
    assert np.abs(G - np.eye(G.shape[0])).max() < 1e-13


def test_quadrature_integrates_constants():
    assert integrate(np.ones(working_grid(2).size), working_grid(2)) == pytest.approx(2 * np.pi, abs=1e-13)
    assert integrate(np.ones(working_grid(3).size), working_grid(3)) == pytest.approx(4 * np.pi, abs=1e-12)


def test_circle_basis_matches_fourier_oracle():
    grid = working_grid(2, 10)
    basis = HarmonicBasis(2, 10)
    V = tabulate(basis, grid).values
    for idx, (k, m) in enumerate(basis.labels):
        ref = oracles.circle_basis(k, 1 if m >= 0 else -1, grid.theta)
        assert np.abs(V[:, idx] - ref).max() < 1e-14


def test_sphere_basis_matches_scipy_harmonics():
    grid = working_grid(3, 8)
    basis = HarmonicBasis(3, 8)
    V = tabulate(basis, grid).values
    for idx, (l, m) in enumerate(basis.labels):
        ref = oracles.real_sph_harm(l, m, grid.theta, grid.phi)
        assert np.abs(V[:, idx] - ref).max() < 1e-12, (l, m)


@pytest.mark.parametrize("dim, L", [(2, 10), (3, 7)])
def test_trace_of_hessian_is_laplacian_eigenvalue(dim, L):
    grid = working_grid(dim, L)
    basis = HarmonicBasis(dim, L)
    t = tabulate(basis, grid)
    lap = np.trace(t.hess, axis1=1, axis2=2)
    expected = np.array([oracles.laplacian_eigenvalue(dim, l) for l, _ in basis.labels])
    assert np.abs(lap - t.values * expected).max() < 1e-10


def test_hessian_matches_geodesic_second_differences(rng):
    L = 6
    f = SpectralField(3, L, rng.normal(size=HarmonicBasis(3, L).size))
    grid = working_grid(3, L)
    jets = synthesize(f, grid)
    eps = 1e-4
    for q in rng.choice(grid.size, 12, replace=False):
        x = grid.nodes[q]
        e = grid.frames[q]
        for a, b in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]:
            v = (a * e[0] + b * e[1]) / np.hypot(a, b)
            pts = np.array([np.cos(s) * x + np.sin(s) * v for s in (-eps, 0.0, eps)])
            vals = f.evaluate(pts)
            fd = (vals[0] - 2 * vals[1] + vals[2]) / eps ** 2
            H = jets.hess[q]
            c = np.array([a, b]) / np.hypot(a, b)
            assert abs(c @ H @ c - fd) < 2e-5 * max(1.0, abs(fd))


def test_gradient_matches_directional_derivative(rng):
    f = SpectralField(3, 5, rng.normal(size=HarmonicBasis(3, 5).size))
    grid = working_grid(3, 5)
    jets = synthesize(f, grid)
    eps = 1e-6
    for q in rng.choice(grid.size, 8, replace=False):
        x, e = grid.nodes[q], grid.frames[q]
        for i in range(2):
            pts = np.array([np.cos(s) * x + np.sin(s) * e[i] for s in (-eps, eps)])
            vals = f.evaluate(pts)
            assert abs((vals[1] - vals[0]) / (2 * eps) - jets.grad[q, i]) < 1e-7


def test_legendre_table_matches_scipy():
    from scipy import special

    theta = np.linspace(0.1, 3.0, 17)
    P, dP = kernels.legendre_table(12, np.cos(theta))
    for l in range(13):
        for m in range(l + 1):
            ref = special.sph_harm_y(l, m, theta, 0.0).real * (-1.0) ** m
            assert np.abs(P[l, m] - ref).max() < 1e-12


@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([2, 3]))
@settings(max_examples=15, deadline=None)
def test_analyze_synthesize_round_trip(seed, dim):
    rng = np.random.default_rng(seed)
    L = 9 if dim == 2 else 6
    f = SpectralField(dim, L, rng.uniform(-1, 1, HarmonicBasis(dim, L).size))
    grid = working_grid(dim, L)
    g = analyze(f.values(grid), grid)
    assert np.abs(g.coefficients - f.coefficients).max() < 1e-12


def test_analyze_detects_parity():
    grid = working_grid(3, 6)
    even = constant_field(3, 6) + mode_field(3, 6, 2, 1, 0.3)
    assert analyze(even.values(grid), grid).even
    odd = even + mode_field(3, 6, 3, -2, 0.1)
    assert not analyze(odd.values(grid), grid).even


def test_even_field_rejects_odd_modes():
    c = np.zeros(HarmonicBasis(2, 4).size)
    c[1] = 1.0
    with pytest.raises(SymmetryViolation):
        SpectralField(2, 4, c, even=True)


def test_field_algebra_and_band_limit_padding():
    a = mode_field(2, 8, 2, 2, 1.0)
    b = constant_field(2, 8, 3.0)
    grid = working_grid(2, 8)
    assert np.allclose((a + 2 * b - b).values(grid), a.values(grid) + b.values(grid))
    wide = a.with_band_limit(16)
    assert np.allclose(wide.values(working_grid(2, 16)), a.evaluate(working_grid(2, 16).nodes))
    with pytest.raises(ShapeMismatch):
        a + constant_field(2, 9)


def test_evaluate_agrees_with_grid_values(rng):
    for dim, L in ((2, 10), (3, 6)):
        f = random_even_field(dim, L, rng, min_degree=0, max_degree=L)
        grid = working_grid(dim, L)
        assert np.abs(f.evaluate(grid.nodes) - f.values(grid)).max() < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_antipodes(dim):
    grid = working_grid(dim, 6)
    assert np.abs(grid.nodes[grid.antipodes()] + grid.nodes).max() < 1e-14


def test_grid_validation():
    with pytest.raises(GridResolutionError):
        build_grid(2, 10, band_limit=5)
    with pytest.raises(GridResolutionError):
        build_grid(3, 4, band_limit=6)
    with pytest.raises(ValueError):
        working_grid(4)


def test_random_even_field_degrees(rng):
    f = random_even_field(3, 10, rng, min_degree=2, max_degree=4)
    deg = f.basis.degrees
    nz = deg[f.coefficients != 0]
    assert f.even and set(nz) <= {2, 4}
