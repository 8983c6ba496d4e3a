import numpy as np
import pytest

import oracles
from conftest import body
from bmk.errors import CrossCheckMismatch
from bmk.sphere import random_even_field
from bmk.spectrum import (
    assemble_pencil,
    solve_spectrum,
    strong_form_projection,
    subspace_index,
    third_eigenvalue,
    verify_structure,
)

STRUCTURE_BODIES = ["ball", "ellipsoid", "ellipse_a3", "smoothed_cube", "smoothed_cube_q8",
                    "perturbed_ball"]


@pytest.mark.parametrize("dim,count", [(2, 11), (3, 16)])
def test_ball_spectrum_matches_harmonic_oracle(dim, count):
    res = solve_spectrum(assemble_pencil(body("ball", dim), "full"), count)
    np.testing.assert_allclose(res.eigenvalues, oracles.ball_spectrum(dim, count), atol=1e-9)
    assert res.residuals["b_orthonormality"] < 1e-10


@pytest.mark.parametrize("name,dim", [("ball", 2), ("ellipsoid", 2), ("ellipse_a3", 2),
                                      ("ellipse_a5", 2), ("ball", 3), ("ellipsoid", 3)])
def test_ellipsoids_share_the_ball_third_eigenvalue(name, dim):
    lam3, ok = third_eigenvalue(body(name, dim))
    assert ok and lam3 == pytest.approx(oracles.ball_spectrum(dim, dim + 2)[-1], abs=1e-7)


@pytest.mark.parametrize("name", ["ellipse_a3", "ellipse_a5"])
def test_elongated_ellipsoid_third_eigenvalue_converges(name):
    errs = [abs(third_eigenvalue(body(name, 3, L))[0] - 4.0) for L in (24, 32, 40)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5 and errs[1] / errs[2] > 10


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("name", STRUCTURE_BODIES)
def test_low_spectrum_structure(name, dim):
    res = verify_structure(body(name, dim))
    assert all(res.classification.values())
    assert res.negative_count == 1 and res.kernel_dim == dim


@pytest.mark.parametrize("dim", [2, 3])
def test_even_and_full_third_eigenvalues_agree(dim):
    K = body("smoothed_cube", dim)
    even = solve_spectrum(assemble_pencil(K, "even"), 4).lambda3
    full = solve_spectrum(assemble_pencil(K, "full"), 1 + dim + 6).lambda3
    assert abs(even - full) < 1e-9
    assert even > 1.0


@pytest.mark.parametrize("dim", [2, 3])
def test_weak_form_matches_strong_form(dim, rng):
    K = body("perturbed_ball", dim)
    P = assemble_pencil(K, "even")
    phi = random_even_field(dim, K.band_limit // 2, rng).with_band_limit(K.band_limit)
    weak = P.A @ P.restrict(phi)
    strong = strong_form_projection(K, phi, P.index)
    assert np.abs(weak - strong).max() < 1e-8 * np.abs(strong).max()


def test_pencil_is_symmetric_and_mass_positive():
    P = assemble_pencil(body("smoothed_cube_q8", 3), "full")
    assert np.array_equal(P.A, P.A.T)
    assert np.linalg.eigvalsh(P.B).min() > 0


def test_subspace_validation():
    K = body("ball", 2)
    with pytest.raises(ValueError):
        subspace_index(K.field.basis, "odd")
    with pytest.raises(ValueError):
        solve_spectrum(assemble_pencil(K, "even"), 2)


def test_cross_check_reports_mismatch():
    with pytest.raises(CrossCheckMismatch):
        third_eigenvalue(body("smoothed_cube", 2), tol=-1.0)
