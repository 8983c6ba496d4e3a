"""Aleksandrov's generalized eigenvalue problem for a support function.

The operator ``phi -> -U^{ij}(phi_;ij + phi delta_ij)`` is assembled in weak
form. Because the cofactor matrix of ``hess h + h I`` is divergence free,

    -int psi U^{ij}(phi_;ij + phi delta_ij) = int U^{ij} psi_;i phi_;j - int tr(U) psi phi,

which gives a symmetric stiffness matrix ``A``. The mass matrix is
``B[psi, phi] = int h^{-1} det(W) psi phi``. The pencil ``(A, B)`` is solved
densely with scipy's symmetric-definite driver.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla

from .errors import (
    AssemblyAsymmetry,
    CrossCheckMismatch,
    EigensolveFailure,
    StructureViolation,
)
from .sphere import HarmonicBasis, SpectralField, synthesize, tabulate

ZERO_TOL = 1e-6
SYMMETRY_TOL = 1e-8
CROSS_CHECK_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class Pencil:
    A: np.ndarray
    B: np.ndarray
    index: np.ndarray
    subspace: str
    body: object

    @property
    def basis(self):
        return self.body.field.basis

    @property
    def labels(self):
        labels = self.basis.labels
        return [labels[i] for i in self.index]

    def embed(self, vec):
        """Subspace coefficient vector -> full SpectralField."""
        c = np.zeros(self.basis.size)
        c[self.index] = vec
        return SpectralField(self.body.dim, self.body.band_limit, c,
                             even=bool(self.subspace == "even"))

    def restrict(self, field):
        return np.asarray(field.coefficients)[self.index]


def subspace_index(basis, subspace):
    if subspace == "full":
        return np.arange(basis.size)
    if subspace == "even":
        return basis.even_index
    raise ValueError(f"subspace must be 'full' or 'even', got {subspace!r}")


def weak_form(U, weights, table):
    """sum_q w_q (U^{ij} grad_i psi grad_j phi - tr U psi phi) over a basis table."""
    N, n, M = table.grad.shape
    G = table.grad
    UG = np.einsum("qij,qjm->qim", U * weights[:, None, None], G)
    A = G.reshape(N * n, M).T @ UG.reshape(N * n, M)
    trU = np.trace(U, axis1=1, axis2=2)
    A -= table.values.T @ ((weights * trU)[:, None] * table.values)
    return A


def mass_matrix(density, weights, table):
    return table.values.T @ ((weights * density)[:, None] * table.values)


def assemble_pencil(K, subspace="full"):
    basis = K.field.basis
    index = subspace_index(basis, subspace)
    table = tabulate(basis, K.grid).columns(index)
    A = weak_form(K.U, K.grid.weights, table)
    B = mass_matrix(K.detW / K.h, K.grid.weights, table)
    scale = max(1.0, float(np.abs(A).max()))
    asym = float(np.abs(A - A.T).max()) / scale
    if asym > SYMMETRY_TOL:
        raise AssemblyAsymmetry(f"stiffness asymmetry {asym:.2e}")
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    return Pencil(A, B, index, subspace, K)


def strong_form_projection(K, field, index=None):
    """Project the nodal values of -U^{ij}(phi_;ij + phi delta_ij) onto the basis."""
    jets = synthesize(field, K.grid)
    n = K.n
    Wphi = jets.hess + jets.value[:, None, None] * np.eye(n)
    Lphi = -np.einsum("qij,qij->q", K.U, Wphi)
    table = tabulate(K.field.basis, K.grid)
    proj = table.values.T @ (K.grid.weights * Lphi)
    return proj if index is None else proj[index]


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    lambda3: float
    negative_count: int
    kernel_dim: int
    subspace: str
    classification: dict = dc_field(default_factory=dict)
    residuals: dict = dc_field(default_factory=dict)

    def to_json(self):
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "lambda3": float(self.lambda3),
            "negative_count": int(self.negative_count),
            "kernel_dim": int(self.kernel_dim),
            "subspace": self.subspace,
            "flags": {k: bool(v) for k, v in self.classification.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def solve_spectrum(P, count=8):
    """Smallest ``count`` eigenpairs of the pencil, B-orthonormal."""
    if count < 3:
        raise ValueError("count must be >= 3")
    count = min(count, P.A.shape[0])
    try:
        vals, vecs = sla.eigh(P.A, P.B, subset_by_index=[0, count - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolveFailure(str(exc)) from exc
    negative = int(np.sum(vals < -ZERO_TOL))
    kernel = int(np.sum(np.abs(vals) <= ZERO_TOL))
    if P.subspace == "even":
        lam3 = float(vals[1])
    else:
        above = vals[vals > ZERO_TOL]
        if above.size == 0:
            raise EigensolveFailure("no eigenvalue above the zero group; raise count")
        lam3 = float(above[0])
    AV = P.A @ vecs
    BV = P.B @ vecs
    rq = np.einsum("ij,ij->j", vecs, AV) / np.einsum("ij,ij->j", vecs, BV)
    residuals = {
        "b_orthonormality": float(np.abs(vecs.T @ BV - np.eye(count)).max()),
        "rayleigh": float(np.abs(rq - vals).max()),
        "eigen_residual": float(np.abs(AV - BV * vals).max()),
    }
    return SpectrumResult(vals, vecs, lam3, negative, kernel, P.subspace, residuals=residuals)


def _full_count(K):
    return 1 + K.dim + 6


def third_eigenvalue(K, tol=CROSS_CHECK_TOL):
    """lambda_3 from the even-subspace solve, cross-checked on the full space.

    Returns ``(lambda3, satisfies)`` with ``satisfies = lambda3 >= 1 - 1e-8``.
    """
    even = solve_spectrum(assemble_pencil(K, "even"), 4)
    full = solve_spectrum(assemble_pencil(K, "full"), _full_count(K))
    if abs(even.lambda3 - full.lambda3) > tol:
        raise CrossCheckMismatch(
            f"{K.name}: even-subspace lambda3 {even.lambda3:.10g} vs full-space {full.lambda3:.10g}"
        )
    return even.lambda3, bool(even.lambda3 >= 1.0 - 1e-8)


def _b_angle(B, u, v):
    """Sine of the B-angle between u and v, via the projection residual."""
    r = u - (u @ B @ v) / (v @ B @ v) * v
    return float(np.sqrt(max(r @ B @ r, 0.0) / (u @ B @ u)))


def coordinate_functions(basis):
    """Coefficient vectors of x_1..x_d (the degree-one modes)."""
    cols = [i for i, (l, _) in enumerate(basis.labels) if l == 1]
    C = np.zeros((basis.size, len(cols)))
    C[cols, np.arange(len(cols))] = 1.0
    return C


def verify_structure(K, tol=1e-6, strict=True):
    """Check the low spectrum: one negative eigenvalue -n along h, kernel = linear functions."""
    P = assemble_pencil(K, "full")
    res = solve_spectrum(P, _full_count(K))
    n = K.n
    vals, vecs = res.eigenvalues, res.eigenvectors
    h = P.restrict(K.field)
    neg = vals < -ZERO_TOL
    kernel = np.abs(vals) <= ZERO_TOL
    residuals = {
        "negative_value_error": float(abs(vals[0] + n)),
        "negative_angle": _b_angle(P.B, vecs[:, 0], h),
    }
    R = sla.cholesky(P.B)
    if kernel.sum() > 0:
        C = coordinate_functions(P.basis)[P.index]
        residuals["kernel_angle"] = float(np.max(sla.subspace_angles(R @ vecs[:, kernel], R @ C)))
    else:
        residuals["kernel_angle"] = float("inf")
    flags = {
        "single_negative": bool(neg.sum() == 1),
        "negative_is_minus_n": residuals["negative_value_error"] < tol,
        "negative_along_h": residuals["negative_angle"] < tol,
        "kernel_dim_ok": bool(kernel.sum() == n + 1),
        "kernel_is_linear": residuals["kernel_angle"] < tol,
    }
    res.classification = flags
    res.residuals.update(residuals)
    if strict and not all(flags.values()):
        bad = [k for k, v in flags.items() if not v]
        raise StructureViolation(f"{K.name}: structure check failed: {', '.join(bad)}", residuals)
    return res
