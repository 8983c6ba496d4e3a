"""Discrete calculus on the circle S^1 and the sphere S^2.

Functions on the sphere are represented by coefficients in an orthonormal
real basis (Fourier modes on S^1, real spherical harmonics on S^2) and are
sampled on product quadrature grids:

* S^1: ``m`` uniform nodes, weights ``2*pi/m``.
* S^2: Gauss-Legendre nodes in ``cos(theta)`` times uniform longitudes; no
  node sits on a pole.

Basis functions are labelled ``(l, m)``. On S^1, ``(0, 0)`` is the constant,
``(k, k)`` is ``cos(k t)`` and ``(k, -k)`` is ``sin(k t)``. On S^2, ``m > 0``
carries ``cos(m phi)`` and ``m < 0`` carries ``sin(|m| phi)``. Every basis
function has unit L2 norm with respect to the surface measure, and parity
``(-1)**l`` under ``x -> -x``.

Derivatives are returned in the orthonormal tangent frame ``e_theta`` (and
``e_phi / sin(theta)`` on S^2); Hessians are covariant Hessians of the round
metric, so ``trace(hess) == laplacian``.
"""

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import GridResolutionError, ShapeMismatch, SymmetryViolation

SURFACE_MEASURE = {2: 2.0 * np.pi, 3: 4.0 * np.pi}
DEFAULT_BAND_LIMIT = {2: 64, 3: 24}
PARITY_TOL = 1e-13


def _check_dim(dim):
    if dim not in (2, 3):
        raise ValueError(f"ambient dimension must be 2 or 3, got {dim!r}")


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Quadrature nodes on S^{dim-1} with weights and tangent frames."""

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    theta: np.ndarray
    phi: np.ndarray | None
    shape: tuple
    band_limit: int

    @property
    def n(self):
        return self.dim - 1

    @property
    def size(self):
        return self.weights.size

    def antipodes(self):
        """Index of the node at ``-x`` for every node ``x``."""
        if self.dim == 2:
            m = self.shape[0]
            if m % 2:
                raise GridResolutionError("odd S^1 grids have no antipodal pairing")
            return (np.arange(m) + m // 2) % m
        nlat, nlon = self.shape
        if nlon % 2:
            raise GridResolutionError("odd longitude count has no antipodal pairing")
        i, j = np.divmod(np.arange(self.size), nlon)
        return (nlat - 1 - i) * nlon + (j + nlon // 2) % nlon


def build_grid(dim, resolution, band_limit=None, oversample=1):
    """Build a quadrature grid.

    On S^1, ``resolution`` is the node count before oversampling. On S^2 it
    is the design band limit ``L``: ``L + 2`` Gauss-Legendre latitudes and
    ``2L + 1`` longitudes, each multiplied by ``oversample``.

    ``band_limit`` (optional) is the band limit the caller intends to analyze
    on this grid; the grid must integrate products of two such fields exactly.
    """
    _check_dim(dim)
    if int(resolution) != resolution or resolution < 4:
        raise GridResolutionError(f"resolution must be an integer >= 4, got {resolution!r}")
    if oversample < 1:
        raise GridResolutionError("oversample must be >= 1")
    resolution = int(resolution)
    if dim == 2:
        m = resolution * oversample
        exact_limit = (m - 1) // 2
        if band_limit is None:
            band_limit = exact_limit
        elif band_limit > exact_limit:
            raise GridResolutionError(
                f"{m} nodes on S^1 cannot resolve band limit {band_limit} (need >= {2 * band_limit + 1})"
            )
        t = 2.0 * np.pi * np.arange(m) / m
        nodes = np.stack([np.cos(t), np.sin(t)], axis=1)
        frames = np.stack([-np.sin(t), np.cos(t)], axis=1)[:, None, :]
        weights = np.full(m, 2.0 * np.pi / m)
        return DirectionGrid(2, nodes, weights, frames, t, None, (m,), int(band_limit))

    if band_limit is None:
        band_limit = resolution
    elif band_limit > resolution:
        raise GridResolutionError(
            f"S^2 grid designed for band limit {resolution} cannot resolve band limit {band_limit}"
        )
    nlat = (resolution + 2) * oversample
    nlon = (2 * resolution + 1) * oversample
    if nlon % 2:
        nlon += 1
    x, wx = np.polynomial.legendre.leggauss(nlat)
    x = x[::-1].copy()
    wx = wx[::-1].copy()
    theta1 = np.arccos(x)
    phi1 = 2.0 * np.pi * np.arange(nlon) / nlon
    th, ph = np.meshgrid(theta1, phi1, indexing="ij")
    th = th.ravel()
    ph = ph.ravel()
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)
    nodes = np.stack([st * cp, st * sp, ct], axis=1)
    e_t = np.stack([ct * cp, ct * sp, -st], axis=1)
    e_p = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    frames = np.stack([e_t, e_p], axis=1)
    weights = np.repeat(wx, nlon) * (2.0 * np.pi / nlon)
    return DirectionGrid(3, nodes, weights, frames, th, ph, (nlat, nlon), int(band_limit))


def working_grid(dim, band_limit=None):
    """The oversampled grid every module computes on for a given band limit.

    Oversampling keeps pointwise products of band-limited fields (and the
    weak form of the Aleksandrov operator) integrated exactly. Repeated
    calls return the same grid object.
    """
    _check_dim(dim)
    if band_limit is None:
        band_limit = DEFAULT_BAND_LIMIT[dim]
    return _working_grid(dim, int(band_limit))


@lru_cache(maxsize=16)
def _working_grid(dim, band_limit):
    if dim == 2:
        return build_grid(2, 4 * band_limit + 4, band_limit=band_limit)
    return build_grid(3, band_limit, band_limit=band_limit, oversample=2)


# ----------------------------------------------------------------------------
# basis


@dataclass(frozen=True)
class HarmonicBasis:
    dim: int
    band_limit: int
    labels: tuple = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_dim(self.dim)
        labels = []
        if self.dim == 2:
            labels.append((0, 0))
            for k in range(1, self.band_limit + 1):
                labels += [(k, k), (k, -k)]
        else:
            for l in range(self.band_limit + 1):
                labels += [(l, m) for m in range(-l, l + 1)]
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def size(self):
        return len(self.labels)

    @property
    def degrees(self):
        return np.array([l for l, _ in self.labels])

    @property
    def even_index(self):
        return np.flatnonzero(self.degrees % 2 == 0)

    @property
    def odd_index(self):
        return np.flatnonzero(self.degrees % 2 == 1)

    def laplacian_eigenvalues(self):
        l = self.degrees.astype(float)
        return -l * l if self.dim == 2 else -l * (l + 1.0)

    def index(self, l, m):
        if self.dim == 2:
            if l == 0:
                return 0
            return 2 * l - 1 if m >= 0 else 2 * l
        return l * l + l + m


@dataclass(frozen=True, eq=False)
class BasisTable:
    """Basis values, frame gradients and covariant Hessians at grid nodes.

    Shapes: ``values (N, M)``, ``grad (N, n, M)``, ``hess (N, n, n, M)``.
    """

    values: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def columns(self, index):
        return BasisTable(self.values[:, index], self.grad[:, :, index], self.hess[:, :, :, index])


@lru_cache(maxsize=8)
def tabulate(basis, grid):
    if basis.dim != grid.dim:
        raise ShapeMismatch("basis and grid live on different spheres")
    if basis.dim == 2:
        return _tabulate_circle(basis, grid)
    return _tabulate_sphere(basis, grid)


def _tabulate_circle(basis, grid):
    t = grid.theta
    M = basis.size
    vals = np.empty((t.size, M))
    d1 = np.empty((t.size, M))
    d2 = np.empty((t.size, M))
    vals[:, 0] = 1.0 / np.sqrt(2.0 * np.pi)
    d1[:, 0] = 0.0
    d2[:, 0] = 0.0
    r = 1.0 / np.sqrt(np.pi)
    for k in range(1, basis.band_limit + 1):
        c, s = np.cos(k * t), np.sin(k * t)
        i = 2 * k - 1
        vals[:, i], d1[:, i], d2[:, i] = r * c, -k * r * s, -k * k * r * c
        vals[:, i + 1], d1[:, i + 1], d2[:, i + 1] = r * s, k * r * c, -k * k * r * s
    return BasisTable(vals, d1[:, None, :], d2[:, None, None, :])


def _tabulate_sphere(basis, grid):
    L = basis.band_limit
    nlat, nlon = grid.shape
    theta1 = grid.theta.reshape(nlat, nlon)[:, 0]
    phi1 = grid.phi.reshape(nlat, nlon)[0]
    x = np.cos(theta1)
    s = np.sin(theta1)
    cot = x / s
    P, dP = kernels.legendre_table(L, x)
    ll = np.arange(L + 1, dtype=float)[:, None, None]
    mm = np.arange(L + 1, dtype=float)[None, :, None]
    d2P = -cot * dP - (ll * (ll + 1.0) - mm * mm / (s * s)) * P

    M = basis.size
    shape = (nlat, nlon, M)
    f = np.empty(shape)
    ft = np.empty(shape)
    fp = np.empty(shape)
    ftt = np.empty(shape)
    ftp = np.empty(shape)
    fpp = np.empty(shape)
    for idx, (l, m) in enumerate(basis.labels):
        am = abs(m)
        if m == 0:
            T = np.ones_like(phi1)
            Tp = np.zeros_like(phi1)
        elif m > 0:
            T = np.sqrt(2.0) * np.cos(m * phi1)
            Tp = -m * np.sqrt(2.0) * np.sin(m * phi1)
        else:
            T = np.sqrt(2.0) * np.sin(am * phi1)
            Tp = am * np.sqrt(2.0) * np.cos(am * phi1)
        p, dp, d2p = P[l, am][:, None], dP[l, am][:, None], d2P[l, am][:, None]
        f[..., idx] = p * T
        ft[..., idx] = dp * T
        fp[..., idx] = p * Tp
        ftt[..., idx] = d2p * T
        ftp[..., idx] = dp * Tp
        fpp[..., idx] = -(am * am) * p * T
    s_ = s[:, None, None]
    cot_ = cot[:, None, None]
    N = nlat * nlon
    grad = np.empty((N, 2, M))
    grad[:, 0] = ft.reshape(N, M)
    grad[:, 1] = (fp / s_).reshape(N, M)
    hess = np.empty((N, 2, 2, M))
    hess[:, 0, 0] = ftt.reshape(N, M)
    off = ((ftp - cot_ * fp) / s_).reshape(N, M)
    hess[:, 0, 1] = off
    hess[:, 1, 0] = off
    hess[:, 1, 1] = (fpp / (s_ * s_) + cot_ * ft).reshape(N, M)
    return BasisTable(f.reshape(N, M), grad, hess)


# ----------------------------------------------------------------------------
# fields and jets


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of a real function on S^{dim-1} in the orthonormal basis."""

    dim: int
    band_limit: int
    coefficients: np.ndarray
    even: bool = False

    def __post_init__(self):
        _check_dim(self.dim)
        c = np.array(self.coefficients, dtype=float)
        basis = HarmonicBasis(self.dim, self.band_limit)
        if c.shape != (basis.size,):
            raise ShapeMismatch(f"expected {basis.size} coefficients, got shape {c.shape}")
        if self.even and np.any(c[basis.odd_index] != 0.0):
            raise SymmetryViolation("even field with nonzero odd-mode coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def basis(self):
        return HarmonicBasis(self.dim, self.band_limit)

    def with_band_limit(self, band_limit):
        """Zero-pad or truncate to another band limit."""
        new = HarmonicBasis(self.dim, band_limit)
        c = np.zeros(new.size)
        keep = min(new.size, self.coefficients.size)
        c[:keep] = self.coefficients[:keep]
        return SpectralField(self.dim, band_limit, c, self.even)

    def values(self, grid):
        return tabulate(self.basis, grid).values @ self.coefficients

    def evaluate(self, directions):
        """Point values at arbitrary unit vectors (shape ``(k, dim)``)."""
        pts = np.atleast_2d(np.asarray(directions, dtype=float))
        if self.dim == 2:
            t = np.arctan2(pts[:, 1], pts[:, 0])
            out = np.full(t.size, self.coefficients[0] / np.sqrt(2.0 * np.pi))
            for k in range(1, self.band_limit + 1):
                a, b = self.coefficients[2 * k - 1], self.coefficients[2 * k]
                out += (a * np.cos(k * t) + b * np.sin(k * t)) / np.sqrt(np.pi)
            return out
        x = np.clip(pts[:, 2], -1.0, 1.0)
        ph = np.arctan2(pts[:, 1], pts[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            P, _ = kernels.legendre_table(self.band_limit, x)
        out = np.zeros(x.size)
        for idx, (l, m) in enumerate(self.basis.labels):
            c = self.coefficients[idx]
            if c == 0.0:
                continue
            am = abs(m)
            if m == 0:
                T = 1.0
            elif m > 0:
                T = np.sqrt(2.0) * np.cos(am * ph)
            else:
                T = np.sqrt(2.0) * np.sin(am * ph)
            out += c * P[l, am] * T
        return out

    def __add__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        _check_compatible(self, other)
        return SpectralField(self.dim, self.band_limit, self.coefficients + other.coefficients,
                             self.even and other.even)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return SpectralField(self.dim, self.band_limit, float(scalar) * self.coefficients, self.even)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self


def _check_compatible(a, b):
    if a.dim != b.dim or a.band_limit != b.band_limit:
        raise ShapeMismatch("fields have different dimension or band limit")


def constant_field(dim, band_limit, value=1.0):
    c = np.zeros(HarmonicBasis(dim, band_limit).size)
    c[0] = value * np.sqrt(SURFACE_MEASURE[dim])
    return SpectralField(dim, band_limit, c, even=True)


def mode_field(dim, band_limit, l, m, amplitude=1.0):
    """``amplitude`` times the unit-norm basis function ``(l, m)``."""
    basis = HarmonicBasis(dim, band_limit)
    c = np.zeros(basis.size)
    c[basis.index(l, m)] = amplitude
    return SpectralField(dim, band_limit, c, even=(l % 2 == 0))


def random_even_field(dim, band_limit, rng, min_degree=2, max_degree=None):
    """Uniform[-1, 1] coefficients on the even modes with degree in range."""
    if max_degree is None:
        max_degree = max(min_degree, band_limit // 2)
    basis = HarmonicBasis(dim, band_limit)
    deg = basis.degrees
    mask = (deg % 2 == 0) & (deg >= min_degree) & (deg <= max_degree)
    c = np.zeros(basis.size)
    c[mask] = rng.uniform(-1.0, 1.0, size=int(mask.sum()))
    return SpectralField(dim, band_limit, c, even=True)


@dataclass(frozen=True)
class Jet:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True, eq=False)
class Jets:
    """Vectorized per-node jets: ``value (N,)``, ``grad (N, n)``, ``hess (N, n, n)``."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def __len__(self):
        return self.value.size

    def __getitem__(self, i):
        return Jet(float(self.value[i]), self.grad[i], self.hess[i])

    def __add__(self, other):
        return Jets(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def scale(self, c):
        return Jets(c * self.value, c * self.grad, c * self.hess)


def analyze(values, grid, band_limit=None, even=None):
    """Quadrature projection of node values onto the truncated basis.

    ``even=None`` detects parity: odd coefficients below ``PARITY_TOL``
    (relative to the largest coefficient) are zeroed and the field is
    flagged even. ``even=True`` forces the projection onto even modes.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ShapeMismatch(f"expected {grid.size} node values, got shape {values.shape}")
    if band_limit is None:
        band_limit = grid.band_limit
    if band_limit > grid.band_limit:
        raise GridResolutionError(f"grid resolves band limit {grid.band_limit}, not {band_limit}")
    basis = HarmonicBasis(grid.dim, band_limit)
    table = tabulate(basis, grid)
    c = table.values.T @ (grid.weights * values)
    odd = basis.odd_index
    if even is None:
        scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
        even = bool(np.all(np.abs(c[odd]) < PARITY_TOL * scale))
    if even:
        c[odd] = 0.0
    return SpectralField(grid.dim, band_limit, c, bool(even))


def synthesize(field, grid):
    """Per-node value, frame gradient and covariant Hessian of ``field``."""
    if field.dim != grid.dim:
        raise ShapeMismatch("field and grid live on different spheres")
    table = tabulate(field.basis, grid)
    c = field.coefficients
    return Jets(table.values @ c, table.grad @ c, table.hess @ c)


def integrate(values, grid):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.size:
        raise ShapeMismatch(f"expected {grid.size} node values, got shape {values.shape}")
    return float(grid.weights @ values)
