"""Independent reference values: closed forms and scipy special functions.

Nothing here calls into ``bmk``; tests compare the package against these.
"""

import numpy as np
from scipy import integrate, special
from scipy.spatial import ConvexHull, HalfspaceIntersection


# ----------------------------------------------------------------------------
# bases


def circle_basis(k, sign, theta):
    """Orthonormal real Fourier function: 1/sqrt(2 pi), cos(k t)/sqrt(pi), sin(k t)/sqrt(pi)."""
    if k == 0:
        return np.full_like(theta, 1.0 / np.sqrt(2.0 * np.pi))
    f = np.cos if sign > 0 else np.sin
    return f(k * theta) / np.sqrt(np.pi)


def real_sph_harm(l, m, theta, phi):
    """Real orthonormal spherical harmonic without the Condon-Shortley phase.

    ``m > 0`` carries sqrt(2) cos(m phi), ``m < 0`` carries sqrt(2) sin(|m| phi).
    """
    am = abs(m)
    Y = special.sph_harm_y(l, am, theta, phi) * (-1.0) ** am
    if m == 0:
        return Y.real
    return np.sqrt(2.0) * (Y.real if m > 0 else Y.imag)


def laplacian_eigenvalue(dim, l):
    return -l * l if dim == 2 else -l * (l + 1)


def ball_spectrum(dim, count):
    """Aleksandrov eigenvalues of the unit ball: l(l+n-1) - n with harmonic multiplicities."""
    n = dim - 1
    vals = []
    l = 0
    while len(vals) < count:
        mult = (1 if l == 0 else 2) if dim == 2 else 2 * l + 1
        vals += [l * (l + n - 1) - n] * mult
        l += 1
    return vals[:count]


def linearized_multipliers(dim, p_star, lmax=8):
    """Even-mode multipliers of Laplacian + (n + 1 - p_star)."""
    n = dim - 1
    return [laplacian_eigenvalue(dim, l) + (n + 1 - p_star) for l in range(0, lmax + 1, 2)]


# ----------------------------------------------------------------------------
# bodies


def ellipse_support(a, b, theta):
    return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)


def ellipse_radius_of_curvature(a, b, theta):
    """h'' + h for the ellipse: a^2 b^2 / h^3."""
    return (a * b) ** 2 / ellipse_support(a, b, theta) ** 3


def ellipse_perimeter(a, b):
    m = 1.0 - (min(a, b) / max(a, b)) ** 2
    return 4.0 * max(a, b) * special.ellipe(m)


def ellipsoid_volume(axes):
    axes = np.asarray(axes, dtype=float)
    if axes.size == 2:
        return np.pi * axes.prod()
    return 4.0 / 3.0 * np.pi * axes.prod()


def ellipsoid_gauss_curvature_inverse(axes, x):
    """det(hess h + h I) for an ellipsoid at unit normals x: (abc)^2 / h^4."""
    axes = np.asarray(axes, dtype=float)
    h = np.sqrt(((axes * x) ** 2).sum(axis=1))
    return axes.prod() ** 2 / h ** 4


def ellipsoid_surface_area(a, b, c):
    """Surface area by direct quadrature of the parametrized surface."""

    def dA(v, u):
        xu = np.array([-a * np.sin(u) * np.sin(v), b * np.cos(u) * np.sin(v), 0.0])
        xv = np.array([a * np.cos(u) * np.cos(v), b * np.sin(u) * np.cos(v), -c * np.sin(v)])
        return np.linalg.norm(np.cross(xu, xv))

    val, _ = integrate.dblquad(dA, 0.0, 2.0 * np.pi, 0.0, np.pi, epsabs=1e-12, epsrel=1e-12)
    return val


def smoothed_cube_area_2d(q, rounding):
    """Area of {l_q'-unit ball of the support} + rounding * disk, by 1-D quadrature.

    The support function h(t) = (|cos t|^q + |sin t|^q)^(1/q) + r gives
    area = (1/2) int h (h'' + h) dt = (1/2) int (h^2 - h'^2) dt.
    """

    def h(t):
        return (abs(np.cos(t)) ** q + abs(np.sin(t)) ** q) ** (1.0 / q) + rounding

    def dh(t, eps=1e-5):
        return (h(t + eps) - h(t - eps)) / (2 * eps)

    val, _ = integrate.quad(lambda t: 0.5 * (h(t) ** 2 - dh(t) ** 2), 0.0, 2.0 * np.pi,
                            limit=400, epsabs=1e-11, epsrel=1e-11)
    return val


def halfspace_polytope(normals, offsets):
    """Vertices and volume of {y : normals . y <= offsets} via scipy/Qhull."""
    A = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    hs = np.hstack([A, -b[:, None]])
    inter = HalfspaceIntersection(hs, np.zeros(A.shape[1]))
    pts = inter.intersections
    return pts, ConvexHull(pts).volume


# ----------------------------------------------------------------------------
# inequalities


def firey_ball_pair(r1, r2, p, lam, dim):
    """L_p combination of two balls is a ball of radius ((1-l) r1^p + l r2^p)^(1/p)."""
    r = ((1.0 - lam) * r1 ** p + lam * r2 ** p) ** (1.0 / p)
    unit = np.pi if dim == 2 else 4.0 / 3.0 * np.pi
    lhs = unit * r ** dim
    rhs = (unit * r1 ** dim) ** (1.0 - lam) * (unit * r2 ** dim) ** lam
    return lhs, rhs


def stable_margin_at_h(p_star, S):
    """Stable-condition lhs - rhs at phi = h: (n+1) S - (1-p*) S - n S = p* S."""
    return p_star * S
