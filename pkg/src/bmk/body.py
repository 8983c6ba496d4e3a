"""Support-function bodies, L_p combinations and Wulff bodies.

A body is stored as a band-limited, even support function ``h`` sampled on
the working grid together with the per-node matrices ``W = hess(h) + h*I``,
``det W`` and the cofactor ``U = adj(W)``.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .errors import (
    CatalogError,
    ConvexityViolation,
    DegenerateBody,
    PositivityViolation,
    ShapeMismatch,
    SymmetryViolation,
)
from .sphere import (
    HarmonicBasis,
    Jets,
    SpectralField,
    analyze,
    synthesize,
    working_grid,
)

EPS_CONV = 1e-9
BODY_KINDS = ("ball", "ellipsoid", "smoothed_cube", "perturbed_ball")


@dataclass(frozen=True, eq=False)
class BodyRep:
    field: SpectralField
    grid: object
    jets: Jets
    W: np.ndarray
    detW: np.ndarray
    U: np.ndarray
    convexity_margin: float
    name: str = "body"
    info: dict = dc_field(default_factory=dict)

    @property
    def dim(self):
        return self.field.dim

    @property
    def n(self):
        return self.field.dim - 1

    @property
    def h(self):
        return self.jets.value

    @property
    def band_limit(self):
        return self.field.band_limit


def body_from_field(field, grid=None, name="body", eps_conv=EPS_CONV, info=None):
    """Validate a support function and cache its jets."""
    if grid is None:
        grid = working_grid(field.dim, field.band_limit)
    if not field.even:
        raise SymmetryViolation(f"{name}: support function is not origin-symmetric")
    jets = synthesize(field, grid)
    hmin = float(jets.value.min())
    if hmin <= 0.0:
        raise PositivityViolation(f"{name}: support function not positive (min {hmin:.3e})")
    W, detW, U, mineig = kernels.jet_algebra(jets.value, jets.hess)
    margin = float(mineig.min())
    if margin <= eps_conv:
        raise ConvexityViolation(
            f"{name}: convexity margin {margin:.3e} <= {eps_conv:.1e}", margin=margin
        )
    return BodyRep(field, grid, jets, W, detW, U, margin, name, dict(info or {}))


def nodal_jet_algebra(jets):
    """W, det W, U and min eig(W) for arbitrary nodal jets (no validation)."""
    return kernels.jet_algebra(jets.value, jets.hess)


# ----------------------------------------------------------------------------
# catalog bodies


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str
    params: dict

    def to_json(self):
        return {"name": self.name, "kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj):
        try:
            name, kind, params = obj["name"], obj["kind"], obj.get("params", {})
        except (KeyError, TypeError) as exc:
            raise CatalogError(f"catalog entry needs 'name' and 'kind': {obj!r}") from exc
        if kind not in BODY_KINDS:
            raise CatalogError(f"unknown body kind {kind!r} (one of {', '.join(BODY_KINDS)})")
        if not isinstance(params, dict):
            raise CatalogError(f"params of {name!r} must be an object")
        return cls(str(name), kind, dict(params))


def _axes(values, dim, what):
    a = [float(v) for v in values]
    if len(a) > dim:
        raise CatalogError(f"{what} has {len(a)} entries, ambient dimension is {dim}")
    a += [1.0] * (dim - len(a))
    if min(a) <= 0.0:
        raise CatalogError(f"{what} must be positive")
    return np.array(a)


def _schmidt_scale(dim, l):
    # orthonormal coefficient of a unit-peak harmonic: cos/sin on S^1, Schmidt on S^2
    return np.sqrt(np.pi) if dim == 2 else np.sqrt(4.0 * np.pi / (2 * l + 1))


def support_values(entry, nodes):
    """Closed-form support function of a catalog entry at unit vectors."""
    dim = nodes.shape[1]
    p = entry.params
    if entry.kind == "ball":
        r = float(p.get("radius", 1.0))
        if r <= 0:
            raise CatalogError("ball radius must be positive")
        return np.full(nodes.shape[0], r)
    if entry.kind == "ellipsoid":
        a = _axes(p.get("semiaxes", [2.0, 1.0]), dim, "semiaxes")
        return np.sqrt(((a * nodes) ** 2).sum(axis=1))
    if entry.kind == "smoothed_cube":
        q = int(p.get("q", 4))
        if q < 2 or q % 2:
            raise CatalogError("smoothed_cube exponent q must be even and >= 2")
        a = _axes(p.get("scales", [1.0]), dim, "scales")
        r = float(p.get("rounding", 0.0))
        if r < 0:
            raise CatalogError("rounding must be nonnegative")
        return (((a * nodes) ** q).sum(axis=1)) ** (1.0 / q) + r
    raise CatalogError(f"no closed form for kind {entry.kind!r}")


def make_body(entry, band_limit=None, dim=None, grid=None, eps_conv=EPS_CONV):
    """Build a validated BodyRep from a catalog entry."""
    if isinstance(entry, dict):
        entry = CatalogEntry.from_json(entry)
    if grid is None:
        if dim is None:
            raise ValueError("pass either a grid or an ambient dimension")
        grid = working_grid(dim, band_limit)
    band_limit = grid.band_limit if band_limit is None else band_limit
    dim = grid.dim
    if entry.kind == "perturbed_ball":
        field = _perturbed_ball_field(entry, dim, band_limit)
    else:
        values = support_values(entry, grid.nodes)
        field = analyze(values, grid, band_limit)
        if not field.even:
            raise SymmetryViolation(f"{entry.name}: closed form is not origin-symmetric")
    return body_from_field(field, grid, name=entry.name, eps_conv=eps_conv,
                           info={"kind": entry.kind, "params": dict(entry.params)})


def _perturbed_ball_field(entry, dim, band_limit):
    p = entry.params
    basis = HarmonicBasis(dim, band_limit)
    c = np.zeros(basis.size)
    c[0] = float(p.get("radius", 1.0)) * np.sqrt(2.0 * np.pi if dim == 2 else 4.0 * np.pi)
    for amp in p.get("amplitudes", []):
        l, m, a = int(amp["l"]), int(amp["m"]), float(amp["a"])
        if l % 2:
            raise SymmetryViolation(f"{entry.name}: odd mode l={l} breaks origin symmetry")
        if l > band_limit:
            raise CatalogError(f"{entry.name}: mode l={l} exceeds band limit {band_limit}")
        if dim == 2 and l > 0 and abs(m) != l:
            raise CatalogError(f"{entry.name}: on S^1 modes are (k, k) for cos and (k, -k) for sin")
        if dim == 3 and abs(m) > l:
            raise CatalogError(f"{entry.name}: |m| > l in mode ({l}, {m})")
        c[basis.index(l, m)] += a * _schmidt_scale(dim, l)
    return SpectralField(dim, band_limit, c, even=True)


def dilate(K, c):
    if c <= 0:
        raise ValueError("dilation factor must be positive")
    return body_from_field(c * K.field, K.grid, name=f"{c:g}*{K.name}", info=dict(K.info))


# ----------------------------------------------------------------------------
# L_p combinations


@dataclass(frozen=True, eq=False)
class CandidateField:
    """Positive per-node Wulff function (not necessarily a support function)."""

    values: np.ndarray
    grid: object
    jets: Jets | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ShapeMismatch("candidate values do not match the grid")
        if not np.all(v > 0):
            raise PositivityViolation("Wulff function must be positive at every node")
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.grid.dim


def mean_jets(a, b, p, lam):
    """Jets of the pointwise p-mean ((1-lam) a^p + lam b^p)^(1/p) (geometric for p=0).

    Covariant chain rule: hess G = G_a hess a + G_b hess b + second-order
    terms in the gradients.
    """
    va, vb = a.value, b.value
    if p == 0:
        G = va ** (1.0 - lam) * vb ** lam
        Ga = (1.0 - lam) * G / va
        Gb = lam * G / vb
        Gaa = -lam * (1.0 - lam) * G / va ** 2
        Gbb = -lam * (1.0 - lam) * G / vb ** 2
        Gab = lam * (1.0 - lam) * G / (va * vb)
    else:
        s = (1.0 - lam) * va ** p + lam * vb ** p
        G = s ** (1.0 / p)
        d1 = s ** (1.0 / p - 1.0) / p
        d2 = (1.0 / p) * (1.0 / p - 1.0) * s ** (1.0 / p - 2.0)
        sa = (1.0 - lam) * p * va ** (p - 1.0)
        sb = lam * p * vb ** (p - 1.0)
        saa = (1.0 - lam) * p * (p - 1.0) * va ** (p - 2.0)
        sbb = lam * p * (p - 1.0) * vb ** (p - 2.0)
        Ga, Gb = d1 * sa, d1 * sb
        Gaa = d2 * sa * sa + d1 * saa
        Gbb = d2 * sb * sb + d1 * sbb
        Gab = d2 * sa * sb
    ga, gb = a.grad, b.grad
    grad = Ga[:, None] * ga + Gb[:, None] * gb
    outer = lambda u, v: u[:, :, None] * v[:, None, :]
    hess = (
        Ga[:, None, None] * a.hess
        + Gb[:, None, None] * b.hess
        + Gaa[:, None, None] * outer(ga, ga)
        + Gab[:, None, None] * (outer(ga, gb) + outer(gb, ga))
        + Gbb[:, None, None] * outer(gb, gb)
    )
    return Jets(G, grad, hess)


def _check_p(p):
    if p < 0 or p == 1:
        raise ValueError(f"p must lie in [0, 1) or (1, inf), got {p}")


def lp_combination(K, L, p, lam):
    """Per-node L_p combination of two support functions (a Wulff function)."""
    _check_p(p)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if K.grid is not L.grid:
        raise ShapeMismatch("bodies live on different grids")
    if not (K.field.even and L.field.even):
        raise SymmetryViolation("L_p combinations are defined here for even bodies only")
    jets = mean_jets(K.jets, L.jets, p, lam)
    return CandidateField(jets.value, K.grid, jets)


# ----------------------------------------------------------------------------
# Wulff bodies


def _hull_2d(points):
    """Convex hull of points already sorted by angle around an interior origin.

    Graham scan over the cyclic angular order; returns hull indices
    counter-clockwise.
    """
    n = len(points)
    start = int(np.argmax(np.einsum("ij,ij->i", points, points)))
    order = [(start + k) % n for k in range(n)]
    hull = []
    for i in order + [start]:
        while len(hull) >= 2:
            o, a = points[hull[-2]], points[hull[-1]]
            b = points[i]
            cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
            if cross > 0.0:
                break
            hull.pop()
        hull.append(i)
    return hull[:-1]


def wulff_vertices(values, grid):
    """Vertices of the intersection of halfspaces {y : y.x_i <= g_i}."""
    pts = grid.nodes / values[:, None]
    if grid.dim == 2:
        idx = _hull_2d(pts)
        if len(idx) < 3:
            raise DegenerateBody("Wulff polygon has fewer than three edges")
        a = pts[idx]
        b = np.roll(a, -1, axis=0)
        e = b - a
        normal = np.stack([e[:, 1], -e[:, 0]], axis=1)
        offset = np.einsum("ij,ij->i", normal, a)
        if np.any(offset <= 0):
            raise DegenerateBody("origin not interior to the dual polygon")
        return normal / offset[:, None], np.asarray(idx)
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateBody(f"dual hull failed: {exc}") from exc
    normal, offset = hull.equations[:, :-1], -hull.equations[:, -1]
    if np.any(offset <= 0):
        raise DegenerateBody("origin not interior to the dual polytope")
    return normal / offset[:, None], hull.vertices


def _polytope_volume(vertices, dim):
    if dim == 2:
        ang = np.arctan2(vertices[:, 1], vertices[:, 0])
        v = vertices[np.argsort(ang)]
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    return float(ConvexHull(vertices).volume)


def wulff_body(g, band_limit=None, name="wulff", eps_conv=EPS_CONV):
    """Support function of W(g), mollified by projection onto the basis.

    ``info`` records the polytope volume, the active node count and the
    sup-norm change the mollification makes at the nodes.
    """
    grid = g.grid
    if band_limit is None:
        band_limit = grid.band_limit
    vertices, active = wulff_vertices(g.values, grid)
    hw = kernels.support_max(grid.nodes, vertices)
    field = analyze(hw, grid, band_limit)
    if not field.even:
        raise SymmetryViolation(f"{name}: Wulff body is not origin-symmetric")
    moll = float(np.max(np.abs(field.values(grid) - hw)))
    info = {
        "polytope_volume": _polytope_volume(vertices, grid.dim),
        "active_nodes": int(len(active)),
        "truncation_sup": float(np.max(g.values - hw)),
        "mollification_sup": moll,
    }
    try:
        return body_from_field(field, grid, name=name, eps_conv=eps_conv, info=info)
    except ConvexityViolation as exc:
        raise ConvexityViolation(f"{exc} after Wulff mollification (change {moll:.2e})",
                                 margin=exc.margin) from exc


def naive_volume(g):
    """(1/d) * int g det(hess g + g I), treating the Wulff function as if convex."""
    from .sphere import integrate

    if g.jets is None:
        raise ValueError("candidate carries no jets")
    _, det, _, _ = kernels.jet_algebra(g.jets.value, g.jets.hess)
    return integrate(g.jets.value * det, g.grid) / g.grid.dim
