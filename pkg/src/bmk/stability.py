"""Second variation of the L_p Brunn-Minkowski functional and related checks.

Notation used throughout (all integrals over the sphere, ``W = hess h + h I``):

    S  = int h det W              M = int det W phi
    R  = int det W phi^2 / h      Q = int phi U^{ij} (phi_;ij + phi delta_ij)

With these, the stable condition reads ``(n+1) M^2 / S >= (1-p*) R + Q``.
"""

from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla

from . import kernels
from .body import CandidateField, EPS_CONV, mean_jets, wulff_body
from .errors import ConvexityViolation, EigensolveFailure, PositivityViolation, ZeroField
from .measure import volume
from .spectrum import assemble_pencil, solve_spectrum
from .sphere import Jets, integrate, random_even_field, synthesize, tabulate

FD_STEP = 4e-3
PROBE_REACH = 0.1
MARGIN_TOL = 1e-9


def _quantities(K, phi_jets):
    n = K.n
    w = K.grid
    v = phi_jets.value
    Wphi = phi_jets.hess + v[:, None, None] * np.eye(n)
    UW = np.einsum("qij,qij->q", K.U, Wphi)
    return {
        "S": integrate(K.h * K.detW, w),
        "M": integrate(K.detW * v, w),
        "R": integrate(K.detW * v * v / K.h, w),
        "Q": integrate(v * UW, w),
    }


def _jets(K, phi):
    if isinstance(phi, Jets):
        return phi
    if not phi.even:
        raise ValueError("perturbation must be even")
    return synthesize(phi, K.grid)


def _valid(jets, eps_conv=EPS_CONV):
    if np.min(jets.value) <= 0:
        return False
    _, _, _, mineig = kernels.jet_algebra(jets.value, jets.hess)
    return bool(mineig.min() > eps_conv)


def max_perturbation(K, phi, hi=1.0, iters=60):
    """Largest eps with h + eps*phi and h - eps*phi both valid (bisection)."""
    pj = _jets(K, phi)

    def ok(eps):
        return _valid(K.jets + pj.scale(eps)) and _valid(K.jets + pj.scale(-eps))

    lo = 0.0
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            return float("inf")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def normalize_probe(K, phi, reach=PROBE_REACH):
    """Scale phi so that h + eps*phi is guaranteed convex only for |eps| < reach.

    The size of hess phi + phi I is matched to K's convexity margin, so a
    finite-difference stencil means the same relative perturbation on every
    body. A reach well above the stencil keeps truncation error small while
    keeping the second difference far above round-off.
    """
    pj = _jets(K, phi)
    n = K.n
    Wphi = pj.hess + pj.value[:, None, None] * np.eye(n)
    size = float(np.max(np.linalg.norm(Wphi, ord=2, axis=(1, 2))))
    size = max(size, float(np.max(np.abs(pj.value))) / float(np.min(K.h)))
    if size == 0:
        raise ZeroField("perturbation vanishes identically")
    return (K.convexity_margin / (size * reach)) * phi


@dataclass(frozen=True, eq=False)
class VariationProbe:
    K: object
    phi: object
    p: float
    lam: float
    eps_max: float = dc_field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if not self.phi.even:
            raise ValueError("perturbation must be even")
        object.__setattr__(self, "eps_max", max_perturbation(self.K, self.phi))


def I_functional(probe, eps):
    """(int h_l det W_l) * (int h_L det W_L)^(-lambda) with h_L = h + eps*phi."""
    if abs(eps) > probe.eps_max:
        raise ConvexityViolation(f"|eps| = {abs(eps):.3e} exceeds eps_max = {probe.eps_max:.3e}")
    K = probe.K
    hL = K.jets + _jets(K, probe.phi).scale(eps)
    if np.min(hL.value) <= 0:
        raise PositivityViolation("h_L not positive")
    hl = mean_jets(K.jets, hL, probe.p, probe.lam)
    for name, jets in (("h_L", hL), ("h_lambda", hl)):
        if not _valid(jets):
            raise ConvexityViolation(f"{name} is not a valid support function at eps = {eps:g}")
    _, det_l, _, _ = kernels.jet_algebra(hl.value, hl.hess)
    _, det_L, _, _ = kernels.jet_algebra(hL.value, hL.hess)
    a = integrate(hl.value * det_l, K.grid)
    b = integrate(hL.value * det_L, K.grid)
    return a * b ** (-probe.lam)


def second_variation(probe):
    """Analytic (I'(0), I''(0))."""
    K, lam, p = probe.K, probe.lam, probe.p
    q = _quantities(K, _jets(K, probe.phi))
    S, M, R, Q = q["S"], q["M"], q["R"], q["Q"]
    d = K.dim
    c = d * lam * (1.0 - lam)
    I1 = d * lam * M * S ** (-lam) - d * lam * S ** (-lam) * M
    I2 = d * c * S ** (-lam - 1.0) * M * M - c * (1.0 - p) * S ** (-lam) * R - c * S ** (-lam) * Q
    return I1, I2


def finite_difference_variation(probe, step=FD_STEP):
    """Central differences of I at ``step`` and ``step/2`` plus the Richardson value."""
    I = {e: I_functional(probe, e) for e in (0.0, step, -step, 0.5 * step, -0.5 * step)}
    I0 = I[0.0]

    def d2(hs):
        return (I[hs] - 2.0 * I0 + I[-hs]) / (hs * hs)

    def d1(hs):
        return (I[hs] - I[-hs]) / (2.0 * hs)

    a, b = d2(step), d2(0.5 * step)
    g, k = d1(step), d1(0.5 * step)
    return {"I0": I0, "I1_fd": g, "I1_richardson": (4.0 * k - g) / 3.0,
            "I2_fd": a, "I2_fd_half": b, "I2_richardson": (4.0 * b - a) / 3.0}


@dataclass
class StabilityReport:
    lhs: float
    rhs: float
    margin: float
    p_star: float
    I0: float | None = None
    I1: float | None = None
    I2: float | None = None
    J_value: float | None = None
    inf_J: float | None = None
    lambda3: float | None = None
    flags: dict = dc_field(default_factory=dict)

    def to_json(self):
        return asdict(self)


def stable_condition(K, phi, p_star):
    if not 0.0 <= p_star < 1.0:
        raise ValueError("p_star must lie in [0, 1)")
    q = _quantities(K, _jets(K, phi))
    lhs = K.dim * q["M"] ** 2 / q["S"]
    rhs = (1.0 - p_star) * q["R"] + q["Q"]
    return StabilityReport(lhs, rhs, lhs - rhs, p_star, flags={"holds": lhs - rhs >= -MARGIN_TOL})


def b_norm_squared(K, phi):
    return _quantities(K, _jets(K, phi))["R"]


def J_functional(K, phi):
    """J at phi / |phi|_B, where |phi|_B^2 = int h^-1 det W phi^2."""
    q = _quantities(K, _jets(K, phi))
    if q["R"] <= 0:
        raise ZeroField("J is undefined for phi = 0")
    return (-q["Q"] + K.dim * q["M"] ** 2 / q["S"]) / q["R"]


def _rank_one_pencil(K):
    P = assemble_pencil(K, "even")
    table = tabulate(K.field.basis, K.grid).columns(P.index)
    m = table.values.T @ (K.grid.weights * K.detW)
    S = integrate(K.h * K.detW, K.grid)
    return P, P.A + (K.dim / S) * np.outer(m, m), m, S


@dataclass
class InfJResult:
    value: float
    minimizer: object
    el_residual: float
    lagrange: tuple
    h_angle: float

    @property
    def el_ok(self):
        return self.el_residual < 1e-7


def euler_lagrange_residual(K, phi, lam2):
    """sup |-U:(hess phi + phi I) + lambda1(phi) det W - lambda2 h^-1 det W phi|."""
    pj = _jets(K, phi)
    q = _quantities(K, pj)
    lam1 = K.dim * q["M"] / q["S"]
    Wphi = pj.hess + pj.value[:, None, None] * np.eye(K.n)
    r = -np.einsum("qij,qij->q", K.U, Wphi) + lam1 * K.detW - lam2 * K.detW * pj.value / K.h
    return float(np.max(np.abs(r))), lam1


def inf_J(K):
    """Minimum of J over even phi: smallest eigenpair of the rank-one-modified pencil."""
    P, Amod, m, S = _rank_one_pencil(K)
    try:
        vals, vecs = sla.eigh(Amod, P.B, subset_by_index=[0, 0])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolveFailure(str(exc)) from exc
    v = vecs[:, 0]
    if m @ v < 0:
        v = -v
    field = P.embed(v)
    res, lam1 = euler_lagrange_residual(K, field, float(vals[0]))
    h = P.restrict(K.field)
    proj = (v @ P.B @ h) / (h @ P.B @ h)
    resid = v - proj * h
    angle = float(np.sqrt(max(resid @ P.B @ resid, 0.0) / (v @ P.B @ v)))
    return InfJResult(float(vals[0]), field, res, (lam1, float(vals[0])), angle)


@dataclass
class EigenBoundResult:
    lhs: float
    rhs: float
    margin: float
    lambda3: float
    perp_norm: float
    eigen_residual: float

    @property
    def equality(self):
        return abs(self.margin) < 1e-8


def third_eigenvalue_bound(K, phi, lambda3=None, pencil=None):
    """rhs - lhs of the third-eigenvalue inequality for even phi.

    Also reports how far ``phi - (M/S) h`` is from being a lambda3
    eigenfunction (the equality criterion). Pass ``pencil`` (the even
    pencil of K) to avoid reassembling it for every probe.
    """
    P = assemble_pencil(K, "even") if pencil is None else pencil
    if lambda3 is None:
        lambda3 = solve_spectrum(P, 4).lambda3
    pj = _jets(K, phi)
    q = _quantities(K, pj)
    lhs = q["Q"] + lambda3 * q["R"]
    rhs = (K.n + lambda3) * q["M"] ** 2 / q["S"]
    c = q["M"] / q["S"]
    perp = P.restrict(phi) - c * P.restrict(K.field)
    bn = float(np.sqrt(max(perp @ P.B @ perp, 0.0)))
    eig_res = float(np.linalg.norm(P.A @ perp - lambda3 * (P.B @ perp)) / max(bn, 1e-300)) if bn > 0 else 0.0
    return EigenBoundResult(lhs, rhs, rhs - lhs, lambda3, bn, eig_res)


def local_concavity_check(K, phi, p, step=FD_STEP):
    """Central second difference of eps -> V(W((h^p + eps phi^p)^(1/p)))^(p/d)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not phi.even:
        raise ValueError("perturbation must be even")
    phiv = phi.values(K.grid)
    if np.min(phiv) <= 0:
        raise PositivityViolation("phi must be positive")
    hp, fp = K.h ** p, phiv ** p
    d = K.dim

    def F(eps):
        s = hp + eps * fp
        if np.min(s) <= 0:
            raise ConvexityViolation(f"stencil {step:g} too large: Wulff function not positive")
        body = wulff_body(CandidateField(s ** (1.0 / p), K.grid), band_limit=K.band_limit)
        return volume(body) ** (p / d)

    return (F(step) - 2.0 * F(0.0) + F(-step)) / step ** 2


def random_probe(K, rng, normalize="b"):
    """Random even field on modes 2..L/2 with uniform coefficients.

    ``normalize="b"`` scales to unit B-norm; ``"convexity"`` uses
    :func:`normalize_probe`.
    """
    phi = random_even_field(K.dim, K.band_limit, rng)
    if normalize == "convexity":
        return normalize_probe(K, phi)
    return (1.0 / np.sqrt(b_norm_squared(K, phi))) * phi


@dataclass
class EquivalenceReport:
    body: str
    p_star: float
    trials: int
    lambda3: float
    margins: list
    empirical_verdict: bool
    spectral_verdict: bool
    agree: bool
    consistent: bool
    necessity: dict | None
    seed: int | None = None

    def to_json(self):
        out = asdict(self)
        out["min_margin"] = float(min(self.margins)) if self.margins else None
        out.pop("margins")
        return out

    def rows(self):
        return [{"body": self.body, "trial": i, "p_star": self.p_star, "margin": m}
                for i, m in enumerate(self.margins)]


def equivalence_experiment(K, p_star=0.0, trials=100, seed=0, tol=MARGIN_TOL):
    """Sampled stable-condition margins versus the spectral criterion.

    The spectral verdict is ``lambda3 >= 1 - p_star``: decomposing
    ``phi = c h + psi`` with psi B-orthogonal to h reduces the stable
    condition to ``p_star c^2 S + A[psi] - (1-p_star) B[psi] >= 0``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    spec = solve_spectrum(assemble_pencil(K, "even"), 4)
    lam3 = spec.lambda3
    margins = [stable_condition(K, random_probe(K, rng), p_star).margin for _ in range(trials)]
    empirical = all(m >= -tol for m in margins)
    spectral = lam3 >= 1.0 - p_star - 1e-8
    consistent = not (any(m < -1e-6 for m in margins) and lam3 >= 1.0 - p_star + 1e-6)
    necessity = None
    if lam3 < 1.0 - p_star:
        P = assemble_pencil(K, "even")
        third = P.embed(spec.eigenvectors[:, 1])
        necessity = {}
        for eps in (1e-1, 1e-2, 1e-3):
            trial = K.field + eps * third
            necessity[str(eps)] = J_functional(K, trial)
    return EquivalenceReport(K.name, p_star, trials, lam3, margins, empirical, spectral,
                             empirical == spectral, consistent, necessity, seed)
