"""Newton and continuation solvers for the even L_p Minkowski problem

    det(hess u + u I) = f u^(p-1),    u > 0 even.

Unknowns are the even spectral coefficients of ``u``. Newton uses the
Galerkin projection of the nodal residual onto the even basis, so iterates
never leave the even subspace. Convergence is judged on the nodal residual.
"""

import numbers
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .body import EPS_CONV
from .errors import (
    ContinuationStall,
    ConvexityViolation,
    JacobianSingular,
    NewtonDivergence,
    PositivityViolation,
    ShapeMismatch,
)
from .sphere import (
    HarmonicBasis,
    Jets,
    SpectralField,
    build_grid,
    constant_field,
    random_even_field,
    synthesize,
    tabulate,
    working_grid,
)

NEWTON_TOL = 1e-10
MAX_ITERS = 50
MAX_BACKTRACKS = 20
CLUSTER_TOL = 1e-6
DEFAULT_P_STAR = 0.5
C2_CEILING = 1e6
COND_LIMIT = 1e14


# ----------------------------------------------------------------------------
# right-hand sides


@dataclass(frozen=True, eq=False)
class ConstantSource:
    value: float

    def values(self, grid):
        return np.full(grid.size, float(self.value))


@dataclass(frozen=True, eq=False)
class NodalSource:
    """Right-hand side known only at the nodes of one grid."""

    data: np.ndarray
    grid: object

    def values(self, grid):
        if grid is not self.grid:
            raise ShapeMismatch("nodal right-hand side lives on a different grid")
        return self.data


@dataclass(frozen=True, eq=False)
class RoundTripSource:
    """f = h^(1-p) det(hess h + h I) for a known support function h."""

    h: SpectralField
    p: float

    def values(self, grid):
        jets = synthesize(self.h, grid)
        _, det, _, _ = kernels.jet_algebra(jets.value, jets.hess)
        return jets.value ** (1.0 - self.p) * det


def as_source(f):
    if isinstance(f, (ConstantSource, NodalSource, RoundTripSource, SpectralField)):
        return f
    if isinstance(f, numbers.Real):
        return ConstantSource(float(f))
    raise TypeError(f"cannot use {type(f).__name__} as a right-hand side")


def _f_values(f, grid):
    v = np.asarray(as_source(f).values(grid), dtype=float)
    if v.shape != (grid.size,):
        raise ShapeMismatch("right-hand side does not match the grid")
    return v


def fine_grid(dim, band_limit):
    """Twice the working resolution, used for residual certificates."""
    if dim == 2:
        return build_grid(2, 2 * (4 * band_limit + 4), band_limit=band_limit)
    return build_grid(3, 2 * band_limit, band_limit=band_limit, oversample=2)


# ----------------------------------------------------------------------------
# residual


def _nodal_residual(jets, fv, p):
    if np.min(jets.value) <= 0.0:
        raise PositivityViolation(f"u not positive (min {np.min(jets.value):.3e})")
    _, det, _, _ = kernels.jet_algebra(jets.value, jets.hess)
    return det - fv * jets.value ** (p - 1.0)


def residual(u, f, p, grid=None):
    """det(hess u + u I) - f u^(p-1) at the nodes of ``grid``."""
    if grid is None:
        grid = working_grid(u.dim, u.band_limit)
    return _nodal_residual(synthesize(u, grid), _f_values(f, grid), p)


def residual_certificate(u, f, p):
    """Sup-norm residual recomputed on the twice-finer grid (None for nodal f)."""
    if isinstance(f, NodalSource):
        return None
    grid = fine_grid(u.dim, u.band_limit)
    return float(np.max(np.abs(residual(u, f, p, grid))))


# ----------------------------------------------------------------------------
# Newton


@dataclass
class SolveResult:
    solution: SpectralField
    residual_sup: float
    iterations: int
    trace: object = None
    distinct_solutions: list = dc_field(default_factory=list)
    history: list = dc_field(default_factory=list)
    certificate: float | None = None
    galerkin_sup: float | None = None

    def to_json(self):
        return {
            "solution": [float(c) for c in self.solution.coefficients],
            "residual_sup": self.residual_sup,
            "iterations": self.iterations,
            "certificate": self.certificate,
            "galerkin_sup": self.galerkin_sup,
            "history": list(self.history),
            "distinct_solutions": len(self.distinct_solutions),
        }


class _EvenSystem:
    """Even-mode tables and quadrature for one (dim, band limit)."""

    def __init__(self, dim, band_limit):
        self.grid = working_grid(dim, band_limit)
        basis = HarmonicBasis(dim, self.grid.band_limit)
        self.basis = basis
        self.index = basis.even_index
        self.table = tabulate(basis, self.grid).columns(self.index)
        self.dim, self.band_limit = dim, self.grid.band_limit

    def jets(self, c):
        t = self.table
        return Jets(t.values @ c, t.grad @ c, t.hess @ c)

    def field(self, c):
        full = np.zeros(self.basis.size)
        full[self.index] = c
        return SpectralField(self.dim, self.band_limit, full, even=True)

    def coefficients(self, u):
        if not u.even:
            raise ValueError("initial guess must be even")
        if u.dim != self.dim:
            raise ShapeMismatch("initial guess lives on a different sphere")
        return np.array(u.with_band_limit(self.band_limit).coefficients[self.index])

    def jacobian(self, jets, U, fv, p):
        t = self.table
        n = self.dim - 1
        trU = np.trace(U, axis1=1, axis2=2)
        # nodal derivative of det W along each basis function, minus the source term
        Jn = np.einsum("qij,qijm->qm", U, t.hess) if n > 1 else U[:, 0, 0, None] * t.hess[:, 0, 0, :]
        Jn = Jn + (trU - (p - 1.0) * fv * jets.value ** (p - 2.0))[:, None] * t.values
        return t.values.T @ (self.grid.weights[:, None] * Jn)

    def project(self, r):
        return self.table.values.T @ (self.grid.weights * r)


_SYSTEMS = {}


def _system(dim, band_limit):
    key = (dim, band_limit)
    if key not in _SYSTEMS:
        _SYSTEMS[key] = _EvenSystem(dim, band_limit)
    return _SYSTEMS[key]


def _admissible(jets, eps_conv):
    if np.min(jets.value) <= 0.0:
        return False
    _, _, _, mineig = kernels.jet_algebra(jets.value, jets.hess)
    return bool(np.min(mineig) > eps_conv)


def newton_solve(f, p, u0, newton_tol=NEWTON_TOL, max_iters=MAX_ITERS, eps_conv=EPS_CONV,
                 measure="nodal"):
    """Damped Newton iteration from ``u0`` (an even SpectralField).

    ``measure="nodal"`` stops on the sup-norm of the nodal residual.
    ``measure="galerkin"`` stops on the sup-norm of its band-limited part,
    which vanishes at the discrete solution even when the exact solution
    is not band-limited.
    """
    if measure not in ("nodal", "galerkin"):
        raise ValueError("measure must be 'nodal' or 'galerkin'")
    sysm = _system(u0.dim, u0.band_limit)
    fv = _f_values(f, sysm.grid)
    if np.min(fv) <= 0.0:
        raise PositivityViolation("right-hand side must be positive")

    def size(r):
        if measure == "nodal":
            return float(np.max(np.abs(r)))
        return float(np.max(np.abs(sysm.table.values @ sysm.project(r))))

    c = sysm.coefficients(u0)
    jets = sysm.jets(c)
    if not _admissible(jets, eps_conv):
        raise ConvexityViolation("initial guess is not a valid support function")
    r = _nodal_residual(jets, fv, p)
    rs = size(r)
    history = [rs]
    it = 0
    while rs >= newton_tol:
        if it >= max_iters:
            raise NewtonDivergence(f"no convergence after {max_iters} iterations (residual {rs:.3e})")
        _, _, U, _ = kernels.jet_algebra(jets.value, jets.hess)
        J = sysm.jacobian(jets, U, fv, p)
        g = sysm.project(r)
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError as exc:
            raise JacobianSingular(str(exc)) from exc
        if not np.all(np.isfinite(step)) or np.linalg.cond(J) > COND_LIMIT:
            raise JacobianSingular(f"Jacobian condition number {np.linalg.cond(J):.2e}")
        alpha = 1.0
        for _ in range(MAX_BACKTRACKS + 1):
            c_new = c + alpha * step
            j_new = sysm.jets(c_new)
            if _admissible(j_new, eps_conv):
                r_new = _nodal_residual(j_new, fv, p)
                rs_new = size(r_new)
                if rs_new < rs:
                    break
            alpha *= 0.5
        else:
            raise NewtonDivergence(f"line search stalled at {measure} residual {rs:.3e}")
        c, jets, r, rs = c_new, j_new, r_new, rs_new
        it += 1
        history.append(rs)
    out = SolveResult(sysm.field(c), float(np.max(np.abs(r))), it, history=history)
    out.galerkin_sup = float(np.max(np.abs(sysm.table.values @ sysm.project(r))))
    return out


# ----------------------------------------------------------------------------
# continuation


@dataclass
class HomotopyStep:
    t: float
    p_t: float
    solution: SpectralField
    newton_iters: int
    residual_sup: float
    bound_low: float
    bound_high: float
    norm_C2alpha_proxy: float
    nodal_residual_sup: float = 0.0

    def to_json(self):
        return {
            "t": self.t,
            "p_t": self.p_t,
            "solution": [float(c) for c in self.solution.coefficients],
            "newton_iters": self.newton_iters,
            "residual_sup": self.residual_sup,
            "bound_low": self.bound_low,
            "bound_high": self.bound_high,
            "norm_C2alpha_proxy": self.norm_C2alpha_proxy,
            "nodal_residual_sup": self.nodal_residual_sup,
        }


@dataclass
class HomotopyTrace:
    steps: list
    converged: bool
    p_star: float
    f: object
    p: float = 0.0
    failure: str | None = None
    rejected: int = 0

    @property
    def solution(self):
        return self.steps[-1].solution

    def raise_if_failed(self):
        if not self.converged:
            raise ContinuationStall(self.failure or "continuation did not reach t = 1")

    def to_json(self):
        f = self.f
        if isinstance(f, SpectralField):
            f_json = {"coefficients": [float(c) for c in f.coefficients]}
        elif isinstance(f, ConstantSource):
            f_json = {"constant": f.value}
        elif isinstance(f, RoundTripSource):
            f_json = {"round_trip_p": f.p, "h": [float(c) for c in f.h.coefficients]}
        else:
            f_json = {"nodal": True}
        return {
            "steps": [s.to_json() for s in self.steps],
            "converged": self.converged,
            "p_star": self.p_star,
            "p": self.p,
            "f": f_json,
            "failure": self.failure,
            "rejected_steps": self.rejected,
        }


def monitors(u, grid=None):
    """(min u, max u, sup|u| + max |hess u|) at the nodes.

    The last value stands in for the C^{2,alpha} norm; the Hoelder
    seminorm of the Hessian is not included.
    """
    if grid is None:
        grid = working_grid(u.dim, u.band_limit)
    jets = synthesize(u, grid)
    hnorm = np.linalg.norm(jets.hess, ord=2, axis=(1, 2))
    return (float(np.min(jets.value)), float(np.max(jets.value)),
            float(np.max(np.abs(jets.value)) + np.max(hnorm)))


@dataclass(frozen=True)
class Schedule:
    initial_step: float = 0.1
    min_step: float = 1e-4
    max_step: float = 0.5
    grow_after: int = 2
    c2_ceiling: float = C2_CEILING


def _blend(f, t, grid):
    return NodalSource(t * _f_values(f, grid) + (1.0 - t), grid)


def homotopy_solve(f, p, p_star=DEFAULT_P_STAR, schedule=None, dim=None, band_limit=None,
                   newton_tol=NEWTON_TOL):
    """Continue from u = 1 at t = 0 along f_t = t f + 1 - t, p_t = t p + (1 - t) p_star.

    Intermediate steps converge on the Galerkin residual: the solution for a
    blended right-hand side is generally not band-limited, so its nodal
    residual has a resolution floor. The t = 1 step must meet ``newton_tol``
    on the nodal residual. Every step records both.
    A stalled run returns the partial trace with ``converged = False``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must lie in (0, 1)")
    schedule = schedule or Schedule()
    f = as_source(f)
    if isinstance(f, SpectralField):
        dim = f.dim if dim is None else dim
        band_limit = f.band_limit if band_limit is None else band_limit
        if not f.even:
            raise ValueError("right-hand side must be even")
    elif isinstance(f, RoundTripSource):
        dim = f.h.dim if dim is None else dim
        band_limit = f.h.band_limit if band_limit is None else band_limit
    elif isinstance(f, NodalSource):
        dim, band_limit = f.grid.dim, f.grid.band_limit
    if dim is None:
        raise ValueError("pass the ambient dimension for a constant right-hand side")
    grid = working_grid(dim, band_limit)
    band_limit = grid.band_limit
    if np.min(_f_values(f, grid)) <= 0.0:
        raise PositivityViolation("right-hand side must be positive")

    def record(t, pt, sol, iters, rs, nodal):
        lo, hi, c2 = monitors(sol, grid)
        return HomotopyStep(t, pt, sol, iters, rs, lo, hi, c2, nodal)

    u = constant_field(dim, band_limit)
    r0 = float(np.max(np.abs(residual(u, 1.0, p_star, grid))))
    steps = [record(0.0, p_star, u, 0, r0, r0)]
    trace = HomotopyTrace(steps, False, p_star, f, p)
    t, dt, streak = 0.0, schedule.initial_step, 0
    while t < 1.0:
        t_new = min(1.0, t + dt)
        if 1.0 - t_new < schedule.min_step:
            t_new = 1.0
        pt = t_new * p + (1.0 - t_new) * p_star
        try:
            measure = "nodal" if t_new == 1.0 else "galerkin"
            res = newton_solve(_blend(f, t_new, grid), pt, u, newton_tol=newton_tol, measure=measure)
            step = record(t_new, pt, res.solution, res.iterations, res.galerkin_sup, res.residual_sup)
            if step.bound_low <= 0.0 or step.norm_C2alpha_proxy > schedule.c2_ceiling:
                raise ContinuationStall(
                    f"monitor breach at t={t_new:.4g}: min u {step.bound_low:.3e}, "
                    f"C2 proxy {step.norm_C2alpha_proxy:.3e}"
                )
        except (NewtonDivergence, JacobianSingular, ConvexityViolation, PositivityViolation,
                ContinuationStall) as exc:
            trace.rejected += 1
            dt *= 0.5
            streak = 0
            if dt < schedule.min_step:
                trace.failure = f"step floor reached at t={t:.6g}: {exc}"
                return trace
            continue
        steps.append(step)
        u, t = res.solution, t_new
        streak += 1
        if streak >= schedule.grow_after:
            dt, streak = min(2.0 * dt, schedule.max_step), 0
    trace.converged = True
    return trace


def solve(f, p, p_star=DEFAULT_P_STAR, schedule=None, dim=None, band_limit=None,
          newton_tol=NEWTON_TOL):
    """Continuation to t = 1, a confirming Newton pass, and the fine-grid certificate."""
    trace = homotopy_solve(f, p, p_star, schedule, dim, band_limit, newton_tol)
    trace.raise_if_failed()
    f = as_source(f)
    res = newton_solve(f, p, trace.solution, newton_tol=newton_tol)
    res.trace = trace
    res.certificate = residual_certificate(res.solution, f, p)
    return res


# ----------------------------------------------------------------------------
# checks


@dataclass
class LinearizedCheck:
    multipliers: np.ndarray
    smallest: float
    dim: int
    p_star: float


def linearized_check_at_one(p_star=DEFAULT_P_STAR, dim=2, band_limit=None):
    """Spectrum of the t = 0 linearization at u = 1 on the even subspace.

    Assembled with the solver's own Jacobian at u = 1, f = 1, p = p_star,
    which reduces to the Laplacian plus (n + 1 - p_star).
    """
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must lie in (0, 1)")
    sysm = _system(dim, working_grid(dim, band_limit).band_limit)
    u = constant_field(dim, sysm.band_limit)
    jets = sysm.jets(sysm.coefficients(u))
    _, _, U, _ = kernels.jet_algebra(jets.value, jets.hess)
    J = sysm.jacobian(jets, U, np.ones(sysm.grid.size), p_star)
    ev = np.linalg.eigvals(J).real
    distinct = []
    for v in sorted(ev, reverse=True):
        if not distinct or abs(v - distinct[-1]) > 1e-8 * max(1.0, abs(v)):
            distinct.append(float(v))
    return LinearizedCheck(np.array(distinct), float(np.min(np.abs(ev))), dim, p_star)


@dataclass
class ProbeTrial:
    seed_noise: float
    converged: bool
    iterations: int
    residual_sup: float
    error: str | None = None


@dataclass
class UniquenessReport:
    clusters: list
    trials: list

    @property
    def distinct(self):
        return len(self.clusters)


def _perturbed_start(u, noise, rng, eps_conv):
    grid = working_grid(u.dim, u.band_limit)
    base = synthesize(u, grid).value
    delta = random_even_field(u.dim, u.band_limit, rng, max_degree=min(4, u.band_limit))
    dv = synthesize(delta, grid).value
    scale = noise * float(np.max(np.abs(base))) / max(float(np.max(np.abs(dv))), 1e-300)
    for _ in range(40):
        start = u + scale * delta
        if _admissible(synthesize(start, grid), eps_conv):
            return start, scale
        scale *= 0.5
    return u, 0.0


def uniqueness_probe(f, p, trials=20, noise=0.05, seed=0, base=None, workers=1,
                     newton_tol=NEWTON_TOL, cluster_tol=CLUSTER_TOL):
    """Newton from randomly perturbed copies of a converged solution; cluster the limits.

    Perturbations that break convexity are halved until valid; the noise
    actually used is recorded per trial.
    """
    if base is None:
        if isinstance(f, SpectralField):
            base = solve(f, p, newton_tol=newton_tol).solution
        else:
            raise ValueError("pass a converged base solution for non-spectral right-hand sides")
    rng = np.random.default_rng(seed)
    starts = [_perturbed_start(base, noise, rng, EPS_CONV) for _ in range(trials)]

    def run(start):
        u0, used = start
        try:
            res = newton_solve(f, p, u0, newton_tol=newton_tol)
        except (NewtonDivergence, JacobianSingular, ConvexityViolation, PositivityViolation) as exc:
            return None, ProbeTrial(used, False, -1, float("nan"), str(exc))
        return res.solution, ProbeTrial(used, True, res.iterations, res.residual_sup)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, starts))
    else:
        outcomes = [run(s) for s in starts]
    grid = working_grid(base.dim, base.band_limit)
    clusters, reps = [], []
    for sol, _ in outcomes:
        if sol is None:
            continue
        v = sol.values(grid)
        for k, rv in enumerate(reps):
            if np.max(np.abs(v - rv)) < cluster_tol:
                break
        else:
            reps.append(v)
            clusters.append(sol)
    return UniquenessReport(clusters, [t for _, t in outcomes])
