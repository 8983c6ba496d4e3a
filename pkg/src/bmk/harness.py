"""Experiment orchestration: a validated config in, an exit status and a report out.

Exit codes: 0 when every check passed, 2 when a check failed, 1 on errors.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__, lpsolver, measure, spectrum, stability, suites
from .catalog import load_catalog
from .errors import BMKError, ConfigError
from .sphere import DEFAULT_BAND_LIMIT, SpectralField, constant_field

SCHEMA = "bmk/1"
EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2
OPERATIONS = ("spectrum", "verify", "stability", "solve", "equivalence", "catalog", "suite")
VERIFY_KINDS = ("bm", "lp-bm", "p-bm", "lp-mink")


@dataclass
class ExperimentConfig:
    operation: str
    dim: int = 2
    modes: int | None = None
    seed: int = 0
    bodies: list = dc_field(default_factory=list)
    catalog_file: str | None = None
    verify_kind: str | None = None
    p: float | None = None
    p_star: float | None = None
    lambda_grid: object = 11
    trials: int | None = None
    noise: float = 0.05
    subspace: str = "full"
    count: int = 8
    f_const: float | None = None
    f_coeffs: list | None = None
    f_body: str | None = None
    newton_tol: float = lpsolver.NEWTON_TOL
    suite: str | None = None

    def validate(self):
        if self.operation not in OPERATIONS:
            raise ConfigError(f"operation: unknown operation {self.operation!r}")
        if self.dim not in (2, 3):
            raise ConfigError(f"dim: must be 2 or 3, got {self.dim!r}")
        if self.modes is not None and (int(self.modes) != self.modes or self.modes < 2):
            raise ConfigError(f"modes: must be an integer >= 2, got {self.modes!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed: must be a nonnegative integer, got {self.seed!r}")
        for key in ("trials", "count"):
            v = getattr(self, key)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"{key}: must be a positive integer, got {v!r}")
        for key in ("newton_tol", "noise"):
            v = getattr(self, key)
            if not isinstance(v, (int, float)) or v < 0 or (key == "newton_tol" and v == 0):
                raise ConfigError(f"{key}: must be positive, got {v!r}")
        if self.p_star is not None and not 0.0 <= self.p_star < 1.0:
            raise ConfigError(f"p_star: must lie in [0, 1), got {self.p_star!r}")
        if self.subspace not in ("full", "even"):
            raise ConfigError(f"subspace: must be 'full' or 'even', got {self.subspace!r}")
        if self.operation == "verify" and self.verify_kind not in VERIFY_KINDS:
            raise ConfigError(f"verify_kind: must be one of {', '.join(VERIFY_KINDS)}")
        if self.operation == "suite" and self.suite not in suites.SUITES:
            raise ConfigError(f"suite: must be one of {', '.join(suites.SUITES)}")
        if self.operation in ("spectrum", "stability", "equivalence") and not self.bodies:
            raise ConfigError("bodies: at least one body is required")
        if self.operation == "verify":
            if len(self.bodies) != 2:
                raise ConfigError(f"bodies: verify needs exactly two bodies, got {len(self.bodies)}")
            if self.verify_kind != "bm" and self.p is None:
                raise ConfigError("p: required for this inequality")
        if self.operation == "solve":
            given = [k for k in ("f_const", "f_coeffs", "f_body") if getattr(self, k) is not None]
            if len(given) != 1:
                raise ConfigError("f_const/f_coeffs/f_body: give exactly one right-hand side")
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ConfigError(f"p: must lie in (0, 1), got {self.p!r}")
        self.lambda_grid_values()
        return self

    @property
    def band_limit(self):
        return int(self.modes) if self.modes is not None else DEFAULT_BAND_LIMIT[self.dim]

    def lambda_grid_values(self):
        g = self.lambda_grid
        try:
            if isinstance(g, str):
                g = [float(x) for x in g.split(",")] if "," in g else int(g)
            if isinstance(g, int):
                if g < 2:
                    raise ValueError
                return np.linspace(0.0, 1.0, g)
            arr = np.asarray(g, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"lambda_grid: expected a point count >= 2 or a list in [0, 1], got {g!r}") from None
        if arr.ndim != 1 or arr.size == 0 or np.any((arr < 0) | (arr > 1)):
            raise ConfigError(f"lambda_grid: values must lie in [0, 1], got {g!r}")
        return arr


@dataclass
class RunOutcome:
    status: int
    report: dict
    rows: list = dc_field(default_factory=list)
    text: str = ""


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(report):
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False)


def rows_to_csv(rows):
    if not rows:
        return ""
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _clean(v) for k, v in r.items()})
    return buf.getvalue()


def _header(cfg):
    return {"schema": SCHEMA, "version": __version__, "operation": cfg.operation,
            "seed": cfg.seed, "dim": cfg.dim, "band_limit": cfg.band_limit}


def _body(cfg, catalog, spec):
    return catalog.body(spec, cfg.dim, cfg.band_limit)


# ----------------------------------------------------------------------------
# operations


def _run_spectrum(cfg, catalog):
    out, ok = [], True
    for spec in cfg.bodies:
        K = _body(cfg, catalog, spec)
        res = spectrum.solve_spectrum(spectrum.assemble_pencil(K, cfg.subspace), cfg.count)
        entry = {"body": spec, **res.to_json()}
        if cfg.subspace == "full":
            st = spectrum.verify_structure(K, strict=False)
            entry["structure"] = {"flags": st.classification, "residuals": st.residuals}
            ok &= all(st.classification.values())
        out.append(entry)
    text = "\n".join(f"{e['body']}: lambda3 = {e['lambda3']:.12g}" for e in out)
    return RunOutcome(EXIT_OK if ok else EXIT_CHECK, {"results": out, "pass": ok}, text=text)


def _run_verify(cfg, catalog):
    K, L = (_body(cfg, catalog, s) for s in cfg.bodies)
    grid = cfg.lambda_grid_values()
    kind = cfg.verify_kind
    if kind == "bm":
        rep = measure.verify_bm(K, L, grid)
    elif kind == "lp-bm":
        rep = measure.verify_lp_bm(K, L, cfg.p, grid)
    elif kind == "p-bm":
        rep = measure.verify_p_bm(K, L, cfg.p, grid)
    else:
        rep = measure.verify_lp_minkowski(K, L, cfg.p)
    report = {"inequality": rep.to_json(), "records": rep.records, "pass": rep.passed}
    text = f"{rep.name}: worst margin {rep.margin:.3e} ({'pass' if rep.passed else 'FAIL'})"
    return RunOutcome(EXIT_OK if rep.passed else EXIT_CHECK, report, rep.rows(), text)


def _run_stability(cfg, catalog):
    p_star = 0.0 if cfg.p_star is None else cfg.p_star
    trials = cfg.trials or 20
    out, rows, ok = [], [], True
    for bi, spec in enumerate(cfg.bodies):
        K = _body(cfg, catalog, spec)
        rng = np.random.default_rng([cfg.seed, bi])
        P = spectrum.assemble_pencil(K, "even")
        spec_res = spectrum.solve_spectrum(P, 4)
        anchor = stability.stable_condition(K, K.field, p_star).margin
        ij = stability.inf_J(K)
        margins, fd_err = [], 0.0
        for t in range(trials):
            phi = stability.random_probe(K, rng)
            m = stability.stable_condition(K, phi, p_star).margin
            margins.append(m)
            rows.append({"body": spec, "trial": t, "p_star": p_star, "margin": m})
        for _ in range(min(trials, 5)):
            phi = stability.random_probe(K, rng, normalize="convexity")
            pr = stability.VariationProbe(K, phi, float(rng.uniform(0, 0.95)), float(rng.uniform(0.1, 0.9)))
            _, I2 = stability.second_variation(pr)
            fd = stability.finite_difference_variation(pr)
            fd_err = max(fd_err, abs(fd["I2_richardson"] - I2) / abs(I2))
        holds = min(margins) >= -stability.MARGIN_TOL
        expected = spec_res.lambda3 >= 1.0 - p_star - 1e-8
        body_ok = fd_err < 1e-4 and (holds or not expected)
        ok &= body_ok
        out.append({"body": spec, "p_star": p_star, "lambda3": spec_res.lambda3,
                    "spectral_verdict": expected, "min_margin": min(margins), "holds": holds,
                    "anchor_margin": anchor, "inf_J": ij.value, "inf_J_el_residual": ij.el_residual,
                    "second_variation_rel_error": fd_err, "pass": body_ok})
    text = "\n".join(f"{e['body']}: lambda3 {e['lambda3']:.6g}, min margin {e['min_margin']:.3e}, "
                     f"inf J {e['inf_J']:.8g}" for e in out)
    return RunOutcome(EXIT_OK if ok else EXIT_CHECK, {"results": out, "pass": ok}, rows, text)


def _source(cfg, catalog):
    if cfg.f_const is not None:
        if cfg.f_const <= 0:
            raise ConfigError("f_const: must be positive")
        return lpsolver.ConstantSource(float(cfg.f_const)), {"constant": cfg.f_const}
    if cfg.f_body is not None:
        spec = cfg.f_body
        p = cfg.p
        if isinstance(spec, dict):
            if "from_body" not in spec:
                raise ConfigError("f_body: round-trip form needs a 'from_body' key")
            p = float(spec.get("p", cfg.p))
            spec = spec["from_body"]
        K = _body(cfg, catalog, spec)
        return lpsolver.RoundTripSource(K.field, p), {"from_body": spec, "p": p}
    coeffs = cfg.f_coeffs
    if isinstance(coeffs, str):
        try:
            coeffs = json.loads(coeffs)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"f_coeffs: not a JSON list: {exc}") from None
    c = np.zeros(constant_field(cfg.dim, cfg.band_limit).coefficients.size)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size > c.size:
        raise ConfigError(f"f_coeffs: expected at most {c.size} coefficients")
    c[: coeffs.size] = coeffs
    try:
        f = SpectralField(cfg.dim, cfg.band_limit, c, even=True)
    except BMKError as exc:
        raise ConfigError(f"f_coeffs: {exc}") from None
    return f, {"coefficients": coeffs.tolist()}


def _run_solve(cfg, catalog):
    f, f_json = _source(cfg, catalog)
    p_star = lpsolver.DEFAULT_P_STAR if cfg.p_star is None else cfg.p_star
    trace = lpsolver.homotopy_solve(f, cfg.p, p_star, dim=cfg.dim, band_limit=cfg.band_limit,
                                    newton_tol=cfg.newton_tol)
    report = {"f": f_json, "p": cfg.p, "p_star": p_star, "trace": trace.to_json()}
    rows = [{k: v for k, v in s.to_json().items() if k != "solution"} for s in trace.steps]
    if not trace.converged:
        report["pass"] = False
        return RunOutcome(EXIT_CHECK, report, rows, f"continuation stalled: {trace.failure}")
    res = lpsolver.newton_solve(f, cfg.p, trace.solution, newton_tol=cfg.newton_tol)
    res.certificate = lpsolver.residual_certificate(res.solution, f, cfg.p)
    report["solution"] = res.to_json()
    grid = lpsolver.working_grid(cfg.dim, cfg.band_limit)
    vals = res.solution.values(grid)
    report["solution_range"] = [float(vals.min()), float(vals.max())]
    ok = res.residual_sup < cfg.newton_tol and (res.certificate is None or res.certificate < 10 * cfg.newton_tol)
    if cfg.trials:
        uq = lpsolver.uniqueness_probe(f, cfg.p, cfg.trials, cfg.noise, cfg.seed, base=res.solution,
                                       newton_tol=cfg.newton_tol)
        report["uniqueness"] = {"clusters": uq.distinct,
                                "trials": [t.__dict__ for t in uq.trials]}
    lc = lpsolver.linearized_check_at_one(p_star, cfg.dim, cfg.band_limit)
    report["linearized_at_one"] = {"smallest": lc.smallest, "multipliers": lc.multipliers[:6]}
    report["pass"] = bool(ok)
    text = (f"converged in {len(trace.steps) - 1} continuation steps; residual {res.residual_sup:.2e}, "
            f"u in [{vals.min():.10g}, {vals.max():.10g}]")
    return RunOutcome(EXIT_OK if ok else EXIT_CHECK, report, rows, text)


def _run_equivalence(cfg, catalog):
    p_star = 0.0 if cfg.p_star is None else cfg.p_star
    out, rows, ok = [], [], True
    for bi, spec in enumerate(cfg.bodies):
        K = _body(cfg, catalog, spec)
        rep = stability.equivalence_experiment(K, p_star, cfg.trials or 100, seed=cfg.seed * 1000 + bi)
        rep.body = spec
        out.append(rep.to_json())
        rows.extend(rep.rows())
        ok &= rep.agree and rep.consistent
    text = "\n".join(f"{e['body']}: lambda3 {e['lambda3']:.6g}, min margin {e['min_margin']:.3e}, "
                     f"agree={e['agree']}" for e in out)
    return RunOutcome(EXIT_OK if ok else EXIT_CHECK, {"results": out, "pass": ok}, rows, text)


def _run_catalog(cfg, catalog):
    return RunOutcome(EXIT_OK, {"bodies": catalog.to_json()}, [e.to_json() for e in catalog],
                      catalog.table())


def _run_suite(cfg, catalog):
    lines = []
    results = suites.run_suite(cfg.suite, seed=cfg.seed, echo=lines.append)
    ok = all(r.passed for r in results)
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    rows = [{"criterion": r.number, "title": r.title, "pass": r.passed,
             "seconds": round(r.seconds, 3), "summary": r.summary} for r in results]
    report = {"suite": cfg.suite, "criteria": [r.to_json() for r in results], "pass": ok}
    return RunOutcome(EXIT_OK if ok else EXIT_CHECK, report, rows, "\n".join(lines))


_DISPATCH = {
    "spectrum": _run_spectrum,
    "verify": _run_verify,
    "stability": _run_stability,
    "solve": _run_solve,
    "equivalence": _run_equivalence,
    "catalog": _run_catalog,
    "suite": _run_suite,
}


def run(cfg):
    """Validate and execute one experiment; errors become exit status 1."""
    try:
        cfg.validate()
        catalog = load_catalog(cfg.catalog_file)
        outcome = _DISPATCH[cfg.operation](cfg, catalog)
    except (BMKError, ValueError) as exc:
        report = {"error": f"{type(exc).__name__}: {exc}", "pass": False}
        outcome = RunOutcome(EXIT_ERROR, report, text=f"error: {exc}")
    try:
        header = _header(cfg)
    except (KeyError, TypeError, ValueError):
        header = {"schema": SCHEMA, "version": __version__, "operation": cfg.operation, "seed": cfg.seed}
    if cfg.operation == "verify":
        header["verify_kind"] = cfg.verify_kind
    outcome.report = {**header, **outcome.report}
    return outcome
