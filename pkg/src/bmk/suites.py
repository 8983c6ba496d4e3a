"""Acceptance criteria as plain functions, shared by the CLI and the test suite.

Each ``criterion_N`` returns a :class:`CriterionResult`; ``run_suite`` runs a
named list of them. Targets are analytic (ball spectra, equality cases) or
identities that hold for every valid input.
"""

import itertools
import time
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import lpsolver, measure, spectrum, stability
from .body import dilate, make_body
from .catalog import BUILTIN, Catalog
from .sphere import constant_field, mode_field

PLANAR = ("ball", "ellipsoid", "ellipse_a3", "ellipse_a5",
          "smoothed_cube", "smoothed_cube_q2", "smoothed_cube_q8", "perturbed_ball")


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    summary: str
    details: dict = dc_field(default_factory=dict)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:>2} {status}  {self.title}  [{self.seconds:.2f}s]  {self.summary}"

    def to_json(self):
        return {"criterion": self.number, "title": self.title, "pass": self.passed,
                "seconds": self.seconds, "summary": self.summary, "details": self.details}


@lru_cache(maxsize=64)
def catalog_body(name, dim, band_limit=None):
    return Catalog().body(name, dim, band_limit)


def _names():
    return [e.name for e in BUILTIN]


def _rng(seed, *keys):
    return np.random.default_rng([seed, *keys])


def _timed(number, title, fn):
    t0 = time.perf_counter()
    passed, summary, details = fn()
    return CriterionResult(number, title, bool(passed), time.perf_counter() - t0, summary, details)


# ----------------------------------------------------------------------------
# spectra


def _ball_spectrum(dim, band_limit, count, tol, limit_s):
    def run():
        t0 = time.perf_counter()
        K = make_body({"name": "ball", "kind": "ball"}, dim=dim, band_limit=band_limit)
        res = spectrum.solve_spectrum(spectrum.assemble_pencil(K, "full"), count)
        elapsed = time.perf_counter() - t0
        n = dim - 1
        # eigenvalue l(l+n-1) - n with the multiplicity of degree-l harmonics
        mult = (lambda l: 1 if l == 0 else 2) if dim == 2 else (lambda l: 2 * l + 1)
        oracle = [l * (l + n - 1) - n for l in range(4) for _ in range(mult(l))][:count]
        err = float(np.max(np.abs(res.eigenvalues - oracle)))
        lam3_err = abs(res.lambda3 - 2 * (n + 1) + n)
        ok = err < tol and lam3_err < tol and elapsed < limit_s
        return ok, f"max error {err:.2e}, lambda3 {res.lambda3:.12g}, solve {elapsed:.2f}s", {
            "eigenvalues": res.eigenvalues.tolist(), "oracle": oracle, "max_error": err,
            "lambda3": res.lambda3, "runtime": elapsed}
    return run


def criterion_1(**_):
    return _timed(1, "ball spectrum, dim 2", _ball_spectrum(2, 64, 5, 1e-8, 1.0))


def criterion_2(**_):
    return _timed(2, "ball spectrum, dim 3", _ball_spectrum(3, 24, 9, 1e-6, 30.0))


def criterion_3(dims=(2, 3), **_):
    def run():
        rows, worst = [], 0.0
        ok = True
        for dim, name in itertools.product(dims, _names()):
            res = spectrum.verify_structure(catalog_body(name, dim), tol=1e-5, strict=False)
            flags = res.classification
            ok &= all(flags.values())
            r = res.residuals
            worst = max(worst, r["negative_value_error"], r["negative_angle"], r["kernel_angle"])
            rows.append({"dim": dim, "body": name, **flags, **r})
        return ok, f"{len(rows)} bodies, worst residual {worst:.2e}", {"rows": rows}
    return _timed(3, "low-spectrum structure on the catalog", run)


def criterion_4(**_):
    def run():
        vals = {}
        for name in PLANAR:
            lam3, _ = spectrum.third_eigenvalue(catalog_body(name, 2))
            vals[name] = lam3
        worst = min(vals, key=vals.get)
        ok = all(v >= 1.0 - 1e-8 for v in vals.values())
        return ok, f"min lambda3 {vals[worst]:.6f} ({worst})", {"lambda3": vals}
    return _timed(4, "lambda3 >= 1 for planar symmetric bodies", run)


def criterion_5(**_):
    def run():
        rows = {}
        ok = True
        for name in ("ball", "ellipsoid"):
            r = stability.inf_J(catalog_body(name, 2))
            good = abs(r.value - 1.0) < 1e-6 and r.h_angle < 1e-6 and r.el_residual < 1e-7
            ok &= good
            rows[name] = {"inf_J": r.value, "h_angle": r.h_angle, "el_residual": r.el_residual}
        worst = max(abs(v["inf_J"] - 1.0) for v in rows.values())
        el = max(v["el_residual"] for v in rows.values())
        return ok, f"|inf_J - 1| <= {worst:.2e}, EL residual <= {el:.2e}", rows
    return _timed(5, "inf J = 1 attained at h_K", run)


def criterion_6(dims=(2, 3), **_):
    def run():
        rows = []
        for dim, name in itertools.product(dims, _names()):
            K = catalog_body(name, dim)
            for p_star in (0.0, 0.5):
                m = stability.stable_condition(K, K.field, p_star).margin
                rows.append({"dim": dim, "body": name, "p_star": p_star, "margin": m})
        bad = [r for r in rows if abs(r["margin"]) >= 1e-9]
        by_p = {p: max(abs(r["margin"]) for r in rows if r["p_star"] == p) for p in (0.0, 0.5)}
        summary = f"max |margin|: p*=0 {by_p[0.0]:.2e}, p*=0.5 {by_p[0.5]:.2e}; {len(bad)}/{len(rows)} cases off zero"
        return not bad, summary, {"rows": rows}
    return _timed(6, "stable-condition equality at phi = h_K", run)


def criterion_7(dims=(2, 3), probes=10, seed=0, **_):
    def run():
        worst_rel, worst_i1, worst_i1_fd = 0.0, 0.0, 0.0
        rows = []
        for dim, (bi, name) in itertools.product(dims, enumerate(_names())):
            K = catalog_body(name, dim)
            rng = _rng(seed, 7, dim, bi)
            for _ in range(probes):
                phi = stability.random_probe(K, rng, normalize="convexity")
                pr = stability.VariationProbe(K, phi, float(rng.uniform(0.0, 0.95)),
                                              float(rng.uniform(0.1, 0.9)))
                I1, I2 = stability.second_variation(pr)
                fd = stability.finite_difference_variation(pr)
                rel = abs(fd["I2_richardson"] - I2) / abs(I2)
                worst_rel = max(worst_rel, rel)
                worst_i1 = max(worst_i1, abs(I1))
                worst_i1_fd = max(worst_i1_fd, abs(fd["I1_richardson"]))
                rows.append({"dim": dim, "body": name, "p": pr.p, "lambda": pr.lam,
                             "I2": I2, "I2_fd": fd["I2_richardson"], "rel_error": rel,
                             "I1": I1, "I1_fd": fd["I1_richardson"]})
        ok = worst_rel < 1e-4 and worst_i1 < 1e-10 and worst_i1_fd < 1e-10
        return ok, (f"{len(rows)} probes, max rel error {worst_rel:.2e}, "
                    f"|I'(0)| {worst_i1:.1e} (fd {worst_i1_fd:.1e})"), {"rows": rows}
    return _timed(7, "analytic second variation vs finite differences", run)


def criterion_8(dims=(2, 3), **_):
    def run():
        ok = True
        details = {}
        worst_bm, worst_end = np.inf, 0.0
        for dim in dims:
            for a, b in itertools.combinations(_names(), 2):
                rep = measure.verify_bm(catalog_body(a, dim), catalog_body(b, dim))
                ok &= rep.passed and rep.metadata["endpoint_max_gap"] < 1e-12
                worst_bm = min(worst_bm, rep.margin)
                worst_end = max(worst_end, rep.metadata["endpoint_max_gap"])
        details["bm"] = {"min_margin": worst_bm, "endpoint_max_gap": worst_end}

        r1 = make_body({"name": "r1", "kind": "ball", "params": {"radius": 1.0}}, dim=2)
        r2 = make_body({"name": "r2", "kind": "ball", "params": {"radius": 2.0}}, dim=2)
        fy = measure.verify_lp_bm(r1, r2, 2.0, [0.5])
        lhs_err, rhs_err = abs(fy.lhs - 2.5 * np.pi), abs(fy.rhs - 2.0 * np.pi)
        ok &= lhs_err < 1e-10 and rhs_err < 1e-10
        details["firey"] = {"lhs": fy.lhs, "rhs": fy.rhs, "lhs_error": lhs_err, "rhs_error": rhs_err}

        worst_dil = 0.0
        for dim in dims:
            for name in ("ball", "ellipsoid", "smoothed_cube", "perturbed_ball"):
                K = catalog_body(name, dim)
                cK = dilate(K, 1.7)
                for p in (0.5, 2.0):
                    pbm = measure.verify_p_bm(K, cK, p, [0.25, 0.5, 0.75])
                    worst_dil = max(worst_dil, max(abs(r["margin"]) for r in pbm.records))
                    mk = measure.verify_lp_minkowski(K, cK, p)
                    worst_dil = max(worst_dil, abs(mk.margin))
        ok &= worst_dil < 1e-8
        details["dilation_max_gap"] = worst_dil
        summary = (f"BM min margin {worst_bm:.2e}, endpoint gap {worst_end:.1e}; "
                   f"Firey lhs err {lhs_err:.1e}; dilation gap {worst_dil:.1e}")
        return ok, summary, details
    return _timed(8, "Brunn-Minkowski-type verifiers", run)


def criterion_9(dims=(2, 3), **_):
    def run():
        ok = True
        details = {}
        limits = {2: 5.0, 3: 300.0}
        for dim in dims:
            t0 = time.perf_counter()
            d = {}
            L = lpsolver.working_grid(dim).band_limit
            one = constant_field(dim, L)
            for p in (0.1, 0.5, 0.9):
                res = lpsolver.solve(1.0, p, dim=dim)
                err = float(np.max(np.abs(res.solution.coefficients - one.coefficients)))
                d[f"const_p{p}"] = {"residual": res.residual_sup, "coef_error": err}
                ok &= res.residual_sup < 1e-10 and err < 1e-10

            K = catalog_body("ellipsoid", dim)
            src = lpsolver.RoundTripSource(K.field, 0.5)
            rt = lpsolver.solve(src, 0.5)
            rt_err = float(np.max(np.abs(rt.solution.values(K.grid) - K.h)))
            tol = 1e-8 if dim == 2 else 1e-6
            d["round_trip"] = {"sup_error": rt_err, "residual": rt.residual_sup,
                               "certificate": rt.certificate}
            ok &= rt_err < tol and rt.certificate < 1e-9

            f = one + mode_field(dim, L, 2, 2, 0.1)
            tr = lpsolver.homotopy_solve(f, 0.5)
            u = tr.solution
            jets = lpsolver.synthesize(u, K.grid)
            _, det, _, _ = lpsolver.kernels.jet_algebra(jets.value, jets.hess)
            f_back = det * jets.value ** 0.5
            back_err = float(np.max(np.abs(f_back - f.values(K.grid))))
            mon_ok = all(s.bound_low > 0 and s.norm_C2alpha_proxy < lpsolver.C2_CEILING for s in tr.steps)
            ts = [s.t for s in tr.steps]
            d["homotopy"] = {"converged": tr.converged, "steps": len(tr.steps),
                             "final_residual": tr.steps[-1].residual_sup, "round_trip_error": back_err,
                             "monitors_ok": mon_ok, "min_u": min(s.bound_low for s in tr.steps),
                             "max_C2_proxy": max(s.norm_C2alpha_proxy for s in tr.steps)}
            ok &= (tr.converged and mon_ok and tr.steps[-1].residual_sup < 1e-10 and back_err < 1e-9
                   and all(b > a for a, b in zip(ts, ts[1:])))

            uq = lpsolver.uniqueness_probe(1.0, 0.5, trials=20, noise=0.05, seed=0, base=one)
            d["uniqueness_const"] = {"clusters": uq.distinct,
                                     "converged": sum(t.converged for t in uq.trials)}
            ok &= uq.distinct == 1
            if dim == 2:
                uq2 = lpsolver.uniqueness_probe(src, 0.5, trials=20, noise=0.05, seed=0, base=rt.solution)
                d["uniqueness_round_trip"] = {"clusters": uq2.distinct,
                                              "converged": sum(t.converged for t in uq2.trials)}
                ok &= uq2.distinct == 1
            d["runtime"] = time.perf_counter() - t0
            ok &= d["runtime"] < limits[dim]
            details[f"dim{dim}"] = d
        summary = "; ".join(
            f"dim {k[-1]}: round-trip {v['round_trip']['sup_error']:.1e}, "
            f"clusters {v['uniqueness_const']['clusters']}, {v['runtime']:.1f}s"
            for k, v in details.items()
        )
        return ok, summary, details
    return _timed(9, "L_p Minkowski solver", run)


def criterion_10(dims=(2, 3), trials=100, seed=0, **_):
    def run():
        ok = True
        rows = []
        for dim, (bi, name) in itertools.product(dims, enumerate(_names())):
            K = catalog_body(name, dim)
            rep = stability.equivalence_experiment(K, 0.0, trials, seed=seed * 1000 + 10 * bi + dim)
            mn = min(rep.margins)
            if rep.lambda3 >= 1.0:
                ok &= mn >= -1e-9
            ok &= rep.consistent
            rows.append({"dim": dim, "body": name, "lambda3": rep.lambda3, "min_margin": mn,
                         "agree": rep.agree, "consistent": rep.consistent})
        worst = min(r["min_margin"] for r in rows)
        return ok, f"{len(rows)} bodies x {trials} probes, min margin {worst:.3e}", {"rows": rows}
    return _timed(10, "stable condition vs third eigenvalue", run)


def criterion_11(dims=(2, 3), trials=100, seed=0, **_):
    def run():
        ok = True
        rows = []
        for dim, (bi, name) in itertools.product(dims, enumerate(_names())):
            K = catalog_body(name, dim)
            P = spectrum.assemble_pencil(K, "even")
            spec = spectrum.solve_spectrum(P, 4)
            rng = _rng(seed, 11, dim, bi)
            margins = [stability.third_eigenvalue_bound(K, stability.random_probe(K, rng), spec.lambda3, P).margin
                       for _ in range(trials)]
            third = P.embed(spec.eigenvectors[:, 1])
            eq_third = stability.third_eigenvalue_bound(K, third, spec.lambda3, P).margin
            eq_h = stability.third_eigenvalue_bound(K, K.field, spec.lambda3, P).margin
            ok &= min(margins) >= -1e-9 and abs(eq_third) < 1e-8 and abs(eq_h) < 1e-8
            rows.append({"dim": dim, "body": name, "min_margin": min(margins),
                         "equality_third": eq_third, "equality_h": eq_h})
        worst = min(r["min_margin"] for r in rows)
        eq = max(max(abs(r["equality_third"]), abs(r["equality_h"])) for r in rows)
        return ok, f"min margin {worst:.3e}, equality cases within {eq:.1e}", {"rows": rows}
    return _timed(11, "third-eigenvalue inequality", run)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}

SUITES = {
    "acceptance": {i: {} for i in range(1, 12)},
    "quick": {
        1: {}, 3: {"dims": (2,)}, 4: {}, 5: {}, 6: {"dims": (2,)},
        7: {"dims": (2,), "probes": 3}, 8: {"dims": (2,)}, 9: {"dims": (2,)},
        10: {"dims": (2,), "trials": 20}, 11: {"dims": (2,), "trials": 20},
    },
}


def run_suite(name, seed=0, echo=None):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r} (one of {', '.join(SUITES)})")
    results = []
    for number, kwargs in SUITES[name].items():
        res = CRITERIA[number](seed=seed, **kwargs)
        if echo:
            echo(res.line())
        results.append(res)
    return results
