"""Volumes, cone-volume measures and Brunn-Minkowski-type inequality checks.

Every verifier returns an :class:`InequalityReport` whose ``margin`` is the
normalized gap ``(lhs - rhs) / |rhs|``, so a check passes when
``margin >= -PASS_TOL``. Exponents use the ambient dimension ``d``:
dilating ``K`` by ``c`` multiplies volume by ``c**d``, and only the
``1/d`` and ``p/d`` exponents are dilation invariant.
"""

from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .body import body_from_field, lp_combination, wulff_body
from .sphere import integrate

PASS_TOL = 1e-9
EQ_TOL = 1e-7
INEQUALITIES = ("BM", "LpBM", "pBM", "LpMink")


def default_lambda_grid(points=11):
    return np.linspace(0.0, 1.0, points)


def ma_density(K):
    """det(hess h + h I): density of the surface-area measure."""
    return K.detW.copy()


def volume(K):
    return integrate(K.h * K.detW, K.grid) / K.dim


def cone_volume_density(K):
    """Density of the normalized cone-volume measure (integrates to one)."""
    return K.h * K.detW / (K.dim * volume(K))


@dataclass
class InequalityReport:
    name: str
    params: dict
    lhs: float
    rhs: float
    margin: float
    passed: bool
    equality_flag: bool
    metadata: dict = dc_field(default_factory=dict)
    records: list = dc_field(default_factory=list)

    def to_json(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        out.pop("records")
        return out

    def rows(self):
        """One flat dict per evaluated point, for CSV output."""
        base = {"name": self.name, **{k: v for k, v in self.metadata.items() if k in ("K", "L", "dim", "band_limit")}}
        return [{**base, **r} for r in self.records]


def _normalized(lhs, rhs):
    return (lhs - rhs) / max(abs(rhs), 1e-300)


def _finish(name, params, records, metadata):
    interior = [r for r in records if 0.0 < r.get("lambda", 0.5) < 1.0] or records
    worst = min(interior, key=lambda r: r["margin"])
    passed = all(r["margin"] >= -PASS_TOL for r in records)
    ends = [r for r in records if r.get("lambda") in (0.0, 1.0)]
    if ends:
        metadata = dict(metadata, endpoint_max_gap=max(abs(r["margin"]) for r in ends))
    return InequalityReport(
        name, params, worst["lhs"], worst["rhs"], worst["margin"], passed,
        abs(worst["margin"]) < EQ_TOL, metadata, records,
    )


def _meta(K, L):
    return {"K": K.name, "L": L.name, "dim": K.dim, "band_limit": K.band_limit}


def _as_grid(lambda_grid):
    if lambda_grid is None:
        return default_lambda_grid()
    lam = np.atleast_1d(np.asarray(lambda_grid, dtype=float))
    if np.any((lam < 0) | (lam > 1)):
        raise ValueError("lambda values must lie in [0, 1]")
    return lam


def verify_bm(K, L, lambda_grid=None):
    """Log-concave Brunn-Minkowski: V((1-l)K + lL) >= V(K)^(1-l) V(L)^l."""
    VK, VL = volume(K), volume(L)
    records = []
    for lam in _as_grid(lambda_grid):
        lam = float(lam)
        mix = body_from_field((1.0 - lam) * K.field + lam * L.field, K.grid, name="mix")
        lhs = volume(mix)
        rhs = VK ** (1.0 - lam) * VL ** lam
        records.append({"lambda": lam, "lhs": lhs, "rhs": rhs, "margin": _normalized(lhs, rhs)})
    return _finish("BM", {"lambda_grid": [r["lambda"] for r in records]}, records, _meta(K, L))


def lp_sum_body(K, L, p, lam):
    """W(((1-l) h_K^p + l h_L^p)^(1/p)), mollified into a BodyRep."""
    lam = float(lam)
    if lam == 0.0:
        return K
    if lam == 1.0:
        return L
    return wulff_body(lp_combination(K, L, p, lam), name=f"{K.name}+_{p:g}{L.name}")


def verify_lp_bm(K, L, p, lambda_grid=None):
    """L_p Brunn-Minkowski (Firey for p > 1, conjectured for p in [0, 1))."""
    VK, VL = volume(K), volume(L)
    records = []
    for lam in _as_grid(lambda_grid):
        lam = float(lam)
        lhs = volume(lp_sum_body(K, L, p, lam))
        rhs = VK ** (1.0 - lam) * VL ** lam
        records.append({"lambda": lam, "p": p, "lhs": lhs, "rhs": rhs, "margin": _normalized(lhs, rhs)})
    return _finish("LpBM", {"p": p, "lambda_grid": [r["lambda"] for r in records]}, records, _meta(K, L))


def verify_p_bm(K, L, p, lambda_grid=None):
    """V((1-l).K +_p l.L) >= ((1-l) V(K)^(p/d) + l V(L)^(p/d))^(d/p)."""
    if not (p > 0 and p != 1):
        raise ValueError("p must lie in (0, 1) or (1, inf)")
    d = K.dim
    VK, VL = volume(K), volume(L)
    records = []
    for lam in _as_grid(lambda_grid):
        lam = float(lam)
        lhs = volume(lp_sum_body(K, L, p, lam))
        rhs = ((1.0 - lam) * VK ** (p / d) + lam * VL ** (p / d)) ** (d / p)
        records.append({"lambda": lam, "p": p, "lhs": lhs, "rhs": rhs, "margin": _normalized(lhs, rhs)})
    return _finish("pBM", {"p": p, "lambda_grid": [r["lambda"] for r in records]}, records, _meta(K, L))


def verify_lp_minkowski(K, L, p):
    """(int (h_L/h_K)^p dVbar_K)^(1/p) >= (V(L)/V(K))^(1/d)."""
    if p <= 0:
        raise ValueError("p must be positive")
    dens = cone_volume_density(K)
    lhs = integrate((L.h / K.h) ** p * dens, K.grid) ** (1.0 / p)
    rhs = (volume(L) / volume(K)) ** (1.0 / K.dim)
    rec = {"p": p, "lhs": lhs, "rhs": rhs, "margin": _normalized(lhs, rhs)}
    return _finish("LpMink", {"p": p}, [rec], _meta(K, L))
