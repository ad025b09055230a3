"""Morse-type verdicts: fitted growth rates of dim H^q_{b,m} against Levi integrals.

Every check compares a leading coefficient c (dim ~ c m^{n-1}) with
(1/2pi^n) times a Monte Carlo integral, under the budget

    3 sigma_MC / (2 pi^n) + fit residual + FLOOR.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cohomology import CohomologyTable, dims_table
from .integrate import MCEstimate, _signed_matrix, as_dict, functionals
from .manifold import CircleBundleModel, CRModel

FLOOR = 1e-9

ANCHORS = {
    "weak": "weak Morse inequalities",
    "strong": "strong Morse inequalities",
    "RR": "asymptotic Riemann-Roch theorem",
    "GR": "Grauert-Riemenschneider criterion (pseudoconvex, strongly pseudoconvex at a point)",
    "X(<=1)": "CR functions from the X(<=1) integral",
    "negative-m": "Morse inequalities for m -> -infinity",
}

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class Fit:
    c: float
    residual: float
    m_lo: int
    m_hi: int
    n_points: int


def fit_leading(ms, dims, n: int) -> Fit:
    """Least squares dims ~ c m^{n-1} + lower order on the top half of the m-range.

    The residual is the standard error of c (0 for an exact fit).
    """
    ms = np.asarray(ms, dtype=float)
    y = np.asarray(dims, dtype=float)
    if ms.shape != y.shape or ms.ndim != 1:
        raise ValueError("ms and dims must be 1-d of equal length")
    if len(ms) < 8:
        raise ValueError("fit_leading needs at least 8 data points")
    order = np.argsort(ms)
    top = order[len(ms) // 2:]
    x, y = ms[top], y[top]
    powers = sorted({n - 1, n - 2, 0} - {-1}, reverse=True)
    X = np.stack([x ** p for p in powers], axis=1)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("rank-deficient design for the leading-coefficient fit")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    dof = len(y) - X.shape[1]
    s2 = float(r @ r) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    return Fit(float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0))),
               int(x.min()), int(x.max()), int(len(x)))


@dataclass
class Check:
    name: str
    anchor: str
    lhs: float
    rhs: float
    budget: float
    status: str
    relation: str
    slack: float
    m_range: tuple
    N: int
    seed: int
    note: str = ""


@dataclass
class MorseReport:
    model: str
    descriptor: dict
    m_range: tuple
    N: int
    seed: int
    dims: CohomologyTable
    integrals: list
    fits: dict
    checks: list = field(default_factory=list)

    @property
    def status(self) -> str:
        st = [c.status for c in self.checks]
        if FAIL in st:
            return FAIL
        if INCONCLUSIVE in st:
            return INCONCLUSIVE
        return PASS

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "descriptor": self.descriptor,
            "m_range": list(self.m_range),
            "N": self.N,
            "seed": self.seed,
            "status": self.status,
            "integrals": [dict(q=q, **as_dict(e)) for q, e in enumerate(self.integrals)],
            "fits": {k: asdict(v) for k, v in self.fits.items()},
            "checks": [dict(asdict(c), m_range=list(c.m_range)) for c in self.checks],
        }


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def dumps(obj, indent: int = 2, _lvl: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_lvl + 1))
    end = " " * (indent * _lvl)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _lvl + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _lvl + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, float, np.integer, np.floating, bool, np.bool_)):
        return _num(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _verdict(lhs, rhs, budget, relation, inconclusive):
    if relation == "<=":
        slack = rhs + budget - lhs
    elif relation == ">=":
        slack = lhs - rhs + budget
    else:
        slack = budget - abs(lhs - rhs)
    if inconclusive:
        return INCONCLUSIVE, slack
    return (PASS if slack >= 0 else FAIL), slack


def build_report(model: CRModel, m_max: int, N: int, seed: int, m_min: int = 1,
                 workers=None) -> MorseReport:
    n = model.n
    fac = 1.0 / (2 * math.pi ** n)
    pos = list(range(m_min, m_max + 1))
    is_bundle = isinstance(model, CircleBundleModel)
    neg = [-m for m in reversed(pos)] if is_bundle else []
    dims = dims_table(model, neg + pos, range(n))

    fits = {}
    for q in range(n):
        if all(dims.get(q, m) is not None for m in pos):
            fits[f"q={q}"] = fit_leading(pos, dims.series(q, pos), n)
    fitted = [q for q in range(n) if f"q={q}" in fits]

    S = _signed_matrix(n)
    alt = np.array([(-1) ** j for j in range(n)], dtype=float)
    T = np.vstack([np.eye(n), S, alt[None, :]])
    est = functionals(model, T, N, seed, workers)
    strata, signed, euler = est[:n], est[n:2 * n], est[2 * n]
    inconc = any(e.inconclusive for e in est)

    rep = MorseReport(model.name, model.descriptor(), (min(neg + pos), m_max), int(N), int(seed),
                      dims, list(strata), fits)

    def add(name, key, lhs, rhs, budget, relation, m_range, note="", mc=True):
        st, slack = _verdict(lhs, rhs, budget, relation, inconc and mc)
        rep.checks.append(Check(name, ANCHORS[key], float(lhs), float(rhs), float(budget), st,
                                relation, float(slack), tuple(m_range), int(N), int(seed), note))

    for q in fitted:
        f = fits[f"q={q}"]
        e = strata[q]
        add(f"weak({q})", "weak", f.c, fac * e.value, 3 * fac * e.stderr + f.residual + FLOOR, "<=",
            (f.m_lo, f.m_hi))

    for q in range(n):
        if not all(j in fitted for j in range(q + 1)):
            continue
        series = sum((-1) ** (q - j) * dims.series(j, pos) for j in range(q + 1))
        f = fit_leading(pos, series, n)
        e = signed[q]
        add(f"strong({q})", "strong", f.c, fac * e.value, 3 * fac * e.stderr + f.residual + FLOOR,
            "<=", (f.m_lo, f.m_hi))

    if is_bundle and len(fitted) == n:
        series = sum((-1) ** j * dims.series(j, pos) for j in range(n))
        f = fit_leading(pos, series, n)
        add("RR", "RR", f.c, fac * euler.value, 3 * fac * euler.stderr + f.residual + FLOOR, "==",
            (f.m_lo, f.m_hi))

    pseudoconvex = strata[0].value > 0 and all(e.value == 0 for e in strata[1:])
    if pseudoconvex and 0 in fitted:
        f0 = fits["q=0"]
        notes, vanish = ["no negative Levi eigenvalue sampled"], True
        for q in fitted[1:]:
            fq = fits[f"q={q}"]
            ok = abs(fq.c) <= 2 * fq.residual + 3 * fac * strata[q].stderr + FLOOR
            vanish &= ok
            notes.append(f"c_{q}={fq.c:.6g} {'consistent with 0' if ok else 'not o(m^(n-1))'}")
        # a higher-q coefficient away from 0 fails the check outright
        lhs = f0.c if vanish else -1.0
        add("GR", "GR", lhs, 0.0, f0.residual + FLOOR, ">=", (f0.m_lo, f0.m_hi),
            note="; ".join(notes))
        # a strict inequality: c0 must exceed its own budget
        c = rep.checks[-1]
        if c.status == PASS and not c.lhs > c.budget:
            c.status = FAIL

    if is_bundle and n == 2 and strata[0].value > 0 and strata[1].value > 0 and 0 in fitted:
        f0 = fits["q=0"]
        e = signed[1]  # I_1 - I_0
        add("X(<=1)", "X(<=1)", f0.c, -fac * e.value, 3 * fac * e.stderr + f0.residual + FLOOR,
            ">=", (f0.m_lo, f0.m_hi))

    if is_bundle:
        absm = [-m for m in neg]
        for q in range(n):
            if not all(dims.get(q, m) is not None for m in neg):
                continue
            f = fit_leading(absm, dims.series(q, neg), n)
            e = strata[n - 1 - q]
            add(f"negative-m({q})", "negative-m", f.c, fac * e.value,
                3 * fac * e.stderr + f.residual + FLOOR, "<=", (-f.m_hi, -f.m_lo))
    return rep


def seed_stable(model: CRModel, m_max: int, N: int, seeds, **kw) -> bool:
    """True when all seeds give the same pass/fail on every conclusive check."""
    reps = [build_report(model, m_max, N, s, **kw) for s in seeds]
    base = {c.name: c.status for c in reps[0].checks}
    for r in reps[1:]:
        for c in r.checks:
            a, b = base.get(c.name), c.status
            if INCONCLUSIVE in (a, b):
                continue
            if a != b:
                return False
    return True


__all__ = ["Fit", "fit_leading", "Check", "MorseReport", "build_report", "dumps", "seed_stable",
           "MCEstimate", "ANCHORS", "FLOOR"]
