"""Exact dimensions of the Fourier components H^q_{b,m}.

Hypersurface models (q = 0 only): CR functions of weight m are restrictions
of weighted-homogeneous polynomials, so the count is the number of
a in N^n with sum a_j w_j = m.  Circle bundles: H^q_{b,m} = H^q(P^1, O(d m)).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .manifold import CircleBundleModel, CRModel, HypersurfaceModel

UNSUPPORTED = "unsupported"


def h0_weighted(w, m: int) -> int:
    """#{a in N^n : sum_j a_j w_j = m} by the coin-change recursion."""
    w = [int(x) for x in w]
    if reduce(math.gcd, w) != 1:
        raise ValueError("weights must be coprime")
    if m < 0:
        return 0
    ways = [1] + [0] * m
    for wj in w:
        for k in range(wj, m + 1):
            ways[k] += ways[k - wj]
    return ways[m]


def line_bundle_dim(k: int, q: int) -> int:
    """dim H^q(P^1, O(k))."""
    if q == 0:
        return k + 1 if k >= 0 else 0
    if q == 1:
        return -k - 1 if k <= -2 else 0
    raise ValueError("q must be 0 or 1 on P^1")


def bundle_dim(d: int, m: int, q: int) -> int:
    return line_bundle_dim(int(d) * int(m), q)


@dataclass
class CohomologyTable:
    entries: dict = field(default_factory=dict)  # (q, m) -> dim or None
    method: dict = field(default_factory=dict)   # (q, m) -> tag

    def get(self, q, m):
        return self.entries.get((q, m))

    def series(self, q, ms):
        return np.array([self.entries[(q, m)] for m in ms], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["q", "m", "dim", "method"])
        for (q, m) in sorted(self.entries):
            d = self.entries[(q, m)]
            wr.writerow([q, m, "" if d is None else d, self.method[(q, m)]])
        return buf.getvalue()


def dims_table(model: CRModel, m_range, q_range) -> CohomologyTable:
    tab = CohomologyTable()
    for q in q_range:
        for m in m_range:
            if isinstance(model, CircleBundleModel):
                if q not in (0, 1):
                    tab.entries[(q, m)], tab.method[(q, m)] = None, UNSUPPORTED
                    continue
                k = model.d * m
                tab.entries[(q, m)] = bundle_dim(model.d, m, q)
                tab.method[(q, m)] = "monomial" if (q == 0 or k > -2) else "duality"
            elif isinstance(model, HypersurfaceModel) and q == 0:
                tab.entries[(q, m)] = h0_weighted(model.w, m)
                tab.method[(q, m)] = "lattice"
            else:
                tab.entries[(q, m)], tab.method[(q, m)] = None, UNSUPPORTED
    return tab


def generating_series(w, order: int) -> np.ndarray:
    """Coefficients of prod_j (1 - t^{w_j})^{-1} up to t^order, by convolution."""
    out = np.zeros(order + 1, dtype=object)
    out[0] = 1
    for wj in w:
        geo = np.zeros(order + 1, dtype=object)
        geo[::int(wj)] = 1
        new = np.zeros(order + 1, dtype=object)
        for i in range(order + 1):
            if out[i]:
                new[i:] += out[i] * geo[: order + 1 - i]
        out = new
    return out


def gram_rank(model: HypersurfaceModel, m: int, tol: float = 1e-8, **kw) -> int:
    """Numerical rank of the L^2(dv_X) Gram matrix of the weight-m monomials."""
    from .szego import monomial_gram

    G, _ = monomial_gram(model, m, **kw)
    if G.size == 0:
        return 0
    # unit-norm columns, so the tolerance does not depend on monomial sizes
    d = 1.0 / np.sqrt(np.real(np.diag(G)))
    sv = np.linalg.svd(G * np.outer(d, d), compute_uv=False)
    return int(np.sum(sv > tol * sv.max()))
