"""Szego kernels Pi^0_m(x) = sum_j |f_j(x)|^2 over an orthonormal basis of H^0_{b,m}.

* round spheres (all weights 1): monomials are orthogonal with
  ||z^a||^2 = 2 pi^n a! / (|a| + n - 1)!,
* circle bundles: sections z^j xi^m, orthogonal since the weight is radial,
* n = 2 weighted hypersurfaces: the monomials z1^a z2^b with
  w1 a + w2 b = m are not orthogonal in general (the quartic ellipsoid has
  no torus symmetry), so the basis is orthonormalized on a product
  quadrature grid with an Arnoldi recurrence: multiply by
  eta = z1^{w2} / z2^{w1} and reorthogonalize.  Probe values ride along the
  same recurrence, which stays stable where the raw Gram matrix is singular.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .manifold import CircleBundleModel, CRModel, HypersurfaceModel


# ---------------------------------------------------------------------------
# monomial bookkeeping
# ---------------------------------------------------------------------------

def weighted_monomials(w, m):
    """Exponents a in N^n with sum a_j w_j = m, lexicographic."""
    out = []

    def rec(j, rest, cur):
        if j == len(w) - 1:
            if rest % w[j] == 0:
                out.append(tuple(cur + [rest // w[j]]))
            return
        for a in range(rest // w[j] + 1):
            rec(j + 1, rest - a * w[j], cur + [a])

    if m >= 0:
        rec(0, m, [])
    return out


def _chain(w, m):
    """n = 2 monomials ordered by increasing a (so b decreases by w1 each step)."""
    mons = sorted(weighted_monomials(w, m))
    return mons


# ---------------------------------------------------------------------------
# quadrature grid for n = 2 hypersurfaces
# ---------------------------------------------------------------------------

@dataclass
class Grid:
    z: np.ndarray       # (M, 2) points on X
    sw: np.ndarray      # sqrt of quadrature weights for dv_X
    nchi: int
    npsi: int


def hypersurface_grid(model: HypersurfaceModel, nchi: int, npsi: int) -> Grid:
    """Product rule for circle-invariant integrands on an n = 2 radial graph.

    u = (cos chi, sin chi e^{i psi}); integrating out the orbit direction
    turns d sigma = sin chi cos chi dchi dphi1 dphi2 into
    2 pi sin chi cos chi dchi dpsi.
    """
    if model.n != 2:
        raise ValueError("grid only for n = 2")
    cache = model.__dict__.setdefault("_grid_cache", {})
    key = (nchi, npsi)
    if key in cache:
        return cache[key]
    x, wx = leggauss(nchi)
    chi = (x + 1) * np.pi / 4
    wchi = wx * np.pi / 4
    psi = 2 * np.pi * np.arange(npsi) / npsi
    C, P = np.meshgrid(chi, psi, indexing="ij")
    W = np.outer(wchi, np.full(npsi, 2 * np.pi / npsi)) * 2 * np.pi * np.sin(C) * np.cos(C)
    u = np.stack([np.cos(C).ravel() + 0j, np.sin(C).ravel() * np.exp(1j * P.ravel())], axis=1)
    z, t, ok = model.radial_points(u)
    if not ok.all():
        raise RuntimeError("radial root failure on the quadrature grid")
    dens = model.sphere_density(u, t)
    g = Grid(z, np.sqrt(W.ravel() * dens), nchi, npsi)
    if len(cache) > 8:
        cache.clear()
    cache[key] = g
    return g


def default_grid_size(model: HypersurfaceModel, m: int):
    return m // 2 + 32, m + 64


def monomial_gram(model: HypersurfaceModel, m: int, nchi=None, npsi=None):
    """Raw L^2(dv_X) Gram matrix of the weight-m monomials (n = 2)."""
    mons = _chain(model.w, m)
    if not mons:
        return np.zeros((0, 0)), mons
    a0, b0 = default_grid_size(model, m)
    g = hypersurface_grid(model, nchi or a0, npsi or b0)
    A = np.stack([g.sw * g.z[:, 0] ** a * g.z[:, 1] ** b for a, b in mons], axis=1)
    return A.conj().T @ A, mons


def _arnoldi_values(g: Grid, mons, w, probes, reverse=False):
    """Orthonormal basis values at the probes, shape (len(mons), n_probes)."""
    z, sw = g.z, g.sw
    P = np.atleast_2d(np.asarray(probes, dtype=complex))
    chain = mons[::-1] if reverse else mons
    a0, b0 = chain[0]
    K = len(chain)
    Q = np.empty((K, len(sw)), dtype=complex)
    V = np.empty((K, P.shape[0]), dtype=complex)
    q = sw * z[:, 0] ** a0 * z[:, 1] ** b0
    v = P[:, 0] ** a0 * P[:, 1] ** b0
    if K > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            if reverse:
                eta, peta = z[:, 1] ** w[0] / z[:, 0] ** w[1], P[:, 1] ** w[0] / P[:, 0] ** w[1]
            else:
                eta, peta = z[:, 0] ** w[1] / z[:, 1] ** w[0], P[:, 0] ** w[1] / P[:, 1] ** w[0]
    nr = np.linalg.norm(q)
    Q[0], V[0] = q / nr, v / nr
    for j in range(1, K):
        q = eta * Q[j - 1]
        v = peta * V[j - 1]
        for _ in range(2):
            h = np.conj(Q[:j] @ np.conj(q))
            q = q - h @ Q[:j]
            v = v - h @ V[:j]
        nr = np.linalg.norm(q)
        Q[j], V[j] = q / nr, v / nr
    return V


def _hypersurface_pi(model: HypersurfaceModel, m, probes, nchi=None, npsi=None):
    mons = _chain(model.w, m)
    P = np.atleast_2d(np.asarray(probes, dtype=complex))
    out = np.zeros(P.shape[0])
    if not mons:
        return out
    a0, b0 = default_grid_size(model, m)
    g = hypersurface_grid(model, nchi or a0, npsi or b0)
    w = model.w
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(P[:, 0]) ** w[1] / np.abs(P[:, 1]) ** w[0]
    if model.is_round and np.allclose(model.G, 1.0):
        # torus invariant: the monomials are already orthogonal
        for a, b in mons:
            nrm = np.sum(np.abs(g.sw * g.z[:, 0] ** a * g.z[:, 1] ** b) ** 2)
            out += np.abs(P[:, 0] ** a * P[:, 1] ** b) ** 2 / nrm
        return out
    fwd = ratio <= 1.0
    for sel, rev in ((fwd, False), (~fwd, True)):
        if sel.any():
            V = _arnoldi_values(g, mons, w, P[sel], reverse=rev)
            out[sel] = np.sum(np.abs(V) ** 2, axis=0)
    return out


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _round_closed(model):
    return model.is_round and all(x == 1 for x in model.w) and np.allclose(model.G, 1.0)


def round_norm2(alpha) -> float:
    """||z^alpha||^2 on the round unit sphere in C^n."""
    alpha = np.asarray(alpha)
    n = alpha.size
    lg = math.log(2) + n * math.log(math.pi) + gammaln(alpha + 1).sum() - gammaln(alpha.sum() + n)
    return float(math.exp(lg))


def bundle_log_norm2(model: CircleBundleModel, m: int, j, nodes=None):
    """log ||z^j xi^m||^2 = log 4 pi^2 int_0^1 v^j (1-v)^{dm-j} e^{-2 m c (1-2v)} dv."""
    k = model.d * m
    j = np.atleast_1d(np.asarray(j))
    if model.c == 0.0:
        return math.log(4 * math.pi ** 2) + gammaln(j + 1) + gammaln(k - j + 1) - gammaln(k + 2)
    nodes = nodes or (k + 2 * int(abs(model.c) * abs(m)) + 80)
    x, wx = leggauss(nodes)
    v = 0.5 * (x + 1)
    lw = np.log(0.5 * wx)
    out = np.empty(j.size)
    for i, jj in enumerate(j):
        le = jj * np.log(v) + (k - jj) * np.log1p(-v) - 2 * m * model.c * (1 - 2 * v) + lw
        mx = le.max()
        out[i] = mx + math.log(np.exp(le - mx).sum())
    return math.log(4 * math.pi ** 2) + out


def _bundle_pi(model: CircleBundleModel, m, probes):
    P = np.atleast_2d(np.asarray(probes, dtype=complex))
    k = model.d * m
    if k < 0:
        return np.zeros(P.shape[0])
    j = np.arange(k + 1)
    ln = bundle_log_norm2(model, m, j)
    lz = np.log(np.abs(P[:, 0])[:, None] + 1e-300) * (2 * j[None, :])
    lx = 2 * m * np.log(np.abs(P[:, 1]))[:, None]
    return np.exp(lz + lx - ln[None, :]).sum(axis=1)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

@dataclass
class NormTable:
    monomials: list
    gram: np.ndarray
    orthogonal: bool
    method: str

    @property
    def norms2(self):
        return np.real(np.diag(self.gram))


def cr_basis_norms(model: CRModel, m: int, **kw) -> NormTable:
    if isinstance(model, CircleBundleModel):
        k = model.d * m
        mons = [(j, m) for j in range(max(k + 1, 0))]
        if not mons:
            return NormTable([], np.zeros((0, 0)), True, "closed_form")
        n2 = np.exp(bundle_log_norm2(model, m, np.arange(k + 1)))
        return NormTable(mons, np.diag(n2), True, "closed_form" if model.c == 0 else "radial_quadrature")
    if isinstance(model, HypersurfaceModel):
        if _round_closed(model):
            mons = weighted_monomials(model.w, m)
            return NormTable(mons, np.diag([round_norm2(a) for a in mons]), True, "closed_form")
        if model.n != 2:
            raise NotImplementedError("monomial norms need n = 2 or the round sphere")
        G, mons = monomial_gram(model, m, **kw)
        return NormTable(mons, G, False, "quadrature")
    raise TypeError(type(model).__name__)


def szego_values(model: CRModel, m: int, probes, **kw) -> np.ndarray:
    """Unscaled Pi^0_m at the probes."""
    P = np.atleast_2d(np.asarray(probes, dtype=complex))
    if isinstance(model, CircleBundleModel):
        return _bundle_pi(model, m, P)
    if isinstance(model, HypersurfaceModel):
        if m < 0:
            return np.zeros(P.shape[0])
        if _round_closed(model):
            n = model.n
            lc = gammaln(m + n) - gammaln(m + 1) - math.log(2 * math.pi ** n)
            r2 = np.sum(np.abs(P) ** 2, axis=1)
            return np.exp(lc + m * np.log(r2))
        if model.n != 2:
            raise NotImplementedError("Szego kernels need n = 2 or the round sphere")
        return _hypersurface_pi(model, m, P, **kw)
    raise TypeError(type(model).__name__)


def default_probes(model: CRModel):
    pts = [("regular", model.regular_probe())]
    for i, p in enumerate(model.exceptional_points()):
        pts.append((f"exceptional{i}", p))
    return pts


@dataclass
class SzegoProfile:
    model: str
    m_list: list
    probe_ids: list
    probes: np.ndarray
    values: np.ndarray      # (len(m_list), n_probes), scaled by m^{-(n-1)}
    errors: np.ndarray
    basis_norms: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["m", "probe", "scaled_value", "error"])
        for i, m in enumerate(self.m_list):
            for j, pid in enumerate(self.probe_ids):
                wr.writerow([m, pid, f"{self.values[i, j]:.17g}", f"{self.errors[i, j]:.17g}"])
        return buf.getvalue()


def szego_profile(model: CRModel, m_list, probes=None, error_bars=True) -> SzegoProfile:
    if probes is None:
        named = default_probes(model)
    else:
        named = [(f"p{i}", np.asarray(p)) for i, p in enumerate(probes)]
    ids = [a for a, _ in named]
    P = np.array([b for _, b in named], dtype=complex)
    n = model.n
    vals = np.zeros((len(m_list), len(P)))
    errs = np.zeros_like(vals)
    norms = {}
    for i, m in enumerate(m_list):
        scale = float(m) ** (n - 1) if m != 0 else 1.0
        v = szego_values(model, m, P)
        vals[i] = v / scale
        generic = isinstance(model, HypersurfaceModel) and not _round_closed(model)
        if error_bars and generic and m > 0:
            a0, b0 = default_grid_size(model, m)
            v2 = szego_values(model, m, P, nchi=a0 + 16, npsi=b0 + 32)
            errs[i] = np.abs(v2 - v) / scale
        if not generic or m <= 40:
            try:
                norms[m] = cr_basis_norms(model, m).norms2.tolist()
            except NotImplementedError:
                pass
    return SzegoProfile(getattr(model, "name", str(model)), list(m_list), ids, P, vals, errs, norms)


def fourier_project(model: CRModel, u, m: int, nodes=None):
    """Q_m u (x) = (1/2pi) int u(e^{it} o x) e^{-imt} dt by the periodic trapezoid rule."""
    nodes = nodes or 2 * (abs(m) + 8)
    th = 2 * np.pi * np.arange(nodes) / nodes
    ph = np.exp(-1j * m * th)

    def proj(points):
        P = np.atleast_2d(np.asarray(points, dtype=complex))
        acc = np.zeros(P.shape[0], dtype=complex)
        for t_k, e_k in zip(th, ph):
            acc += u(model.act(P, np.full(P.shape[0], t_k))) * e_k
        return acc / nodes

    return proj
