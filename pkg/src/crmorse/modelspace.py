"""The flat model on C^{n-1}: weight Phi0 = sum lambda_j |w_j|^2.

Contents: the explicit extremal (0,q)-form and its normalization, the closed
form of the model Szego density, a brute-force spectral oracle for that
density, and the blow-up checks comparing the scaled chart weight and
Laplacian with the model ones.

Conventions: the frame d/dw_j is orthonormal, dv = 2^{n-1} dx (Lebesgue
measure on R^{2(n-1)} times 2^{n-1}), L^2 weight e^{-2 Phi0}.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .manifold import BRTChart


@dataclass(frozen=True)
class ModelParams:
    lambdas: tuple
    q: int

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if len(lam) == 0:
            raise ValueError("need at least one eigenvalue")
        if any(abs(x) < 1e-9 for x in lam):
            raise ValueError("degenerate model: |lambda_j| < 1e-9")
        if not 0 <= self.q <= len(lam):
            raise ValueError("q out of range")

    @property
    def dim(self) -> int:
        return len(self.lambdas)

    @property
    def signature(self) -> int:
        return sum(x < 0 for x in self.lambdas)

    @property
    def negative(self) -> tuple:
        return tuple(j for j, x in enumerate(self.lambdas) if x < 0)


def negative_first(lambdas):
    """Permutation putting negative eigenvalues first (stable); perm[i] = original index."""
    lam = list(lambdas)
    perm = [j for j, x in enumerate(lam) if x < 0] + [j for j, x in enumerate(lam) if x >= 0]
    return perm, [lam[j] for j in perm]


def _amp2(lam) -> float:
    """Squared amplitude |2 lambda_1 ... 2 lambda_{n-1}| / (2pi)^{n-1} / (2pi)."""
    d = len(lam)
    return abs(np.prod(2 * np.asarray(lam))) / (2 * math.pi) ** d / (2 * math.pi)


def extremal_form_eval(params: ModelParams, w):
    """Extremal (0,q)-form at w: returns (J, coefficient of dwbar^J).

    J lists the negative directions in original indexing.  The coefficient is
    A exp(sum_{j in J} 2 lambda_j |w_j|^2); with this exponent the form is
    dbar-closed, dbar*-closed for the weight e^{-2 Phi0}, and square
    integrable.
    """
    if params.signature != params.q:
        raise ValueError("extremal form exists only on X(q): signature differs from q")
    perm, _ = negative_first(params.lambdas)
    J = tuple(sorted(perm[: params.q]))
    lam = np.asarray(params.lambdas)
    w = np.asarray(w, dtype=complex)
    if w.shape[-1] != params.dim:
        w = w.reshape(w.shape + (1,)) if params.dim == 1 else w
    expo = np.zeros(w.shape[:-1])
    for j in J:
        expo = expo + 2 * lam[j] * np.abs(w[..., j]) ** 2
    return J, math.sqrt(_amp2(lam)) * np.exp(expo)


# ---------------------------------------------------------------------------
# Gauss-Hermite on C with weight exp(-c |w|^2)
# ---------------------------------------------------------------------------

def _gh_plane(c: float, nodes: int):
    """Tensor rule on C: sum f(w_i) W_i ~ int_C f(w) e^{-c|w|^2} 2 dx dy."""
    x, wx = np.polynomial.hermite.hermgauss(nodes)
    s = 1.0 / math.sqrt(c)
    X, Y = np.meshgrid(x * s, x * s, indexing="ij")
    W = np.outer(wx, wx) * s * s * 2
    return (X + 1j * Y).ravel(), W.ravel()


def gaussian_moments(c: float, deg: int, nodes: int = 64) -> np.ndarray:
    """M[p, r] = int_C w^p conj(w)^r e^{-c|w|^2} 2 dx dy for p, r <= deg."""
    wz, W = _gh_plane(c, nodes)
    pw = wz[None, :] ** np.arange(deg + 1)[:, None]
    return (pw * W) @ pw.conj().T


def extremal_checks(params: ModelParams, nodes: int = 64, refine: int = 96):
    """(norm_value, center_value) for the extremal form.

    The norm is int |u|^2 e^{-2 Phi0} dv by tensor Gauss-Hermite (factorized
    over coordinates), checked against a refined rule.
    """
    if params.signature != params.q:
        raise ValueError("extremal form exists only on X(q): signature differs from q")
    lam = np.asarray(params.lambdas)
    J, _ = extremal_form_eval(params, np.zeros(params.dim))
    vals = []
    for nn in (nodes, refine):
        tot = _amp2(lam)
        for j in range(params.dim):
            # integrand |u_j|^2 e^{-2 lambda_j |w|^2} sampled against a Gaussian of width |lambda_j|
            c = 2 * abs(lam[j])
            wz, W = _gh_plane(c, nn)
            r2 = np.abs(wz) ** 2
            f = np.exp((4 * lam[j] if j in J else 0.0) * r2 - 2 * lam[j] * r2 + c * r2)
            tot *= float(np.sum(f * W))
        vals.append(tot)
    if abs(vals[1] - vals[0]) > 1e-6 * abs(vals[1]):
        raise RuntimeError("extremal norm quadrature did not converge")
    center = float(np.abs(extremal_form_eval(params, np.zeros(params.dim))[1]) ** 2)
    return vals[0], center


def model_density(params: ModelParams) -> float:
    if params.signature != params.q:
        return 0.0
    lam = np.asarray(params.lambdas)
    return float(abs(np.prod(2 * lam)) / (2 * math.pi) ** params.dim)


# ---------------------------------------------------------------------------
# brute-force spectral oracle
# ---------------------------------------------------------------------------

def _wedge_sign(k, J):
    return -1 if sum(1 for j in J if j < k) % 2 else 1


def density_bruteforce(params: ModelParams, max_degree: int = 8, nodes: int = 64,
                       null_tol: float = 1e-6, return_info: bool = False):
    """sup |u_J(0)|^2 / ||u||^2 over the discrete kernel of the model Laplacian.

    Ansatz: w^a conj(w)^b E dwbar^J with |a| + |b| <= max_degree and
    E = exp(sum_{lambda_j < 0} 2 lambda_j |w_j|^2).  Every d-bar and
    d-bar-adjoint image stays in the same family (with degree + 1), so the
    quadratic form ||dbar u||^2 + ||dbar* u||^2 and the Gram form are
    assembled exactly from per-coordinate Gaussian moments.
    """
    if max_degree > 12:
        raise ValueError("max_degree is capped at 12")
    lam = np.asarray(params.lambdas)
    d, q = params.dim, params.q
    neg = set(params.negative)
    # per coordinate |E|^2 e^{-2 Phi0} = exp(-2 |lambda_j| |w_j|^2)
    mom = [gaussian_moments(2 * abs(lam[j]), 2 * max_degree + 4, nodes) for j in range(d)]

    exps = [e for e in itertools.product(range(max_degree + 1), repeat=2 * d) if sum(e) <= max_degree]
    Js = list(itertools.combinations(range(d), q))
    basis = [(J, e[:d], e[d:]) for J in Js for e in exps]

    def ip(t1, t2):
        # <w^a1 wb^b1, w^a2 wb^b2> with the Gaussian weight
        (a1, b1), (a2, b2) = t1, t2
        v = 1.0 + 0j
        for j in range(d):
            v *= mom[j][a1[j] + b2[j], b1[j] + a2[j]]
        return v

    def dbar(J, a, b):
        out = {}
        for k in range(d):
            if k in J:
                continue
            Jn = tuple(sorted(J + (k,)))
            sg = _wedge_sign(k, J)
            if b[k]:
                bb = list(b)
                bb[k] -= 1
                key = (Jn, a, tuple(bb))
                out[key] = out.get(key, 0) + sg * b[k]
            if k in neg:
                aa = list(a)
                aa[k] += 1
                key = (Jn, tuple(aa), b)
                out[key] = out.get(key, 0) + sg * 2 * lam[k]
        return out

    def dbar_star(J, a, b):
        out = {}
        for pos, k in enumerate(J):
            Jn = J[:pos] + J[pos + 1:]
            sg = -(-1) ** pos
            if a[k]:
                aa = list(a)
                aa[k] -= 1
                key = (Jn, tuple(aa), b)
                out[key] = out.get(key, 0) + sg * a[k]
            c = (2 * lam[k] if k in neg else 0.0) - 2 * lam[k]
            if c:
                bb = list(b)
                bb[k] += 1
                key = (Jn, a, tuple(bb))
                out[key] = out.get(key, 0) + sg * c
        return out

    def form_matrix(images):
        keys = sorted({k for im in images for k in im})
        idx = {k: i for i, k in enumerate(keys)}
        C = np.zeros((len(images), len(keys)), dtype=complex)
        for r, im in enumerate(images):
            for k, v in im.items():
                C[r, idx[k]] = v
        Gk = np.zeros((len(keys), len(keys)), dtype=complex)
        for i, k1 in enumerate(keys):
            for j in range(i, len(keys)):
                k2 = keys[j]
                if k1[0] == k2[0]:
                    Gk[i, j] = ip(k1[1:], k2[1:])
                    Gk[j, i] = np.conj(Gk[i, j])
        return C @ Gk @ C.conj().T

    G = form_matrix([{b: 1.0} for b in basis])
    Qf = form_matrix([dbar(*b) for b in basis]) + form_matrix([dbar_star(*b) for b in basis])
    sc = 1.0 / np.sqrt(np.real(np.diag(G)))
    Gs = G * np.outer(sc, sc)
    Qs = Qf * np.outer(sc, sc)
    ev_g = np.linalg.eigvalsh(Gs)
    cond = ev_g[-1] / ev_g[0]
    if cond > 1e12:
        raise RuntimeError(f"ill-conditioned Gram matrix (cond {cond:.3g}); lower max_degree")
    mu, V = eigh(Qs, Gs)
    null = mu < null_tol
    at0 = np.array([1.0 if (sum(a) + sum(b) == 0) else 0.0 for _, a, b in basis]) * sc
    val = float(np.sum(np.abs(at0 @ V[:, null]) ** 2))
    if return_info:
        return val, {"n_basis": len(basis), "n_null": int(null.sum()), "gram_cond": float(cond),
                     "spectral_gap": float(mu[~null].min()) if (~null).any() else float("inf")}
    return val


# ---------------------------------------------------------------------------
# scaling checks on a BRT chart
# ---------------------------------------------------------------------------

def _chart_check(chart: BRTChart, m: int):
    if m < 3:
        raise ValueError("m must be >= 3")
    if math.log(m) / math.sqrt(m) > chart.eps:
        raise ValueError("chart radius exceeded: log m / sqrt m > eps")


def weight_gap(chart: BRTChart, m: int, ngrid: int = 41, rtol: float = 0.01) -> float:
    """sup_{D_{log m}} |2m phi(z/sqrt m) - 2 Phi0(z)| on a polar grid, refined to 1% agreement."""
    _chart_check(chart, m)
    lam = np.asarray(chart.lambdas)
    R = math.log(m)
    sm = math.sqrt(m)

    def sup(ng):
        r = np.linspace(0, R, ng)
        a = np.linspace(0, 2 * np.pi, ng, endpoint=False)
        ring = (r[:, None] * np.exp(1j * a)[None, :]).ravel()
        Z = np.array(list(itertools.product(ring, repeat=chart.dim)))
        diff = 2 * m * chart.phi(Z / sm) - 2 * (np.abs(Z) ** 2 @ lam)
        return float(np.max(np.abs(diff)))

    ng = ngrid
    cur = sup(ng)
    for _ in range(4):
        nxt = sup(2 * ng - 1)
        if abs(nxt - cur) <= rtol * max(abs(nxt), 1e-300):
            return nxt
        ng, cur = 2 * ng - 1, nxt
    return cur


# sixth-order central difference weights for the first derivative
_D1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0


def _dx(F, h, axis):
    out = np.zeros_like(F)
    n = F.shape[axis]
    for k, c in enumerate(_D1):
        if c == 0:
            continue
        off = k - 3
        src = [slice(None)] * 2
        dst = [slice(None)] * 2
        src[axis] = slice(3 + off, n - 3 + off)
        dst[axis] = slice(3, n - 3)
        out[tuple(dst)] += c * F[tuple(src)]
    return out / h


def _dz(F, h):
    return 0.5 * (_dx(F, h, 0) - 1j * _dx(F, h, 1))


def _dzb(F, h):
    return 0.5 * (_dx(F, h, 0) + 1j * _dx(F, h, 1))


@dataclass
class ResidualResult:
    residual: float
    fd_error: float
    inconclusive: bool
    h: float


@dataclass(frozen=True)
class GaussianTest:
    center: complex = 0.0
    width: float = 0.5

    def __call__(self, z):
        return np.exp(-np.abs(z - self.center) ** 2 / self.width ** 2)

    @property
    def support_radius(self) -> float:
        # where the profile drops below machine epsilon relative to its peak
        return abs(self.center) + self.width * math.sqrt(math.log(1e16))


def _box(U, Phi, dens, h, q):
    """Weighted Kohn Laplacian on functions (q=0) or dzbar-coefficients (q=1)."""
    Pz = _dz(Phi, h)
    if q == 0:
        return -(_dz(_dzb(U, h), h) - Pz * _dzb(U, h)) / dens
    return -_dzb((_dz(U, h) - Pz * U) / dens, h)


def operator_residual(chart: BRTChart, m: int, q: int = 0, test_form=None, h: float = 0.05):
    """sup |(box_(m) - box_{2 Phi0}) f| for a smooth test function f on D_{log m}."""
    if chart.dim != 1:
        raise ValueError("operator residual is implemented for n = 2 charts")
    if q not in (0, 1):
        raise ValueError("q must be 0 or 1")
    _chart_check(chart, m)
    f = GaussianTest() if test_form is None else test_form
    R = math.log(m)
    if f.support_radius > R:
        raise ValueError("test form is not supported inside D_{log m}")
    lam = chart.lambdas[0]
    sm = math.sqrt(m)

    def once(hh):
        L = f.support_radius + 12 * hh
        x = np.arange(-L, L + hh / 2, hh)
        Z = x[:, None] + 1j * x[None, :]
        U = f(Z)
        flat = Z.ravel()
        Phi_m = (2 * m * chart.phi(flat / sm)).reshape(Z.shape)
        dens_m = chart.density(flat / sm).reshape(Z.shape)
        Phi_0 = 2 * lam * np.abs(Z) ** 2
        a = _box(U, Phi_m, dens_m, hh, q)
        b = _box(U, Phi_0, np.ones_like(dens_m), hh, q)
        inner = (slice(12, -12), slice(12, -12))
        return float(np.max(np.abs((a - b)[inner])))

    r1 = once(h)
    r2 = once(h / 2)
    err = abs(r1 - r2)
    inconclusive = err > max(0.1 * r2, 1e-10)
    return ResidualResult(r2, err, bool(inconclusive), h / 2)
