"""Model CR manifolds with a transversal circle action.

Three families are provided:

* weighted spheres ``{|z|^2 = 1}`` in C^n with the action
  ``e^{it} o z = (e^{i w_1 t} z_1, ..., e^{i w_n t} z_n)``,
* the quartic ellipsoid ``|z1|^2 + |z1^2 + z2|^2 + |z2|^2 = 1`` with
  weights (1, 2), which is not a circle bundle (it has a period-2 orbit),
* unit circle bundles of O(d) over the projective line with a perturbed
  Fubini-Study weight ``phi = (d/2) log(1+|z|^2) + c psi``.

Hypersurface points are complex arrays of shape (N, n).  Bundle points are
(N, 2) arrays ``[z, xi]`` with ``|xi|^2 e^{2 phi(z)} = 1`` and the action
rotating ``xi``.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Optional

import numpy as np

from . import kernels

ON_X_TOL = 1e-12
AXIS_TOL = 1e-9


# ---------------------------------------------------------------------------
# Hermitian polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermPoly:
    """Real polynomial sum_t c_t z^alpha_t conj(z)^beta_t (terms come in conjugate pairs)."""

    coef: tuple
    alpha: tuple
    beta: tuple
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.alpha[0])

    def arrays(self):
        return (np.asarray(self.coef, dtype=complex),
                np.asarray(self.alpha, dtype=np.int64).reshape(-1, self.n),
                np.asarray(self.beta, dtype=np.int64).reshape(-1, self.n))

    def eval(self, z):
        c, a, b = self.arrays()
        return kernels.herm_eval(c, a, b, np.atleast_2d(z))

    def value(self, z):
        return self.eval(z)[0]

    def scale(self, z):
        """Sum of absolute term sizes, used for relative residuals."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        c, a, b = self.arrays()
        az = np.abs(z)
        out = np.zeros(z.shape[0])
        for ct, at, bt in zip(c, a, b):
            out += abs(ct) * np.prod(az ** (at + bt), axis=1)
        return out

    def substituted(self, z_of_t):
        """Coefficients of t -> rho(z(t)) where z_j(t) = s_j t^{e_j}.

        ``z_of_t`` is a pair (s, e) with s of shape (N, n) complex and e an
        integer exponent vector; returns real (N, D+1) ascending coefficients.
        """
        s, e = z_of_t
        c, a, b = self.arrays()
        degs = (a + b) @ np.asarray(e, dtype=np.int64)
        out = np.zeros((s.shape[0], int(degs.max()) + 1), dtype=complex)
        sb = s.conj()
        for ct, at, bt, dg in zip(c, a, b, degs):
            term = np.full(s.shape[0], ct, dtype=complex)
            for j in range(s.shape[1]):
                if at[j]:
                    term = term * s[:, j] ** int(at[j])
                if bt[j]:
                    term = term * sb[:, j] ** int(bt[j])
            out[:, dg] += term
        return out.real


def round_poly(n: int) -> HermPoly:
    eye = np.eye(n, dtype=int)
    alpha = tuple(tuple(r) for r in eye) + ((0,) * n,)
    coef = (1.0,) * n + (-1.0,)
    return HermPoly(coef, alpha, alpha, name="round")


def ellipsoid_poly() -> HermPoly:
    # |z1|^2 + |z1|^4 + z1^2 conj(z2) + conj(z1)^2 z2 + 2|z2|^2 - 1
    alpha = ((1, 0), (2, 0), (2, 0), (0, 1), (0, 1), (0, 0))
    beta = ((1, 0), (2, 0), (0, 1), (2, 0), (0, 1), (0, 0))
    coef = (1.0, 1.0, 1.0, 1.0, 2.0, -1.0)
    return HermPoly(coef, alpha, beta, name="paper_ellipsoid")


# ---------------------------------------------------------------------------
# frames, charts, samples
# ---------------------------------------------------------------------------

@dataclass
class ContactFrame:
    """Frame at a point, written in real ambient coordinates.

    ``T`` is real, ``U`` holds n-1 complex vectors spanning T^{1,0}, and
    ``omega0`` is a real covector; all act on vectors by the dot product.
    """

    point: np.ndarray
    T: np.ndarray
    U: np.ndarray
    omega0: np.ndarray

    def omega0_of(self, v):
        return np.asarray(v) @ self.omega0

    def transversality(self) -> float:
        cols = [self.T.real] + [u.real for u in self.U] + [u.imag for u in self.U]
        return float(np.linalg.svd(np.array(cols).T, compute_uv=False).min())


@dataclass
class BRTChart:
    anchor: np.ndarray
    eps: float
    delta: float
    phi: Callable
    lambdas: tuple
    density: Callable
    k: int = 1
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.lambdas)


@dataclass
class SampleBatch:
    points: np.ndarray
    weights: np.ndarray
    rejected: int = 0


def _as_chart_arg(z, dim):
    z = np.asarray(z, dtype=complex)
    if dim == 1 and (z.ndim == 0 or z.ndim == 1):
        return z.reshape(-1, 1), z.shape
    return np.atleast_2d(z), z.shape[:-1]


def quadratic_chart(lambdas) -> BRTChart:
    """Chart already in normal form: phi = sum lambda_j |z_j|^2, unit density."""
    lam = np.asarray(lambdas, dtype=float)

    def phi(z):
        zz, shp = _as_chart_arg(z, lam.size)
        return (np.abs(zz) ** 2 @ lam).reshape(shp)

    def density(z):
        zz, shp = _as_chart_arg(z, lam.size)
        return np.ones(zz.shape[0]).reshape(shp)

    return BRTChart(np.zeros(lam.size), np.inf, np.pi, phi, tuple(lam), density)


# ---------------------------------------------------------------------------
# abstract contract
# ---------------------------------------------------------------------------

class CRModel(ABC):
    n: int
    kind: str

    @abstractmethod
    def descriptor(self) -> dict: ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> SampleBatch: ...

    @abstractmethod
    def act(self, points, theta): ...

    @abstractmethod
    def constraint(self, points): ...

    @abstractmethod
    def orbit_period(self, point, tol: float = AXIS_TOL) -> int: ...

    @abstractmethod
    def contact_frame(self, point) -> ContactFrame: ...

    @abstractmethod
    def brt_chart(self, anchor) -> BRTChart: ...

    @abstractmethod
    def exceptional_points(self) -> list: ...

    @abstractmethod
    def regular_probe(self) -> np.ndarray: ...

    def descriptor_text(self, seed=None) -> str:
        d = dict(self.descriptor())
        if seed is not None:
            d["seed"] = seed
        lines = []
        for k, v in d.items():
            if isinstance(v, (tuple, list)):
                v = ",".join(str(x) for x in v)
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# hypersurfaces
# ---------------------------------------------------------------------------

class HypersurfaceModel(CRModel):
    kind = "hypersurface"

    def __init__(self, w, poly: HermPoly, G=None, tmax=2.0):
        w = tuple(int(x) for x in w)
        if len(w) != poly.n:
            raise ValueError("weight vector length does not match the polynomial")
        if min(w) < 1:
            raise ValueError("weights must be >= 1 (a zero weight breaks transversality)")
        g = reduce(math.gcd, w)
        if g != 1:
            raise ValueError(f"weights have gcd {g}; the action is not effective")
        self.w = w
        self.n = len(w)
        self.poly = poly
        self.G = np.ones(self.n) if G is None else np.asarray(G, dtype=float)
        if self.G.shape != (self.n,) or np.any(self.G <= 0):
            raise ValueError("G must be a positive vector of length n")
        self.tmax = tmax

    # -- identity -------------------------------------------------------
    @property
    def name(self) -> str:
        if self.poly.name == "paper_ellipsoid":
            return "ellipsoid"
        if all(x == 1 for x in self.w):
            return "sphere"
        return "sphere:w=" + ",".join(map(str, self.w))

    def descriptor(self) -> dict:
        d = {"kind": "weighted_hypersurface", "rho": self.poly.name,
             "weights": list(self.w)}
        if not np.allclose(self.G, 1.0):
            d["horizontal_metric"] = [float(x) for x in self.G]
        return d

    def with_metric(self, G) -> "HypersurfaceModel":
        """Same manifold with the horizontal metric rescaled by diag(G)."""
        return HypersurfaceModel(self.w, self.poly, G=G, tmax=self.tmax)

    @property
    def is_round(self) -> bool:
        return self.poly.name == "round"

    # -- geometry ---------------------------------------------------------
    def act(self, points, theta):
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        th = np.asarray(theta, dtype=float).reshape(-1, 1)
        return z * np.exp(1j * th * np.asarray(self.w)[None, :])

    def generator(self, points):
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        return 1j * np.asarray(self.w)[None, :] * z

    def constraint(self, points):
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        return np.abs(self.poly.value(z)) / np.maximum(self.poly.scale(z), 1e-300)

    def geometry(self, points) -> dict:
        """Pointwise data: gradient, Hessian, s = alpha(T), orthonormal T^{1,0} basis."""
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        rho, rz, H = self.poly.eval(z)
        s = np.real(np.sum(np.asarray(self.w)[None, :] * z * rz, axis=1))
        E = self._tangent_basis(rz)
        return {"z": z, "rho": rho, "rz": rz, "H": H, "s": s, "U": E}

    def _tangent_basis(self, rz):
        """Basis of {a : sum rz_j a_j = 0}, orthonormal for <a|b> = 1/2 sum G_j a_j conj(b_j)."""
        N, n = rz.shape
        if n == 2:
            B = np.stack([rz[:, 1], -rz[:, 0]], axis=1)[:, None, :]
        else:
            # right singular vectors of the row rz span its kernel
            _, _, vh = np.linalg.svd(rz[:, None, :])
            B = vh[:, 1:, :].conj()
        Gm = 0.5 * np.einsum("nai,i,nbi->nab", B, self.G, B.conj())
        L = np.linalg.cholesky(Gm)
        return np.linalg.solve(L, B)

    def horizontal_det(self, rz):
        """det of the G-metric on the complex tangent, relative to the flat one."""
        N, n = rz.shape
        if n == 2:
            a = np.stack([rz[:, 1], -rz[:, 0]], axis=1)
            return np.sum(self.G * np.abs(a) ** 2, axis=1) / np.sum(np.abs(a) ** 2, axis=1)
        _, _, vh = np.linalg.svd(rz[:, None, :])
        B = vh[:, 1:, :].conj()
        return np.real(np.linalg.det(np.einsum("nai,i,nbi->nab", B, self.G, B.conj())))

    def radial_points(self, u):
        """Radial graph over the unit sphere: z = t(u) u with rho(t u) = 0."""
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        if self.is_round and np.all(np.abs(np.linalg.norm(u, axis=1) - 1) < 1e-15):
            return u.copy(), np.ones(u.shape[0]), np.ones(u.shape[0], dtype=bool)
        pc = self.poly.substituted((u, np.ones(self.n, dtype=np.int64)))
        t, ok = kernels.radial_roots(pc, self.tmax, 16, 64)
        return t[:, None] * u, t, ok

    def sphere_density(self, u, t, geo=None):
        """dv_X / d(sigma on the unit sphere) for z = t u.

        dv_X is the metric volume with T unit and orthogonal to the
        horizontal space; against the Euclidean hypersurface measure it is
        det(G_H) |d rho| / s, and the radial graph contributes
        t^{2n-1} |d rho| / |Re <d rho, u>|.
        """
        z = t[:, None] * u
        g = self.geometry(z) if geo is None else geo
        rz, s = g["rz"], g["s"]
        grad2 = np.sum(np.abs(rz) ** 2, axis=1)
        radial = np.abs(np.real(np.sum(rz * u, axis=1)))
        return self.horizontal_det(rz) * t ** (2 * self.n - 1) * grad2 / (s * radial)

    @property
    def sphere_volume(self) -> float:
        return 2 * math.pi ** self.n / math.factorial(self.n - 1)

    def sample(self, rng, size):
        pts, wts, rej = [], [], 0
        need = size
        while need > 0:
            g = rng.standard_normal((need, 2 * self.n))
            u = g[:, 0::2] + 1j * g[:, 1::2]
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            z, t, ok = self.radial_points(u)
            wt = np.full(need, np.nan)
            if ok.any():
                wt[ok] = self.sphere_volume * self.sphere_density(u[ok], t[ok])
                good = ok.copy()
                good[ok] &= self.constraint(z[ok]) <= ON_X_TOL
                good &= np.isfinite(wt) & (wt > 0)
            else:
                good = ok
            rej += int((~good).sum())
            pts.append(z[good])
            wts.append(wt[good])
            need = int((~good).sum())
            if rej > 100 * size + 1000:
                raise RuntimeError("radial root finding keeps failing")
        return SampleBatch(np.concatenate(pts), np.concatenate(wts), rej)

    def orbit_period(self, point, tol=AXIS_TOL):
        z = np.asarray(point, dtype=complex).ravel()
        live = [w for w, zj in zip(self.w, z) if abs(zj) > tol]
        if not live:
            raise ValueError("point is not on X (all coordinates vanish)")
        return reduce(math.gcd, live)

    def contact_frame(self, point) -> ContactFrame:
        z = np.asarray(point, dtype=complex).reshape(1, -1)
        if self.constraint(z)[0] > 1e-9:
            raise ValueError("point is not on X")
        g = self.geometry(z)
        rz, s, U = g["rz"][0], g["s"][0], g["U"][0]
        if s <= 0:
            raise ValueError("T is tangent to the complex tangent space here")
        T = self.generator(z)[0]
        # real coordinates (x1, y1, x2, y2, ...)
        Treal = np.empty(2 * self.n)
        Treal[0::2], Treal[1::2] = T.real, T.imag
        Ur = np.empty((self.n - 1, 2 * self.n), dtype=complex)
        Ur[:, 0::2] = 0.5 * U
        Ur[:, 1::2] = -0.5j * U
        om = np.empty(2 * self.n)
        om[0::2] = -rz.imag / s
        om[1::2] = -rz.real / s
        return ContactFrame(z[0], Treal, Ur, om)

    # -- special points -------------------------------------------------
    def axis_point(self, j: int) -> np.ndarray:
        e = np.zeros((1, self.n), dtype=complex)
        e[0, j] = 1.0
        z, t, ok = self.radial_points(e)
        if not ok[0]:
            raise RuntimeError("no axis root")
        return z[0]

    def exceptional_points(self):
        return [self.axis_point(j) for j in range(self.n) if self.w[j] > 1]

    def regular_probe(self):
        u = np.array([0.8, 0.6 * np.exp(0.7j)] + [0.0] * (self.n - 2), dtype=complex)
        if self.n > 2:
            u[2:] = 0.3
        u /= np.linalg.norm(u)
        return self.radial_points(u[None, :])[0][0]

    # -- BRT charts --------------------------------------------------------
    def brt_chart(self, anchor) -> BRTChart:
        a = np.asarray(anchor, dtype=complex).ravel()
        if self.constraint(a[None, :])[0] > 1e-9:
            raise ValueError("anchor is not on X")
        live = [j for j in range(self.n) if abs(a[j]) > AXIS_TOL]
        if len(live) == 1:
            j = live[0]
            # rotate the anchor onto the positive real axis with the action
            th = -np.angle(a[j]) / self.w[j]
            return _axis_chart(self, j, self.act(a[None, :], th)[0], anchor=a)
        if self.is_round and all(x == 1 for x in self.w) and np.allclose(self.G, self.G[0]):
            # unitary rotation commuting with the diagonal action moves a to e_1
            V = _unitary_to_e1(a)
            rot = HypersurfaceModel(self.w, self.poly, G=self.G, tmax=self.tmax)
            ch = _axis_chart(rot, 0, np.eye(self.n)[0].astype(complex), anchor=a)
            ch.info["rotation"] = V
            return ch
        raise ValueError("BRT charts are only built at designated anchors (axis points)")


def _unitary_to_e1(a):
    a = a / np.linalg.norm(a)
    M = np.eye(len(a), dtype=complex)
    M[:, 0] = a
    Q, R = np.linalg.qr(M)
    Q[:, 0] *= R[0, 0] / abs(R[0, 0])
    return Q.conj().T  # Q^H a = e_1


def _fd_taylor(f, dim, h=2e-3):
    """Gradient g_a = f_{z_a}, holomorphic part q_ab = f_{z_a z_b}, Levi part L_ab = f_{z_a zbar_b} at 0.

    Fourth-order central differences in the real coordinates.
    """
    def ev(x):
        return float(f(x[None, :])[0])

    def d1(e):
        return (-ev(2 * h * e) + 8 * ev(h * e) - 8 * ev(-h * e) + ev(-2 * h * e)) / (12 * h)

    def d2(e1, e2):
        # mixed second derivative along real directions e1, e2
        tot = 0.0
        a = [(2, 2, -1), (2, -2, 1), (-2, 2, 1), (-2, -2, -1),
             (1, 1, 16), (1, -1, -16), (-1, 1, -16), (-1, -1, 16)]
        for i, j, c in a:
            tot += c * ev(h * (i * e1 + j * e2))
        return tot / (48 * h * h)

    basis = []
    for a_ in range(dim):
        ex = np.zeros(dim, dtype=complex)
        ex[a_] = 1.0
        basis.append((ex, 1j * ex))
    g = np.zeros(dim, dtype=complex)
    q = np.zeros((dim, dim), dtype=complex)
    L = np.zeros((dim, dim), dtype=complex)
    for a_ in range(dim):
        xa, ya = basis[a_]
        g[a_] = 0.5 * (d1(xa) - 1j * d1(ya))
        for b_ in range(dim):
            xb, yb = basis[b_]
            fxx, fyy = d2(xa, xb), d2(ya, yb)
            fxy, fyx = d2(xa, yb), d2(ya, xb)
            # d_a = (d_xa - i d_ya)/2, dbar_b = (d_xb + i d_yb)/2
            L[a_, b_] = 0.25 * (fxx + fyy + 1j * (fxy - fyx))
            q[a_, b_] = 0.25 * (fxx - fyy - 1j * (fxy + fyx))
    return g, q, L


def _axis_chart(model: HypersurfaceModel, j: int, anchor_pos, anchor) -> BRTChart:
    """BRT chart at a point of the j-th axis.

    lambda = z_j^{1/w_j} is a local CR function of weight one and
    zeta_i = z_i / lambda^{w_i} are invariant coordinates, so X is locally
    {z_i = zeta_i t^{w_i} e^{i w_i theta}, z_j = t^{w_j} e^{i w_j theta}} with
    t = t(zeta) > 0 solving rho = 0.  The chart weight is -log t(zeta), then
    made unitary at the anchor and gauge-normalized.
    """
    n, w = model.n, model.w
    others = [i for i in range(n) if i != j]
    dim = n - 1
    e = np.array(w, dtype=np.int64)
    t0 = float(abs(anchor_pos[j]) ** (1.0 / w[j]))

    def tsolve(zeta):
        zeta = np.atleast_2d(zeta)
        s = np.ones((zeta.shape[0], n), dtype=complex)
        s[:, others] = zeta
        pc = model.poly.substituted((s, e))
        t, ok = kernels.radial_roots(pc, 4.0 * t0 + 1.0, 64, 70)
        return t, s

    def phi_raw(zeta):
        t, _ = tsolve(zeta)
        return -np.log(t)

    g, q, Lv = _fd_taylor(phi_raw, dim)
    phi00 = float(phi_raw(np.zeros((1, dim)))[0])

    def metric_matrix(zeta):
        # <Z_a|Z_b> with Z_a(lambda) = -2 phi_a lambda (phi_a = d phi_raw / d zeta_a)
        zeta = np.atleast_2d(zeta)
        N = zeta.shape[0]
        t, _ = tsolve(zeta)
        h = 1e-6
        pa = np.zeros((N, dim), dtype=complex)
        for a_ in range(dim):
            ex = np.zeros(dim)
            ex[a_] = h
            fx = (phi_raw(zeta + ex) - phi_raw(zeta - ex)) / (2 * h)
            fy = (phi_raw(zeta + 1j * ex) - phi_raw(zeta - 1j * ex)) / (2 * h)
            pa[:, a_] = 0.5 * (fx - 1j * fy)
        Z = np.zeros((N, dim, n), dtype=complex)
        for a_ in range(dim):
            for b_, i in enumerate(others):
                Z[:, a_, i] = (t ** w[i]) * ((1.0 if a_ == b_ else 0.0) - 2 * w[i] * zeta[:, b_] * pa[:, a_])
            Z[:, a_, j] = -2 * w[j] * pa[:, a_] * t ** w[j]
        return 0.5 * np.einsum("nai,i,nbi->nab", Z, model.G, Z.conj())

    P0 = metric_matrix(np.zeros((1, dim)))[0]
    from scipy.linalg import eigh
    mu, Y = eigh(Lv, P0)
    V = Y.conj()  # zeta = V z
    detV2 = abs(np.linalg.det(V)) ** 2

    def to_zeta(z):
        return z @ V.T

    def phi(z):
        zz, shp = _as_chart_arg(z, dim)
        zeta = to_zeta(zz)
        val = phi_raw(zeta) - phi00 - 2 * np.real(zeta @ g) - np.real(np.einsum("na,ab,nb->n", zeta, q, zeta))
        return val.reshape(shp)

    def density(z):
        zz, shp = _as_chart_arg(z, dim)
        P = metric_matrix(to_zeta(zz))
        return (np.real(np.linalg.det(P)) * detV2).reshape(shp)

    k = model.orbit_period(anchor_pos)
    return BRTChart(np.asarray(anchor), 1.0, math.pi / k, phi, tuple(mu), density, k=k,
                    info={"axis": j, "t0": t0})


# ---------------------------------------------------------------------------
# circle bundles over P^1
# ---------------------------------------------------------------------------

def _psi(z):
    r2 = np.abs(z) ** 2
    return (1 - r2) / (1 + r2)


class CircleBundleModel(CRModel):
    """Unit circle bundle of O(d) over P^1 with weight (d/2) log(1+|z|^2) + c psi."""

    kind = "bundle"
    n = 2

    def __init__(self, d: int, c: float = 0.0):
        if not np.isfinite(c):
            raise ValueError("c must be finite")
        self.d = int(d)
        self.c = float(c)
        self.psi_name = "first_harmonic"

    @property
    def name(self) -> str:
        return f"bundle:d={self.d},c={self.c:g}"

    def descriptor(self):
        return {"kind": "circle_bundle", "degree": self.d, "perturbation": self.c,
                "psi": self.psi_name}

    # weight and its derivatives on the first chart
    def phi(self, z):
        r2 = np.abs(z) ** 2
        return 0.5 * self.d * np.log1p(r2) + self.c * _psi(z)

    def phi_z(self, z):
        r2 = np.abs(z) ** 2
        zb = np.conj(z)
        return 0.5 * self.d * zb / (1 + r2) - 2 * self.c * zb / (1 + r2) ** 2

    def phi_zz(self, z):
        r2 = np.abs(z) ** 2
        zb = np.conj(z)
        return -0.5 * self.d * zb ** 2 / (1 + r2) ** 2 + 4 * self.c * zb ** 2 / (1 + r2) ** 3

    def phi_zzbar(self, z):
        r2 = np.abs(z) ** 2
        return 0.5 * self.d / (1 + r2) ** 2 - 2 * self.c * (1 - r2) / (1 + r2) ** 3

    @staticmethod
    def metric(z):
        """<Z|Z> for the chart frame: Fubini-Study, total area 2 pi in dv = 2 dx dy."""
        return 1.0 / (1 + np.abs(z) ** 2) ** 2

    def phi_second_chart(self, w):
        """Weight on the chart w = 1/z: phi(1/w) + (d/2) log|w|^2 written in closed form."""
        return 0.5 * self.d * np.log1p(np.abs(w) ** 2) - self.c * _psi(w)

    def levi_eigenvalue(self, z):
        return self.phi_zzbar(z) / self.metric(z)

    def make_points(self, z, theta):
        z = np.asarray(z, dtype=complex).ravel()
        xi = np.exp(1j * np.asarray(theta, dtype=float).ravel() - self.phi(z))
        return np.stack([z, xi], axis=1)

    def act(self, points, theta):
        p = np.atleast_2d(np.asarray(points, dtype=complex)).copy()
        p[:, 1] *= np.exp(1j * np.asarray(theta, dtype=float).ravel())
        return p

    def generator(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=complex))
        return np.stack([np.zeros(len(p), dtype=complex), 1j * p[:, 1]], axis=1)

    def constraint(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=complex))
        return np.abs(np.abs(p[:, 1]) ** 2 * np.exp(2 * self.phi(p[:, 0])) - 1.0)

    def sample(self, rng, size):
        x = rng.standard_normal((size, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        z = (x[:, 0] + 1j * x[:, 1]) / (1 + x[:, 2])
        theta = rng.uniform(0, 2 * np.pi, size)
        # uniform area on S^2 pushes to 4 g dx dy; dv_X = 2 g dx dy dtheta
        bad = ~np.isfinite(z)
        pts = self.make_points(np.where(bad, 0, z), theta)
        w = np.full(size, 4 * np.pi ** 2)
        if bad.any():
            pts, w = pts[~bad], w[~bad]
        return SampleBatch(pts, w, int(bad.sum()))

    def orbit_period(self, point, tol=AXIS_TOL):
        p = np.asarray(point, dtype=complex).ravel()
        if abs(p[1]) <= tol:
            raise ValueError("point is not on X")
        return 1

    def contact_frame(self, point) -> ContactFrame:
        p = np.asarray(point, dtype=complex).ravel()
        if self.constraint(p)[0] > 1e-9:
            raise ValueError("point is not on X")
        pz = self.phi_z(p[0])
        # real coordinates (x, y, theta); Z = d/dz + i phi_z d/dtheta
        T = np.array([0.0, 0.0, 1.0])
        U = np.array([[0.5, -0.5j, 1j * pz]]) / np.sqrt(self.metric(p[0]))
        om = np.array([-2 * pz.imag, -2 * pz.real, -1.0])
        return ContactFrame(p, T, U, om)

    def exceptional_points(self):
        return []

    def regular_probe(self):
        return self.make_points(0.3 + 0.4j, 0.5)[0]

    def brt_chart(self, anchor) -> BRTChart:
        p = np.asarray(anchor, dtype=complex).ravel()
        if p.size != 2 or not np.isfinite(p).all() or self.constraint(p)[0] > 1e-9:
            raise ValueError("anchor must be a bundle point (z, xi) over the first chart")
        z0 = p[0]
        s = 1 + abs(z0) ** 2
        f0, g0, q0 = self.phi(z0), self.phi_z(z0), self.phi_zz(z0)
        lam = float(self.levi_eigenvalue(z0))

        def phi(z):
            zz, shp = _as_chart_arg(z, 1)
            u = s * zz[:, 0]
            val = self.phi(z0 + u) - f0 - 2 * np.real(g0 * u) - np.real(q0 * u * u)
            return val.reshape(shp)

        def density(z):
            zz, shp = _as_chart_arg(z, 1)
            return (self.metric(z0 + s * zz[:, 0]) * s ** 2).reshape(shp)

        return BRTChart(p, 1.0, math.pi, phi, (lam,), density, k=1, info={"center": z0})


# ---------------------------------------------------------------------------
# constructors and parsing
# ---------------------------------------------------------------------------

def make_weighted_sphere(w, rho_choice: str = "round") -> HypersurfaceModel:
    w = tuple(int(x) for x in w)
    if rho_choice == "round":
        return HypersurfaceModel(w, round_poly(len(w)))
    if rho_choice == "paper_ellipsoid":
        if w != (1, 2):
            raise ValueError("the quartic ellipsoid is only defined for n = 2, w = (1, 2)")
        return HypersurfaceModel(w, ellipsoid_poly())
    raise ValueError(f"unknown rho choice {rho_choice!r}")


def make_circle_bundle(d: int, c: float = 0.0) -> CircleBundleModel:
    return CircleBundleModel(d, c)


def sample_points(model: CRModel, rng, size: int) -> SampleBatch:
    return model.sample(rng, size)


def sample_point(model: CRModel, rng):
    """One (point, weight) draw; rejected draws are retried and counted on the model."""
    b = model.sample(rng, 1)
    model.rejected = getattr(model, "rejected", 0) + b.rejected
    return b.points[0], float(b.weights[0])


def orbit_period(model: CRModel, point, tol: float = AXIS_TOL) -> int:
    return model.orbit_period(point, tol)


def brt_chart(model: CRModel, anchor) -> BRTChart:
    return model.brt_chart(anchor)


def contact_frame(model: CRModel, point) -> ContactFrame:
    return model.contact_frame(point)


def parse_model(spec: str) -> CRModel:
    """'sphere', 'sphere:w=1,2', 'ellipsoid', 'bundle:d=1,c=3'."""
    kind, _, rest = spec.strip().partition(":")
    kv = {}
    if rest:
        cur = None
        for tok in rest.split(","):
            if "=" in tok:
                cur, val = tok.split("=", 1)
                kv[cur.strip()] = [val.strip()]
            elif cur is not None:
                kv[cur].append(tok.strip())
            else:
                raise ValueError(f"bad model spec {spec!r}")
    try:
        if kind == "sphere":
            w = tuple(int(x) for x in kv.pop("w", ["1", "1"]))
            m = make_weighted_sphere(w, "round")
        elif kind == "ellipsoid":
            m = make_weighted_sphere((1, 2), "paper_ellipsoid")
        elif kind == "bundle":
            d = int(kv.pop("d", ["1"])[0])
            c = float(kv.pop("c", ["0"])[0])
            m = make_circle_bundle(d, c)
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    except (TypeError, IndexError) as exc:
        raise ValueError(f"bad model spec {spec!r}") from exc
    if kv:
        raise ValueError(f"unknown model parameters {sorted(kv)}")
    return m
