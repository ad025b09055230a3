"""Pure numpy versions of the hot kernels.

Used when the compiled module is missing or when CRMORSE_PURE=1.  The
signatures match ``crmorse._kernels`` exactly.
"""
import numpy as np


def _mono(z, expo):
    # z: (N, n) complex, expo: (n,) int -> prod_j z_j**expo_j
    out = np.ones(z.shape[0], dtype=complex)
    for j, e in enumerate(expo):
        if e:
            out = out * z[:, j] ** int(e)
    return out


def herm_eval(coef, alpha, beta, z):
    """Evaluate a polynomial sum_t c_t z^a_t conj(z)^b_t and its derivatives.

    Returns (rho, dz, hess) with rho real (N,), dz[:, j] = d rho / d z_j and
    hess[:, j, k] = d^2 rho / d z_j d conj(z_k).
    """
    coef = np.asarray(coef, dtype=complex)
    alpha = np.asarray(alpha, dtype=np.int64)
    beta = np.asarray(beta, dtype=np.int64)
    z = np.ascontiguousarray(z, dtype=complex)
    zb = z.conj()
    N, n = z.shape
    rho = np.zeros(N, dtype=complex)
    dz = np.zeros((N, n), dtype=complex)
    hess = np.zeros((N, n, n), dtype=complex)
    for c, a, b in zip(coef, alpha, beta):
        rho += c * _mono(z, a) * _mono(zb, b)
        for j in range(n):
            if a[j] == 0:
                continue
            aj = a.copy()
            aj[j] -= 1
            za = c * a[j] * _mono(z, aj)
            dz[:, j] += za * _mono(zb, b)
            for k in range(n):
                if b[k] == 0:
                    continue
                bk = b.copy()
                bk[k] -= 1
                hess[:, j, k] += za * b[k] * _mono(zb, bk)
    return rho.real, dz, hess


def radial_roots(pc, tmax, nscan, iters):
    """Smallest positive root of p(t) = sum_k pc[:, k] t^k on (0, tmax].

    Bracket scan on a uniform grid followed by bisection.  Returns (t, ok);
    rows without a sign change get ok = False and t = nan.
    """
    pc = np.ascontiguousarray(pc, dtype=float)
    N = pc.shape[0]

    def peval(t):
        acc = np.zeros_like(t)
        for k in range(pc.shape[1] - 1, -1, -1):
            acc = acc * t + pc[:, k]
        return acc

    lo = np.zeros(N)
    hi = np.full(N, np.nan)
    f0 = peval(lo)
    found = np.zeros(N, dtype=bool)
    prev = lo.copy()
    for i in range(1, nscan + 1):
        t = np.full(N, tmax * i / nscan)
        f = peval(t)
        new = (~found) & (np.sign(f) != np.sign(f0)) & (f != 0.0) | (~found) & (f == 0.0)
        lo[new] = prev[new]
        hi[new] = t[new]
        found |= new
        prev = t
        if found.all():
            break
    ok = found.copy()
    a = np.where(ok, lo, 0.0)
    b = np.where(ok, hi, 1.0)
    fa = peval(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = peval(mid)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, mid, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, mid)
    t = 0.5 * (a + b)
    t[~ok] = np.nan
    return t, ok
