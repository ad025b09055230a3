"""Levi form, signature classes X(q) and the Morse integrand |det L|.

The form is computed from the characteristic 1-form: with omega0
annihilating T^{1,0} and T^{0,1} we have 2i L(U, conj V) = -d omega0(U, conj V).
On a hypersurface omega0 = -Im(d rho)/s with s = Im(d rho)(T), so on
T^{1,0} x T^{0,1} this reduces to L = U^T (d dbar rho) conj(V) / (2 s).
On a circle bundle chart omega0 = -d theta + i(phi_z dz - phi_zbar dzbar) and
L(Z, conj Z) = phi_{z zbar}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import CircleBundleModel, CRModel, HypersurfaceModel

DEGENERATE_TOL = 1e-9


class _Degenerate:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Degenerate"


Degenerate = _Degenerate()


@dataclass(frozen=True)
class LeviSpectrum:
    eigenvalues: tuple
    det: float
    signature: int
    degenerate: bool


def _spectrum_from(eigs, tol=DEGENERATE_TOL) -> LeviSpectrum:
    ev = tuple(float(x) for x in np.sort(np.asarray(eigs, dtype=float)))
    return LeviSpectrum(ev, float(np.prod(ev)), int(sum(x < 0 for x in ev)),
                        bool(any(abs(x) < tol for x in ev)))


def levi_matrices(model: CRModel, points) -> np.ndarray:
    """Hermitian Levi matrices (N, n-1, n-1) in an orthonormal T^{1,0} frame."""
    if isinstance(model, HypersurfaceModel):
        g = model.geometry(points)
        if np.any(g["s"] <= 0):
            raise ValueError("frame degeneracy: T is not transversal at some point")
        U, H, s = g["U"], g["H"], g["s"]
        # d alpha(U, conj V) = i sum_jk rho_{j kbar} U_j conj(V_k); L = d alpha / (2 i s)
        M = np.einsum("naj,njk,nbk->nab", U, H, U.conj()) / (2 * s)[:, None, None]
        return M
    if isinstance(model, CircleBundleModel):
        p = np.atleast_2d(np.asarray(points, dtype=complex))
        return model.levi_eigenvalue(p[:, 0]).astype(complex)[:, None, None]
    raise TypeError(f"unsupported model {type(model).__name__}")


def levi_eigs(model: CRModel, points) -> np.ndarray:
    M = levi_matrices(model, points)
    M = 0.5 * (M + np.conj(np.swapaxes(M, 1, 2)))
    return np.linalg.eigvalsh(M)


def levi_spectrum(model: CRModel, point) -> LeviSpectrum:
    p = np.atleast_2d(np.asarray(point, dtype=complex))
    if p.shape[0] != 1:
        raise ValueError("levi_spectrum takes one point; use levi_eigs for batches")
    if model.constraint(p)[0] > 1e-9:
        raise ValueError("point is not on X")
    if isinstance(model, HypersurfaceModel):
        fr = model.contact_frame(p[0])
        if fr.transversality() < 1e-8:
            raise ValueError("frame degeneracy")
    return _spectrum_from(levi_eigs(model, p)[0])


def classify(spec: LeviSpectrum, tol: float = DEGENERATE_TOL):
    """Number of negative eigenvalues, or Degenerate if some |lambda| < tol."""
    if any(abs(x) < tol for x in spec.eigenvalues):
        return Degenerate
    return spec.signature


def classify_batch(eigs: np.ndarray, tol: float = DEGENERATE_TOL) -> np.ndarray:
    """Vectorized classify: signature per row, -1 for degenerate rows."""
    eigs = np.atleast_2d(eigs)
    q = np.sum(eigs < 0, axis=1)
    return np.where(np.any(np.abs(eigs) < tol, axis=1), -1, q)


def morse_integrand(spec: LeviSpectrum) -> float:
    return abs(spec.det)
