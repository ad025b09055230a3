import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gammaln

from crmorse import szego
from crmorse.levi import levi_eigs
from crmorse.manifold import make_circle_bundle, make_weighted_sphere

invariant = pytest.mark.invariant
TWO_PI2 = 2 * math.pi ** 2


def _sphere_points(rng, k):
    g = rng.normal(size=(k, 2)) + 1j * rng.normal(size=(k, 2))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def test_round_monomial_norms():
    for a, b in [(0, 0), (3, 0), (2, 5), (7, 7)]:
        exact = TWO_PI2 * math.factorial(a) * math.factorial(b) / math.factorial(a + b + 1)
        assert szego.round_norm2((a, b)) == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("a,b", [(1, 0), (2, 3), (0, 4)])
def test_round_norms_against_mc(sphere, a, b):
    s = sphere.sample(np.random.default_rng(8), 400_000)
    f = np.abs(s.points[:, 0]) ** (2 * a) * np.abs(s.points[:, 1]) ** (2 * b) * s.weights
    est, se = f.mean(), f.std(ddof=1) / math.sqrt(len(f))
    assert se / est < 0.005
    assert abs(est - szego.round_norm2((a, b))) <= 3 * se


def test_m0_norm_is_volume(sphere, ellipsoid):
    assert szego.cr_basis_norms(sphere, 0).norms2[0] == pytest.approx(TWO_PI2)
    assert szego.cr_basis_norms(ellipsoid, 0).norms2[0] == pytest.approx(math.pi ** 2, rel=1e-10)


def test_weighted_monomials_orthogonal(wsphere):
    G, mons = szego.monomial_gram(wsphere, 12)
    off = G - np.diag(np.diag(G))
    assert len(mons) == 7
    assert np.max(np.abs(off)) < 1e-12 * np.max(np.abs(G))


def test_ellipsoid_monomials_not_orthogonal(ellipsoid):
    G, _ = szego.monomial_gram(ellipsoid, 4)
    d = np.sqrt(np.real(np.diag(G)))
    assert np.max(np.abs(G / np.outer(d, d) - np.eye(len(d)))) > 0.1


@invariant
def test_round_closed_form_matches_norm_summation(rng):
    P = _sphere_points(rng, 5)
    for m in range(0, 61, 3):
        a = np.arange(m + 1)
        ln = math.log(TWO_PI2) + gammaln(a + 1) + gammaln(m - a + 1) - gammaln(m + 2)
        terms = np.abs(P[:, :1]) ** (2 * a) * np.abs(P[:, 1:]) ** (2 * (m - a)) / np.exp(ln)
        assert np.allclose(szego.szego_values(make_weighted_sphere((1, 1)), m, P), terms.sum(1), rtol=1e-11)


def test_round_sphere_c3_matches_norm_sum(rng=np.random.default_rng(6)):
    model = make_weighted_sphere((1, 1, 1), "round")
    g = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    P = g / np.linalg.norm(g, axis=1, keepdims=True)
    for m in (0, 1, 3, 8):
        ref = sum(np.abs(np.prod(P ** np.array(a), axis=1)) ** 2 / szego.round_norm2(a)
                  for a in szego.weighted_monomials((1, 1, 1), m))
        assert np.allclose(szego.szego_values(model, m, P), ref, rtol=1e-12)
    # dim / volume, with vol(S^5) = pi^3
    assert szego.szego_values(model, 3, P[:1])[0] == pytest.approx(10 / math.pi ** 3)


def test_arnoldi_reproduces_round_sphere(sphere, rng=np.random.default_rng(1)):
    P = _sphere_points(rng, 3)
    for m in (1, 7, 40, 120, 200):
        g = szego.hypersurface_grid(sphere, *szego.default_grid_size(sphere, m))
        V = szego._arnoldi_values(g, szego._chain(sphere.w, m), sphere.w, P)
        v = np.sum(np.abs(V) ** 2, axis=0)
        assert np.allclose(v, (m + 1) / TWO_PI2, rtol=1e-9)


def _wsphere_exact(m, p):
    # monomials z1^a z2^b, a + 2b = m, norms 2 pi^2 int (1-y)^a y^b / (1 + y) dy
    tot = 0.0
    for b in range(m // 2 + 1):
        a = m - 2 * b
        nrm = TWO_PI2 * quad(lambda y: (1 - y) ** a * y ** b / (1 + y), 0, 1, epsabs=0, epsrel=1e-13)[0]
        tot += abs(p[0]) ** (2 * a) * abs(p[1]) ** (2 * b) / nrm
    return tot


@pytest.mark.parametrize("m", [2, 9, 10, 40])
def test_weighted_sphere_exact(wsphere, m):
    probes = np.array([[0, 1], wsphere.regular_probe()], dtype=complex)
    v = szego.szego_values(wsphere, m, probes)
    assert v[0] == pytest.approx(_wsphere_exact(m, probes[0]), rel=1e-9, abs=1e-300)
    assert v[1] == pytest.approx(_wsphere_exact(m, probes[1]), rel=1e-9)


def test_fs_bundle_kernel_constant(fs_bundle):
    pts = fs_bundle.sample(np.random.default_rng(0), 4).points
    v = szego.szego_values(fs_bundle, 5, pts)
    assert np.allclose(v, 6 / (4 * math.pi ** 2), rtol=1e-12)


def test_bundle_norms_against_mc(bundle3):
    s = bundle3.sample(np.random.default_rng(4), 400_000)
    for j, m in [(0, 1), (1, 1), (2, 3)]:
        f = np.abs(s.points[:, 0]) ** (2 * j) * np.abs(s.points[:, 1]) ** (2 * m) * s.weights
        est, se = f.mean(), f.std(ddof=1) / math.sqrt(len(f))
        assert se / est < 0.005
        ref = math.exp(szego.bundle_log_norm2(bundle3, m, j)[0])
        assert abs(est - ref) <= 3 * se


# converged values at the exceptional point (0, 1/sqrt 2), scaled by 1/m
ELLIPSOID_EXCEPTIONAL = {2: 0.10397378, 10: 0.061563, 20: 0.056018, 50: 0.052750, 100: 0.051692}


@pytest.mark.parametrize("m,val", sorted(ELLIPSOID_EXCEPTIONAL.items()))
def test_ellipsoid_exceptional_values(ellipsoid, m, val):
    p = ellipsoid.axis_point(1)[None, :]
    assert szego.szego_values(ellipsoid, m, p)[0] / m == pytest.approx(val, rel=2e-5)


def test_ellipsoid_odd_m_vanishes_on_z2_axis(ellipsoid):
    p = ellipsoid.axis_point(1)[None, :]
    assert szego.szego_values(ellipsoid, 7, p)[0] == 0.0


def test_profile_error_bars_small(ellipsoid):
    prof = szego.szego_profile(ellipsoid, [4, 30])
    assert prof.probe_ids == ["regular", "exceptional0"]
    assert np.all(prof.errors <= 1e-9 * np.maximum(prof.values, 1e-300) + 1e-14)


def test_profile_csv(sphere):
    txt = szego.szego_profile(sphere, [1, 2]).to_csv().splitlines()
    assert txt[0] == "m,probe,scaled_value,error"
    assert txt[1].startswith("1,regular,")
    assert float(txt[1].split(",")[2]) == pytest.approx(2 / TWO_PI2)


def _gram_values(model, m, P):
    G, mons = szego.monomial_gram(model, m)
    V = np.stack([P[:, 0] ** a * P[:, 1] ** b for a, b in mons], axis=1)
    return G, V


@invariant
@pytest.mark.parametrize("m", [6, 11, 20])
def test_extremal_inequality(ellipsoid, m, rng):
    P = np.array([ellipsoid.regular_probe(), ellipsoid.axis_point(1), ellipsoid.axis_point(0)]
                 + list(ellipsoid.sample(rng, 3).points))
    G, V = _gram_values(ellipsoid, m, P)
    pi = szego.szego_values(ellipsoid, m, P)
    for _ in range(100):
        a = rng.normal(size=G.shape[0]) + 1j * rng.normal(size=G.shape[0])
        a /= math.sqrt(np.real(a.conj() @ G @ a))
        u2 = np.abs(V @ a) ** 2
        assert np.all(u2 <= pi * (1 + 1e-9) + 1e-15)


@invariant
@pytest.mark.parametrize("m", [4, 12, 20])
def test_basis_independence(ellipsoid, m, rng):
    P = np.array([ellipsoid.regular_probe(), ellipsoid.axis_point(1)] + list(ellipsoid.sample(rng, 3).points))
    G, V = _gram_values(ellipsoid, m, P)
    k = G.shape[0]
    R = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    Gr = R.conj().T @ G @ R
    L = np.linalg.cholesky(Gr)
    F = np.linalg.solve(L, (V @ R).conj().T)  # orthonormalized rotated basis, conjugated
    alt = np.sum(np.abs(F) ** 2, axis=0)
    ref = szego.szego_values(ellipsoid, m, P)
    assert np.allclose(alt, ref, rtol=1e-8, atol=1e-14)


@invariant
def test_regular_point_limit_round_sphere(rng):
    model = make_weighted_sphere((1, 1))
    P = _sphere_points(rng, 5)
    for m in range(1, 2001):
        v = szego.szego_values(model, m, P) / m
        assert np.all(np.abs(v - 1 / TWO_PI2) <= 2 / m)


def _max_det(model):
    pts = model.sample(np.random.default_rng(0), 100_000).points
    extra = [model.regular_probe()] + list(model.exceptional_points())
    ev = levi_eigs(model, np.vstack([pts, np.array(extra)]))
    return float(np.max(np.abs(np.prod(ev, axis=1))))


# m <= 40 densely, then two large m (the Arnoldi cost grows like m^4)
UNIFORM_M = list(range(1, 41)) + [100, 200]


@pytest.mark.parametrize("spec", ["sphere", "sphere:w=1,2", "ellipsoid", "bundle:d=1,c=0"])
def test_uniform_bound(spec):
    from crmorse.manifold import parse_model
    model = parse_model(spec)
    bound = 2 * _max_det(model) / (2 * math.pi ** model.n)
    P = np.array([p for _, p in szego.default_probes(model)])
    worst = 0.0
    for m in UNIFORM_M:
        worst = max(worst, float(np.max(szego.szego_values(model, m, P))) / m ** (model.n - 1))
    assert worst <= bound


# ---------------------------------------------------------------------------
# Fourier projection
# ---------------------------------------------------------------------------

@invariant
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.integers(-4, 16))
def test_fourier_projection_monomials(a, b, mp):
    model = make_weighted_sphere((1, 2), "paper_ellipsoid")
    P = model.sample(np.random.default_rng(a * 7 + b), 5).points

    def mono(z):
        return z[:, 0] ** a * z[:, 1] ** b

    m = a + 2 * b
    proj = szego.fourier_project(model, mono, mp, nodes=64)(P)
    target = mono(P) if mp == m else np.zeros(len(P))
    assert np.allclose(proj, target, atol=1e-12)


def test_fourier_projection_linear():
    model = make_circle_bundle(1, 3.0)
    P = model.sample(np.random.default_rng(2), 6).points

    def f(z):
        return z[:, 0] * z[:, 1] ** 2

    def g(z):
        return np.conj(z[:, 1]) ** 3 + 2.0

    def h(z):
        return 2.5 * f(z) - 1j * g(z)

    for m in (-3, 0, 2):
        lhs = szego.fourier_project(model, h, m)(P)
        rhs = 2.5 * szego.fourier_project(model, f, m)(P) - 1j * szego.fourier_project(model, g, m)(P)
        assert np.allclose(lhs, rhs, atol=1e-12)
    assert np.allclose(szego.fourier_project(model, g, -3)(P), np.conj(P[:, 1]) ** 3, atol=1e-12)
