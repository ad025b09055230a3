import dataclasses
import math

import numpy as np
import pytest

from crmorse import modelspace as ms
from crmorse.manifold import make_circle_bundle, quadratic_chart

invariant = pytest.mark.invariant
PI = math.pi


def _fs_chart():
    b = make_circle_bundle(1, 0.0)
    return b.brt_chart(b.make_points(0.0, 0.0)[0])


def _draw(rng, dim):
    mag = rng.uniform(0.2, 5.0, dim)
    return tuple(mag * rng.choice([-1.0, 1.0], dim))


def test_params_validation():
    with pytest.raises(ValueError):
        ms.ModelParams((1.0, 1e-12), 0)
    with pytest.raises(ValueError):
        ms.ModelParams((1.0,), 2)
    p = ms.ModelParams((2.0, -1.0, -3.0), 2)
    assert p.signature == 2 and p.negative == (1, 2)


def test_extremal_amplitudes():
    J, v = ms.extremal_form_eval(ms.ModelParams((1, 1), 0), np.zeros(2))
    assert J == () and v == pytest.approx(math.sqrt(4 / (2 * PI) ** 2 / (2 * PI)))
    J, v = ms.extremal_form_eval(ms.ModelParams((-1, 2), 1), np.zeros(2))
    assert J == (0,) and v == pytest.approx(math.sqrt(8 / (2 * PI) ** 2 / (2 * PI)))
    with pytest.raises(ValueError, match="extremal form exists only on X"):
        ms.extremal_form_eval(ms.ModelParams((-1, 2), 0), np.zeros(2))


def test_negative_direction_is_permuted_first():
    perm, lam = ms.negative_first((2.0, -1.0, 3.0, -0.5))
    assert perm == [1, 3, 0, 2] and lam == [-1.0, -0.5, 2.0, 3.0]
    J, _ = ms.extremal_form_eval(ms.ModelParams((2.0, -1.0), 1), np.zeros(2))
    assert J == (1,)


def test_extremal_form_decays():
    p = ms.ModelParams((-1.5, 0.5), 1)
    w = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    _, v = ms.extremal_form_eval(p, w)
    # |u|^2 e^{-2 Phi0} decays in every direction
    dens = np.abs(v) ** 2 * np.exp(-2 * (np.abs(w) ** 2 @ np.array(p.lambdas)))
    assert dens[1] < dens[0] and dens[2] < dens[0]


@pytest.mark.parametrize("lam,q,center", [((1, 1), 0, 1 / (2 * PI ** 3)), ((-1, 2), 1, 2 / (2 * PI ** 3)),
                                          ((-3,), 1, 3 / (2 * PI ** 2))])
def test_extremal_check_examples(lam, q, center):
    norm, c = ms.extremal_checks(ms.ModelParams(lam, q))
    assert norm == pytest.approx(1 / (2 * PI), rel=1e-6)
    assert c == pytest.approx(center, rel=1e-14)


@invariant
@pytest.mark.parametrize("dim", [1, 2])
def test_extremal_normalization_random(dim, rng):
    for _ in range(10):
        lam = _draw(rng, dim)
        p = ms.ModelParams(lam, sum(x < 0 for x in lam))
        norm, center = ms.extremal_checks(p)
        assert abs(norm * 2 * PI - 1) <= 1e-6
        assert center == pytest.approx(abs(np.prod(lam)) / (2 * PI ** (dim + 1)), rel=1e-13)


@pytest.mark.parametrize("lam,q,val", [((1, 1), 0, 1 / PI ** 2), ((1, -1), 0, 0.0), ((-3,), 1, 3 / PI)])
def test_model_density_examples(lam, q, val):
    assert ms.model_density(ms.ModelParams(lam, q)) == pytest.approx(val)


def test_gaussian_moments_exact():
    c = 1.7
    M = ms.gaussian_moments(c, 10)
    for p in range(11):
        for r in range(11):
            exact = 2 * PI * math.factorial(p) / c ** (p + 1) if p == r else 0.0
            scale = math.sqrt(abs(M[p, p] * M[r, r]))
            assert abs(M[p, r] - exact) <= 1e-12 * scale


@pytest.mark.parametrize("lam,q", [((1, 1), 0), ((-2,), 1), ((1, -1), 0), ((0.7,), 0), ((-0.4, -2.2), 2)])
def test_bruteforce_examples(lam, q):
    p = ms.ModelParams(lam, q)
    target = ms.model_density(p)
    val, info = ms.density_bruteforce(p, 8, return_info=True)
    if target == 0:
        assert val < 1e-3 and info["n_null"] == 0
    else:
        assert abs(val - target) <= 0.01 * target
    assert info["gram_cond"] < 1e12


@invariant
def test_bruteforce_oracle_random(rng):
    for dim in (1, 1, 1, 2):
        lam = _draw(rng, dim)
        for q in range(dim + 1):
            p = ms.ModelParams(lam, q)
            val = ms.density_bruteforce(p, 8 if dim == 1 else 6)
            tgt = ms.model_density(p)
            assert abs(val - tgt) / max(tgt, 0.01) <= 0.01
            if p.signature != q:
                assert val < 1e-3


def test_bruteforce_degree_cap():
    with pytest.raises(ValueError):
        ms.density_bruteforce(ms.ModelParams((1.0,), 0), 13)


def test_weight_gap_quadratic_is_zero():
    ch = quadratic_chart((0.5,))
    for m in (10, 1000):
        assert ms.weight_gap(ch, m) < 1e-12


def test_weight_gap_fs_m100():
    g = ms.weight_gap(_fs_chart(), 100)
    r = math.log(100)
    exact = abs(100 * math.log1p(r * r / 100) - r * r)
    assert g == pytest.approx(exact, rel=1e-6) and g == pytest.approx(1.97, abs=0.01)


@invariant
def test_weight_gap_strictly_decreasing():
    ch = _fs_chart()
    gaps = [ms.weight_gap(ch, 10 ** k) for k in range(2, 7)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[0] / 10


def test_weight_gap_errors():
    ch = dataclasses.replace(_fs_chart(), eps=0.1)
    with pytest.raises(ValueError, match="chart radius"):
        ms.weight_gap(ch, 100)
    with pytest.raises(ValueError):
        ms.weight_gap(_fs_chart(), 2)


@pytest.mark.parametrize("q", [0, 1])
def test_operator_residual_quadratic_chart(q):
    r = ms.operator_residual(quadratic_chart((0.5,)), 100, q)
    assert r.residual < 1e-10 and not r.inconclusive


@pytest.mark.parametrize("q", [0, 1])
def test_operator_residual_decays(q):
    ch = _fs_chart()
    a = ms.operator_residual(ch, 100, q)
    b = ms.operator_residual(ch, 10_000, q)
    assert not a.inconclusive and not b.inconclusive
    assert b.residual * 5 <= a.residual


def test_operator_residual_support_error():
    wide = ms.GaussianTest(center=3.0, width=0.5)
    with pytest.raises(ValueError, match="not supported"):
        ms.operator_residual(_fs_chart(), 100, 0, wide)


def test_operator_residual_q_check():
    with pytest.raises(ValueError):
        ms.operator_residual(_fs_chart(), 100, 2)
