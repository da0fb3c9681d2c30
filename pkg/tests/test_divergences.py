import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rdpf.divergences import (SupportError, d2_divergence_wrt_q, eval_divergence, g_func,
                              make_arctan_tv, make_builtin, make_l1, parse_divergence)

from strategies import fd_check, simplex, smooth_specs

GRID = np.geomspace(1e-3, 1e3, 60)
ALL = smooth_specs() + [make_builtin("tv"), make_l1()]


@pytest.mark.parametrize("spec", ALL, ids=repr)
def test_generator_vanishes_at_one(spec):
    assert abs(float(spec.f(np.array([1.0]))[0])) <= 1e-12


@pytest.mark.parametrize("spec", ALL, ids=repr)
def test_generator_convex(spec, rng):
    abc = np.sort(rng.uniform(1e-6, 10, size=(100, 3)), axis=1)
    a, b, c = abc.T
    chord = ((c - b) * spec.f(a) + (b - a) * spec.f(c)) / (c - a)
    assert np.all(spec.f(b) <= chord + 1e-9)


@pytest.mark.parametrize("spec", smooth_specs(), ids=repr)
def test_derivatives_match_finite_differences(spec):
    assert fd_check(spec.f, spec.df, GRID, rel=1e-6) <= 0
    assert fd_check(spec.df, spec.d2f, GRID, rel=1e-6) <= 0


@pytest.mark.parametrize("spec", ALL, ids=repr)
def test_stored_limits(spec):
    f_small = float(spec.f(np.array([1e-300]))[0])
    if math.isinf(spec.f0):
        assert f_small > 100
    else:
        assert f_small == pytest.approx(spec.f0, abs=1e-6)
    big = 1e12
    slope = float(spec.f(np.array([big]))[0]) / big
    if math.isinf(spec.slope_inf):
        assert slope > 20
    else:
        assert slope == pytest.approx(spec.slope_inf, abs=1e-4)


def test_eval_divergence_examples():
    p = np.array([0.15, 0.85])
    for spec in ALL:
        assert eval_divergence(spec, p, p) == pytest.approx(0, abs=1e-15)
    assert eval_divergence(make_builtin("tv"), p, [0.25, 0.75]) == pytest.approx(0.1)
    kl = eval_divergence(make_builtin("kl"), p, [0.5, 0.5])
    assert kl == pytest.approx(0.15 * math.log(0.3) + 0.85 * math.log(1.7), rel=1e-14)


def test_zero_cell_conventions():
    kl, tv = make_builtin("kl"), make_builtin("tv")
    with pytest.raises(SupportError):
        eval_divergence(kl, [0.5, 0.5], [1.0, 0.0])
    # q-zero cells with finite asymptotic slope contribute p * f'(inf)
    assert eval_divergence(tv, [0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.5)
    # p-zero cells contribute q * f(0)
    assert eval_divergence(kl, [1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert eval_divergence(kl, [1.0, 0.0], [1.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        eval_divergence(kl, [1.0], [0.5, 0.5])


def test_g_func_examples():
    for spec in ALL:
        assert g_func(spec, 0.3, 0.3) == pytest.approx(-float(spec.df(np.array([1.0]))[0]))
    kl = make_builtin("kl")
    assert g_func(kl, 0.3, 0.7) == pytest.approx(-0.3 / 0.7)
    np.testing.assert_allclose(g_func(kl, np.array([0.1, 0.9]), np.array([0.5, 0.5])),
                               [-0.2, -1.8])
    assert g_func(make_builtin("chi2"), 2.0, 1.0) == pytest.approx(-3.0)
    assert g_func(kl, 0.0, 0.5) == kl.f0
    with pytest.raises(ValueError):
        g_func(kl, 0.5, 0.0)


def _partial(spec, p, v, i, h=1e-6):
    e = np.zeros_like(v)
    e[i] = h
    return (eval_divergence(spec, p, v + e) - eval_divergence(spec, p, v - e)) / (2 * h)


def _second_partial(spec, p, v, i, h=1e-7):
    # differentiate the (separately verified) first partial, which is g_func
    return (g_func(spec, p[i], v[i] + h) - g_func(spec, p[i], v[i] - h)) / (2 * h)


@pytest.mark.parametrize("spec", smooth_specs(), ids=repr)
def test_g_func_is_partial_derivative_of_divergence(spec, rng):
    for _ in range(20):
        p, v = rng.dirichlet([1, 1, 1]), rng.dirichlet([1, 1, 1])
        for i in range(3):
            assert g_func(spec, p[i], v[i]) == pytest.approx(_partial(spec, p, v, i),
                                                             rel=1e-5, abs=1e-9)


@pytest.mark.parametrize("spec", smooth_specs(), ids=repr)
def test_second_derivative_of_divergence(spec, rng):
    for _ in range(20):
        p, v = rng.dirichlet([2, 2, 2]), rng.dirichlet([2, 2, 2])
        for i in range(3):
            assert d2_divergence_wrt_q(spec, p, v, i) == pytest.approx(
                _second_partial(spec, p, v, i), rel=1e-5, abs=1e-7)


def test_second_derivative_examples():
    kl = make_builtin("kl")
    p, v = np.array([0.3, 0.7]), np.array([0.6, 0.4])
    assert d2_divergence_wrt_q(kl, p, v, 0) == pytest.approx(0.3 / 0.36)
    half = np.array([0.5, 0.5])
    for spec in smooth_specs():
        d2f1 = float(spec.d2f(np.array([1.0]))[0])
        # p(i)^2 / v(i)^3 = 0.25 / 0.125
        assert d2_divergence_wrt_q(spec, half, half, 1) == pytest.approx(2 * d2f1)
    with pytest.raises(ValueError):
        d2_divergence_wrt_q(make_builtin("tv"), p, v, 0)
    with pytest.raises(ValueError):
        d2_divergence_wrt_q(kl, p, np.array([0.0, 1.0]), 0)


def test_builtin_examples():
    kl = make_builtin("kl")
    one = np.array([1.0])
    assert (kl.f(one)[0], kl.df(one)[0], kl.d2f(one)[0]) == (0.0, 1.0, 1.0)
    tv = make_builtin("tv")
    assert not tv.smooth
    assert tv.f(np.array([3.0]))[0] == 1.0 and tv.df(np.array([3.0]))[0] == 0.5
    assert tv.df(one)[0] == 0.0
    with pytest.raises(ValueError):
        make_builtin("hellinger")
    with pytest.raises(ValueError):
        make_builtin("alpha")


def test_alpha_one_matches_kl(rng):
    kl, a1 = make_builtin("kl"), make_builtin("alpha", 1.0)
    for _ in range(200):
        p, q = rng.dirichlet([1, 1, 1]), rng.dirichlet([1, 1, 1])
        assert eval_divergence(a1, p, q) == pytest.approx(eval_divergence(kl, p, q), abs=1e-10)


def test_chi2_is_twice_alpha_two(rng):
    chi2, a2 = make_builtin("chi2"), make_builtin("alpha", 2.0)
    p, q = rng.dirichlet([1, 1, 1]), rng.dirichlet([1, 1, 1])
    assert eval_divergence(chi2, p, q) == pytest.approx(2 * eval_divergence(a2, p, q))


def test_arctan_tv_examples():
    x = np.linspace(0, 10, 100_001)
    l1 = make_l1()
    gaps = []
    for n in (1, 10, 100):
        fn = make_arctan_tv(n)
        assert fn.f(np.array([1.0]))[0] == 0.0
        gap = float(np.max(np.abs(fn.f(x) - l1.f(x))))
        assert gap <= 2 / (n * math.pi)
        gaps.append(gap)
    assert gaps == sorted(gaps, reverse=True)
    with pytest.raises(ValueError):
        make_arctan_tv(0)


def test_arctan_tv_lower_bounds_total_variation(rng):
    l1 = make_l1()
    for n in (1, 10, 100):
        fn = make_arctan_tv(n)
        for _ in range(1000):
            k = rng.integers(2, 6)
            p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
            assert eval_divergence(fn, p, q) <= eval_divergence(l1, p, q) + 1e-12


def test_parse_divergence():
    assert parse_divergence("kl").name == "kl"
    assert parse_divergence(" js ").name == "js"
    assert parse_divergence("alpha:0.5").name == "alpha:0.5"
    assert parse_divergence("arctan_tv:10").name == "arctan_tv:10"
    for bad in ("kl:2", "foo", "alpha:", "arctan_tv:x"):
        with pytest.raises(ValueError):
            parse_divergence(bad)


@given(simplex(3), simplex(3), st.sampled_from(ALL))
def test_divergence_nonnegative(p, q, spec):
    assert eval_divergence(spec, p, q) >= -1e-15


@given(simplex(3), simplex(3), simplex(3), simplex(3), st.floats(0, 1),
       st.sampled_from(ALL))
def test_joint_convexity(p1, q1, p2, q2, t, spec):
    mix = eval_divergence(spec, t * p1 + (1 - t) * p2, t * q1 + (1 - t) * q2)
    assert mix <= t * eval_divergence(spec, p1, q1) + (1 - t) * eval_divergence(spec, p2, q2) + 1e-9


@given(simplex(3), simplex(3))
def test_divergence_zero_only_on_equality(p, q):
    for spec in ALL:
        if np.max(np.abs(p - q)) > 1e-3:
            assert eval_divergence(spec, p, q) > 0


@pytest.mark.parametrize("name", ["kl", "js", "chi2", "alpha:0.5", "alpha:-1"])
def test_second_derivative_direct_second_difference(name, rng):
    spec = parse_divergence(name)
    h = 1e-4
    for _ in range(20):
        p, v = rng.dirichlet([2, 2, 2]), rng.dirichlet([2, 2, 2])
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd = (eval_divergence(spec, p, v + e) - 2 * eval_divergence(spec, p, v)
                  + eval_divergence(spec, p, v - e)) / h ** 2
            assert d2_divergence_wrt_q(spec, p, v, i) == pytest.approx(fd, rel=1e-5, abs=1e-7)
