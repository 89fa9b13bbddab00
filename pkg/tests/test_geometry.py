import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dynlab import (ContainmentError, DegeneratePairError, IntervalPair, PreconditionError, all_components,
                    cross_ratio, disk_modulus, interval_modulus, koebe_distortion_check, mmod)
from dynlab.pullback import Ball, component_at


def test_cross_ratio_symmetric_pair():
    T = 3.0
    assert cross_ratio(IntervalPair((-T, T), (-1, 1))) == pytest.approx(4 * T / (T - 1) ** 2)


def test_cross_ratio_asymmetric_pair():
    assert cross_ratio(IntervalPair((0, 4), (1, 2))) == pytest.approx(2.0)


def test_touching_endpoints_rejected():
    with pytest.raises(DegeneratePairError):
        cross_ratio(IntervalPair((0, 4), (0, 2)))
    with pytest.raises(DegeneratePairError):
        interval_modulus(IntervalPair((0, 4), (3, 5)))


@pytest.mark.parametrize("T,expected", [(math.e, 1.0), (math.e ** 2, 2.0), (10.0, math.log(10.0))])
def test_symmetric_modulus_is_log_T(T, expected):
    assert interval_modulus(IntervalPair((-T, T), (-1, 1))).value == pytest.approx(expected, abs=1e-9)


def test_modulus_vanishes_as_inner_fills_outer():
    vals = [mmod((-1, 1), (-1 + h, 1 - h)) for h in (1e-1, 1e-3, 1e-6, 1e-9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_disk_modulus_cases():
    assert disk_modulus((0, 10), (0, 1)).value == pytest.approx(math.log(10))
    assert disk_modulus((0, 10), (0.5, 1)).value == pytest.approx(math.log(10 / 1.5))
    assert disk_modulus((0, 1), (0, 1)).value == 0.0
    with pytest.raises(ContainmentError):
        disk_modulus((0, 1), (0.5, 0.6))


nested = st.lists(st.floats(-50, 50, allow_nan=False), min_size=6, max_size=6, unique=True).map(sorted)


@settings(max_examples=500, deadline=None)
@given(nested)
def test_grotzsch_superadditivity(p):
    assume(min(np.diff(p)) > 1e-6)
    V2, V1, V0 = (p[0], p[5]), (p[1], p[4]), (p[2], p[3])
    assert mmod(V2, V0) >= mmod(V2, V1) + mmod(V1, V0) - 1e-9


@settings(max_examples=500, deadline=None)
@given(st.floats(0, 0.999), st.floats(0, 0.999), st.sampled_from([2, 3, 4]))
def test_power_map_modulus_inequality(a, b, ell):
    a, b = sorted((a, b))
    assume(b - a > 1e-6 and b ** ell - a ** ell > 1e-12)
    assert mmod((-1, 1), (a, b)) >= mmod((-1, 1), (a ** ell, b ** ell)) / ell - 1e-9


@settings(max_examples=500, deadline=None)
@given(nested, st.floats(0.01, 100), st.booleans(), st.floats(-100, 100))
def test_affine_invariance(p, s, flip, t):
    assume(min(np.diff(p)) > 1e-3)
    s = -s if flip else s
    img = lambda I: tuple(sorted((s * I[0] + t, s * I[1] + t)))
    I, J = (p[0], p[5]), (p[2], p[3])
    assert cross_ratio(IntervalPair(img(I), img(J))) == pytest.approx(cross_ratio(IntervalPair(I, J)), rel=1e-12)
    assert mmod(img(I), img(J)) == pytest.approx(mmod(I, J), rel=1e-12)


def test_diameter_bound_constant_on_corpus():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10_000):
        p = np.sort(rng.uniform(-5, 5, 4))
        if min(np.diff(p)) < 1e-9:
            continue
        V, U = (p[0], p[3]), (p[1], p[2])
        c0 = (U[1] - U[0]) / (math.exp(-mmod(V, U)) * (V[1] - V[0]))
        worst = max(worst, c0)
    assert worst <= 16


def _diffeo_component(spec, ball, depth):
    comps, _ = all_components(spec, ball, depth)
    for c in comps:
        if c.diffeomorphic:
            return c
    raise AssertionError("no diffeomorphic component")


def test_koebe_distortion_improves_as_eps_shrinks(cheb):
    comp = _diffeo_component(cheb, Ball(0.75, 0.1), 5)
    d_half = koebe_distortion_check(cheb, comp, 0.5)
    d_tenth = koebe_distortion_check(cheb, comp, 0.1)
    assert 1.0 <= d_tenth < d_half


def test_koebe_distortion_on_z2_branch(z2):
    comp = component_at(z2, Ball(1.0, 0.5), 3, np.exp(2j * np.pi / 8))
    assert comp.diffeomorphic
    assert koebe_distortion_check(z2, comp, 0.25) <= 2.0


def test_koebe_linear_regime_is_nearly_one(cheb):
    comp = component_at(cheb, Ball(0.75, 1e-4), 1, 0.75)
    assert koebe_distortion_check(cheb, comp, 0.5) == pytest.approx(1.0, abs=1e-3)


def test_koebe_rejects_critical_component(cheb):
    comp = component_at(cheb, Ball(0.95, 0.1), 1, 0.5)
    assert not comp.diffeomorphic
    with pytest.raises(PreconditionError):
        koebe_distortion_check(cheb, comp, 0.5)
