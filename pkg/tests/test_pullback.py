import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynlab import PreconditionError, all_components, backward_contraction_probe, chebyshev, shrinking_exponent
from dynlab.pullback import (Ball, brute_force_degree_real, component_at, preimages, pull_interval, real_tree,
                             write_shrinking_csv)


def test_preimages_examples(z2, cheb):
    assert sorted(preimages(z2, 1.0), key=lambda z: z.real) == pytest.approx([-1.0, 1.0])
    assert preimages(cheb, 1.0) == pytest.approx([0.5, 0.5])
    assert sorted(preimages(cheb, 0.75)) == pytest.approx([0.25, 0.75])


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0))
def test_real_preimages_map_back(w):
    spec = chebyshev()
    for x in preimages(spec, w):
        assert 0.0 <= x <= 1.0
        assert abs(spec.f(x) - w) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.complex_numbers(max_magnitude=3.0))
def test_complex_preimages_count_and_accuracy(w):
    spec_c = (1.0, 0.0, -1.0)
    from dynlab import make_map, COMPLEX
    spec = make_map(COMPLEX, spec_c)
    pre = preimages(spec, w)
    assert len(pre) == 2
    for z in pre:
        assert abs(spec.f(z) - w) <= 1e-10 * spec.escape_radius


def test_depth_zero_component_is_target(cheb):
    comp = component_at(cheb, Ball(0.3, 0.1), 0, 0.3)
    assert comp.region == pytest.approx((0.2, 0.4))
    assert comp.degree == 1 and comp.diffeomorphic


def test_linearized_real_component(cheb):
    eps = 1e-3
    comp = component_at(cheb, ("interval", 0.75 - eps, 0.75 + eps), 1, 0.75)
    assert comp.diameter == pytest.approx(eps, rel=1e-3)
    assert comp.degree == 1


def test_linearized_complex_component(z2):
    comp = component_at(z2, Ball(1.0, 0.1), 1, 1.0)
    assert comp.degree == 1 and comp.diffeomorphic
    # B(1, 0.1) pulls back to a near-disk of radius about 0.05
    assert comp.diameter == pytest.approx(0.1, rel=0.02)
    assert np.max(np.abs(np.abs(comp.region - 1.0) - 0.05)) < 0.002


def test_anchor_must_land_in_target(cheb):
    with pytest.raises(PreconditionError):
        component_at(cheb, Ball(0.3, 0.01), 1, 0.75)


def test_fourth_roots_at_depth_two(z2):
    comps, tr = all_components(z2, Ball(1.0, 0.1), 2)
    assert not tr.truncated
    assert len(comps) == 4
    for c in comps:
        assert min(abs(c.anchor - r) for r in (1, 1j, -1, -1j)) < 0.05
    assert sum(c.degree for c in comps) == 4


def test_critical_component_of_chebyshev(cheb):
    comps, _ = all_components(cheb, ("interval", 0.9, 1.0), 1)
    assert len(comps) == 1
    (c,) = comps
    assert c.region[0] < 0.5 < c.region[1]
    assert c.degree == 2 and not c.diffeomorphic


def test_depth_zero_all_components(z2):
    comps, _ = all_components(z2, Ball(1.0, 0.1), 0)
    assert len(comps) == 1 and comps[0].degree == 1


def test_degree_law_real(cheb):
    target = ("interval", 0.3, 0.9)
    for m in range(0, 6):
        comps, _ = all_components(cheb, target, m)
        for c in comps:
            assert c.degree == 2 ** c.critical_hits
            assert c.diffeomorphic == (c.critical_hits == 0)
            assert brute_force_degree_real(cheb, c, target) == c.degree


def test_degree_law_complex():
    from dynlab import complex_quadratic
    spec = complex_quadratic(-2.0)
    for m in range(1, 5):
        comps, _ = all_components(spec, Ball(0.0, 0.3), m)
        assert sum(c.degree for c in comps) == 2 ** m
        for c in comps:
            assert c.brute_degree == c.degree


def test_pullback_nesting(x2):
    roots = [(-0.3, 0.3, 0)]
    levels, _ = real_tree(x2, roots, 6)
    for m in range(1, 6):
        parents = levels[m]
        for node in levels[m + 1]:
            ya, yb = sorted((float(x2.f(node.a)), float(x2.f(node.b))))
            inside = [p for p in parents if p.a - 1e-12 <= ya and yb <= p.b + 1e-12]
            assert len(inside) == 1


def test_pull_interval_covers_preimage(cheb):
    parts = pull_interval(cheb, 0.2, 0.4)
    for a, b, _ in parts:
        ys = cheb.f(np.linspace(a, b, 11)[1:-1])
        assert np.all((ys > 0.2) & (ys < 0.4))


def test_backward_contraction_misiurewicz(x2):
    rep = backward_contraction_probe(x2, 4.0, [0.01], 10)
    assert not rep.truncation.truncated
    assert rep.worst_ratio < 1.0 and rep.passed


def test_backward_contraction_vacuous_cases(x2, z2):
    assert backward_contraction_probe(x2, 4.0, [0.01], 0).vacuous
    rep = backward_contraction_probe(z2, 4.0, [0.01], 5)
    assert rep.vacuous and rep.passed
    with pytest.raises(PreconditionError):
        backward_contraction_probe(x2, 1.0, [0.01], 3)


def test_shrinking_exponent_x2(x2, tmp_path):
    rep = shrinking_exponent(x2, 0.1, range(1, 16), n_base=256, seed=0)
    assert rep.n_base_points == 256
    assert all(a >= b for a, b in zip(rep.theta, rep.theta[1:]))
    assert rep.fitted_beta >= 3
    write_shrinking_csv(rep, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "depth,theta,count"


def test_depth_one_shrinking_is_linear(cheb):
    rho, x = 1e-5, 0.3
    rep = shrinking_exponent(cheb, rho, [1, 2, 3, 4, 5], base_points=[x])
    assert rep.theta[0] == pytest.approx(2 * rho / abs(cheb.df(x)), rel=1e-3)
