import math

import numpy as np
import pytest

from dynlab import (NicenessViolation, construct_nice_couple, enumerate_children, lambda_nice_report,
                    landing_components, verify_niceness)
from dynlab.nice import (EXACT_TAGS, NiceSet, couple_from_text, couple_to_text, modulus_lower_bound,
                         return_domains)
from dynlab.pullback import real_tree, tB


def _inside(inner, outer):
    return outer[0] <= inner[0] and inner[1] <= outer[1]


def test_couple_sandwich_x2(x2, couple_x2):
    d, r = 0.05, 8.0
    V, Vh = couple_x2.inner.components[0], couple_x2.outer.components[0]
    assert _inside(tB(x2, 0.0, d), V) and _inside(V, tB(x2, 0.0, 2 * d))
    assert _inside(tB(x2, 0.0, r * d / 2), Vh) and _inside(Vh, tB(x2, 0.0, r * d))
    assert Vh[0] < V[0] and V[1] < Vh[1]
    assert couple_x2.couple_certificate["passed"]
    assert couple_x2.couple_certificate["depth"] == 12


def test_couple_boundaries_certified_for_all_n(x2, couple_x2):
    for nice in (couple_x2.inner, couple_x2.outer):
        cert = verify_niceness(x2, nice, 50)
        assert all(c["tag"] in EXACT_TAGS for c in cert.values())


def test_each_component_holds_one_critical_point(couple_x2, x2):
    for a, b in couple_x2.inner.components.values():
        assert sum(a < c.location < b for c in x2.crit_prime) == 1


def test_empty_couple_without_julia_critical_points(z2):
    couple = construct_nice_couple(z2, 0.05)
    assert couple.vacuous
    assert couple.inner.is_empty() and couple.outer.is_empty()


def test_chebyshev_couple_is_nice_at_horizon_100(cheb, couple_cheb):
    a, b = couple_cheb.inner.components[0]
    assert a < 0.5 < b
    cert = verify_niceness(cheb, couple_cheb.inner, 100)
    assert set(cert) == {a, b}


def test_fixed_point_boundary_is_certified(cheb):
    # boundary on the fixed point 3/4 and its other preimage 1/4
    nice = NiceSet({0: (0.25, 0.75)}, {0.25: {"tag": "eventually-fixed", "orbit": (0.25, 0.75, 0.75)},
                                         0.75: {"tag": "eventually-fixed", "orbit": (0.75, 0.75)}})
    cert = verify_niceness(cheb, nice, 5)
    assert cert[0.75]["tag"] == "eventually-fixed"
    assert cert[0.25]["tag"] == "eventually-fixed"


@pytest.mark.parametrize("end,shift", [(0, 0.01), (0, -0.01), (1, 0.01), (1, -0.01)])
def test_corrupted_boundary_violates_niceness(cheb, couple_cheb, end, shift):
    comp = list(couple_cheb.inner.components[0])
    comp[end] += shift
    bad = NiceSet({0: tuple(comp)})
    with pytest.raises(NicenessViolation) as e:
        verify_niceness(cheb, bad, 20)
    assert 1 <= e.value.n <= 20


def test_landing_depth_zero_is_the_set(x2, couple_x2):
    table = landing_components(x2, couple_x2.inner, 0)
    assert [u.region for u in table.components] == couple_x2.inner.intervals()
    assert all(u.landing_time == 0 for u in table.components)


def test_landing_tail_decays_geometrically(x2, couple_x2):
    table = landing_components(x2, couple_x2.inner, 15)
    tail = np.array(table.tails[1.0])
    assert np.all(np.diff(tail) <= 0)
    ms = np.arange(3, 16)
    slope = np.polyfit(ms, np.log(tail[3:16]), 1)[0]
    assert slope < -0.1
    regions = sorted(u.region for u in table.components)
    assert all(a[1] <= b[0] + 1e-12 for a, b in zip(regions, regions[1:]))


def test_landing_components_cover_entering_points(x2, couple_x2):
    table = landing_components(x2, couple_x2.inner, 15)
    rng = np.random.default_rng(5)
    V = couple_x2.inner
    hit = 0
    for x in rng.uniform(-2, 2, 500):
        y, first = x, None
        for k in range(16):
            if V.contains(y):
                first = k
                break
            y = float(x2.f(y))
        if first is None:
            continue
        u = table.lookup(x)
        assert u is not None and u.landing_time == first
        hit += 1
    assert hit > 200


def test_landing_maps_onto_component(x2, couple_x2):
    table = landing_components(x2, couple_x2.inner, 8)
    for u in table.components:
        if u.landing_time == 0:
            continue
        a, b = u.region
        ya, yb = a, b
        for _ in range(u.landing_time):
            ya, yb = float(x2.f(ya)), float(x2.f(yb))
        lo, hi = sorted((ya, yb))
        V = couple_x2.inner.components[u.target]
        assert u.extension_diffeomorphic
        assert (lo, hi) == pytest.approx(V, abs=1e-9)


def test_lambda_nice_chebyshev(cheb, couple_cheb):
    rep = lambda_nice_report(cheb, couple_cheb, 20)
    assert rep["minimum"] is not None and rep["minimum"] >= 0.5


def test_modulus_bound_cases():
    assert modulus_lower_bound((0j, 10.0), (0j, 1.0)) >= math.log(10) - 1e-12
    assert modulus_lower_bound((-1.0, 1.0), (-1.0, 1.0)) == 0.0


def test_off_critical_pullbacks_nested_or_disjoint(x2, couple_x2):
    V = couple_x2.inner
    roots = [(a, b, k) for k, (a, b) in V.components.items()]
    levels, _ = real_tree(x2, roots, 10)
    checked = 0
    for m in range(1, 11):
        for n in levels[m]:
            if n.a < 0 < n.b:
                continue
            if V.meets_interval(n.a, n.b):
                assert V.contains_interval(n.a, n.b, 1e-12)
                checked += 1
    assert checked > 0


def test_return_domains_lie_inside(x2, couple_x2):
    for d in return_domains(x2, couple_x2.inner, 12):
        assert couple_x2.inner.contains_interval(*d.region)


def test_children_sum_within_bound(x2, couple_x2):
    rep = enumerate_children(x2, couple_x2.inner, 15, 0.25, delta=0.05)
    assert rep["within_bound"]


def test_children_nonvacuous(x18, couple_x18):
    rep = enumerate_children(x18, couple_x18.inner, 15, 0.25, delta=0.05)
    assert rep["children"]
    for y in rep["children"]:
        assert sum(y.region[0] < c.location < y.region[1] for c in x18.critical_points) == 1
    assert "within_bound" in rep


def test_no_children_for_empty_set(x2):
    assert enumerate_children(x2, NiceSet({}), 10, 0.5)["children"] == []


def test_couple_text_round_trip(couple_cheb):
    text = couple_to_text(couple_cheb)
    back = couple_from_text(text)
    assert back.inner.components == couple_cheb.inner.components
    assert back.outer.components == couple_cheb.outer.components
    assert couple_to_text(back) == text
