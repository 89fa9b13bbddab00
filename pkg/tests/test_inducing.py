import dataclasses

import numpy as np
import pytest

from dynlab import (PreconditionError, badness_exponent_estimate, build_induced_map, construct_nice_couple,
                    enumerate_bad_pullbacks, landing_components, real_quadratic, tail_statistics,
                    verify_decomposition, xi_partial_sums)
from dynlab.inducing import (bad_keys, branch_at, brute_force_bad, check_child_decomposition, container_is_bad,
                             good_time_scan, markov_check, sample_D, write_branches_csv)
from dynlab.nice import LandingTable


def test_depth_zero_bad_set_is_outer(x2, couple_x2):
    bad, _ = enumerate_bad_pullbacks(x2, couple_x2, 0)
    assert [w.component for w in bad] == couple_x2.outer.intervals()
    assert all(w.depth == 0 and w.degree == 1 for w in bad)


def test_empty_enumeration_without_julia_critical_points(basilica):
    assert not basilica.crit_prime


@pytest.mark.parametrize("name", ["x2", "x18"])
def test_pruned_equals_brute_force(name, x2, x18, couple_x2, couple_x18):
    spec, couple = {"x2": (x2, couple_x2), "x18": (x18, couple_x18)}[name]
    bad, tr = enumerate_bad_pullbacks(spec, couple, 6)
    assert not tr.truncated
    assert bad_keys(bad, 6) == brute_force_bad(spec, couple.outer, 6)


def test_bad_set_nonvacuous_and_degrees(x18, couple_x18):
    bad, _ = enumerate_bad_pullbacks(x18, couple_x18, 9)
    deep = [w for w in bad if w.depth > 0]
    assert deep
    for w in deep:
        assert w.degree >= 2 and w.degree & (w.degree - 1) == 0


def test_bad_container_is_bad(x18, couple_x18, couple_x18_small):
    small, big = couple_x18_small.outer, couple_x18.outer
    assert big.contains_interval(*small.components[0])
    rep = container_is_bad(x18, small, big, 6)
    assert rep["checked"] > 0 and rep["passed"]


def test_child_decomposition(x18, couple_x18):
    rep = check_child_decomposition(x18, couple_x18.outer, couple_x18.inner, 6)
    assert rep["passed"]
    assert any(r["lhs"] > 0 for r in rep["rows"])


def test_xi_ledger_basics(x18, couple_x18):
    (led,) = xi_partial_sums(x18, [couple_x18.outer], 0.5, 10)
    assert led.partial_sums[0] == 0.0
    assert all(a <= b for a, b in zip(led.partial_sums, led.partial_sums[1:]))
    assert led.partial_sums[-1] > 0


def test_xi_nesting_monotone(x18, couple_x18):
    ledgers = xi_partial_sums(x18, [couple_x18.outer, couple_x18.inner], 0.5, 10)
    assert ledgers[1].nesting_ok


def test_xi_larger_t_dominated_termwise(x18, couple_x18):
    (a,) = xi_partial_sums(x18, [couple_x18.outer], 0.5, 10)
    (b,) = xi_partial_sums(x18, [couple_x18.outer], 2.0, 10)
    # |W|^t decreases in t only for |W| < 1; the depth-0 piece is wider than 1
    assert all(ib <= ia for ia, ib in zip(a.increments()[1:], b.increments()[1:]))
    assert b.partial_sums[-1] < a.partial_sums[-1]


def test_xi_converges_on_x2(x2, couple_x2):
    (led,) = xi_partial_sums(x2, [couple_x2.outer], 0.5, 12)
    s = led.partial_sums
    assert all(abs(s[-1] - s[-k]) <= 1e-3 * s[-1] for k in (2, 3, 4))


def test_xi_rejects_nonpositive_t(x2, couple_x2):
    with pytest.raises(PreconditionError):
        xi_partial_sums(x2, [couple_x2.outer], 0.0, 4)


def test_badness_estimate_x2(x2, couple_x2):
    ledgers = [xi_partial_sums(x2, [couple_x2.outer], t, 12)[0] for t in (0.1, 0.2, 0.5, 1.0)]
    est = badness_exponent_estimate(ledgers)
    assert est["estimate"] is not None and est["estimate"] <= 0.2
    assert est["label"] == "upper bound"


def test_badness_needs_three_grid_values(x2, couple_x2):
    ledgers = [xi_partial_sums(x2, [couple_x2.outer], t, 4)[0] for t in (0.5, 1.0)]
    with pytest.raises(PreconditionError):
        badness_exponent_estimate(ledgers)


def test_badness_never_fabricates(x18, couple_x18):
    ledgers = [xi_partial_sums(x18, [couple_x18.outer], t, 12)[0] for t in (0.1, 0.5, 1.0)]
    est = badness_exponent_estimate(ledgers)
    assert est["status"] in ("estimated", "undetermined")
    if est["status"] == "undetermined":
        assert est["estimate"] is None
    assert len(est["table"]) == 3


def test_markov_property_on_branches(x2, couple_x2, induced_x2):
    tol = 1e-10 * x2.scale
    branches = induced_x2.branches
    assert branches
    step = max(1, len(branches) // 300)
    for b in branches[::step]:
        r = markov_check(x2, b, couple_x2.inner)
        assert r["monotone"]
        assert r["forward_error"] <= tol and r["endpoint_error"] <= tol


def test_branch_per_return_depth(induced_x2):
    times = {b.inducing_time for b in induced_x2.branches}
    assert min(times) >= 1
    assert len(times) >= 5


def test_branches_pairwise_disjoint(induced_x2):
    regs = sorted(b.component for b in induced_x2.branches)
    assert all(a[1] <= b[0] for a, b in zip(regs, regs[1:]))


def test_good_time_scan_matches_branch_time(x2, couple_x2, induced_x2):
    for x in sample_D(induced_x2, 1000, seed=11):
        assert good_time_scan(x2, couple_x2, x, induced_x2.max_time) == branch_at(induced_x2, x).inducing_time


def test_decomposition_identity(x2, couple_x2, induced_x2):
    rep = verify_decomposition(x2, couple_x2, 300, 2, induced_x2)
    assert rep["passed"] and rep["checked"] == 300


def test_decomposition_trivial_case(x2, couple_x2, induced_x2):
    rep = verify_decomposition(x2, couple_x2, 300, 2, induced_x2)
    trivial = [r for r in rep["rows"] if r[2] == 0]
    assert trivial
    assert all(m == 1 + l for _, m, _, l, _ in trivial)


def test_decomposition_detects_corrupted_landing_table(x2, couple_x2, induced_x2):
    good = landing_components(x2, couple_x2.inner, induced_x2.max_time)
    shifted = [dataclasses.replace(u, landing_time=u.landing_time + 1) for u in good.components]
    bad_table = LandingTable(shifted, good.alphas, good.tails, good.unresolved_mass, good.truncation)
    rep = verify_decomposition(x2, couple_x2, 100, 2, induced_x2, landing=bad_table)
    assert not rep["passed"] and len(rep["failures"]) == 100


def test_decomposition_requires_induced_map(x2, couple_x2):
    with pytest.raises(PreconditionError):
        verify_decomposition(x2, couple_x2, 10)


def test_tail_statistics_endpoints(induced_x2):
    rep = tail_statistics(induced_x2, 1.0)
    total = sum(b.diameter for b in induced_x2.branches)
    assert rep["T"][0] == pytest.approx(total, rel=1e-12)
    assert rep["T"][-1] == 0.0
    assert rep["nonincreasing"]


def test_tail_larger_alpha_smaller(induced_x2):
    t1 = tail_statistics(induced_x2, 1.0)["T"]
    t2 = tail_statistics(induced_x2, 1.5)["T"]
    assert all(b <= a for a, b in zip(t1, t2))


def test_induced_map_vacuous_couple():
    spec = real_quadratic(0.2)      # attracting fixed point, critical point in the basin
    couple = construct_nice_couple(spec, 0.05)
    assert couple.vacuous
    assert build_induced_map(spec, couple, 10).branches == []


def test_branch_csv(induced_x2, tmp_path):
    path = tmp_path / "b.csv"
    write_branches_csv(induced_x2, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "chain,depth,inducing_time,diameter,degree,target_component"
    assert len(lines) == len(induced_x2.branches) + 1


def test_sample_D_in_domain(induced_x2):
    xs = sample_D(induced_x2, 200, 3)
    assert all(branch_at(induced_x2, x) is not None for x in xs)
    assert np.array_equal(xs, sample_D(induced_x2, 200, 3))
