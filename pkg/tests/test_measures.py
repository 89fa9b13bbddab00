import math

import numpy as np
import pytest

from dynlab import (PreconditionError, conformal_measure, conformality_check, correlation_decay,
                    invariant_density, lp_regularity, measure_regularity, poincare_exponent, poincare_series,
                    pushforward_bound_probe)
from dynlab import measures as M


def test_poincare_increments_on_the_circle(z2):
    # preimages of 1 are the 2^n-th roots of unity, each with |Df^n| = 2^n
    tab = poincare_series(z2, 1 + 0j, [0.0, 1.0, 2.0], 8)
    n = np.arange(1, 9)
    assert tab.increments[:, 0] == pytest.approx(2.0 ** n)
    assert tab.increments[:, 1] == pytest.approx(np.ones(8))
    assert tab.increments[:, 2] == pytest.approx(2.0 ** -n)
    assert tab.counts == tuple(int(2 ** k) for k in n)


def test_poincare_exponent_z2(z2):
    est = poincare_exponent(poincare_series(z2, 1 + 0j, np.arange(0.5, 2.01, 0.1), 12))
    assert est.verdict == "estimate"
    assert est.value == pytest.approx(1.0, abs=0.05)


def test_poincare_exponent_x2(x2):
    est = poincare_exponent(poincare_series(x2, -0.7877, np.arange(0.5, 2.01, 0.1), 14))
    assert est.value == pytest.approx(1.0, abs=0.1)


def test_poincare_grid_above_transition(z2):
    est = poincare_exponent(poincare_series(z2, 1 + 0j, [1.5, 2.0, 2.5], 10))
    assert est.verdict == "converged everywhere" and est.value is None


def test_poincare_rejects_exceptional_point(z2):
    with pytest.raises(PreconditionError):
        poincare_series(z2, 0j, [1.0], 6)


def test_poincare_needs_depth(z2):
    with pytest.raises(PreconditionError):
        poincare_series(z2, 1 + 0j, [1.0], 3)


def test_conformal_measure_z2_is_arc_length(z2):
    mu = conformal_measure(z2, 1.0, np.exp(0.3j), 12)
    assert M.arc_tv_distance(mu, 32) <= 0.02
    assert mu.total_mass == pytest.approx(1.0)
    assert conformality_check(z2, mu).construction_residual <= 1e-12


def test_conformal_depth_zero_is_point_mass(z2):
    mu = conformal_measure(z2, 1.0, 0.5 + 0.5j, 0)
    assert mu.points.tolist() == [0.5 + 0.5j] and mu.weights.tolist() == [1.0]


@pytest.mark.parametrize("s,mass", [(1.0, 0.5), (0.0, 1.0 / 3.0)])
def test_conformal_mass_on_middle_interval(x2, s, mass):
    # s=1 gives Lebesgue/4; s=0 gives the arcsine law, mass (2/pi) asin(1/2)
    mu = conformal_measure(x2, s, 0.3, 14)
    assert mu.mass_interval(-1.0, 1.0) == pytest.approx(mass, abs=0.05)


def test_conformal_real_construction_residual(x2):
    mu = conformal_measure(x2, 1.0, 0.3, 12)
    rep = conformality_check(x2, mu)
    assert rep.construction_residual <= 1e-12
    assert rep.conformality_defect <= 0.05


def test_regularity_arc_length_passes():
    mu = M.arc_length_grid(1 << 14)
    centers = list(np.exp(1j * np.linspace(0, 6, 12)))
    rep = measure_regularity(mu, 1.0, 0.1, [2.0 ** -k for k in range(3, 10)], centers)
    assert rep.passed and rep.excluded == 0


def test_regularity_point_mass_fails():
    rep = measure_regularity(M.point_mass(0.0), 1.0, 0.1, [0.1, 0.01], [0.0])
    assert not rep.passed and rep.worst_exponent == 0.0


def test_regularity_x2_conformal(x2):
    mu = conformal_measure(x2, 1.0, 0.3, 14)
    centers = list(np.linspace(-2, 2, 22)[1:-1])
    rep = measure_regularity(mu, 1.0, 0.3, [2.0 ** -k for k in range(4, 9)], centers)
    assert rep.passed


def test_chebyshev_density_against_exact():
    cheb_spec = M.lebesgue_grid(0.0, 1.0, 1 << 14)
    from dynlab import chebyshev
    est = invariant_density(chebyshev(), cheb_spec, 50, bins=(32,))
    assert M.sup_relative_error(est, 32, M.chebyshev_mass, (0.1, 0.9)) <= 0.1
    assert est.total_mass == pytest.approx(1.0, abs=1e-12)


def test_z2_density_is_uniform(z2):
    est = invariant_density(z2, M.arc_length_grid((1 << 12) | 1), 20, bins=(32,))
    _, d = est.density(32)
    assert np.nanmax(np.abs(d - 1.0)) <= 0.02


def test_chebyshev_mass_formula():
    assert M.chebyshev_mass(0.0, 1.0) == pytest.approx(1.0)
    assert M.chebyshev_mass(0.0, 0.5) == pytest.approx(0.5)
    assert M.chebyshev_mass(0.25, 0.75) == pytest.approx(1.0 / 3.0)


def test_lp_verdicts_chebyshev(cheb):
    est = invariant_density(cheb, M.lebesgue_grid(0.0, 1.0, 1 << 16), 60, bins=(64, 1024, 16384))
    rep = lp_regularity(est, [1.0, 1.5, 2.5])
    assert rep.verdicts == {1.0: "stable", 1.5: "stable", 2.5: "diverging"}


def test_lp_needs_three_levels(cheb):
    est = invariant_density(cheb, M.lebesgue_grid(0.0, 1.0, 1 << 10), 5, bins=(8, 16))
    with pytest.raises(PreconditionError):
        lp_regularity(est, [1.0])


@pytest.fixture(scope="module")
def pf_setup(x2):
    mu = M.lebesgue_grid(-2.0, 2.0, 1 << 18)
    fam = M.critical_value_family(x2, [0.1, 0.03, 0.01, 0.003, 0.001])
    return mu, fam


def test_pushforward_bounded_above_two(x2, pf_setup):
    # push-forwards of Lebesgue pile up like |x+2|^(-1/2) at the critical value
    mu, fam = pf_setup
    assert pushforward_bound_probe(x2, mu, 2.2, fam, [0, 5, 10, 15, 20]).bounded


def test_pushforward_unbounded_below_two(x2, pf_setup):
    mu, fam = pf_setup
    rep = pushforward_bound_probe(x2, mu, 1.2, fam, [0, 5, 10, 15, 20])
    assert not rep.bounded and rep.slope < 0


def test_pushforward_n_zero_row(x2, pf_setup):
    mu, fam = pf_setup
    rep = pushforward_bound_probe(x2, mu, 1.0, fam, [0])
    for row in rep.rows:
        a, b = row["set"]
        assert row["numerator"] == pytest.approx(mu.mass_interval(a, b))
        assert row["ratio"] == pytest.approx(row["numerator"] / row["denominator"])


def test_pushforward_rejects_non_injective_set(x2, pf_setup):
    with pytest.raises(PreconditionError):
        pushforward_bound_probe(x2, pf_setup[0], 2.0, [(-0.1, 0.1)], [1])


def test_fit_recovers_power_law():
    n = np.arange(1, 41, dtype=float)
    rep = M.fit_correlations(np.r_[1.0, n ** -3.0])
    assert rep.classification == "polynomial"
    assert rep.poly_exponent == pytest.approx(3.0, abs=0.1)


def test_fit_classifies_exponential():
    n = np.arange(0, 41, dtype=float)
    rep = M.fit_correlations(np.exp(-0.7 * n))
    assert rep.classification == "super-polynomial / exponential"
    assert rep.exp_rate == pytest.approx(0.7, abs=1e-6)


def _cheb_sampler(cheb):
    return lambda n, L, s: M.orbit_samples(cheb, n, L, s)


def test_constant_observable_has_zero_correlation(cheb):
    rep = correlation_decay(cheb, _cheb_sampler(cheb), M.OBSERVABLES["constant"], M.OBSERVABLES["x"], 5,
                            20_000, seed=1, batches=8)
    assert np.all(np.abs(rep.C) <= 1e-12)


def test_c0_is_the_covariance(cheb):
    phi = M.OBSERVABLES["x"]
    rep = correlation_decay(cheb, _cheb_sampler(cheb), phi, phi, 5, 200_000, seed=2, batches=16)
    # variance of the arcsine law on [0, 1] is 1/8
    assert rep.C[0] == pytest.approx(0.125, abs=0.01)


def test_chebyshev_correlations_hit_noise_floor(cheb):
    phi = M.OBSERVABLES["cos_pi_x"]
    rep = correlation_decay(cheb, _cheb_sampler(cheb), phi, phi, 20, 1_000_000, seed=3)
    assert rep.floor_n is not None and rep.floor_n <= 10
    assert rep.classification == "super-polynomial / exponential"


def test_correlations_reproducible(cheb):
    phi = M.OBSERVABLES["x"]
    a = correlation_decay(cheb, _cheb_sampler(cheb), phi, phi, 4, 20_000, seed=9, batches=8)
    b = correlation_decay(cheb, _cheb_sampler(cheb), phi, phi, 4, 20_000, seed=9, batches=8)
    assert np.array_equal(a.C, b.C)


def test_delta_and_xi_away_from_critical_orbit(x2):
    eps = 0.1
    diag = M.delta_xi_diagnostics(x2, 0.3, range(1, 13), eps)
    # the critical orbit of x^2-2 is 0, -2, 2, 2, ...
    assert all(d.Delta == pytest.approx(0.3) for d in diag)
    assert all(0 < d.xi <= 2 * eps * d.Delta for d in diag)
    assert all(b.xi < a.xi for a, b in zip(diag, diag[1:]))


@pytest.mark.parametrize("z", [0.0, -2.0, 2.0])
def test_delta_xi_empty_on_critical_orbit(x2, z):
    assert M.delta_xi_diagnostics(x2, z, [1, 2]) == []


def test_rhs_and_trend(x2, couple_x2):
    from dynlab import enumerate_bad_pullbacks
    bad, _ = enumerate_bad_pullbacks(x2, couple_x2, 10)
    sums = M.bad_weight_sums(bad, 0.5)
    assert sums[0] == pytest.approx(sum((b - a) ** 0.5 for a, b in couple_x2.outer.intervals()))
    diag = M.delta_xi_diagnostics(x2, 0.3, range(0, 11))
    rhs = M.rhs_bound(diag, sums, 1.0, 0.5)
    assert all(a <= b for a, b in zip(rhs, rhs[1:]))
    depths = list(range(1, 12))
    assert M.bound_trend([0.5 * r for r in rhs], rhs, depths).bounded
    assert not M.bound_trend([m * r for m, r in zip(depths, rhs)], rhs, depths).bounded


def test_atom_measure_rejects_bad_weights():
    with pytest.raises(ValueError):
        M.AtomMeasure(np.array([0.0, 1.0]), np.array([0.5, -0.1]))
