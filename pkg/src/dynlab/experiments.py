"""Experiment runners.

Each runner takes a map (or ``None``), parsed parameters, a seed and a
node budget, and returns an :class:`Outcome`. Verdict thresholds are
parameters with defaults matching the acceptance table in the README.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, inducing, measures, nice, pullback
from .dimension import boundary_scan_sample, box_dimension, hyperbolic_dimension_lb, julia_sample
from .maps import MapSpec, repelling_fixed_point
from .pullback import DEFAULT_BUDGET

PASS, FAIL, UNDETERMINED = "pass", "fail", "undetermined"


@dataclass
class Outcome:
    values: dict
    verdict: str
    truncation: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _trunc(t) -> dict:
    return {"truncated": bool(t.truncated), "unexplored": int(t.unexplored), "nodes": int(t.nodes)}


def _verdict(ok) -> str:
    if ok is None:
        return UNDETERMINED
    return PASS if ok else FAIL


# ---------------------------------------------------------------------------


def run_geometry(spec, p, seed, budget) -> Outcome:
    """Randomized checks of the modulus kernel."""
    rng = np.random.default_rng(seed)
    n = p["trials"]
    worst = {"grotzsch": math.inf, "power_map": math.inf, "affine": 0.0}
    for _ in range(n):
        pts = np.sort(rng.uniform(-10, 10, 6))
        V2, V1, V0 = (pts[0], pts[5]), (pts[1], pts[4]), (pts[2], pts[3])
        gap = geometry.mmod(V2, V0) - geometry.mmod(V2, V1) - geometry.mmod(V1, V0)
        worst["grotzsch"] = min(worst["grotzsch"], gap)
        a, b = np.sort(rng.uniform(0, 1, 2))
        ell = int(rng.integers(2, 5))
        if b > a:
            gap = geometry.mmod((-1, 1), (a, b)) - geometry.mmod((-1, 1), (a ** ell, b ** ell)) / ell
            worst["power_map"] = min(worst["power_map"], gap)
        s, t = rng.uniform(0.1, 10) * rng.choice([-1, 1]), rng.uniform(-10, 10)
        m0 = geometry.mmod(V2, V0)
        img = lambda I: tuple(sorted((s * I[0] + t, s * I[1] + t)))
        m1 = geometry.mmod(img(V2), img(V0))
        worst["affine"] = max(worst["affine"], abs(m1 - m0) / m0)
    unit = geometry.mmod((-math.e, math.e), (-1, 1))
    checks = {"grotzsch": worst["grotzsch"] >= -1e-9, "power_map": worst["power_map"] >= -1e-9,
              "affine": worst["affine"] <= 1e-12, "unit_modulus": abs(unit - 1) <= 1e-9}
    vals = {"trials": n, "worst_grotzsch_gap": worst["grotzsch"], "worst_power_map_gap": worst["power_map"],
            "worst_affine_relative_change": worst["affine"], "unit_modulus": unit, "checks": checks}
    return Outcome(vals, _verdict(all(checks.values())))


def run_degree_law(spec: MapSpec, p, seed, budget) -> Outcome:
    """Declared degree versus brute-force preimage counts for pull-backs of a nice set."""
    couple = nice.construct_nice_couple(spec, p["delta"], p["r"], horizon=p["horizon"])
    rows, mism = [], 0
    trunc = pullback.Truncation()
    targets = couple.inner.components.values()
    for comp in targets:
        for m in range(0, p["depth"] + 1):
            if spec.is_real:
                target = ("interval", comp[0], comp[1])
                comps, tr = pullback.all_components(spec, target, m, budget)
                for w in comps:
                    bd = pullback.brute_force_degree_real(spec, w, target)
                    mism += int(bd != w.degree)
                    rows.append({"depth": m, "region": list(w.region), "degree": w.degree, "brute": bd})
            else:
                _, c, r = comp
                comps, tr = pullback.all_components(spec, pullback.Ball(c, r), m, budget)
                for w in comps:
                    mism += int(w.brute_degree != w.degree)
                    rows.append({"depth": m, "anchor": w.anchor, "degree": w.degree, "brute": w.brute_degree})
            trunc.truncated |= tr.truncated
            trunc.unexplored += tr.unexplored
    vals = {"components_checked": len(rows), "mismatches": mism, "max_depth": p["depth"],
            "nice_set": couple.inner.components}
    ok = None if trunc.truncated else mism == 0
    return Outcome(vals, _verdict(ok), _trunc(trunc), {"degrees": rows})


def run_shrinking(spec: MapSpec, p, seed, budget) -> Outcome:
    rep = pullback.shrinking_exponent(spec, p["rho"], p["depths"], n_base=p["n_base"], seed=seed)
    vals = {"rho": rep.rho, "depths": rep.depths, "theta": rep.theta, "fitted_beta": rep.fitted_beta,
            "fit_residual": rep.fit_residual, "n_base_points": rep.n_base_points, "excluded": rep.excluded,
            "beta_min": p["beta_min"]}
    rows = [{"depth": m, "theta": t, "count": c} for m, t, c in zip(rep.depths, rep.theta, rep.counts)]
    return Outcome(vals, _verdict(rep.fitted_beta >= p["beta_min"]), tables={"shrinking": rows})


def run_badness(spec: MapSpec, p, seed, budget) -> Outcome:
    couple = nice.construct_nice_couple(spec, p["delta"], p["r"])
    bad, tr = inducing.enumerate_bad_pullbacks(spec, couple, p["depth"] - 1, budget)
    vals = {"bad_counts": [sum(1 for w in bad if w.depth == m) for m in range(p["depth"])]}
    brute_ok = True
    if p["brute_depth"] > 0:
        d = p["brute_depth"]
        lhs = inducing.bad_keys(bad, d)
        if d > p["depth"] - 1:
            more, _ = inducing.enumerate_bad_pullbacks(spec, couple, d, budget)
            lhs = inducing.bad_keys(more, d)
        rhs = inducing.brute_force_bad(spec, couple.outer, d, budget)
        brute_ok = lhs == rhs
        vals["brute_force"] = {"depth": d, "pruned": len(lhs), "brute": len(rhs), "equal": brute_ok}
    ledgers = [inducing.xi_partial_sums(spec, [couple.outer], t, p["depth"], budget, bad0=bad)[0]
               for t in p["t_grid"]]
    est = inducing.badness_exponent_estimate(ledgers)
    vals["estimate"] = est["estimate"]
    vals["status"] = est["status"]
    vals["label"] = est["label"]
    vals["table"] = est["table"]
    vals["bad_max"] = p["bad_max"]
    if tr.truncated:
        ok = None
    elif est["estimate"] is None:
        ok = None if brute_ok else False
    else:
        ok = brute_ok and est["estimate"] <= p["bad_max"]
    rows = [{"t": led.exponent, "m": m, "partial_sum": s}
            for led in ledgers for m, s in enumerate(led.partial_sums)]
    return Outcome(vals, _verdict(ok), _trunc(tr), {"xi": rows})


def _induced(spec, p, budget):
    couple = nice.construct_nice_couple(spec, p["delta"], p["r"])
    return couple, inducing.build_induced_map(spec, couple, p["max_time"], budget)


def run_induce(spec: MapSpec, p, seed, budget) -> Outcome:
    couple, ind = _induced(spec, p, budget)
    tol = 1e-10 * spec.scale
    worst_fwd = worst_end = 0.0
    bad_branches = 0
    for b in ind.branches:
        r = inducing.markov_check(spec, b, couple.inner, p["dps"])
        worst_fwd = max(worst_fwd, r["forward_error"])
        worst_end = max(worst_end, r["endpoint_error"])
        bad_branches += int(not r["monotone"] or r["endpoint_error"] > tol or r["forward_error"] > tol)
    vals = {"branches": len(ind.branches), "max_time": ind.max_time, "unresolved_mass": ind.unresolved_mass,
            "worst_forward_error": worst_fwd, "worst_endpoint_error": worst_end, "tolerance": tol,
            "failing_branches": bad_branches,
            "time_histogram": {str(m): sum(1 for b in ind.branches if b.inducing_time == m)
                               for m in range(1, ind.max_time + 1)}}
    ok = None if ind.truncation.truncated else bad_branches == 0
    rows = [{"left": b.component[0], "right": b.component[1], "time": b.inducing_time,
             "target": b.target_component} for b in ind.branches]
    return Outcome(vals, _verdict(ok), _trunc(ind.truncation), {"branches": rows})


def run_tail(spec: MapSpec, p, seed, budget) -> Outcome:
    _, ind = _induced(spec, p, budget)
    rep = inducing.tail_statistics(ind, p["alpha"], (p["fit_lo"], p["fit_hi"]))
    vals = {k: v for k, v in rep.items()}
    vals["exponent_min"] = p["exponent_min"]
    if rep["poly_exponent"] is None:
        ok = None
    else:
        ok = rep["nonincreasing"] and rep["poly_exponent"] >= p["exponent_min"]
    rows = [{"m": m, "T": t} for m, t in zip(rep["m"], rep["T"])]
    return Outcome(vals, _verdict(ok), _trunc(ind.truncation), {"tail": rows})


def run_conformal(spec: MapSpec, p, seed, budget) -> Outcome:
    mu = measures.conformal_measure(spec, p["s"], p["base"], p["depth"])
    conf = measures.conformality_check(spec, mu)
    lo, hi = p["delta_exponents"]
    grid = [2.0 ** -k for k in range(lo, hi + 1)]
    if spec.is_real:
        a, b = spec.domain
        centers = list(np.linspace(a, b, p["n_centers"] + 2)[1:-1])
    else:
        centers = list(mu.points[:: max(1, len(mu.points) // p["n_centers"])])
    reg = measures.measure_regularity(mu, p["hd"], p["eps"], grid, centers)
    vals = {"atoms": int(mu.points.size), "singular_branches": mu.singular_branches,
            "construction_residual": conf.construction_residual,
            "conformality_defect": conf.conformality_defect, "depth_stability": conf.depth_stability,
            "regularity_worst_exponent": reg.worst_exponent, "regularity_threshold": reg.threshold,
            "regularity_passed": reg.passed, "regularity_excluded": reg.excluded}
    ok = reg.passed
    if p["tv_max"] is not None:
        tv = measures.arc_tv_distance(mu, p["n_arcs"])
        vals["tv_distance"] = tv
        ok = ok and tv <= p["tv_max"]
    if p["interval"] is not None:
        m = mu.mass_interval(*p["interval"])
        vals["interval_mass"] = m
        if p["interval_mass"] is not None:
            vals["interval_mass_expected"] = p["interval_mass"]
            ok = ok and abs(m - p["interval_mass"]) <= p["mass_tol"]
    return Outcome(vals, _verdict(ok))


def _reference_measure(spec, n):
    if spec.is_real:
        return measures.lebesgue_grid(spec.domain[0], spec.domain[1], n)
    return measures.arc_length_grid(n | 1)


def run_density(spec: MapSpec, p, seed, budget) -> Outcome:
    mu = _reference_measure(spec, p["n_atoms"])
    bins = tuple(sorted(set(p["bins"]) | {32, p["oracle_bins"]}))
    est = measures.invariant_density(spec, mu, p["cesaro_depth"], bins=bins)
    samples = measures.orbit_samples(spec, p["cross_orbits"], p["cross_length"], seed)
    cross = measures.density_cross_check(est, samples, 32)
    vals = {"effective_samples": est.effective_samples, "total_mass": est.total_mass, "cross_check": cross,
            "coordinate": est.coordinate, "bins": list(bins)}
    ok = cross["passed"]
    if p["oracle"] == "chebyshev":
        err = measures.sup_relative_error(est, p["oracle_bins"], measures.chebyshev_mass, p["window"])
        vals["sup_relative_error"] = err
        vals["sup_max"] = p["sup_max"]
        ok = ok and err <= p["sup_max"]
    elif p["oracle"] == "uniform":
        _, d = est.density(p["oracle_bins"])
        err = float(np.nanmax(np.abs(d - 1.0)))
        vals["sup_relative_error"] = err
        ok = ok and err <= p["sup_max"]
    elif p["oracle"] != "none":
        return Outcome(vals, FAIL, notes=[f"unknown oracle {p['oracle']!r}"])
    edges, dens = est.density(32)
    rows = [{"left": a, "right": b, "density": d} for a, b, d in zip(edges[:-1], edges[1:], dens)]
    return Outcome(vals, _verdict(ok), tables={"density": rows})


def run_lp(spec: MapSpec, p, seed, budget) -> Outcome:
    mu = _reference_measure(spec, p["n_atoms"])
    est = measures.invariant_density(spec, mu, p["cesaro_depth"], bins=p["levels"])
    rep = measures.lp_regularity(est, p["p_grid"], p["levels"])
    vals = {"levels": list(rep.levels), "integrals": {str(k): v for k, v in rep.integrals.items()},
            "verdicts": {str(k): v for k, v in rep.verdicts.items()}}
    if p["expect"]:
        vals["expected"] = {str(k): v for k, v in p["expect"].items()}
        ok = all(rep.verdicts.get(k) == v for k, v in p["expect"].items())
    else:
        ok = None
    return Outcome(vals, _verdict(ok))


def run_mixing(spec: MapSpec, p, seed, budget) -> Outcome:
    obs = measures.OBSERVABLES
    for name in (p["phi"], p["psi"]):
        if name not in obs:
            return Outcome({"unknown_observable": name}, FAIL)
    sampler = lambda n, L, s: measures.orbit_samples(spec, n, L, s)
    rep = measures.correlation_decay(spec, sampler, obs[p["phi"]], obs[p["psi"]], p["n_max"], p["samples"],
                                     seed, p["batches"], observables=(p["phi"], p["psi"]))
    n = np.arange(1, 41, dtype=float)
    g = p["calibration_gamma"]
    cal = measures.fit_correlations(np.r_[1.0, n ** -g])
    cal_ok = cal.poly_exponent is not None and abs(cal.poly_exponent - g) <= p["calibration_tol"]
    vals = {"C": rep.C.tolist(), "sigma": rep.sigma.tolist(), "flagged": list(rep.flagged),
            "floor_n": rep.floor_n, "poly_exponent": rep.poly_exponent, "exp_rate": rep.exp_rate,
            "classification": rep.classification, "note": rep.note, "samples": rep.samples,
            "calibration": {"gamma": g, "fitted": cal.poly_exponent, "passed": cal_ok}}
    ok = cal_ok
    if p["expect"]:
        ok = ok and rep.classification == p["expect"]
        if p["expect"] != "polynomial":
            ok = ok and rep.floor_n is not None and rep.floor_n <= 10
    rows = [{"n": i, "C": c, "sigma": s} for i, (c, s) in enumerate(zip(rep.C, rep.sigma))]
    return Outcome(vals, _verdict(ok), tables={"correlations": rows})


def _default_x0(spec):
    if spec.is_real:
        lo, hi = spec.domain
        return lo + 0.3 * (hi - lo) + 0.0123
    p, _ = repelling_fixed_point(spec)
    return complex(p)


def run_dims(spec: MapSpec, p, seed, budget) -> Outcome:
    x0 = p["x0"] if p["x0"] is not None else _default_x0(spec)
    if not spec.is_real:
        x0 = complex(x0)
    s_grid = p["s_grid"] or tuple(np.round(np.arange(0.5, 2.0001, 0.05), 10))
    tab = measures.poincare_series(spec, x0, s_grid, p["poincare_depth"])
    pe = measures.poincare_exponent(tab)
    method = p["sample"]
    if method == "auto":
        method = "inverse" if spec.is_real else "scan"
    if method == "scan":
        sample = boundary_scan_sample(spec, p["resolution"], 300)
        h = spec.escape_radius / p["resolution"]
        default_scales = [8 * h * 2.0 ** k for k in range(6)]
    else:
        sample = julia_sample(spec, p["n_points"], 40, seed)
        default_scales = [2.0 ** -k for k in range(3, 9)]
    scales = p["scales"] or default_scales
    bd = box_dimension(sample, scales)
    vals = {"x0": x0, "poincare_exponent": pe.value, "poincare_bracket": pe.bracket,
            "poincare_verdict": pe.verdict, "singular_branches": tab.singular_branches,
            "box_dimension": bd.dimension, "box_bracket": bd.bracket, "box_counts": list(bd.counts),
            "box_scales": list(bd.scales), "sample_method": bd.method, "sample_size": int(len(sample.points)),
            "undersampled": bd.undersampled, "tol": p["tol"]}
    if pe.value is None:
        ok = None
    else:
        vals["difference"] = abs(pe.value - bd.dimension)
        ok = vals["difference"] <= p["tol"]
    if p["hyp_delta"] is not None:
        couple = nice.construct_nice_couple(spec, p["hyp_delta"], p["hyp_r"])
        ind = inducing.build_induced_map(spec, couple, p["hyp_max_time"], budget)
        chosen = sorted(ind.branches, key=lambda b: (-b.diameter, b.component))[: p["hyp_branches"]]
        br = hyperbolic_dimension_lb([inducing.derivative_bounds(spec, b) for b in chosen])
        vals["hyperbolic"] = {"delta": p["hyp_delta"], "branches": br.n_branches, "lower": br.lower,
                              "upper": br.upper, "defined": br.defined, "min": p["hyp_min"]}
        hyp_ok = br.defined and br.lower >= p["hyp_min"]
        ok = hyp_ok if ok is None else (ok and hyp_ok)
    rows = [{"scale": s, "count": c} for s, c in zip(bd.scales, bd.counts)]
    return Outcome(vals, _verdict(ok), tables={"box_counts": rows})


def run_bc_probe(spec: MapSpec, p, seed, budget) -> Outcome:
    rep = pullback.backward_contraction_probe(spec, p["r"], p["delta_grid"], p["depth"], budget)
    vals = {"r": rep.r, "worst_ratio": rep.worst_ratio, "vacuous": rep.vacuous, "rows": rep.rows}
    ok = None if rep.truncation.truncated else rep.passed
    return Outcome(vals, _verdict(ok), _trunc(rep.truncation))


def run_decomp_check(spec: MapSpec, p, seed, budget) -> Outcome:
    couple, ind = _induced(spec, p, budget)
    rep = inducing.verify_decomposition(spec, couple, p["samples"], seed, ind)
    vals = {"samples": rep["samples"], "checked": rep["checked"], "failures": rep["failures"][:20],
            "failure_count": len(rep["failures"])}
    rows = [{"x": x, "m": m, "m_tilde": mt, "l": l, "ok": ok} for x, m, mt, l, ok in rep["rows"]]
    return Outcome(vals, _verdict(rep["passed"]), _trunc(ind.truncation), {"decomposition": rows})


RUNNERS = {
    "geometry": run_geometry,
    "degree-law": run_degree_law,
    "shrinking": run_shrinking,
    "badness": run_badness,
    "induce": run_induce,
    "tail": run_tail,
    "conformal": run_conformal,
    "density": run_density,
    "lp": run_lp,
    "mixing": run_mixing,
    "dims": run_dims,
    "bc-probe": run_bc_probe,
    "decomp-check": run_decomp_check,
}


def run_experiment(name: str, spec, params: dict, seed, budget=None) -> Outcome:
    return RUNNERS[name](spec, params, seed, budget or DEFAULT_BUDGET)
