"""Poincaré series, conformal and invariant measures, mixing diagnostics.

Measures are finite atom clouds. Everything that depends on a random
stream takes an explicit seed; batches draw from child streams of one
``numpy.random.SeedSequence`` so results do not depend on worker count.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError
from .maps import MapSpec
from .pullback import preimages, pull_interval

# ---------------------------------------------------------------------------
# atom measures
# ---------------------------------------------------------------------------


@dataclass
class AtomMeasure:
    """Weighted point cloud.

    Parameters
    ----------
    points, weights : ndarray
        Atom locations and positive weights.
    exponent : float or None
        Conformal exponent used to build the weights, if any.
    generation_depth : int
        Preimage depth of the atoms (0 for directly supplied clouds).
    base_point : complex or float or None
    normalized : bool
    """

    points: np.ndarray
    weights: np.ndarray
    exponent: float | None = None
    generation_depth: int = 0
    base_point: complex | float | None = None
    normalized: bool = True
    singular_branches: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights differ in shape")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if self.normalized and abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("normalized measure must have unit mass")

    @property
    def atoms(self):
        return list(zip(self.points.tolist(), self.weights.tolist()))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mass_interval(self, a: float, b: float) -> float:
        """Mass of the half-open interval ``[a, b)``."""
        x = np.real(self.points)
        return float(self.weights[(x >= a) & (x < b)].sum())

    def mass_ball(self, center, radius: float) -> float:
        return float(self.weights[np.abs(self.points - center) < radius].sum())

    def mass_arc(self, t0: float, t1: float) -> float:
        """Mass of atoms with argument in ``[t0, t1)`` (radians in [0, 2pi))."""
        ang = np.mod(np.angle(self.points), 2 * np.pi)
        return float(self.weights[(ang >= t0) & (ang < t1)].sum())


def uniform_measure(points) -> AtomMeasure:
    pts = np.asarray(points)
    return AtomMeasure(pts, np.full(pts.shape, 1.0 / pts.size))


def lebesgue_grid(a: float, b: float, n: int) -> AtomMeasure:
    """Cell midpoints of an ``n``-cell grid on ``[a, b]``, equal weights."""
    pts = a + (np.arange(n) + 0.5) * (b - a) / n
    return uniform_measure(pts)


def arc_length_grid(n: int, phase: float = 0.0) -> AtomMeasure:
    """Equal atoms at angles ``2 pi (k + 1/2 + phase) / n``.

    Keep ``n`` odd when pushing forward by ``z**2``: angle doubling
    permutes an odd grid but collapses a dyadic one.
    """
    t = 2 * np.pi * (np.arange(n) + 0.5 + phase) / n
    return uniform_measure(np.exp(1j * t))


def point_mass(x) -> AtomMeasure:
    return AtomMeasure(np.array([x]), np.array([1.0]))


def write_atoms_csv(mu: AtomMeasure, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if np.iscomplexobj(mu.points):
            w.writerow(["re", "im", "weight"])
            for p, q in zip(mu.points, mu.weights):
                w.writerow([repr(float(p.real)), repr(float(p.imag)), repr(float(q))])
        else:
            w.writerow(["x", "weight"])
            for p, q in zip(mu.points, mu.weights):
                w.writerow([repr(float(p)), repr(float(q))])


# ---------------------------------------------------------------------------
# preimage trees with accumulated derivatives
# ---------------------------------------------------------------------------


def _preimage_level(spec: MapSpec, pts: np.ndarray):
    """All preimages of ``pts`` with the index of their parent."""
    if spec.degree == 2:
        a, b, c = spec.coefficients
        v = -b / (2 * a)
        fv = c - b * b / (4 * a)
        q = (pts - fv) / a
        if spec.is_real:
            lo, hi = spec.domain
            tol = 1e-12 * spec.scale
            q = np.where((q < 0) & (q > -1e-15 * max(1.0, abs(fv))), 0.0, q)
            ok = q >= 0
            r = np.sqrt(np.where(ok, q, 0.0))
            kids = np.concatenate([v - r, v + r])
            par = np.concatenate([np.arange(len(pts))] * 2)
            keep = np.concatenate([ok, ok]) & (kids >= lo - tol) & (kids <= hi + tol)
            return np.clip(kids[keep], lo, hi), par[keep]
        r = np.sqrt(q.astype(complex))
        kids = np.concatenate([v - r, v + r])
        return kids, np.concatenate([np.arange(len(pts))] * 2)
    kids, par = [], []
    for i, w in enumerate(pts):
        pre = preimages(spec, w)
        kids.extend(pre)
        par.extend([i] * len(pre))
    dtype = float if spec.is_real else complex
    return np.array(kids, dtype=dtype), np.array(par, dtype=int)


def _tree_levels(spec: MapSpec, x0, depth: int):
    """Yield ``(points, log|Df^n|, singular_count)`` for n = 1..depth."""
    dtype = float if spec.is_real else complex
    pts = np.array([x0], dtype=dtype)
    logd = np.zeros(1)
    for _ in range(depth):
        kids, par = _preimage_level(spec, pts)
        d = np.abs(spec.df(kids))
        sing = d == 0
        n_sing = int(sing.sum())
        kids, par, d = kids[~sing], par[~sing], d[~sing]
        logd = logd[par] + np.log(d)
        pts = kids
        yield pts, logd, n_sing


def is_exceptional(spec: MapSpec, x0, depth: int = 3) -> bool:
    """A point is exceptional when its backward orbit stays within two points."""
    seen = {complex(x0)}
    pts = [x0]
    for _ in range(depth):
        nxt = []
        for p in pts:
            nxt.extend(preimages(spec, p))
        pts = nxt
        seen.update(complex(round(complex(p).real, 10), round(complex(p).imag, 10)) for p in pts)
    return len(seen) <= 2


# ---------------------------------------------------------------------------
# Poincaré series
# ---------------------------------------------------------------------------


def _logsumexp(a: np.ndarray) -> float:
    if a.size == 0:
        return -math.inf
    m = float(a.max())
    return m + math.log(float(np.exp(a - m).sum()))


@dataclass
class PoincareTable:
    """Partial sums of the Poincaré series at a base point.

    ``increments[n-1][j]`` is the depth-``n`` term at ``s_grid[j]``;
    ``partial_sums`` accumulates them. ``rates[j]`` is the least-squares
    slope of ``log increment`` against ``n`` over the last five depths.
    """

    base_point: complex | float
    s_grid: tuple
    depths: tuple
    increments: np.ndarray
    partial_sums: np.ndarray
    counts: tuple
    singular_branches: int
    rates: tuple
    classification: tuple
    log_derivatives: list = field(default_factory=list, repr=False)

    def rate(self, s: float, window: int = 5) -> float:
        """Fitted geometric growth rate of the increments at exponent ``s``."""
        tail = self.log_derivatives[-window:]
        ns = np.array(self.depths[-window:], dtype=float)
        logs = np.array([_logsumexp(-s * ld) for ld in tail])
        return float(np.polyfit(ns, logs, 1)[0])


def poincare_series(spec: MapSpec, x0, s_grid: Sequence[float], max_depth: int,
                    rate_tol: float = 0.01) -> PoincareTable:
    """Enumerate ``f^{-n}(x0)`` for ``n <= max_depth`` and sum ``|Df^n|^{-s}``.

    Complex maps use all ``deg^n`` preimages with multiplicity. Real maps
    use the preimages inside the domain. Branches through a critical point
    are dropped and counted.
    """
    if max_depth < 5:
        raise PreconditionError("max_depth must be at least 5 to fit growth rates")
    if is_exceptional(spec, x0):
        raise PreconditionError(f"base point {x0!r} is exceptional")
    s_arr = np.asarray(s_grid, dtype=float)
    incs, counts, logds = [], [], []
    singular = 0
    for pts, logd, n_sing in _tree_levels(spec, x0, max_depth):
        singular += n_sing
        counts.append(len(pts))
        logds.append(logd)
        incs.append([math.exp(_logsumexp(-s * logd)) for s in s_arr])
    incs = np.array(incs)
    table = PoincareTable(
        base_point=x0, s_grid=tuple(float(s) for s in s_arr), depths=tuple(range(1, max_depth + 1)),
        increments=incs, partial_sums=np.cumsum(incs, axis=0), counts=tuple(counts),
        singular_branches=singular, rates=(), classification=(), log_derivatives=logds)
    rates = tuple(table.rate(s) for s in s_arr)
    cls = tuple("geometric-growth" if r > rate_tol else "convergent" if r < -rate_tol else "marginal"
                for r in rates)
    table.rates, table.classification = rates, cls
    return table


@dataclass
class ExponentEstimate:
    value: float | None
    bracket: tuple | None
    verdict: str
    label: str = "delta_Poin estimate"


def poincare_exponent(table: PoincareTable, tol: float = 1e-6) -> ExponentEstimate:
    """Zero of the fitted growth rate, bisected inside the grid cell where it changes sign."""
    rates = np.asarray(table.rates)
    s = np.asarray(table.s_grid)
    if np.all(rates < 0):
        return ExponentEstimate(None, None, "converged everywhere")
    if np.all(rates > 0):
        return ExponentEstimate(None, None, "undetermined")
    hit = np.nonzero(rates == 0)[0]
    if hit.size:
        j = int(hit[0])
        return ExponentEstimate(float(s[j]), (float(s[max(j - 1, 0)]), float(s[min(j + 1, len(s) - 1)])),
                                "estimate")
    j = int(np.nonzero((rates[:-1] > 0) & (rates[1:] < 0))[0][0])
    lo, hi = float(s[j]), float(s[j + 1])
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if table.rate(mid) > 0:
            a = mid
        else:
            b = mid
    return ExponentEstimate(0.5 * (a + b), (lo, hi), "estimate")


# ---------------------------------------------------------------------------
# conformal measures
# ---------------------------------------------------------------------------


@dataclass
class ConformalityReport:
    test_sets: list
    construction_residual: float
    conformality_defect: float
    depth_stability: float


def _normalized_weights(logd: np.ndarray, s: float) -> np.ndarray:
    a = -s * logd
    w = np.exp(a - a.max())
    return w / w.sum()


def conformal_measure(spec: MapSpec, s: float, base, depth: int) -> AtomMeasure:
    """Atoms on ``f^{-depth}(base)`` weighted by ``|Df^depth|^{-s}``."""
    if depth == 0:
        mu = AtomMeasure(np.array([base]), np.array([1.0]), exponent=s, base_point=base)
        mu.previous = None
        return mu
    if is_exceptional(spec, base):
        raise PreconditionError(f"base point {base!r} is exceptional")
    last = cur = None
    singular = 0
    for pts, logd, n_sing in _tree_levels(spec, base, depth):
        singular += n_sing
        last, cur = cur, (pts, logd)
    pts, logd = cur
    mu = AtomMeasure(pts, _normalized_weights(logd, s), exponent=s, generation_depth=depth,
                     base_point=base, singular_branches=singular)
    # the previous level backs the conformality and depth-stability checks
    if last is None:
        mu.previous = point_mass(base)
    else:
        mu.previous = AtomMeasure(last[0], _normalized_weights(last[1], s), exponent=s,
                                  generation_depth=depth - 1, base_point=base)
    return mu


def _injective_panel(spec: MapSpec, n_sets: int):
    """Intervals (real) or angular sectors of an annulus (complex) avoiding Crit."""
    if spec.is_real:
        lo, hi = spec.domain
        edges = np.linspace(lo, hi, n_sets + 1)
        crit = [float(c.location) for c in spec.critical_points]
        return [("interval", float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])
                if not any(a <= c <= b for c in crit)]
    t = np.linspace(0, 2 * np.pi, n_sets + 1)
    return [("arc", float(a), float(b)) for a, b in zip(t[:-1], t[1:])]


def _mass_in(mu: AtomMeasure, A) -> float:
    if A[0] == "interval":
        return mu.mass_interval(A[1], A[2])
    return mu.mass_arc(A[1], A[2])


def conformality_check(spec: MapSpec, mu: AtomMeasure, n_sets: int = 16) -> ConformalityReport:
    """Residuals of ``mu(f(A)) = int_A |Df|^s dmu`` over a panel of test sets.

    ``construction_residual`` compares against the previous-depth measure
    rescaled by the normalizing constants, which holds exactly by
    construction. ``conformality_defect`` uses ``mu`` itself on both sides.
    ``depth_stability`` is ``max |mu_n(A) - mu_{n-1}(A)|``.
    """
    prev = getattr(mu, "previous", None)
    s = mu.exponent
    panel = _injective_panel(spec, n_sets)
    dfs = np.abs(spec.df(mu.points)) ** s
    cons, defect, stab = 0.0, 0.0, 0.0
    # ratio Z_{n-1}/Z_n recovered from any atom: w_n |Df|^s = (Z_{n-1}/Z_n) w_{n-1}(f y)
    if prev is not None:
        fy = spec.f(mu.points)
        j = int(np.argmax(mu.weights))
        k = int(np.argmin(np.abs(prev.points - fy[j])))
        ratio = mu.weights[j] * dfs[j] / prev.weights[k]
    for A in panel:
        if A[0] == "interval":
            inside = (np.real(mu.points) >= A[1]) & (np.real(mu.points) < A[2])
            img = np.real(spec.f(np.array([A[1], A[2]])))
            fA = ("interval", float(img.min()), float(img.max()))
        else:
            ang = np.mod(np.angle(mu.points), 2 * np.pi)
            inside = (ang >= A[1]) & (ang < A[2])
            fA = None
        rhs = float(np.sum(mu.weights[inside] * dfs[inside]))
        if fA is not None:
            defect = max(defect, abs(_mass_in(mu, fA) - rhs))
            if prev is not None:
                cons = max(cons, abs(ratio * _mass_in(prev, fA) - rhs))
        if prev is not None:
            stab = max(stab, abs(_mass_in(mu, A) - _mass_in(prev, A)))
    return ConformalityReport(panel, cons, defect, stab)


def arc_tv_distance(mu: AtomMeasure, n_arcs: int = 32) -> float:
    """Total-variation distance to normalized arc length over ``n_arcs`` equal arcs."""
    edges = np.linspace(0, 2 * np.pi, n_arcs + 1)
    masses = [mu.mass_arc(a, b) for a, b in zip(edges[:-1], edges[1:])]
    return 0.5 * float(np.sum(np.abs(np.array(masses) - 1.0 / n_arcs)))


@dataclass
class RegularityReport:
    rows: list
    worst_exponent: float
    threshold: float
    passed: bool
    excluded: int


def measure_regularity(mu: AtomMeasure, hd_estimate: float, eps: float, delta_grid: Sequence[float],
                       centers: Sequence) -> RegularityReport:
    """Worst ``log mu(B(x, d)) / log d`` over centers and radii.

    The bound ``mu(B) <= d^(hd - eps)`` holds for a ball exactly when this
    ratio is at least ``hd - eps``. Empty balls are excluded and counted.
    """
    if not mu.normalized:
        raise PreconditionError("measure must be normalized")
    rows, excluded = [], 0
    worst = math.inf
    for d in delta_grid:
        for x in centers:
            m = mu.mass_ball(x, d)
            if m <= 0:
                excluded += 1
                continue
            e = math.log(m) / math.log(d) if m < 1 else 0.0
            rows.append((d, x, m, e))
            worst = min(worst, e)
    thr = hd_estimate - eps
    return RegularityReport(rows, worst, thr, bool(worst >= thr), excluded)


# ---------------------------------------------------------------------------
# invariant densities
# ---------------------------------------------------------------------------


@dataclass
class DensityEstimate:
    """Cesàro average of push-forwards, binned.

    ``levels`` maps a bin count to ``(edges, nu_mass, mu_mass)``; the
    density on a bin is ``nu_mass / mu_mass``.
    """

    levels: dict
    coordinate: str
    cesaro_depth: int
    effective_samples: int
    total_mass: float
    measure: AtomMeasure | None = None

    def density(self, bins: int | None = None):
        bins = bins or min(self.levels)
        edges, nu, mu = self.levels[bins]
        with np.errstate(divide="ignore", invalid="ignore"):
            return edges, np.where(mu > 0, nu / mu, np.nan)


def _coord(points, coordinate: str):
    if coordinate == "arg":
        return np.mod(np.angle(points), 2 * np.pi)
    return np.real(points)


def invariant_density(spec: MapSpec, mu: AtomMeasure, cesaro_depth: int, bins: Sequence[int] = (32,),
                      coordinate: str | None = None, range_=None, keep_atoms: bool = False) -> DensityEstimate:
    """Average ``f^i_* mu`` for ``i < cesaro_depth`` and histogram it against ``mu``.

    Parameters
    ----------
    coordinate : {"x", "arg"}
        Binning coordinate; the default is ``x`` for real maps and the
        argument for complex maps.
    range_ : tuple, optional
        Binning range; defaults to the domain or ``[0, 2pi)``.
    """
    if cesaro_depth < 1:
        raise PreconditionError("cesaro_depth must be at least 1")
    coordinate = coordinate or ("x" if spec.is_real else "arg")
    if range_ is None:
        range_ = tuple(spec.domain) if coordinate == "x" else (0.0, 2 * np.pi)
    bins = sorted(set(int(b) for b in bins))
    fine = bins[-1]
    for b in bins:
        if fine % b:
            raise ValueError("bin counts must divide the finest bin count")
    nu_fine = np.zeros(fine)
    mu_fine, edges = np.histogram(_coord(mu.points, coordinate), bins=fine, range=range_, weights=mu.weights)
    x = mu.points.copy()
    kept = []
    for i in range(cesaro_depth):
        h, _ = np.histogram(_coord(x, coordinate), bins=fine, range=range_, weights=mu.weights)
        nu_fine += h
        if keep_atoms:
            kept.append(x.copy())
        if i + 1 < cesaro_depth:
            x = spec.f(x)
    nu_fine /= cesaro_depth
    levels = {}
    for b in bins:
        k = fine // b
        levels[b] = (edges[::k], nu_fine.reshape(b, k).sum(axis=1), mu_fine.reshape(b, k).sum(axis=1))
    measure = None
    if keep_atoms:
        measure = AtomMeasure(np.concatenate(kept), np.tile(mu.weights, cesaro_depth) / cesaro_depth,
                              normalized=mu.normalized)
    return DensityEstimate(levels, coordinate, cesaro_depth, cesaro_depth * mu.points.size,
                           float(nu_fine.sum()), measure)


def orbit_samples(spec: MapSpec, n_orbits: int, length: int, seed: int, burn_in: int = 200,
                  start: tuple | None = None) -> np.ndarray:
    """Independent forward orbits, shape ``(n_orbits, length)``.

    Starts are uniform on ``start`` (default: the middle half of the real
    domain, or the unit circle for complex maps).
    """
    ss = np.random.SeedSequence(seed)
    rows = []
    for child in ss.spawn(n_orbits):
        rng = np.random.default_rng(child)
        if spec.is_real:
            lo, hi = start or (spec.domain[0] + 0.25 * (spec.domain[1] - spec.domain[0]),
                               spec.domain[1] - 0.25 * (spec.domain[1] - spec.domain[0]))
            rows.append(lo + (hi - lo) * rng.random())
        else:
            rows.append(np.exp(2j * np.pi * rng.random()))
    x = np.array(rows)
    for _ in range(burn_in):
        x = spec.f(x)
    out = np.empty((n_orbits, length), dtype=x.dtype)
    for t in range(length):
        out[:, t] = x
        x = spec.f(x)
    return out


def density_cross_check(est: DensityEstimate, samples: np.ndarray, bins: int = 32,
                        range_=None) -> dict:
    """Compare Cesàro masses with a long-orbit empirical measure on ``bins`` bins."""
    edges, nu, _ = est.levels[bins]
    h, _ = np.histogram(_coord(np.ravel(samples), est.coordinate), bins=edges)
    emp = h / h.sum()
    nu = nu / nu.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(emp - nu) / nu
    worst = float(np.nanmax(rel))
    return {"bins": bins, "max_relative_discrepancy": worst, "passed": bool(worst <= 0.05)}


def sup_relative_error(est: DensityEstimate, bins: int, exact_mass: Callable, window) -> float:
    """Sup over bins inside ``window`` of ``|nu(bin)/exact(bin) - 1|``."""
    edges, nu, _ = est.levels[bins]
    a, b = edges[:-1], edges[1:]
    inside = (a >= window[0] - 1e-12) & (b <= window[1] + 1e-12)
    ex = exact_mass(a[inside], b[inside])
    return float(np.max(np.abs(nu[inside] / ex - 1.0)))


def chebyshev_mass(a, b):
    """Mass of ``[a, b]`` under the density ``1/(pi sqrt(x(1-x)))``."""
    return (2 / np.pi) * (np.arcsin(np.sqrt(b)) - np.arcsin(np.sqrt(a)))


@dataclass
class LpReport:
    p_grid: tuple
    levels: tuple
    integrals: dict
    verdicts: dict


def lp_regularity(est: DensityEstimate, p_grid: Sequence[float], levels: Sequence[int] | None = None,
                  stable_tol: float = 0.05, diverge_factor: float = 1.5) -> LpReport:
    """``int rho^p dmu`` at each refinement level.

    A ``p`` is "stable" when the last two levels differ by less than
    ``stable_tol`` (relative), "diverging" when every level exceeds the
    previous one by more than ``diverge_factor``, and "undetermined"
    otherwise.
    """
    levels = tuple(sorted(levels or est.levels))
    if len(levels) < 3:
        raise PreconditionError("need at least 3 refinement levels")
    integrals, verdicts = {}, {}
    for p in p_grid:
        vals = []
        for b in levels:
            _, nu, mu = est.levels[b]
            m = mu > 0
            rho = nu[m] / mu[m]
            vals.append(float(np.sum(mu[m] * rho ** p)))
        integrals[float(p)] = vals
        growth = [vals[i + 1] / vals[i] for i in range(len(vals) - 1)]
        if abs(vals[-1] - vals[-2]) < stable_tol * abs(vals[-2]):
            verdicts[float(p)] = "stable"
        elif all(g > diverge_factor for g in growth):
            verdicts[float(p)] = "diverging"
        else:
            verdicts[float(p)] = "undetermined"
    return LpReport(tuple(float(p) for p in p_grid), levels, integrals, verdicts)


# ---------------------------------------------------------------------------
# push-forward bound probe
# ---------------------------------------------------------------------------


@dataclass
class PushforwardReport:
    q: float
    rows: list
    max_ratio: float
    slope: float | None
    bounded: bool
    excluded: int


def pushforward_bound_probe(spec: MapSpec, mu: AtomMeasure, q: float, test_sets: Sequence[tuple],
                            n_grid: Sequence[int], slope_tol: float = -0.05) -> PushforwardReport:
    """Ratios ``mu(f^{-n}(A)) / mu(f(A))^(1/q)`` on real intervals ``A``.

    Boundedness is judged by the slope of ``log max_n ratio`` against
    ``log mu(f(A))`` across the family: a slope below ``slope_tol`` means
    the ratio grows as the sets shrink.
    """
    if not spec.is_real:
        raise PreconditionError("pushforward probe is implemented for real maps")
    crit = [float(c.location) for c in spec.critical_points]
    for a, b in test_sets:
        if any(a < c < b for c in crit):
            raise PreconditionError(f"f is not injective on ({a}, {b})")
    n_grid = sorted(int(n) for n in n_grid)
    x = mu.points.astype(float).copy()
    images = {}
    step = 0
    for n in n_grid:
        while step < n:
            x = spec.f(x)
            step += 1
        images[n] = x.copy()
    rows, excluded = [], 0
    per_set = []
    for a, b in test_sets:
        fa, fb = float(spec.f(a)), float(spec.f(b))
        den = mu.mass_interval(min(fa, fb), max(fa, fb))
        if den <= 0:
            excluded += 1
            continue
        best = 0.0
        for n in n_grid:
            y = images[n]
            num = float(mu.weights[(y >= a) & (y < b)].sum())
            r = num / den ** (1.0 / q)
            rows.append({"set": (a, b), "n": n, "numerator": num, "denominator": den, "ratio": r})
            best = max(best, r)
        per_set.append((den, best))
    slope = None
    usable = [(d, r) for d, r in per_set if r > 0]
    if len(usable) >= 3:
        slope = float(np.polyfit(np.log([d for d, _ in usable]), np.log([r for _, r in usable]), 1)[0])
    max_ratio = max((r["ratio"] for r in rows), default=0.0)
    bounded = slope is not None and slope >= slope_tol
    return PushforwardReport(q, rows, max_ratio, slope, bounded, excluded)


def critical_value_family(spec: MapSpec, sizes: Sequence[float], side: int | None = None) -> list:
    """Intervals ``A`` of length ``eps/2`` at distance ``eps/2`` from a critical value.

    Each is placed on the side of the critical value that lies inside the
    domain, so ``f`` is injective on it.
    """
    v = float(spec.f(float(spec.crit_prime[0].location)))
    lo, hi = spec.domain
    if side is None:
        side = -1 if hi - v < v - lo else 1
    out = []
    for e in sizes:
        a, b = sorted((v + side * e, v + side * e / 2))
        out.append((a, b))
    return out


# ---------------------------------------------------------------------------
# correlations
# ---------------------------------------------------------------------------

OBSERVABLES = {
    "x": lambda x: np.real(x),
    "cos_pi_x": lambda x: np.cos(np.pi * np.real(x)),
    "constant": lambda x: np.ones_like(np.real(x)),
}


def smooth_indicator(a: float, b: float, width: float) -> Callable:
    """Lipschitz bump: 1 on ``[a, b]`` with linear ramps of ``width``."""
    def g(x):
        x = np.real(x)
        return np.clip(np.minimum(x - a + width, b + width - x) / width, 0.0, 1.0)
    return g


def trig(freq: float) -> Callable:
    return lambda x: np.cos(freq * np.real(x))


@dataclass
class MixingReport:
    """Correlation sequence with noise floor and model fits.

    ``C[n]`` for ``n = 0..n_max``; ``sigma`` are batch-means standard
    errors. ``classification`` is ``"polynomial"``,
    ``"super-polynomial / exponential"`` or ``"undetermined"``.
    """

    observables: tuple
    C: np.ndarray
    sigma: np.ndarray
    flagged: tuple
    poly_exponent: float | None
    exp_rate: float | None
    classification: str
    note: str
    samples: int
    seed: int | None
    floor_n: int | None = None


def fit_correlations(C: Sequence[float], sigma: Sequence[float] | None = None, n_min: int = 1,
                     observables=("synthetic", "synthetic"), samples: int = 0,
                     seed: int | None = None) -> MixingReport:
    """Fit ``|C_n|`` by ``n^-gamma`` and by ``exp(-a n)`` on values above ``3 sigma``.

    The model with the smaller residual wins; a sequence that sinks into
    the noise floor before any polynomial can be fitted counts as
    faster than polynomial.
    """
    C = np.asarray(C, dtype=float)
    sig = np.zeros_like(C) if sigma is None else np.asarray(sigma, dtype=float)
    ns = np.arange(len(C))
    above = np.abs(C) > 3 * sig
    flagged = tuple(int(n) for n in ns[~above])
    use = above & (ns >= n_min) & (C != 0)
    floor = [int(n) for n in ns[n_min:] if not above[n]]
    floor_n = floor[0] if floor else None
    gamma = rate = None
    if use.sum() >= 3:
        lx, ly = np.log(ns[use]), np.log(np.abs(C[use]))
        pp, rp = np.polyfit(lx, ly, 1, full=True)[:2]
        pe, re = np.polyfit(ns[use].astype(float), ly, 1, full=True)[:2]
        gamma, rate = float(-pp[0]), float(-pe[0])
        rp = float(rp[0]) if len(rp) else 0.0
        re = float(re[0]) if len(re) else 0.0
        if rp <= re:
            cls = "polynomial"
            note = f"power law fits better (rss {rp:.3g} vs {re:.3g})"
        else:
            cls = "super-polynomial / exponential"
            note = f"exponential fits better (rss {re:.3g} vs {rp:.3g})"
        if floor_n is not None and floor_n <= 10 and use.sum() < 5:
            cls = "super-polynomial / exponential"
            note += f"; noise floor reached at n={floor_n}"
    elif floor_n is not None and floor_n <= 10:
        cls = "super-polynomial / exponential"
        note = f"fewer than 3 values above noise; floor reached at n={floor_n}"
    else:
        cls = "undetermined"
        note = "fewer than 3 values above noise"
    return MixingReport(tuple(observables), C, sig, flagged, gamma, rate, cls, note, samples, seed, floor_n)


def correlation_decay(spec: MapSpec, sampler: Callable, phi: Callable, psi: Callable, n_max: int,
                      samples: int, seed: int, batches: int = 64,
                      observables=("phi", "psi")) -> MixingReport:
    """Birkhoff estimates of ``C_n = E[phi(x_n) psi(x_0)] - E[phi] E[psi]``.

    ``sampler(n_orbits, length, seed)`` returns orbits of shape
    ``(n_orbits, length)``. Each orbit is one batch; ``sigma`` is the
    standard error of the batch means.
    """
    length = max(samples // batches, 4 * n_max) + n_max
    orbits = sampler(batches, length, seed)
    P, Q = phi(orbits), psi(orbits)
    L = length - n_max
    C = np.empty((batches, n_max + 1))
    for n in range(n_max + 1):
        a = P[:, n:n + L]
        b = Q[:, :L]
        C[:, n] = (a * b).mean(axis=1) - a.mean(axis=1) * b.mean(axis=1)
    mean = C.mean(axis=0)
    sig = C.std(axis=0, ddof=1) / math.sqrt(batches)
    return fit_correlations(mean, sig, observables=observables, samples=batches * L, seed=seed)


# ---------------------------------------------------------------------------
# Delta / xi diagnostics
# ---------------------------------------------------------------------------


@dataclass
class DeltaXiDiagnostic:
    z: float
    m: int
    Delta: float
    xi: float
    eps: float


def _crit_orbit_points(spec: MapSpec, m: int) -> list:
    out = []
    for c in spec.crit_prime:
        x = c.location
        for _ in range(m + 1):
            out.append(x)
            x = spec.f(x)
    return out


def _theta_interval(spec: MapSpec, a: float, b: float, m: int) -> float:
    level = [(a, b)]
    for _ in range(m):
        nxt = []
        for u0, u1 in level:
            nxt.extend((a, b) for a, b, _ in pull_interval(spec, u0, u1))
        level = nxt
    return max((u1 - u0 for u0, u1 in level), default=0.0)


def delta_xi_diagnostics(spec: MapSpec, z: float, m_grid: Sequence[int], eps: float = 0.1) -> list:
    """``Delta_m(z)`` and ``xi_m(z)`` for ``m`` in ``m_grid`` (real maps).

    Returns an empty list when ``z`` lies on the critical orbit.
    """
    if not spec.is_real:
        raise PreconditionError("delta/xi diagnostics are implemented for real maps")
    out = []
    for m in m_grid:
        pts = _crit_orbit_points(spec, m)
        D = min(abs(z - p) for p in pts) if pts else math.inf
        if D == 0:
            return []
        r = eps * D
        lo, hi = spec.domain
        xi = _theta_interval(spec, max(lo, z - r), min(hi, z + r), m)
        out.append(DeltaXiDiagnostic(z, int(m), float(D), float(xi), eps))
    return out


@dataclass
class BoundTrend:
    depths: tuple
    lhs: tuple
    rhs: tuple
    ratios: tuple
    slope: float
    bounded: bool


def rhs_bound(diag: Sequence[DeltaXiDiagnostic], bad_sums: dict, s: float, t: float) -> list:
    """Running sums of ``L_m^bad(t) xi_m^(s-t) Delta_m^(-s)``.

    ``bad_sums[m]`` is ``sum d(Y) diam(Y)^t`` over bad pull-backs of depth ``m``.
    """
    out, acc = [], 0.0
    for d in diag:
        acc += bad_sums.get(d.m, 0.0) * d.xi ** (s - t) * d.Delta ** (-s)
        out.append(acc)
    return out


def bad_weight_sums(bad, t: float) -> dict:
    """``L_m^bad(t)`` per depth from a list of bad pull-backs."""
    out: dict = {}
    for b in bad:
        a, c = b.component
        out[b.depth] = out.get(b.depth, 0.0) + b.degree * (c - a) ** t
    return out


def bound_trend(lhs: Sequence[float], rhs: Sequence[float], depths: Sequence[int],
                slope_tol: float = 0.2) -> BoundTrend:
    """Slope of ``log(lhs/rhs)`` against ``log n`` over the second half of the depths."""
    ratios = np.asarray(lhs, dtype=float) / np.asarray(rhs, dtype=float)
    d = np.asarray(depths, dtype=float)
    half = d >= d[len(d) // 2]
    slope = float(np.polyfit(np.log(d[half]), np.log(ratios[half]), 1)[0])
    return BoundTrend(tuple(int(x) for x in depths), tuple(lhs), tuple(rhs), tuple(ratios.tolist()),
                      slope, bool(slope < slope_tol))
