"""Nice sets, nice couples, first landing structure and return domains.

Real nice sets are unions of open intervals, one per critical point in
the Julia set. The outer set of a couple has boundary points on the
backward tree of an interior repelling fixed point (or, failing that, of a
short repelling cycle), so every boundary orbit is eventually periodic and
niceness holds for all iterates. The inner
set is ``tB(c, delta)`` enlarged by the return domains of the outer set
that meet it. Complex nice sets are round disks with sampled,
horizon-limited certificates.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import textformat
from .errors import ConstructionError, NicenessViolation, PreconditionError
from .geometry import disk_modulus, mmod
from .maps import MapSpec, find_periodic_point
from .pullback import (Ball, DEFAULT_BUDGET, RNode, Truncation, all_components, component_containing,
                       preimages, pull_interval, tB, winding_number)

EVENTUALLY_FIXED = "eventually-fixed"
EVENTUALLY_PERIODIC = "eventually-periodic"
EXACT_TAGS = (EVENTUALLY_FIXED, EVENTUALLY_PERIODIC)
HORIZON = "horizon"


@dataclass
class NiceSet:
    """Components keyed by critical-point index.

    A real component is ``(a, b)``; a complex one is ``("disk", center, radius)``.
    ``certificates`` maps each boundary point (real case) or a component
    label (complex case) to a dict with a ``tag`` and either the exact
    eventually-fixed ``orbit`` or the checked ``horizon``.
    """

    components: dict
    certificates: dict = field(default_factory=dict)
    kind: str = "real"
    symmetric: bool = True

    def is_empty(self) -> bool:
        return not self.components

    def intervals(self) -> list:
        return sorted(self.components.values())

    def label_of(self, x):
        """Key of the component containing ``x``, or None."""
        for k, comp in self.components.items():
            if self.kind == "real":
                a, b = comp
                if a < x < b:
                    return k
            else:
                _, c, r = comp
                if abs(complex(x) - c) < r:
                    return k
        return None

    def contains(self, x) -> bool:
        return self.label_of(x) is not None

    def contains_interval(self, a, b, tol=0.0) -> bool:
        return any(lo - tol <= a and b <= hi + tol for lo, hi in self.components.values())

    def meets_interval(self, a, b) -> bool:
        return any(a < hi and lo < b for lo, hi in self.components.values())

    def boundary_points(self) -> list:
        if self.kind != "real":
            return []
        return sorted(p for comp in self.components.values() for p in comp)


@dataclass
class NiceCouple:
    outer: NiceSet
    inner: NiceSet
    couple_certificate: dict = field(default_factory=dict)
    lam: dict | None = None
    vacuous: bool = False
    delta: float = 0.0
    r: float = 0.0
    sandwich_ok: bool = True


@dataclass
class LandingComponent:
    region: tuple
    landing_time: int
    extension_diffeomorphic: bool
    target: object = None
    chain: tuple = ()


@dataclass
class LandingTable:
    components: list
    alphas: tuple
    tails: dict
    unresolved_mass: float
    truncation: Truncation

    def lookup(self, x):
        """The landing component containing ``x`` (None if not found)."""
        if not hasattr(self, "_lefts"):
            order = sorted(self.components, key=lambda u: u.region[0])
            self._sorted = order
            self._lefts = [u.region[0] for u in order]
        i = bisect.bisect_right(self._lefts, x) - 1
        if i >= 0 and x < self._sorted[i].region[1]:
            return self._sorted[i]
        return None


@dataclass
class ReturnDomain:
    region: tuple
    return_time: int
    target: object
    chain: tuple
    critical: bool = False


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def interior_repelling_fixed_points(spec: MapSpec) -> list:
    """Repelling fixed points off the domain boundary, largest |Df| first."""
    roots = np.roots(np.polysub(spec._c, [1.0, 0.0]))
    out = []
    for z in roots:
        if spec.is_real:
            if abs(z.imag) > 1e-9:
                continue
            x = float(z.real)
            lo, hi = spec.domain
            if not lo + 1e-9 * spec.scale < x < hi - 1e-9 * spec.scale:
                continue
            p, mult = find_periodic_point(spec, 1, x)
        else:
            p, mult = find_periodic_point(spec, 1, complex(z))
        if abs(mult) > 1:
            out.append((p, mult))
    out.sort(key=lambda t: -abs(t[1]))
    return out


def repelling_cycles(spec: MapSpec, max_period: int = 4) -> list:
    """Interior repelling cycles of exact period <= max_period (real maps).

    Fixed points come first, then longer cycles; each cycle is a list
    ``[q, f(q), ...]``.
    """
    out = [[p] for p, _ in interior_repelling_fixed_points(spec)]
    lo, hi = spec.domain
    seen = [q for cyc in out for q in cyc]
    g = np.array(spec._c, dtype=float)
    for k in range(2, max_period + 1):
        g = np.polyval(spec._c, np.poly1d(g)).coeffs if k > 2 else np.polyval(spec._c, np.poly1d(spec._c)).coeffs
        for z in np.roots(np.polysub(g, [1.0, 0.0])):
            if abs(z.imag) > 1e-7 or not lo < z.real < hi:
                continue
            try:
                q, mult = find_periodic_point(spec, k, float(z.real))
            except Exception:
                continue
            if abs(mult) <= 1 or any(abs(q - t) < 1e-9 * spec.scale for t in seen):
                continue
            cyc = [q]
            for _ in range(k - 1):
                cyc.append(float(spec.f(cyc[-1])))
            if any(abs(cyc[j] - q) < 1e-9 * spec.scale for j in range(1, k)):
                continue
            seen.extend(cyc)
            out.append(cyc)
    return out


def _backward_tree(spec: MapSpec, cycle, forbid=(), max_points: int = 4096, max_depth: int = 40):
    """Levels of (point, parent index) pairs of the backward orbit of a cycle.

    Level 0 holds the cycle itself. Preimages inside any interval of
    ``forbid`` are dropped together with their descendants, so every kept
    point has a forward orbit avoiding ``forbid``.
    """
    cycle = [float(q) for q in cycle]
    levels = [[(q, -1) for q in cycle]]
    while len(levels) <= max_depth:
        nxt = []
        for i, (y, _) in enumerate(levels[-1]):
            for x in preimages(spec, y):
                if len(levels) == 1 and any(abs(x - q) < 1e-12 * spec.scale for q in cycle):
                    continue
                if any(a <= x <= b for a, b in forbid):
                    continue
                if nxt and abs(x - nxt[-1][0]) == 0 and nxt[-1][1] == i:
                    continue
                nxt.append((float(x), i))
        if not nxt:
            break
        if len(nxt) > max_points:
            # keep an evenly spread subset; parents stay valid
            idx = np.linspace(0, len(nxt) - 1, max_points).round().astype(int)
            nxt = [nxt[j] for j in np.unique(idx)]
        levels.append(nxt)
    return levels


def _tree_orbit(spec: MapSpec, levels, k: int, i: int) -> list:
    """Forward orbit of tree point (k, i) through its ancestors, closed up
    by one turn around the root cycle."""
    out = []
    while k >= 0:
        y, par = levels[k][i]
        out.append(y)
        k, i = k - 1, par
    cycle = [q for q, _ in levels[0]]
    j = cycle.index(out[-1])
    out.extend(cycle[j + 1:] + cycle[:j + 1])
    return out


def _fold_side(spec: MapSpec, c: float) -> float:
    h = 1e-6 * spec.scale
    fc = spec.f(c)
    s = np.sign(spec.f(c + h) - fc)
    if s != np.sign(spec.f(c - h) - fc):
        raise PreconditionError("real nice sets need folding (even order) critical points")
    return float(s)


def _dist_to_intervals(x: float, comps) -> float:
    best = math.inf
    for a, b in comps:
        if a < x < b:
            return -min(x - a, b - x)
        best = min(best, a - x if x <= a else x - b)
    return best


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _outer_candidates(spec, levels, c, lo_rad, hi_rad):
    fc = float(spec.f(c))
    side = _fold_side(spec, c)
    out = []
    for k, lev in enumerate(levels):
        for i, (y, _) in enumerate(lev):
            d = side * (y - fc)
            if lo_rad < d < hi_rad:
                out.append((k, i, y, d))
    return out


def _orbit_margin(orbit, comps) -> float:
    return min(_dist_to_intervals(x, comps) for x in orbit) if orbit else math.inf


def _mp_orbit_return(spec: MapSpec, x: float, nice: NiceSet, max_time: int):
    """First k >= 1 with f^k(x) in ``nice`` using extended precision, plus orbit."""
    dps = 30 + int(0.7 * max_time * max(1.0, math.log10(max(2.0, spec.degree * 2.0))))
    with mpmath.workdps(dps):
        coeffs = [mpmath.mpf(c) for c in spec.coefficients]
        z = mpmath.mpf(x)
        orbit = [x]
        for k in range(1, max_time + 1):
            z = mpmath.polyval(coeffs, z)
            fz = float(z)
            orbit.append(fz)
            if nice.contains(fz):
                return k, orbit
    return None, orbit


def _pull_along(spec: MapSpec, target, orbit):
    """Chain of intervals obtained by pulling ``target`` back along ``orbit``.

    ``orbit[k]`` lies in ``target``; returns ``[I_0, ..., I_k]`` with
    ``I_j`` the component of f^{-(k-j)}(target) containing ``orbit[j]``.
    """
    k = len(orbit) - 1
    chain = [tuple(target)]
    for j in range(k - 1, -1, -1):
        comp = component_containing(spec, chain[-1], orbit[j])
        if comp is None:
            return None
        chain.append((comp[0], comp[1]))
    return chain[::-1]


def return_domain_containing(spec: MapSpec, nice: NiceSet, x: float, max_time: int = 200):
    """The return domain of ``nice`` containing ``x`` as ``(chain, time)`` or None."""
    k, orbit = _mp_orbit_return(spec, x, nice, max_time)
    if k is None:
        return None
    lab = nice.label_of(orbit[k])
    chain = _pull_along(spec, nice.components[lab], orbit)
    if chain is None or not chain[0][0] < x < chain[0][1]:
        return None
    return chain, k, lab


def _endpoint_orbit(spec: MapSpec, chain) -> list:
    """Exact orbits of both endpoints of ``chain[0]`` through chain endpoints."""
    out = []
    for e in chain[0]:
        orb = [e]
        for nxt in chain[1:]:
            y = float(spec.f(orb[-1]))
            orb.append(min(nxt, key=lambda t: abs(t - y)))
        out.append(orb)
    return out


def _real_couple(spec, delta, r, horizon, strict, return_time_cap):
    crit = spec.crit_prime
    idx = {c.location: i for i, c in enumerate(spec.critical_points)}
    # pairwise disjointness of the big critical balls
    balls = {idx[c.location]: tB(spec, c.location, r * delta) for c in crit}
    keys = sorted(balls)
    for i, j in zip(keys, keys[1:]):
        if balls[i][1] >= balls[j][0]:
            raise ConstructionError("tB(c, r*delta) are not pairwise disjoint", {"balls": balls})
    cycles = repelling_cycles(spec)
    if not cycles:
        raise ConstructionError("no interior repelling cycle")
    diag = {"tried_cycles": cycles}
    outer = None
    tol = 1e-12 * spec.scale
    for cyc in cycles:
        forbid = [tB(spec, c.location, r * delta / 2) for c in crit]
        if any(a <= q <= b for q in cyc for a, b in forbid):
            continue
        levels = _backward_tree(spec, cyc, forbid)
        comps, certs = {}, {}
        ok = True
        tag = EVENTUALLY_FIXED if len(cyc) == 1 else EVENTUALLY_PERIODIC
        for c in crit:
            ci = idx[c.location]
            cands = _outer_candidates(spec, levels, c.location, r * delta / 2, r * delta)
            scored = []
            for k, i, y, d in cands:
                a, b = tB(spec, c.location, d)
                orbit = _tree_orbit(spec, levels, k, i)
                scored.append((_orbit_margin(orbit, [(a, b)]), -k, a, b, orbit))
            scored.sort(reverse=True)
            if not scored or scored[0][0] < -tol:
                ok = False
                diag[f"candidates_c{ci}_{cyc[0]:.6f}"] = len(cands)
                break
            margin, _, a, b, orbit = scored[0]
            comps[ci] = (a, b)
            for e in (a, b):
                certs[e] = {"tag": tag, "orbit": tuple([e] + orbit)}
        if not ok:
            continue
        cand = NiceSet(comps, certs)
        try:
            verify_niceness(spec, cand, horizon)
        except NicenessViolation as exc:
            diag[f"violation_{cyc[0]}"] = (exc.n, exc.point, exc.landing)
            continue
        outer = cand
        break
    if outer is None:
        raise ConstructionError("no admissible outer boundary point found", diag)

    comps, certs = {}, {}
    sandwich = True
    for c in crit:
        ci = idx[c.location]
        t0, t1 = tB(spec, c.location, delta)
        lo, hi = t0, t1
        local = {}
        for t in (t0, t1):
            found = return_domain_containing(spec, outer, t, return_time_cap)
            if found is None:
                continue
            chain, k, lab = found
            lo, hi = min(lo, chain[0][0]), max(hi, chain[0][1])
            for orb in _endpoint_orbit(spec, chain):
                tail = outer.certificates.get(orb[-1])
                if tail is not None and tail["tag"] in EXACT_TAGS:
                    local[orb[0]] = {"tag": tail["tag"], "orbit": tuple(orb[:-1]) + tail["orbit"]}
        for e in (lo, hi):
            certs[e] = local.get(e, {"tag": HORIZON, "horizon": horizon})
        comps[ci] = (lo, hi)
        u0, u1 = tB(spec, c.location, 2 * delta)
        if not (u0 < lo and hi < u1):
            sandwich = False
            if strict:
                raise ConstructionError("inner component escapes tB(c, 2 delta)",
                                        {"component": (lo, hi), "tB2": (u0, u1)})
    inner = NiceSet(comps, certs)
    verify_niceness(spec, inner, horizon)
    for ci, (a, b) in inner.components.items():
        A, B = outer.components[ci]
        if not (A < a and b < B):
            raise ConstructionError("closure of V is not inside the outer set", {"component": ci})
    cert = check_couple(spec, outer, inner, horizon)
    return NiceCouple(outer, inner, cert, delta=delta, r=r, sandwich_ok=sandwich)


def check_couple(spec: MapSpec, outer: NiceSet, inner: NiceSet, depth: int,
                 budget: int = DEFAULT_BUDGET) -> dict:
    """Every pull-back of ``outer`` up to ``depth`` meeting ``inner`` lies in it."""
    tol = 1e-12 * spec.scale
    if spec.is_real:
        roots = [(a, b, k) for k, (a, b) in outer.components.items()]
        level = [RNode(a, b, 0, None, (), 0, k) for a, b, k in roots]
        checked = 0
        for m in range(1, depth + 1):
            nxt = []
            for node in level:
                for i, (a, b, cr) in enumerate(pull_interval(spec, node.a, node.b)):
                    nxt.append(RNode(a, b, m, node, cr, 0, node.label, i))
            for n in nxt:
                if inner.meets_interval(n.a + tol, n.b - tol):
                    checked += 1
                    if not inner.contains_interval(n.a, n.b, tol):
                        raise ConstructionError("couple property fails",
                                                {"counterexample": (m, n.a, n.b)})
            if len(nxt) > budget:
                return {"depth": m, "checked": checked, "passed": True, "truncated": True}
            level = nxt
        return {"depth": depth, "checked": checked, "passed": True, "truncated": False}
    checked = 0
    for k, (_, c, rho) in outer.components.items():
        for m in range(1, depth + 1):
            comps, tr = all_components(spec, Ball(c, rho), m, budget)
            for comp in comps:
                poly = comp.region
                meets = any(inner.contains(z) for z in poly) or any(
                    winding_number(poly, cc) != 0 for _, cc, _ in inner.components.values())
                if meets:
                    checked += 1
                    if not all(inner.contains(z) for z in poly):
                        raise ConstructionError("couple property fails",
                                                {"counterexample": (m, complex(comp.anchor))})
    return {"depth": depth, "checked": checked, "passed": True, "truncated": False, "sampled": True}


def _complex_radius_range(spec, c, lo_radius, hi_radius, n=64):
    """Radii rho with tB(c, lo) inside D(c, rho) inside tB(c, hi), from sampled boundaries."""
    inner = tB(spec, c, lo_radius).region
    outer = tB(spec, c, hi_radius).region
    return float(np.max(np.abs(inner - c))), float(np.min(np.abs(outer - c)))


def _disk_orbit_margin(spec, c, rho, disks, horizon, n=256):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    z = c + rho * np.exp(1j * th)
    worst = math.inf
    R = spec.escape_radius
    alive = np.ones(n, dtype=bool)
    for k in range(1, horizon + 1):
        z = np.where(alive, spec.f(np.where(alive, z, 0)), z)
        alive &= np.abs(z) < R
        for cc, rr in disks:
            d = np.abs(z[alive] - cc) - rr
            if d.size:
                worst = min(worst, float(d.min()))
    return worst


def _complex_couple(spec, delta, r, horizon):
    crit = spec.crit_prime
    idx = {c.location: i for i, c in enumerate(spec.critical_points)}
    outer, inner = {}, {}
    certs_o, certs_i = {}, {}
    for c in crit:
        ci = idx[c.location]
        z0 = complex(c.location)
        lo, hi = _complex_radius_range(spec, z0, r * delta / 2, r * delta)
        lo_i, hi_i = _complex_radius_range(spec, z0, delta, 2 * delta)
        if not (lo < hi and lo_i < hi_i):
            raise ConstructionError("no disk fits between the critical balls",
                                    {"outer": (lo, hi), "inner": (lo_i, hi_i)})
        best = None
        for rho in np.linspace(lo, hi, 43)[1:-1]:
            m = _disk_orbit_margin(spec, z0, rho, [(z0, rho)], horizon)
            if best is None or m > best[0]:
                best = (m, rho)
        if best[0] <= 0:
            raise ConstructionError("sampled outer boundary orbits re-enter", {"margin": best[0]})
        outer[ci] = ("disk", z0, float(best[1]))
        certs_o[ci] = {"tag": HORIZON, "horizon": horizon}
        best = None
        for rho in np.linspace(lo_i, hi_i, 43)[1:-1]:
            m = _disk_orbit_margin(spec, z0, rho, [(z0, rho)], horizon)
            if best is None or m > best[0]:
                best = (m, rho)
        if best[0] <= 0:
            raise ConstructionError("sampled inner boundary orbits re-enter", {"margin": best[0]})
        inner[ci] = ("disk", z0, float(best[1]))
        certs_i[ci] = {"tag": HORIZON, "horizon": horizon}
    V_hat = NiceSet(outer, certs_o, kind="complex", symmetric=False)
    V = NiceSet(inner, certs_i, kind="complex", symmetric=False)
    cert = check_couple(spec, V_hat, V, min(horizon, 8))
    return NiceCouple(V_hat, V, cert, delta=delta, r=r)


def construct_nice_couple(spec: MapSpec, delta: float, r: float = 8.0, horizon: int = 12,
                          strict: bool = True, return_time_cap: int = 200) -> NiceCouple:
    """Nice couple (outer, inner) around the critical points in the Julia set.

    Parameters
    ----------
    delta, r : float
        Scale parameters; the outer component at ``c`` lies between
        ``tB(c, r*delta/2)`` and ``tB(c, r*delta)`` and the inner one
        between ``tB(c, delta)`` and ``tB(c, 2*delta)``.
    horizon : int
        Depth of the sampled couple check (and of niceness checks for
        boundary points without an exact certificate).
    strict : bool
        Raise when the inner sandwich fails; otherwise flag it.
    """
    if delta <= 0 or r <= 2:
        raise PreconditionError("need delta > 0 and r > 2")
    if not spec.crit_prime:
        kind = "real" if spec.is_real else "complex"
        empty = NiceSet({}, {}, kind=kind)
        return NiceCouple(empty, NiceSet({}, {}, kind=kind), {"passed": True, "vacuous": True},
                          vacuous=True, delta=delta, r=r)
    if spec.is_real:
        return _real_couple(spec, delta, r, horizon, strict, return_time_cap)
    return _complex_couple(spec, delta, r, horizon)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def verify_niceness(spec: MapSpec, nice: NiceSet, horizon: int) -> dict:
    """Check f^n(boundary) misses the set for n = 1..horizon, or for all n.

    A boundary point whose stored orbit is consistent (each step matches f
    within 1e-12 * scale, ending on a repelling cycle outside the set) is
    certified for all n. Other points are iterated ``horizon`` times.
    Raises :class:`NicenessViolation` with (n, point, landing).
    """
    if horizon < 1:
        raise PreconditionError("horizon must be at least 1")
    tol = 1e-12 * spec.scale
    out = {}
    if nice.kind != "real":
        for k, (_, c, rho) in nice.components.items():
            m = _disk_orbit_margin(spec, c, rho, [(cc, rr) for _, cc, rr in nice.components.values()], horizon)
            if m < -tol:
                raise NicenessViolation(-1, f"circle({c}, {rho})", m)
            out[k] = {"tag": HORIZON, "horizon": horizon}
        return out
    comps = list(nice.components.values())

    def inside(x):
        return any(a + tol < x < b - tol for a, b in comps)

    for e in nice.boundary_points():
        cert = nice.certificates.get(e)
        orbit = cert.get("orbit") if cert else None
        if cert and cert["tag"] in EXACT_TAGS and orbit and orbit[0] == e and _consistent(spec, orbit, tol):
            for n, x in enumerate(orbit[1:], 1):
                if inside(x):
                    raise NicenessViolation(n, e, x)
            out[e] = {"tag": cert["tag"], "steps": len(orbit) - 1}
            continue
        x = e
        for n in range(1, horizon + 1):
            x = float(spec.f(x))
            if inside(x):
                raise NicenessViolation(n, e, x)
        out[e] = {"tag": HORIZON, "horizon": horizon}
    return out


def _consistent(spec, orbit, tol) -> bool:
    """Each step matches f and the orbit closes up on a repelling cycle."""
    for x, y in zip(orbit, orbit[1:]):
        if abs(float(spec.f(x)) - y) > tol:
            return False
    last = orbit[-1]
    for j in range(len(orbit) - 2, -1, -1):
        if orbit[j] == last:
            cyc = orbit[j:-1]
            mult = math.prod(abs(float(spec.df(q))) for q in cyc)
            return mult > 1
    return False


# ---------------------------------------------------------------------------
# landing structure
# ---------------------------------------------------------------------------

def _crit_in(spec, a, b) -> bool:
    return any(a < float(c.location) < b for c in spec.critical_points)


def _landing_tree(spec: MapSpec, nice: NiceSet, max_landing: int, budget: int):
    """Nodes (a, b, l, label, parent, diffeo) of the first-landing tree.

    Also returns the return domains found as children lying inside the set.
    """
    nodes = []
    returns = []
    trunc = Truncation()
    level = []
    for k, (a, b) in nice.components.items():
        node = (a, b, 0, k, None, True)
        nodes.append(node)
        level.append(node)
    tol = 1e-12 * spec.scale
    for l in range(1, max_landing + 2):
        nxt = []
        for par in level:
            if trunc.nodes >= budget:
                trunc.truncated = True
                trunc.unexplored += 1
                continue
            for a, b, cr in pull_interval(spec, par[0], par[1]):
                trunc.nodes += 1
                mid = 0.5 * (a + b)
                if nice.contains(mid):
                    returns.append((a, b, l, par, bool(cr)))
                    continue
                if l > max_landing:
                    continue
                node = (a, b, l, par[3], par, par[5] and not _crit_in(spec, a - tol, b + tol))
                nxt.append(node)
        nodes.extend(nxt)
        level = nxt
    return nodes, returns, trunc


def _chain_of(node):
    out = []
    while node is not None:
        out.append((node[0], node[1]))
        node = node[4]
    return tuple(out)


def landing_components(spec: MapSpec, nice: NiceSet, max_landing: int, alpha=(1.0,),
                       budget: int = DEFAULT_BUDGET) -> LandingTable:
    """First-landing components U with l(U) <= max_landing.

    ``tails[alpha][m]`` is the sum of diam(U)^alpha over components with
    l(U) >= m, for m = 0..max_landing. ``unresolved_mass`` is the domain
    length not covered by the enumerated components.
    """
    if not spec.is_real:
        raise PreconditionError("landing enumeration is implemented for real maps")
    if max_landing < 0:
        raise PreconditionError("max_landing must be nonnegative")
    nodes, _, trunc = _landing_tree(spec, nice, max_landing, budget)
    comps = [LandingComponent((a, b), l, diff, lab, _chain_of(n)) for n in nodes
             for a, b, l, lab, _, diff in [n]]
    alphas = tuple(float(a) for a in np.atleast_1d(alpha))
    tails = {}
    for al in alphas:
        per = np.zeros(max_landing + 1)
        for u in comps:
            per[u.landing_time] += (u.region[1] - u.region[0]) ** al
        tails[al] = tuple(float(x) for x in np.cumsum(per[::-1])[::-1])
    lo, hi = spec.domain
    covered = math.fsum(u.region[1] - u.region[0] for u in comps)
    return LandingTable(comps, alphas, tails, max(0.0, (hi - lo) - covered), trunc)


def return_domains(spec: MapSpec, nice: NiceSet, max_time: int,
                   budget: int = DEFAULT_BUDGET) -> list:
    """Return domains of ``nice`` with return time <= max_time."""
    if not spec.is_real:
        raise PreconditionError("return domains are implemented for real maps")
    _, returns, _ = _landing_tree(spec, nice, max_time - 1, budget)
    out = []
    for a, b, k, par, cr in returns:
        chain = ((a, b),) + _chain_of(par)
        out.append(ReturnDomain((a, b), k, chain[-1], chain, critical=cr))
    out.sort(key=lambda d: (d.return_time, d.region))
    return out


def lambda_nice_report(spec: MapSpec, couple_or_set, cap: int = 20) -> dict:
    """Modulus lower bounds mmod(V; W) for the return domains W of V.

    Degenerate pairs (W equal to its component of V) give 0 and are
    listed under ``rejected``.
    """
    nice = couple_or_set.inner if isinstance(couple_or_set, NiceCouple) else couple_or_set
    rows, rejected = [], []
    if nice.kind == "real":
        for d in return_domains(spec, nice, cap):
            lab = nice.label_of(0.5 * (d.region[0] + d.region[1]))
            V = nice.components[lab]
            if not (V[0] < d.region[0] and d.region[1] < V[1]):
                rejected.append(d.region)
                rows.append((d.region, d.return_time, 0.0))
                continue
            rows.append((d.region, d.return_time, mmod(V, d.region)))
    else:
        raise PreconditionError("return domains are implemented for real maps")
    vals = [v for _, _, v in rows if v > 0]
    return {"rows": rows, "minimum": min(vals) if vals else None, "rejected": rejected, "cap": cap}


def modulus_lower_bound(outer, inner) -> float:
    """mmod for intervals, disk bound for ``(center, radius)`` pairs; 0 if equal."""
    if isinstance(outer[0], complex) or isinstance(inner[0], complex):
        if tuple(outer) == tuple(inner):
            return 0.0
        return disk_modulus(outer, inner).value
    if tuple(outer) == tuple(inner):
        return 0.0
    return mmod(outer, inner)


# ---------------------------------------------------------------------------
# children of a nice set
# ---------------------------------------------------------------------------

@dataclass
class Child:
    region: tuple
    time: int
    critical_point: float
    image: tuple


def enumerate_children(spec: MapSpec, nice: NiceSet, max_time: int, s: float, delta=None):
    """Children Y with m_V(Y) <= max_time and the sum of diam(f(Y))^s.

    A child at time m is the component containing a critical point c of
    the pull-back of V by f^m, provided the component Q of
    f^{-(m-1)}(V) containing f(c) is diffeomorphic (no critical point in
    the closure of any chain piece) and the child has no other critical
    point.
    """
    if not spec.is_real:
        raise PreconditionError("children are implemented for real maps")
    kids = []
    tol = 1e-12 * spec.scale
    crit_locs = [float(c.location) for c in spec.critical_points]
    for c in crit_locs:
        k, orbit = None, None
        dps = 30 + int(0.7 * max_time)
        with mpmath.workdps(dps):
            coeffs = [mpmath.mpf(x) for x in spec.coefficients]
            z = mpmath.mpf(c)
            orb = [c]
            for m in range(1, max_time + 1):
                z = mpmath.polyval(coeffs, z)
                orb.append(float(z))
        for m in range(1, max_time + 1):
            lab = nice.label_of(orb[m])
            if lab is None:
                continue
            chain = _pull_along(spec, nice.components[lab], orb[1:m + 1])
            if chain is None:
                continue
            if any(_crit_in(spec, a - tol, b + tol) for a, b in chain[:-1]):
                continue
            Q = chain[0]
            Y = component_containing(spec, Q, c)
            if Y is None:
                continue
            inside = [x for x in crit_locs if Y[0] < x < Y[1]]
            if len(inside) != 1:
                continue
            kids.append(Child((Y[0], Y[1]), m, c, Q))
    kids.sort(key=lambda y: (y.time, y.region))
    total = math.fsum((y.image[1] - y.image[0]) ** s for y in kids)
    rep = {"children": kids, "sum": total, "s": s}
    if delta is not None:
        rep["bound"] = delta ** s
        rep["within_bound"] = total <= delta ** s
    return rep


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real!r},{x.imag!r}"
    return repr(float(x))


def _parse_num(s: str, kind: str):
    if kind == "complex":
        re_, im = s.split(",")
        return complex(float(re_), float(im))
    return float(s)


def _set_to_dict(prefix: str, nice: NiceSet) -> dict:
    d = {f"{prefix}.kind": nice.kind, f"{prefix}.symmetric": str(nice.symmetric).lower(),
         f"{prefix}.labels": " ".join(str(k) for k in sorted(nice.components))}
    for k, comp in sorted(nice.components.items()):
        if nice.kind == "real":
            a, b = comp
            d[f"{prefix}.c{k}.left"] = _fmt(a)
            d[f"{prefix}.c{k}.right"] = _fmt(b)
            d[f"{prefix}.c{k}.center"] = _fmt(0.5 * (a + b))
            for side, e in (("left", a), ("right", b)):
                cert = nice.certificates.get(e)
                if cert is None:
                    continue
                d[f"{prefix}.c{k}.{side}_tag"] = cert["tag"]
                if cert["tag"] in EXACT_TAGS:
                    d[f"{prefix}.c{k}.{side}_orbit"] = " ".join(_fmt(x) for x in cert["orbit"])
                else:
                    d[f"{prefix}.c{k}.{side}_horizon"] = str(cert.get("horizon", 0))
        else:
            _, c, rho = comp
            d[f"{prefix}.c{k}.center"] = _fmt(complex(c))
            d[f"{prefix}.c{k}.radius"] = _fmt(rho)
            cert = nice.certificates.get(k, {"tag": HORIZON, "horizon": 0})
            d[f"{prefix}.c{k}.tag"] = cert["tag"]
            d[f"{prefix}.c{k}.horizon"] = str(cert.get("horizon", 0))
    return d


def _set_from_dict(prefix: str, d: dict) -> NiceSet:
    kind = d[f"{prefix}.kind"]
    labels = [int(x) for x in d[f"{prefix}.labels"].split()]
    comps, certs = {}, {}
    for k in labels:
        if kind == "real":
            a = float(d[f"{prefix}.c{k}.left"])
            b = float(d[f"{prefix}.c{k}.right"])
            comps[k] = (a, b)
            for side, e in (("left", a), ("right", b)):
                tag = d.get(f"{prefix}.c{k}.{side}_tag")
                if tag in EXACT_TAGS:
                    orbit = tuple(float(x) for x in d[f"{prefix}.c{k}.{side}_orbit"].split())
                    certs[e] = {"tag": tag, "orbit": orbit}
                elif tag is not None:
                    certs[e] = {"tag": tag, "horizon": int(d[f"{prefix}.c{k}.{side}_horizon"])}
        else:
            c = _parse_num(d[f"{prefix}.c{k}.center"], "complex")
            comps[k] = ("disk", c, float(d[f"{prefix}.c{k}.radius"]))
            certs[k] = {"tag": d[f"{prefix}.c{k}.tag"], "horizon": int(d[f"{prefix}.c{k}.horizon"])}
    return NiceSet(comps, certs, kind=kind, symmetric=d[f"{prefix}.symmetric"] == "true")


def couple_to_text(couple: NiceCouple) -> str:
    d = {"couple.vacuous": str(couple.vacuous).lower(), "couple.delta": _fmt(couple.delta),
         "couple.r": _fmt(couple.r), "couple.sandwich_ok": str(couple.sandwich_ok).lower()}
    d.update(_set_to_dict("outer", couple.outer))
    d.update(_set_to_dict("inner", couple.inner))
    return textformat.serialize(d)


def couple_from_text(text: str) -> NiceCouple:
    d = textformat.parse(text)
    return NiceCouple(_set_from_dict("outer", d), _set_from_dict("inner", d), {},
                      vacuous=d["couple.vacuous"] == "true", delta=float(d["couple.delta"]),
                      r=float(d["couple.r"]), sandwich_ok=d["couple.sandwich_ok"] == "true")
