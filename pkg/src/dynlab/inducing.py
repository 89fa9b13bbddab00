"""Bad pull-backs, relatively bad sums, the canonical induced map and its tails.

Everything here works on real maps. A pull-back of a nice set by f^m is
stored as its chain: a tuple of open intervals ``(I_0, ..., I_m)`` with
``I_m`` a component of the set and ``I_j`` the component of
``f^{-1}(I_{j+1})`` containing ``f^j(I_0)``. Because every critical point
in the Julia set lies in the nice set, pull-backs that are bad or that
carry branches of the induced map live inside the set and are obtained
by composing return domains.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import PreconditionError
from .maps import MapSpec
from .nice import NiceCouple, NiceSet, _pull_along, enumerate_children, return_domains
from .pullback import DEFAULT_BUDGET, Truncation, pull_interval, real_tree


@dataclass
class BadPullback:
    component: tuple
    depth: int
    degree: int
    chain: tuple = ()


@dataclass
class InducedBranch:
    component: tuple
    inducing_time: int
    target_component: object
    extension: tuple
    chain: tuple

    @property
    def diameter(self):
        return self.component[1] - self.component[0]


@dataclass
class XiLedger:
    nice_set_scale_index: int
    exponent: float
    partial_sums: tuple
    tail_slopes: dict
    counts: tuple = ()
    truncation: Truncation = field(default_factory=Truncation)
    nesting_ok: bool | None = None

    def increments(self):
        p = self.partial_sums
        return tuple(p[m + 1] - p[m] for m in range(len(p) - 1))


@dataclass
class InducedMap:
    branches: list
    max_time: int
    unresolved_mass: float
    truncation: Truncation


def _require_real(spec: MapSpec):
    if not spec.is_real:
        raise PreconditionError("this operation is implemented for real maps")


def _outer(obj) -> NiceSet:
    return obj.outer if isinstance(obj, NiceCouple) else obj


def _crit_locs(spec):
    return [float(c.location) for c in spec.critical_points]


def _hits(spec, chain) -> int:
    """Number of levels j < m whose interval contains a critical point."""
    crit = _crit_locs(spec)
    return sum(1 for a, b in chain[:-1] if any(a < c < b for c in crit))


def _key(depth, region, digits=11):
    return (depth, round(region[0], digits), round(region[1], digits))


def pull_through(spec: MapSpec, chain, target) -> list:
    """Chains of the components of (f^s|I_0)^{-1}(target) for ``chain`` of length s+1.

    ``target`` must lie inside ``chain[-1]``. Each result has the same
    length as ``chain`` and ends with ``target``.
    """
    s = len(chain) - 1
    parts = [[tuple(target)]]
    for j in range(s - 1, -1, -1):
        lo, hi = chain[j]
        new = []
        for part in parts:
            top = part[-1]
            for a, b, _ in pull_interval(spec, top[0], top[1]):
                mid = 0.5 * (a + b)
                if lo < mid < hi:
                    new.append(part + [(a, b)])
        parts = new
    return [tuple(reversed(p)) for p in parts]


def _returns_by_target(spec, nice, max_time, budget):
    out = {}
    for d in return_domains(spec, nice, max_time, budget):
        out.setdefault(d.target, []).append(d)
    return out


# ---------------------------------------------------------------------------
# bad pull-backs
# ---------------------------------------------------------------------------

def enumerate_bad_pullbacks(spec: MapSpec, couple, max_depth: int, budget: int = DEFAULT_BUDGET):
    """Bad pull-backs of the (outer) nice set by f^m for m <= max_depth.

    Depth-first over return-domain itineraries: a node whose pull-back is
    diffeomorphic is cut, since no descendant of it can be bad. Depth 0
    holds the components of the set. Returns ``(list, Truncation)``.
    """
    _require_real(spec)
    U = _outer(couple)
    trunc = Truncation()
    out = [BadPullback(comp, 0, 1, (comp,)) for comp in U.intervals()]
    if max_depth < 1 or U.is_empty():
        return out, trunc
    rets = _returns_by_target(spec, U, max_depth, budget)
    stack = [(comp,) for comp in U.intervals()]
    while stack:
        chain = stack.pop()
        s = len(chain) - 1
        for R in rets.get(chain[-1], ()):
            k = R.return_time
            if s + k > max_depth:
                continue
            for sub in pull_through(spec, chain, R.region):
                trunc.nodes += 1
                if trunc.nodes > budget:
                    trunc.truncated = True
                    trunc.unexplored += 1
                    continue
                full = sub + tuple(R.chain[1:])
                n = _hits(spec, full)
                if n == 0:
                    continue
                out.append(BadPullback(full[0], s + k, 2 ** n, full))
                stack.append(full)
    out.sort(key=lambda w: (w.depth, w.component))
    return out, trunc


def brute_force_bad(spec: MapSpec, nice: NiceSet, max_depth: int, budget: int = DEFAULT_BUDGET) -> set:
    """Keys of bad pull-backs by the definition, over the full pull-back tree."""
    _require_real(spec)
    crit = _crit_locs(spec)
    roots = [(a, b, k) for k, (a, b) in nice.components.items()]
    levels, _ = real_tree(spec, roots, max_depth, budget)
    keys = {_key(0, comp) for comp in nice.intervals()}
    for m in range(1, max_depth + 1):
        for node in levels[m]:
            anc = node.ancestors()          # anc[j] is the level-j interval
            pts = [0.5 * (n.a + n.b) for n in anc]
            bad = True
            for mp in range(1, m + 1):
                lab = nice.label_of(pts[mp])
                if lab is None:
                    continue
                chain = _pull_along(spec, nice.components[lab], pts[:mp + 1])
                if chain is None:
                    raise RuntimeError("pull-back along a tree orbit failed")
                if not any(any(a < c < b for c in crit) for a, b in chain[:-1]):
                    bad = False
                    break
            if bad:
                keys.add(_key(m, (node.a, node.b)))
    return keys


def bad_keys(bad: list, max_depth: int | None = None) -> set:
    return {_key(w.depth, w.component) for w in bad if max_depth is None or w.depth <= max_depth}


def container_is_bad(spec: MapSpec, small: NiceSet, big: NiceSet, max_depth: int) -> dict:
    """For every bad pull-back of ``small`` (depth <= max_depth), check that
    the pull-back of ``big`` containing it is bad for ``big``."""
    bad_small = brute_force_bad(spec, small, max_depth)
    bad_big = brute_force_bad(spec, big, max_depth)
    failures = []
    checked = 0
    roots = [(a, b, k) for k, (a, b) in small.components.items()]
    levels, _ = real_tree(spec, roots, max_depth)
    for m in range(1, max_depth + 1):
        for node in levels[m]:
            if _key(m, (node.a, node.b)) not in bad_small:
                continue
            pts = [0.5 * (n.a + n.b) for n in node.ancestors()]
            lab = big.label_of(pts[m])
            chain = _pull_along(spec, big.components[lab], pts)
            checked += 1
            if _key(m, chain[0]) not in bad_big:
                failures.append((m, (node.a, node.b), chain[0]))
    return {"checked": checked, "failures": failures, "passed": not failures}


# ---------------------------------------------------------------------------
# relatively bad pull-backs and Xi sums
# ---------------------------------------------------------------------------

def relatively_bad(spec: MapSpec, bad0: list, subset, max_depth: int) -> dict:
    """Pull-backs of ``subset`` (list of intervals inside V_0) bad relative to V_0.

    ``bad0`` is the output of :func:`enumerate_bad_pullbacks` for V_0.
    Returns ``{depth: [(region, degree, chain), ...]}``; depth 0 holds the
    components of ``subset``.
    """
    out = {0: [(tuple(s), 1, (tuple(s),)) for s in sorted(subset)]}
    for w in bad0:
        if w.depth == 0 or w.depth > max_depth:
            continue
        top = w.chain[-1]
        for s in subset:
            mid = 0.5 * (s[0] + s[1])
            if not top[0] < mid < top[1]:
                continue
            for ch in pull_through(spec, w.chain, s):
                out.setdefault(w.depth, []).append((ch[0], 2 ** _hits(spec, ch), ch))
    for m in out:
        out[m].sort()
    return out


def _tail_slope(incs, m0: int = 2):
    ms = [m for m in range(m0, len(incs)) if incs[m] > 0]
    if not any(incs[m] > 0 for m in range(1, len(incs))):
        return {"slope": -math.inf, "empty": True, "used": []}
    if len(ms) < 3:
        # a finite bad set beyond m0 means the series stops: convergent
        last = max(m for m in range(len(incs)) if incs[m] > 0)
        return {"slope": -math.inf if last < len(incs) - 2 else float("nan"), "empty": False, "used": ms}
    y = np.log([incs[m] for m in ms])
    slope = float(np.polyfit(ms, y, 1)[0])
    return {"slope": slope, "empty": False, "used": ms}


def xi_partial_sums(spec: MapSpec, family, t: float, max_depth: int, budget: int = DEFAULT_BUDGET,
                    bad0=None) -> list:
    """Xi_t(V_n, m) for m = 0..max_depth for each set in a nested family.

    ``family[0]`` plays the role of V_0; later members must be nested
    inside earlier ones. Each ledger's ``nesting_ok`` records whether its
    partial sums are dominated by those of the previous member.
    """
    _require_real(spec)
    if t <= 0:
        raise PreconditionError("t must be positive")
    family = [_outer(v) if isinstance(v, NiceCouple) else v for v in family]
    trunc = Truncation()
    if bad0 is None:
        bad0, trunc = enumerate_bad_pullbacks(spec, family[0], max(max_depth - 1, 0), budget)
    ledgers = []
    for n, V in enumerate(family):
        rb = relatively_bad(spec, bad0, V.intervals(), max_depth - 1)
        per = [math.fsum(d * (r[1] - r[0]) ** t for r, d, _ in rb.get(j, ())) for j in range(max_depth)]
        counts = tuple(len(rb.get(j, ())) for j in range(max_depth))
        partial = [0.0]
        for j in range(max_depth):
            partial.append(partial[-1] + per[j])
        incs = tuple(partial[m + 1] - partial[m] for m in range(max_depth))
        led = XiLedger(n, t, tuple(partial), _tail_slope(incs), counts, trunc)
        if ledgers:
            prev = ledgers[-1].partial_sums
            led.nesting_ok = all(a <= b * (1 + 1e-12) + 1e-300 for a, b in zip(partial, prev))
        ledgers.append(led)
    return ledgers


def badness_exponent_estimate(ledgers, m0: int = 2, slope_tol: float = -0.05) -> dict:
    """Smallest grid t from which the Xi tails converge (upper-bound estimate).

    ``ledgers`` are XiLedgers of one nice set over a grid of exponents.
    Convergence at t means the fitted slope of log increments beyond
    depth ``m0`` is below ``slope_tol`` (or the bad set is exhausted).
    """
    if len(ledgers) < 3:
        raise PreconditionError("need at least 3 grid values of t")
    ledgers = sorted(ledgers, key=lambda l: l.exponent)
    table = []
    for led in ledgers:
        info = _tail_slope(led.increments(), m0)
        conv = info["slope"] < slope_tol if not math.isnan(info["slope"]) else None
        table.append({"t": led.exponent, "slope": info["slope"], "empty": info["empty"], "converges": conv})
    if all(row["empty"] for row in table):
        return {"estimate": 0.0, "status": "empty-bad-set", "label": "upper bound", "table": table}
    est = None
    for i in range(len(table) - 1, -1, -1):
        if table[i]["converges"]:
            est = table[i]["t"]
        else:
            break
    if est is None or any(row["converges"] is None for row in table if row["t"] >= est):
        return {"estimate": None, "status": "undetermined", "label": "upper bound", "table": table}
    return {"estimate": est, "status": "estimated", "label": "upper bound", "table": table}


def check_child_decomposition(spec: MapSpec, V0: NiceSet, V: NiceSet, max_depth: int) -> dict:
    """Set equality of Br_m(V) with Br_{m,o}(V) plus Br_{m - m(Y)}(Y) over children Y."""
    bad0, _ = enumerate_bad_pullbacks(spec, V0, max_depth)
    lhs_all = relatively_bad(spec, bad0, V.intervals(), max_depth)
    kids = enumerate_children(spec, V, max_depth, 1.0)["children"]
    rows = []
    for m in range(1, max_depth + 1):
        lhs = {_key(m, r) for r, _, _ in lhs_all.get(m, ())}
        rhs = {_key(m, r) for r, d, _ in lhs_all.get(m, ()) if d == 1}
        for y in kids:
            if y.time > m:
                continue
            sub = relatively_bad(spec, bad0, [y.region], m - y.time)
            rhs |= {_key(m, r) for r, _, _ in sub.get(m - y.time, ())}
        rows.append({"depth": m, "lhs": len(lhs), "rhs": len(rhs), "equal": lhs == rhs})
    return {"rows": rows, "children": len(kids), "passed": all(r["equal"] for r in rows)}


# ---------------------------------------------------------------------------
# canonical induced map
# ---------------------------------------------------------------------------

def build_induced_map(spec: MapSpec, couple: NiceCouple, max_time: int,
                      budget: int = DEFAULT_BUDGET) -> InducedMap:
    """All branches of the canonical induced map with m(W) <= max_time.

    States are pull-backs of the outer set V-hat inside V, grown by
    composing return domains of V-hat. At a diffeomorphic state the part
    mapped into V is a branch; only the part mapped outside V keeps
    looking for a good time.
    """
    _require_real(spec)
    Vh, V = couple.outer, couple.inner
    trunc = Truncation()
    if couple.vacuous:
        return InducedMap([], max_time, 0.0, trunc)
    rets = _returns_by_target(spec, Vh, max_time, budget)
    in_V = {id(R): V.contains(0.5 * (R.region[0] + R.region[1])) for lst in rets.values() for R in lst}
    label_of_outer = {comp: k for k, comp in Vh.components.items()}
    branches = []
    stack = [((comp,), True) for comp in Vh.intervals()]
    while stack:
        chain, allow_all = stack.pop()
        s = len(chain) - 1
        for R in rets.get(chain[-1], ()):
            k = R.return_time
            if s + k > max_time:
                continue
            if not allow_all and in_V[id(R)]:
                continue
            if s == 0 and not in_V[id(R)]:
                continue
            for sub in pull_through(spec, chain, R.region):
                trunc.nodes += 1
                if trunc.nodes > budget:
                    trunc.truncated = True
                    trunc.unexplored += 1
                    continue
                full = sub + tuple(R.chain[1:])
                diffeo = _hits(spec, full) == 0
                if diffeo:
                    lab = label_of_outer[full[-1]]
                    target = V.components[lab]
                    ws = pull_through(spec, full, target)
                    if len(ws) != 1:
                        raise RuntimeError("diffeomorphic state with several branch components")
                    w = ws[0]
                    branches.append(InducedBranch(w[0], s + k, lab, full, w))
                stack.append((full, not diffeo))
    branches.sort(key=lambda b: (b.inducing_time, b.component))
    covered = math.fsum(b.diameter for b in branches)
    total = math.fsum(b - a for a, b in V.intervals())
    return InducedMap(branches, max_time, max(0.0, total - covered), trunc)


def branch_at(induced: InducedMap, x: float):
    if not hasattr(induced, "_lefts"):
        induced._order = sorted(induced.branches, key=lambda b: b.component[0])
        induced._lefts = [b.component[0] for b in induced._order]
    i = bisect.bisect_right(induced._lefts, x) - 1
    if i >= 0 and x < induced._order[i].component[1]:
        return induced._order[i]
    return None


def _mp_coeffs(spec):
    return [mpmath.mpf(c) for c in spec.coefficients]


def markov_check(spec: MapSpec, branch: InducedBranch, V: NiceSet, dps: int = 40) -> dict:
    """Pull the endpoints of the target component back along the branch chain
    in extended precision, then iterate them forward.

    Returns the forward error |f^m(a*) - boundary| and the distance between
    the stored float endpoints and the extended-precision ones.
    """
    chain = branch.chain
    m = len(chain) - 1
    crit = _crit_locs(spec)
    with mpmath.workdps(dps):
        c = _mp_coeffs(spec)
        dc = [c[i] * (len(c) - 1 - i) for i in range(len(c) - 1)]
        quad = None
        if len(c) == 3:
            v = -c[1] / (2 * c[0])
            quad = (c[0], v, mpmath.polyval(c, v))
        ends = [mpmath.mpf(chain[m][0]), mpmath.mpf(chain[m][1])]
        monotone = True
        for j in range(m - 1, -1, -1):
            a, b = chain[j]
            ya, yb = float(spec.f(a)), float(spec.f(b))
            nxt = chain[j + 1]
            increasing = abs(ya - nxt[0]) + abs(yb - nxt[1]) <= abs(ya - nxt[1]) + abs(yb - nxt[0])
            targets = ends if increasing else ends[::-1]
            new = []
            for x0, y in zip((a, b), targets):
                if quad is not None:
                    qa, v, fv = quad
                    q = (y - fv) / qa
                    r = mpmath.sqrt(q) if q > 0 else mpmath.mpf(0)
                    new.append(v + r if x0 >= float(v) else v - r)
                    continue
                x = mpmath.mpf(x0)
                for _ in range(60):
                    step = (mpmath.polyval(c, x) - y) / mpmath.polyval(dc, x)
                    x -= step
                    if abs(step) < mpmath.mpf(10) ** (-dps + 5):
                        break
                new.append(x)
            if not new[0] < new[1] or any(new[0] < cc < new[1] for cc in crit):
                monotone = False
            ends = new
        fwd = list(ends)
        for _ in range(m):
            fwd = [mpmath.polyval(c, x) for x in fwd]
        lo, hi = V.components[branch.target_component]
        fwd_err = float(max(abs(fwd[0] - lo), abs(fwd[1] - hi), ))
        fwd_err = min(fwd_err, float(max(abs(fwd[0] - hi), abs(fwd[1] - lo))))
        end_err = float(max(abs(ends[0] - branch.component[0]), abs(ends[1] - branch.component[1])))
    return {"forward_error": fwd_err, "endpoint_error": end_err, "monotone": monotone}


def good_time_scan(spec: MapSpec, couple: NiceCouple, x: float, max_time: int):
    """Least good time of ``x`` by direct forward scan (None if > max_time)."""
    Vh, V = couple.outer, couple.inner
    crit = _crit_locs(spec)
    with mpmath.workdps(30 + max_time):
        c = _mp_coeffs(spec)
        z = mpmath.mpf(x)
        orbit = [float(x)]
        for _ in range(max_time):
            z = mpmath.polyval(c, z)
            orbit.append(float(z))
    for m in range(1, max_time + 1):
        if not V.contains(orbit[m]):
            continue
        lab = Vh.label_of(orbit[m])
        chain = _pull_along(spec, Vh.components[lab], orbit[:m + 1])
        if chain is None:
            continue
        if not any(any(a < cc < b for cc in crit) for a, b in chain[:-1]):
            return m
    return None


def sample_D(induced: InducedMap, n: int, seed: int) -> np.ndarray:
    """Uniform samples from the union of branch domains."""
    rng = np.random.default_rng(seed)
    diam = np.array([b.diameter for b in induced.branches])
    idx = rng.choice(len(diam), size=n, p=diam / diam.sum())
    u = rng.uniform(0.01, 0.99, size=n)
    return np.array([induced.branches[i].component[0] + u[j] * diam[i] for j, i in enumerate(idx)])


def _orbit_mp(spec, x, n):
    with mpmath.workdps(30 + n):
        c = _mp_coeffs(spec)
        z = mpmath.mpf(x)
        out = [float(x)]
        for _ in range(n):
            z = mpmath.polyval(c, z)
            out.append(float(z))
    return out


def verify_decomposition(spec: MapSpec, couple: NiceCouple, samples: int, seed: int = 0,
                         induced: InducedMap | None = None, bad: list | None = None, landing=None) -> dict:
    """Check m(x) = m~ + 1 + l(f^{m~+1}(x)) on sampled points of D.

    ``m~`` is the depth of the deepest bad pull-back of V-hat containing x
    with depth below m(x); ``l`` comes from the landing table of V.
    """
    from .nice import landing_components

    if induced is None:
        raise PreconditionError("build the induced map first")
    T = induced.max_time
    if bad is None:
        bad, _ = enumerate_bad_pullbacks(spec, couple, T - 1)
    if landing is None:
        landing = landing_components(spec, couple.inner, T)
    by_depth = {}
    for w in bad:
        by_depth.setdefault(w.depth, []).append(w.component)
    for d in by_depth:
        by_depth[d].sort()
    lefts = {d: [r[0] for r in v] for d, v in by_depth.items()}

    def deepest(x, below):
        for d in range(below - 1, -1, -1):
            if d not in by_depth:
                continue
            i = bisect.bisect_right(lefts[d], x) - 1
            if i >= 0 and x < by_depth[d][i][1]:
                return d
        return None

    rows, failures = [], []
    for x in sample_D(induced, samples, seed):
        br = branch_at(induced, x)
        m = br.inducing_time
        mt = deepest(x, m)
        if mt is None:
            failures.append({"x": float(x), "m": m, "reason": "no bad pull-back below m(x)"})
            continue
        y = _orbit_mp(spec, x, mt + 1)[-1]
        U = landing.lookup(y)
        if U is None:
            failures.append({"x": float(x), "m": m, "m_tilde": mt, "reason": "no landing component"})
            continue
        ok = m == mt + 1 + U.landing_time
        rows.append((float(x), m, mt, U.landing_time, ok))
        if not ok:
            failures.append({"x": float(x), "m": m, "m_tilde": mt, "l": U.landing_time})
    return {"samples": samples, "checked": len(rows), "failures": failures,
            "passed": not failures and len(rows) == samples, "rows": rows}


# ---------------------------------------------------------------------------
# tails, derivative bounds, export
# ---------------------------------------------------------------------------

def tail_statistics(induced: InducedMap, alpha: float = 1.0, fit_range=(5, 20)) -> dict:
    """T(m) = sum of diam(W)^alpha over branches with m(W) >= m, m = 1..max_time+1."""
    T = induced.max_time
    per = np.zeros(T + 2)
    for b in induced.branches:
        per[b.inducing_time] += b.diameter ** alpha
    tail = [math.fsum(per[m:]) for m in range(1, T + 2)]
    lo, hi = fit_range
    ms = [m for m in range(max(lo, 1), min(hi, T) + 1) if tail[m - 1] > 0]
    rep = {"m": list(range(1, T + 2)), "T": tail, "alpha": alpha, "fit_range": (lo, hi),
           "unresolved_mass": induced.unresolved_mass}
    if len(ms) >= 3:
        x, y = np.log(ms), np.log([tail[m - 1] for m in ms])
        rep["poly_exponent"] = float(-np.polyfit(x, y, 1)[0])
        rep["exp_rate"] = float(-np.polyfit(ms, y, 1)[0])
        half = len(ms) // 2
        e1 = float(-np.polyfit(x[:half + 1], y[:half + 1], 1)[0])
        e2 = float(-np.polyfit(x[half:], y[half:], 1)[0])
        rep["local_exponents"] = (e1, e2)
        rep["super_polynomial"] = e2 > 1.2 * e1
    else:
        rep["poly_exponent"] = None
        rep["super_polynomial"] = None
    rep["nonincreasing"] = all(a >= b for a, b in zip(tail, tail[1:]))
    return rep


def derivative_bounds(spec: MapSpec, branch: InducedBranch, n: int = 17):
    """Sampled (min, max) of |Df^m| over the branch domain."""
    from .maps import iterate_with_derivative

    a, b = branch.component
    xs = np.linspace(a, b, n)
    _, d = iterate_with_derivative(spec, xs, branch.inducing_time)
    d = np.abs(d)
    return float(d.min()), float(d.max())


def write_branches_csv(induced: InducedMap, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chain", "depth", "inducing_time", "diameter", "degree", "target_component"])
        for b in induced.branches:
            chain = " ".join(f"{x!r}:{y!r}" for x, y in b.chain)
            w.writerow([chain, len(b.chain) - 1, b.inducing_time, repr(b.diameter), 1, b.target_component])
