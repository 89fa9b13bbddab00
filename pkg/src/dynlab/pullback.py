"""Pull-back components, degrees, backward contraction and shrinking.

Real maps use exact interval arithmetic on monotone pieces (closed-form
square roots for quadratics, Brent's method otherwise). Complex maps
represent a component by the lift of its target's boundary circle,
tracked by predictor-corrector continuation on f^m.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist

from .errors import AmbiguityError, NoConvergenceError, PreconditionError
from .maps import MapSpec, iterate_with_derivative

DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class Ball:
    center: complex | float
    radius: float

    def interval(self):
        c = float(np.real(self.center))
        return (c - self.radius, c + self.radius)


@dataclass
class PullbackComponent:
    """A component of f^{-m}(target).

    ``region`` is ``(a, b)`` for real maps and an array of lifted boundary
    samples for complex maps.
    """

    depth: int
    anchor: complex | float
    target: object
    branch_chain: tuple
    diameter: float
    degree: int
    diffeomorphic: bool
    critical_hits: int
    region: object = None
    brute_degree: int | None = None
    monodromy_degree: int | None = None

    def contains(self, z) -> bool:
        if isinstance(self.region, tuple):
            a, b = self.region
            return a < z < b
        return winding_number(self.region, z) != 0


@dataclass
class ShrinkingReport:
    rho: float
    depths: tuple
    theta: tuple
    fitted_beta: float
    fit_residual: float
    n_base_points: int
    excluded: int = 0
    counts: tuple = ()


@dataclass
class Truncation:
    truncated: bool = False
    unexplored: int = 0
    nodes: int = 0


# ---------------------------------------------------------------------------
# real maps: one-step interval preimages
# ---------------------------------------------------------------------------

def _breakpoints(spec: MapSpec):
    lo, hi = spec.domain
    crit = sorted(float(c.location) for c in spec.critical_points)
    return [lo] + crit + [hi]


def _crit_locations(spec: MapSpec):
    return [c.location for c in spec.critical_points]


def _quad_data(spec: MapSpec):
    a, b, c = spec.coefficients
    v = -b / (2 * a)
    return a, v, c - b * b / (4 * a)


def _solve_monotone(spec: MapSpec, a: float, b: float, w: float) -> float:
    fa, fb = spec.f(a) - w, spec.f(b) - w
    if fa == 0:
        return a
    if fb == 0:
        return b
    return brentq(lambda x: spec.f(x) - w, a, b, xtol=1e-16, rtol=4.5e-16, maxiter=200)


def preimages(spec: MapSpec, w) -> list:
    """Preimages of ``w`` as a multiset (double roots are repeated).

    Real maps: all solutions in the domain, one per monotone piece
    containing ``w`` in its image. Complex maps: ``deg f`` roots, each
    polished by Newton's method.
    """
    if spec.is_real:
        w = float(w)
        if spec.degree == 2:
            a, v, fv = _quad_data(spec)
            q = (w - fv) / a
            lo, hi = spec.domain
            tol = 1e-12 * spec.scale
            if q < -1e-15 * max(1.0, abs(fv)):
                return []
            q = max(q, 0.0)
            s = math.sqrt(q)
            out = [x for x in (v - s, v + s) if lo - tol <= x <= hi + tol]
            return sorted(min(max(x, lo), hi) for x in out)
        bp = _breakpoints(spec)
        out = []
        crit = set(float(c.location) for c in spec.critical_points)
        for i in range(len(bp) - 1):
            a, b = bp[i], bp[i + 1]
            fa, fb = spec.f(a), spec.f(b)
            if min(fa, fb) <= w <= max(fa, fb):
                x = _solve_monotone(spec, a, b, w)
                out.append(x)
        # a root at a shared critical breakpoint is found twice: it is double
        dedup = []
        for x in sorted(out):
            if dedup and abs(x - dedup[-1]) < 1e-14 and x not in crit and dedup[-1] not in crit:
                continue
            dedup.append(x)
        return dedup
    coeffs = np.array(spec.coefficients, dtype=complex)
    coeffs[-1] -= w
    roots = np.roots(coeffs)
    out = []
    for r in roots:
        z = complex(r)
        for _ in range(3):
            d = spec.df(z)
            if d == 0:
                break
            step = (spec.f(z) - w) / d
            z -= step
            if abs(step) < 1e-16 * max(1.0, abs(z)):
                break
        out.append(z)
    if not all(np.isfinite(out)):
        raise NoConvergenceError("root solver failed")
    return sorted(out, key=lambda z: (round(z.real, 12), round(z.imag, 12)))


def pull_interval(spec: MapSpec, u0: float, u1: float) -> list:
    """Components of f^{-1}((u0, u1)) in the domain.

    Returns a list of ``(a, b, crit)`` with ``crit`` the tuple of indices
    (into ``spec.critical_points``) of critical points inside (a, b).
    """
    lo, hi = spec.domain
    # targets are relatively open in the domain
    tol = 1e-15 * spec.scale
    if u0 <= lo + tol:
        u0 = -math.inf
    if u1 >= hi - tol:
        u1 = math.inf
    if spec.degree == 2:
        a, v, fv = _quad_data(spec)
        q0, q1 = (u0 - fv) / a, (u1 - fv) / a
        qlo, qhi = min(q0, q1), max(q0, q1)
        if qhi <= 0:
            return []
        shi = math.sqrt(qhi)
        if qlo < 0:
            comps = [(v - shi, v + shi, (0,))]
        else:
            slo = math.sqrt(qlo)
            comps = [(v - shi, v - slo, ()), (v + slo, v + shi, ())]
        out = []
        for x0, x1, cr in comps:
            x0, x1 = max(x0, lo), min(x1, hi)
            if x1 > x0:
                out.append((x0, x1, cr))
        return out
    bp = _breakpoints(spec)
    crit_locs = [float(c.location) for c in spec.critical_points]
    pieces = []
    for i in range(len(bp) - 1):
        a, b = bp[i], bp[i + 1]
        fa, fb = spec.f(a), spec.f(b)
        ylo, yhi = min(fa, fb), max(fa, fb)
        s0, s1 = max(u0, ylo), min(u1, yhi)
        if s1 <= s0:
            continue
        inc = fb > fa
        x0 = a if s0 == (fa if inc else fb) else _solve_monotone(spec, a, b, s0)
        x1 = b if s1 == (fb if inc else fa) else _solve_monotone(spec, a, b, s1)
        pieces.append((min(x0, x1), max(x0, x1)))
    merged = []
    for p in sorted(pieces):
        if merged and abs(p[0] - merged[-1][1]) < 1e-15 * spec.scale:
            joint = p[0]
            if u0 < spec.f(joint) < u1 and lo < joint < hi:
                merged[-1] = (merged[-1][0], p[1])
                continue
        merged.append(p)
    out = []
    for x0, x1 in merged:
        cr = tuple(i for i, c in enumerate(crit_locs) if x0 < c < x1)
        out.append((x0, x1, cr))
    return out


def component_containing(spec: MapSpec, interval, x: float):
    """The component of f^{-1}(interval) containing ``x`` (or None)."""
    best = None
    for a, b, cr in pull_interval(spec, interval[0], interval[1]):
        if a <= x <= b:
            d = min(x - a, b - x)
            if best is None or d > best[0]:
                best = (d, (a, b, cr))
    return None if best is None else best[1]


# ---------------------------------------------------------------------------
# real pull-back trees
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class RNode:
    """A real pull-back node: interval, depth, parent (= image component)."""

    a: float
    b: float
    depth: int
    parent: "RNode | None"
    crit: tuple
    hits: int
    label: object
    index: int = 0

    @property
    def diameter(self):
        return self.b - self.a

    @property
    def degree(self):
        return 2 ** self.hits

    def chain(self):
        out, n = [], self
        while n.parent is not None:
            out.append(n.index)
            n = n.parent
        return tuple(out)

    def ancestors(self):
        """[self, f(self)-component, ..., root]."""
        out, n = [], self
        while n is not None:
            out.append(n)
            n = n.parent
        return out

    def key(self, digits: int = 12):
        return (self.depth, round(self.a, digits), round(self.b, digits))


def real_children(spec: MapSpec, node: RNode) -> list:
    out = []
    for i, (a, b, cr) in enumerate(pull_interval(spec, node.a, node.b)):
        out.append(RNode(a, b, node.depth + 1, node, cr, node.hits + (1 if cr else 0), node.label, i))
    return out


def real_tree(spec: MapSpec, roots, depth: int, budget: int = DEFAULT_BUDGET, expand=None):
    """Levels of the full pull-back tree of the given root intervals.

    ``roots`` is a list of ``(a, b, label)``. ``expand(node)`` may return
    False to stop descending below a node.
    """
    level = [RNode(a, b, 0, None, tuple(i for i, c in enumerate(_crit_locations(spec)) if a < c < b),
                   0, lab) for a, b, lab in roots]
    levels = [level]
    trunc = Truncation(nodes=len(level))
    for _ in range(depth):
        nxt = []
        for n in level:
            if expand is not None and not expand(n):
                continue
            if trunc.nodes >= budget:
                trunc.truncated = True
                trunc.unexplored += 1
                continue
            kids = real_children(spec, n)
            trunc.nodes += len(kids)
            nxt.extend(kids)
        levels.append(nxt)
        level = nxt
    return levels, trunc


def _node_to_component(node: RNode, target, anchor=None) -> PullbackComponent:
    if anchor is None:
        anchor = 0.5 * (node.a + node.b)
    return PullbackComponent(
        depth=node.depth, anchor=anchor, target=target, branch_chain=node.chain()[::-1],
        diameter=node.diameter, degree=node.degree, diffeomorphic=node.hits == 0,
        critical_hits=node.hits, region=(node.a, node.b))


def real_preimages_deep(spec: MapSpec, y: float, m: int) -> np.ndarray:
    pts = [float(y)]
    for _ in range(m):
        nxt = []
        for p in pts:
            nxt.extend(preimages(spec, p))
        pts = nxt
    return np.array(pts)


# ---------------------------------------------------------------------------
# complex maps: continuation of inverse branches
# ---------------------------------------------------------------------------

def _iterate_cplx(spec: MapSpec, z, m: int):
    """f^m, Df^m and the distance of the orbit to Crit (levels 0..m-1)."""
    crit = np.array([c.location for c in spec.critical_points], dtype=complex)
    F = np.asarray(z, dtype=complex)
    D = np.ones_like(F)
    dmin = np.full(F.shape, np.inf)
    for _ in range(m):
        if crit.size:
            dmin = np.minimum(dmin, np.min(np.abs(F[..., None] - crit), axis=-1))
        D = D * spec.df(F)
        F = spec.f(F)
    return F, D, dmin


def _iterate_err(spec: MapSpec, z, m: int):
    """Forward rounding-error bound for evaluating f^m at z."""
    absc = np.abs(np.asarray(spec.coefficients))
    F = np.asarray(z, dtype=complex)
    err = np.zeros(F.shape)
    for _ in range(m):
        err = np.abs(spec.df(F)) * err + 4.5e-16 * np.polyval(absc, np.abs(F))
        F = spec.f(F)
    return err


def _track(spec: MapSpec, m: int, z0, w_fun, ts, amb_tol: float = 1e-9):
    """Continue solutions of f^m(z) = w(t) from z0 at ts[0]; returns lifts at ts."""
    z = np.array(z0, dtype=complex)
    out = [z.copy()]
    t = ts[0]
    h = ts[1] - ts[0] if len(ts) > 1 else 0.0
    for k in range(1, len(ts)):
        target = ts[k]
        while t < target - 1e-15:
            step = min(h, target - t)
            w0, w1 = w_fun(t), w_fun(t + step)
            F, D, _ = _iterate_cplx(spec, z, m)
            with np.errstate(divide="ignore", invalid="ignore"):
                zp = z + (w1 - w0) / D
            zc = zp.copy()
            ok = np.all(np.isfinite(zp))
            if ok:
                floor = 4.0 * _iterate_err(spec, zp, m) / np.maximum(np.abs(D), 1e-300)
                for _ in range(10):
                    F, D, dmin = _iterate_cplx(spec, zc, m)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        dz = (F - w1) / D
                    zc = zc - dz
                    if not np.all(np.isfinite(zc)):
                        ok = False
                        break
                    if np.all(np.abs(dz) <= np.maximum(1e-14 * np.maximum(1.0, np.abs(zc)), floor)):
                        break
                else:
                    ok = False
            if ok:
                pred = np.abs(zp - z)
                corr = np.abs(zc - zp)
                ok = bool(np.all(corr <= 0.25 * pred + 1e-13 * np.maximum(1.0, np.abs(zc))))
            if ok:
                _, _, dmin = _iterate_cplx(spec, zc, m)
                if np.any(dmin < amb_tol):
                    raise AmbiguityError("lifted path passes a critical point", depth=m)
                z = zc
                t = t + step
                h = min(step * 2.0, ts[k] - ts[k - 1]) if k < len(ts) else step
            else:
                h = step / 2.0
                if h < 1e-13:
                    raise AmbiguityError("branch tracking failed to resolve", depth=m)
        out.append(z.copy())
    return np.array(out)


def winding_number(poly, p) -> int:
    poly = np.asarray(poly, dtype=complex)
    v = poly - p
    if np.any(v == 0):
        return 0
    ang = np.angle(np.roll(v, -1) / v)
    return int(round(ang.sum() / (2 * np.pi)))


def _regular_start(spec: MapSpec, anchor, m: int, center, rho: float, tol: float = 1e-7):
    """Replace an anchor sitting on a critical point of f^m by a nearby
    regular point of the same component."""
    anchor = complex(anchor)
    _, _, dmin = _iterate_cplx(spec, np.array([anchor]), m)
    if dmin[0] > tol * max(1.0, abs(anchor)):
        return anchor
    orb = [anchor]
    for _ in range(m):
        orb.append(complex(spec.f(orb[-1])))
    y = orb[-1]
    room = rho - abs(y - center)
    z = y + 1e-3 * room * np.exp(0.7j)
    for j in range(m - 1, -1, -1):
        z = min(preimages(spec, z), key=lambda q: abs(q - orb[j]))
    return z


def _lift_boundaries(spec: MapSpec, centers, rho: float, m: int, anchors, n_samples: int = 64,
                     max_loops: int | None = None):
    """Lift the circles |w - center_i| = rho through f^m starting near anchor_i.

    Returns a list of ``(polygon, loops)`` per anchor, where ``loops`` is
    the monodromy degree.
    """
    centers = np.asarray(centers, dtype=complex)
    anchors = np.asarray(anchors, dtype=complex)
    if m == 0:
        th = 2 * np.pi * np.arange(n_samples) / n_samples
        return [(c + rho * np.exp(1j * th), 1) for c in centers]
    anchors = np.array([_regular_start(spec, a, m, c, rho) for a, c in zip(anchors, centers)])
    start_w = np.array([complex(v) for v in _iterate_cplx(spec, anchors, m)[0]])
    bpt = centers + rho
    radial = _track(spec, m, anchors, lambda t: start_w + t * (bpt - start_w), np.linspace(0, 1, 9))
    zb = radial[-1]
    if max_loops is None:
        max_loops = spec.degree ** m
    ts = 2 * np.pi * np.arange(n_samples + 1) / n_samples
    polys = [[] for _ in anchors]
    loops = np.zeros(len(anchors), dtype=int)
    active = np.arange(len(anchors))
    cur = zb.copy()
    while active.size:
        c_act = centers[active]
        lift = _track(spec, m, cur[active], lambda t: c_act + rho * np.exp(1j * t), ts)
        for j, i in enumerate(active):
            polys[i].append(lift[:-1, j])
        loops[active] += 1
        end = lift[-1]
        cur[active] = end
        still = []
        for j, i in enumerate(active):
            seg = lift[:, j]
            spacing = np.max(np.abs(np.diff(seg)))
            if abs(end[j] - zb[i]) > 1e-3 * spacing + 1e-14 and loops[i] < max_loops:
                still.append(i)
        active = np.array(still, dtype=int)
    return [(np.concatenate(p), int(l)) for p, l in zip(polys, loops)]


def _complex_component(spec: MapSpec, target: Ball, m: int, anchor, poly, loops) -> PullbackComponent:
    crit = spec.critical_points
    z = np.asarray(poly, dtype=complex)
    deg, hits, chain = 1, 0, []
    x = complex(anchor)
    for j in range(m):
        local = 1
        for c in crit:
            if winding_number(z, c.location) != 0:
                local += c.order - 1
        if local > 1:
            hits += 1
        deg *= local
        y = complex(spec.f(x))
        pre = preimages(spec, y)
        chain.append(int(np.argmin([abs(p - x) for p in pre])))
        x = y
        z = spec.f(z)
    diam = float(pdist(np.column_stack([poly.real, poly.imag])).max()) if len(poly) > 1 else 0.0
    return PullbackComponent(depth=m, anchor=anchor, target=target, branch_chain=tuple(chain),
                             diameter=diam, degree=deg, diffeomorphic=deg == 1, critical_hits=hits,
                             region=np.asarray(poly), monodromy_degree=loops)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _as_ball(target):
    if isinstance(target, Ball):
        return target
    c, r = target
    return Ball(c, float(r))


def component_at(spec: MapSpec, target, depth: int, anchor, n_samples: int = 64) -> PullbackComponent:
    """The component of f^{-depth}(target) containing ``anchor``.

    ``target`` is a :class:`Ball` (or ``(center, radius)``); real maps also
    accept an interval ``("interval", lo, hi)``.
    """
    if spec.is_real:
        lo, hi = _real_target(target)
        y = float(np.real(iterate_with_derivative(spec, float(anchor), depth)[0]))
        if not lo < y < hi:
            raise PreconditionError(f"f^{depth}(anchor) = {y} misses the target")
        pts = [float(anchor)]
        for _ in range(depth):
            pts.append(float(spec.f(pts[-1])))
        node = RNode(lo, hi, 0, None, tuple(i for i, c in enumerate(_crit_locations(spec)) if lo < c < hi),
                     0, None)
        for j in range(depth - 1, -1, -1):
            comp = None
            for i, (a, b, cr) in enumerate(pull_interval(spec, node.a, node.b)):
                if a <= pts[j] <= b:
                    comp = RNode(a, b, node.depth + 1, node, cr, node.hits + (1 if cr else 0), None, i)
                    break
            if comp is None:
                raise PreconditionError("anchor orbit left the pulled-back interval")
            node = comp
        return _node_to_component(node, target, anchor=float(anchor))
    ball = _as_ball(target)
    y = complex(iterate_with_derivative(spec, complex(anchor), depth)[0])
    if abs(y - ball.center) >= ball.radius:
        raise PreconditionError(f"f^{depth}(anchor) misses the target")
    (poly, loops), = _lift_boundaries(spec, [ball.center], ball.radius, depth, [anchor], n_samples)
    return _complex_component(spec, ball, depth, complex(anchor), poly, loops)


def _real_target(target):
    if isinstance(target, tuple) and len(target) == 3 and target[0] == "interval":
        return float(target[1]), float(target[2])
    b = _as_ball(target)
    return b.interval()


def all_components(spec: MapSpec, target, depth: int, budget: int = DEFAULT_BUDGET,
                   n_samples: int = 64, brute_samples: int = 9):
    """All components of f^{-depth}(target) with a truncation report.

    Complex components carry ``brute_degree``: the number of preimages of
    a generic interior point of the target inside the lifted boundary.
    """
    if spec.is_real:
        lo, hi = _real_target(target)
        levels, trunc = real_tree(spec, [(lo, hi, None)], depth, budget)
        return [_node_to_component(n, target) for n in levels[depth]], trunc
    ball = _as_ball(target)
    d = spec.degree
    trunc = Truncation(nodes=0)
    if d ** depth > budget:
        trunc.truncated = True
        trunc.unexplored = d ** depth
        return [], trunc
    # preimages of a generic interior point serve as anchors and count degrees
    pts = [complex(ball.center) + 0.3 * ball.radius * np.exp(1.1j)]
    for _ in range(depth):
        nxt = []
        for p in pts:
            nxt.extend(preimages(spec, p))
        pts = nxt
    pts = np.array(pts)
    trunc.nodes = len(pts)
    # distinct anchors (double roots appear twice)
    uniq = []
    for p in pts:
        if not any(abs(p - q) < 1e-10 for q in uniq):
            uniq.append(p)
    lifted = _lift_boundaries(spec, [ball.center] * len(uniq), ball.radius, depth, uniq, n_samples)
    assigned = np.zeros(len(pts), dtype=bool)
    comps = []
    for p, (poly, loops) in zip(uniq, lifted):
        if assigned[np.argmin(np.abs(pts - p))]:
            continue
        inside = np.array([winding_number(poly, q) != 0 for q in pts])
        inside &= ~assigned
        assigned |= inside
        comp = _complex_component(spec, ball, depth, p, poly, loops)
        comp.brute_degree = int(inside.sum())
        comps.append(comp)
    return comps, trunc


def brute_force_degree_real(spec: MapSpec, comp: PullbackComponent, target, n_points: int = 33) -> int:
    """Max over sampled target points of the number of preimages in comp."""
    lo, hi = _real_target(target)
    a, b = comp.region
    best = 0
    for y in np.linspace(lo, hi, n_points + 2)[1:-1]:
        pre = real_preimages_deep(spec, y, comp.depth)
        best = max(best, int(np.sum((pre > a) & (pre < b))))
    return best


def tB(spec: MapSpec, c, radius: float):
    """Component of f^{-1}(B(f(c), radius)) containing c."""
    if spec.is_real:
        v = float(spec.f(c))
        comp = component_containing(spec, (v - radius, v + radius), float(c))
        return (comp[0], comp[1])
    return component_at(spec, Ball(complex(spec.f(c)), radius), 1, c)


def region_distance(region, p) -> float:
    if isinstance(region, tuple):
        a, b = region
        return max(0.0, a - p, p - b) if np.isrealobj(p) else abs(complex(min(max(p.real, a), b)) - p)
    if winding_number(region, p) != 0:
        return 0.0
    return float(np.min(np.abs(np.asarray(region) - p)))


@dataclass
class ContractionReport:
    r: float
    rows: list = field(default_factory=list)
    worst_ratio: float = 0.0
    passed: bool = True
    vacuous: bool = False
    truncation: Truncation = field(default_factory=Truncation)


def backward_contraction_probe(spec: MapSpec, r: float, delta_grid, depth: int,
                               budget: int = DEFAULT_BUDGET) -> ContractionReport:
    """max diam(W)/delta over pull-backs W of tB(c, r delta) near f(Crit)."""
    if r <= 1:
        raise PreconditionError("r must exceed 1")
    rep = ContractionReport(r=r)
    crit = spec.crit_prime
    if not crit or depth == 0 or len(delta_grid) == 0:
        rep.vacuous = True
        return rep
    cvals = [spec.f(c.location) for c in spec.critical_points]
    for delta in delta_grid:
        for c in crit:
            worst, count = 0.0, 0
            if spec.is_real:
                a, b = tB(spec, c.location, r * delta)
                levels, tr = real_tree(spec, [(a, b, None)], depth, budget)
                rep.truncation.truncated |= tr.truncated
                rep.truncation.unexplored += tr.unexplored
                nodes = [n for lev in levels[1:] for n in lev]
                for n in nodes:
                    if min(region_distance((n.a, n.b), float(v)) for v in cvals) <= delta:
                        count += 1
                        worst = max(worst, n.diameter / delta)
            else:
                # unicritical maps: tB(c, r delta) is the only component of
                # f^{-1}(B(f(c), r delta)), so its pull-backs are deeper ones of the ball
                ball = Ball(complex(spec.f(c.location)), r * delta)
                for m in range(1, depth + 1):
                    comps, tr = all_components(spec, ball, m + 1, budget)
                    rep.truncation.truncated |= tr.truncated
                    for comp in comps:
                        if min(region_distance(comp.region, complex(v)) for v in cvals) <= delta:
                            count += 1
                            worst = max(worst, comp.diameter / delta)
            rep.rows.append({"delta": delta, "critical_point": c.location, "count": count, "ratio": worst})
            rep.worst_ratio = max(rep.worst_ratio, worst)
    rep.passed = rep.worst_ratio < 1.0
    return rep


def _fit_loglog(depths, theta):
    x = np.log(np.asarray(depths, dtype=float))
    y = np.log(np.asarray(theta, dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(-coef[0]), resid


def shrinking_exponent(spec: MapSpec, rho: float, depths, base_points=None, n_base: int = 256,
                       seed: int = 0, n_samples: int = 64) -> ShrinkingReport:
    """theta_m = max over base points of the diameter of the depth-m pull-back
    of B(f^m x, rho) containing x, with a log-log least-squares fit."""
    if base_points is None:
        from .dimension import julia_sample

        base_points = julia_sample(spec, n_base, 40, seed).points
    base_points = list(base_points)
    depths = tuple(int(m) for m in depths)
    theta, counts = [], []
    excluded = 0
    for m in depths:
        if spec.is_real:
            diams = []
            for x in base_points:
                y = float(iterate_with_derivative(spec, float(x), m)[0])
                try:
                    comp = component_at(spec, Ball(y, rho), m, float(x))
                except PreconditionError:
                    excluded += 1
                    continue
                diams.append(comp.diameter)
        else:
            xs = np.array(base_points, dtype=complex)
            ys = iterate_with_derivative(spec, xs, m)[0]
            diams = []
            try:
                lifted = _lift_boundaries(spec, ys, rho, m, xs, n_samples)
                for poly, _ in lifted:
                    diams.append(float(pdist(np.column_stack([poly.real, poly.imag])).max()))
            except AmbiguityError:
                for x, y in zip(xs, ys):
                    try:
                        (poly, _), = _lift_boundaries(spec, [y], rho, m, [x], n_samples)
                        diams.append(float(pdist(np.column_stack([poly.real, poly.imag])).max()))
                    except AmbiguityError:
                        excluded += 1
        theta.append(max(diams) if diams else float("nan"))
        counts.append(len(diams))
    beta, resid = _fit_loglog(depths, theta)
    return ShrinkingReport(rho=rho, depths=depths, theta=tuple(theta), fitted_beta=beta,
                           fit_residual=resid, n_base_points=len(base_points), excluded=excluded,
                           counts=tuple(counts))


def write_shrinking_csv(report: ShrinkingReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "theta", "count"])
        for m, t, c in zip(report.depths, report.theta, report.counts):
            w.writerow([m, repr(t), c])


def sample_subcomponent(spec: MapSpec, comp: PullbackComponent, eps: float, n: int = 64) -> np.ndarray:
    """Points of the part of ``comp`` mapped onto B(y, eps*eta)."""
    ball = _as_ball(comp.target)
    m = comp.depth
    anchor = center_preimage(spec, comp)
    if spec.is_real:
        y, eta = float(np.real(ball.center)), ball.radius * eps
        inner = component_at(spec, Ball(y, eta), m, anchor)
        a, b = inner.region
        return np.linspace(a, b, n)
    r = ball.radius * eps
    half = n // 2
    th = 2 * np.pi * np.arange(half) / half
    ws = np.concatenate([ball.center + r * np.exp(1j * th),
                         ball.center + 0.5 * r * np.exp(1j * (th + 0.1))])
    anchor = complex(anchor)
    y0 = complex(iterate_with_derivative(spec, anchor, m)[0])
    zs = _track(spec, m, np.full(len(ws), anchor), lambda t: y0 + t * (ws - y0), np.linspace(0, 1, 17))
    return zs[-1]


def center_preimage(spec: MapSpec, comp: PullbackComponent):
    """A preimage of the target centre under f^depth lying in ``comp``."""
    ball = _as_ball(comp.target)
    m = comp.depth
    if spec.is_real:
        pre = real_preimages_deep(spec, float(np.real(ball.center)), m)
    else:
        pre = [complex(ball.center)]
        for _ in range(m):
            pre = [q for p in pre for q in preimages(spec, p)]
    inside = [p for p in pre if comp.contains(p)]
    if not inside:
        raise PreconditionError("no preimage of the target centre in the component")
    return min(inside, key=lambda p: abs(p - comp.anchor))
