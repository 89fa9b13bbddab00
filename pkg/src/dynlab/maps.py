"""Polynomial map families with exact derivatives and critical data.

Coefficients are stored highest degree first (``numpy.polyval`` order), so
``(1, 0, -2)`` is ``x**2 - 2`` and ``(-4, 4, 0)`` is ``4x(1-x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainViolationError, EscapeError, NoConvergenceError

REAL = "real-polynomial-on-interval"
COMPLEX = "complex-polynomial"
KINDS = (REAL, COMPLEX)


@dataclass(frozen=True)
class CriticalPoint:
    location: complex | float
    order: int
    in_julia: bool


@dataclass(frozen=True)
class OrbitSegment:
    start: complex | float
    length: int
    points: tuple
    derivative_magnitudes: tuple


@dataclass(frozen=True)
class MapSpec:
    """A real polynomial on an invariant interval or a complex polynomial.

    Parameters
    ----------
    kind : str
        ``"real-polynomial-on-interval"`` or ``"complex-polynomial"``.
    coefficients : tuple
        Highest degree first.
    domain : tuple or None
        ``(x_lo, x_hi)`` in the real case, ``None`` in the complex case.
    critical_points : tuple of CriticalPoint
        Filled in automatically by :func:`make_map`.
    """

    kind: str
    coefficients: tuple
    domain: tuple | None = None
    critical_points: tuple = field(default=())

    # -- basic data -----------------------------------------------------
    @property
    def is_real(self) -> bool:
        return self.kind == REAL

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def dcoefficients(self) -> tuple:
        return tuple(np.polyder(np.asarray(self.coefficients)).tolist())

    @property
    def escape_radius(self) -> float:
        return 2.0 * max(1.0, float(sum(abs(c) for c in self.coefficients)))

    @property
    def scale(self) -> float:
        if self.is_real:
            return float(self.domain[1] - self.domain[0])
        return self.escape_radius

    @property
    def crit_prime(self) -> tuple:
        return tuple(c for c in self.critical_points if c.in_julia)

    @property
    def ell_max(self) -> int:
        orders = [c.order for c in self.crit_prime]
        return max(orders) if orders else 0

    # -- evaluation (vectorised, no domain checks) ----------------------
    def f(self, x):
        return np.polyval(self._c, x)

    def df(self, x):
        return np.polyval(self._dc, x)

    @property
    def _c(self):
        return np.asarray(self.coefficients)

    @property
    def _dc(self):
        return np.polyder(np.asarray(self.coefficients))

    def in_domain(self, x, tol: float = 1e-12) -> bool:
        if not self.is_real:
            return bool(np.isfinite(x))
        lo, hi = self.domain
        t = tol * self.scale
        return bool(lo - t <= x <= hi + t)

    def critical_values(self) -> list:
        return [self.f(c.location) for c in self.critical_points]


def _cast(kind, values):
    if kind == REAL:
        return tuple(float(np.real(v)) for v in values)
    return tuple(complex(v) for v in values)


def _group_roots(roots, tol):
    groups: list[list] = []
    for r in sorted(roots, key=lambda z: (np.real(z), np.imag(z))):
        for g in groups:
            if abs(g[0] - r) < tol:
                g.append(r)
                break
        else:
            groups.append([r])
    return [(np.mean(g), len(g)) for g in groups]


def _critical_in_julia(spec: MapSpec, c, iters: int = 2000, max_period: int = 64) -> bool:
    """Heuristic Julia membership: escaping or attracted critical orbits are Fatou."""
    z = c
    R = spec.escape_radius
    for _ in range(iters):
        z = spec.f(z)
        if not np.isfinite(z) or abs(z) > R:
            return False
    for p in range(1, max_period + 1):
        w, mult = z, 1.0
        for _ in range(p):
            mult *= abs(spec.df(w))
            w = spec.f(w)
        if abs(w - z) <= 1e-9 * max(1.0, abs(z)):
            return mult >= 1.0
    return True


def make_map(kind: str, coefficients: Sequence, domain=None, critical_points=None) -> MapSpec:
    """Build a :class:`MapSpec`, enumerating critical points from the roots of Df."""
    if kind not in KINDS:
        raise ValueError(f"unknown map kind {kind!r}")
    coeffs = _cast(kind, coefficients)
    while len(coeffs) > 1 and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if len(coeffs) < 3:
        raise ValueError("degree must be at least 2")
    if kind == REAL:
        if domain is None:
            raise ValueError("real maps need a domain")
        domain = (float(domain[0]), float(domain[1]))
        if not domain[0] < domain[1]:
            raise ValueError("empty domain")
    else:
        domain = None
    spec = MapSpec(kind, coeffs, domain, ())
    if critical_points is None:
        droots = np.roots(np.polyder(np.asarray(coeffs)))
        scale = max(1.0, float(np.max(np.abs(droots)))) if len(droots) else 1.0
        found = []
        for loc, mult in _group_roots(droots, 1e-6 * scale):
            if kind == REAL:
                if abs(np.imag(loc)) > 1e-9 * scale:
                    continue
                loc = float(np.real(loc))
                if not domain[0] < loc < domain[1]:
                    continue
            else:
                loc = complex(loc)
            found.append(CriticalPoint(loc, int(mult) + 1, bool(_critical_in_julia(spec, loc))))
        critical_points = tuple(found)
    spec = MapSpec(kind, coeffs, domain, tuple(critical_points))
    if kind == REAL:
        _check_real_domain(spec)
    return spec


def _check_real_domain(spec: MapSpec) -> None:
    lo, hi = spec.domain
    tol = 1e-9 * spec.scale
    grid = np.linspace(lo, hi, 2049)
    vals = spec.f(grid)
    if vals.min() < lo - tol or vals.max() > hi + tol:
        raise ValueError("domain is not forward invariant")
    for e in (lo, hi):
        fe = spec.f(e)
        if min(abs(fe - lo), abs(fe - hi)) > tol:
            raise ValueError("map is not boundary-anchored")


# -- standard families ---------------------------------------------------

def chebyshev() -> MapSpec:
    """4x(1-x) on [0, 1]."""
    return make_map(REAL, (-4.0, 4.0, 0.0), (0.0, 1.0))


def real_quadratic(c: float) -> MapSpec:
    """x**2 + c on its invariant interval [-beta, beta], -2 <= c <= 1/4."""
    if not -2.0 <= c <= 0.25:
        raise ValueError("c must lie in [-2, 1/4]")
    beta = (1.0 + np.sqrt(1.0 - 4.0 * c)) / 2.0
    if c == -2.0:
        beta = 2.0
    return make_map(REAL, (1.0, 0.0, c), (-beta, beta))


def complex_quadratic(c: complex) -> MapSpec:
    """z**2 + c on the plane."""
    return make_map(COMPLEX, (1.0, 0.0, c))


# -- operations ----------------------------------------------------------

def evaluate(spec: MapSpec, x):
    """Exact polynomial evaluation with a domain check in the real case."""
    if spec.is_real:
        if not spec.in_domain(x):
            raise DomainViolationError(f"{x!r} outside {spec.domain}")
        return float(spec.f(x))
    if not np.isfinite(x):
        raise DomainViolationError("non-finite input")
    return complex(spec.f(x))


def differentiate(spec: MapSpec, x):
    if spec.is_real:
        return float(spec.df(x))
    return complex(spec.df(x))


def orbit(spec: MapSpec, x, n: int, check: bool = True) -> OrbitSegment:
    """Orbit of length n with |Df^k(x)| for k = 0..n.

    Raises
    ------
    EscapeError
        If the orbit leaves the domain (real) or escape disk (complex).
    """
    pts = [x]
    ders = [1.0]
    z, d = x, 1.0
    R = spec.escape_radius
    for k in range(1, n + 1):
        d *= abs(spec.df(z))
        z = spec.f(z)
        if spec.is_real:
            z = float(z)
            if check and not spec.in_domain(z, 1e-9):
                raise EscapeError(f"orbit left the domain at n={k}", k)
        else:
            z = complex(z)
            if check and abs(z) > R:
                raise EscapeError(f"orbit escaped at n={k}", k)
        pts.append(z)
        ders.append(float(d))
    return OrbitSegment(x, n, tuple(pts), tuple(ders))


@dataclass(frozen=True)
class LargeDerivativesReport:
    critical_points: tuple
    critical_values: tuple
    derivatives: tuple
    in_julia: tuple
    diverging: tuple


def large_derivatives_report(spec: MapSpec, horizon: int, threshold: float = 10.0) -> LargeDerivativesReport:
    """|Df^n(v)| for n = 1..horizon at every critical value v.

    All critical points are reported; ``in_julia`` marks the members of
    Crit'. The divergence flag requires the last value to exceed both the
    first one and ``threshold``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    locs, vals, seqs, flags, inj = [], [], [], [], []
    for c in spec.critical_points:
        v = spec.f(c.location)
        v = float(v) if spec.is_real else complex(v)
        seg = orbit(spec, v, horizon)
        seq = tuple(seg.derivative_magnitudes[1:])
        locs.append(c.location)
        vals.append(v)
        seqs.append(seq)
        inj.append(c.in_julia)
        flags.append(bool(seq[-1] > seq[0] and seq[-1] > threshold))
    return LargeDerivativesReport(tuple(locs), tuple(vals), tuple(seqs), tuple(inj), tuple(flags))


def iterate_with_derivative(spec: MapSpec, x, n: int):
    """Return f^n(x) and the signed/complex Df^n(x) (vectorised)."""
    z = x
    d = np.ones_like(np.asarray(x, dtype=complex if not spec.is_real else float))
    for _ in range(n):
        d = d * spec.df(z)
        z = spec.f(z)
    return z, d


def find_periodic_point(spec: MapSpec, period: int, seed, tol: float = 1e-12, max_iter: int = 200):
    """Newton iteration on f^p(x) - x from ``seed``.

    Returns
    -------
    (point, multiplier)
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    x = float(seed) if spec.is_real else complex(seed)
    scale = max(1.0, abs(x))
    for _ in range(max_iter):
        y, d = iterate_with_derivative(spec, x, period)
        g = y - x
        if abs(g) <= tol * scale:
            break
        denom = d - 1.0
        if denom == 0:
            raise NoConvergenceError("zero Newton denominator")
        x = x - g / denom
        if spec.is_real:
            x = float(x)
        if not np.isfinite(x) or abs(x) > 10 * spec.escape_radius:
            raise NoConvergenceError("Newton iteration diverged")
    else:
        raise NoConvergenceError(f"no convergence after {max_iter} iterations")
    y, d = iterate_with_derivative(spec, x, period)
    if abs(y - x) > tol * scale:
        raise NoConvergenceError("residual above tolerance")
    if spec.is_real:
        return float(x), float(d)
    return complex(x), complex(d)


def repelling_fixed_point(spec: MapSpec):
    """A repelling fixed point, preferring the one of largest multiplier."""
    roots = np.roots(np.polysub(spec._c, [1.0, 0.0]))
    best = None
    for r in roots:
        if spec.is_real:
            if abs(r.imag) > 1e-9:
                continue
            r = float(r.real)
            if not spec.in_domain(r, 1e-9):
                continue
            r = min(max(r, spec.domain[0]), spec.domain[1])
        else:
            r = complex(r)
        try:
            p, m = find_periodic_point(spec, 1, r)
        except NoConvergenceError:
            continue
        if abs(m) > 1 and (best is None or abs(m) > abs(best[1])):
            best = (p, m)
    if best is None:
        raise NoConvergenceError("no repelling fixed point")
    return best


def map_from_config(cfg: dict) -> MapSpec:
    """Build a map from ``map.kind``, ``map.coefficients`` and ``map.domain``."""
    kind = cfg["map.kind"].strip()
    coeffs = [complex(s.strip().replace(" ", "")) for s in cfg["map.coefficients"].split(",")]
    if kind == REAL:
        coeffs = [c.real for c in coeffs]
        dom = [float(s) for s in cfg["map.domain"].split(",")]
        return make_map(REAL, coeffs, dom)
    return make_map(kind, coeffs)
