"""Julia-set sampling, box-counting dimension and hyperbolic-dimension brackets."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import brentq

from .maps import MapSpec, repelling_fixed_point


@dataclass
class JuliaSample:
    points: np.ndarray
    method: str
    depth: int
    seed: int
    resampled: int = 0


@dataclass
class DimensionReport:
    scales: tuple
    counts: tuple
    dimension: float
    bracket: tuple
    method: str
    undersampled: bool = False
    notes: list = field(default_factory=list)


def _random_preimage(spec: MapSpec, w: np.ndarray, rng: np.random.Generator):
    """One random inverse branch per entry; NaN where no real preimage exists."""
    n = len(w)
    if spec.degree == 2:
        a, b, c = spec.coefficients
        v = -b / (2 * a)
        fv = c - b * b / (4 * a)
        q = (w - fv) / a
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        if spec.is_real:
            ok = q >= 0
            root = v + sign * np.sqrt(np.where(ok, q, 0.0))
            lo, hi = spec.domain
            ok &= (root >= lo - 1e-12) & (root <= hi + 1e-12)
            return np.where(ok, np.clip(root, lo, hi), np.nan)
        return v + sign * np.sqrt(q.astype(complex))
    out = np.empty(n, dtype=float if spec.is_real else complex)
    from .pullback import preimages

    for i, wi in enumerate(w):
        pre = preimages(spec, wi) if np.isfinite(wi) else []
        out[i] = pre[rng.integers(len(pre))] if pre else np.nan
    return out


def julia_sample(spec: MapSpec, n_points: int, depth: int, seed: int) -> JuliaSample:
    """Random inverse-branch walks of length ``depth`` from a repelling fixed point."""
    rng = np.random.default_rng(seed)
    p, _ = repelling_fixed_point(spec)
    dtype = float if spec.is_real else complex
    z = np.full(n_points, p, dtype=dtype)
    resampled = 0
    for _ in range(depth):
        nz = _random_preimage(spec, z, rng)
        bad = ~np.isfinite(nz)
        while bad.any():
            resampled += int(bad.sum())
            nz[bad] = _random_preimage(spec, z[bad], rng)
            bad = ~np.isfinite(nz)
        z = nz
    return JuliaSample(points=z, method="inverse-iteration", depth=depth, seed=seed, resampled=resampled)


def _escapes(spec: MapSpec, Z: np.ndarray, R: float, max_iter: int) -> np.ndarray:
    shape = Z.shape
    Z = Z.ravel()
    esc = np.zeros(Z.size, dtype=bool)
    # iterate only live points; a point whose |Df^n| drops below e^-40 is
    # being attracted and will not escape, so it is retired as bounded
    idx = np.arange(Z.size)
    z = Z.copy()
    logd = np.zeros(Z.size)
    for _ in range(max_iter):
        with np.errstate(divide="ignore"):
            logd += np.log(np.abs(spec.df(z)))
        z = spec.f(z)
        out = np.abs(z) > R
        if out.any():
            esc[idx[out]] = True
        keep = ~out & (logd > -40.0)
        if not keep.all():
            idx, z, logd = idx[keep], z[keep], logd[keep]
        if idx.size == 0:
            break
    return esc.reshape(shape)


def boundary_scan_sample(spec: MapSpec, resolution: int = 2048, max_iter: int = 400,
                         box=None, strip_points: int = 1 << 22) -> JuliaSample:
    """Centres of grid cells whose corners disagree on escaping (complex maps)."""
    R = spec.escape_radius
    if box is None:
        box = (-R / 2, R / 2, -R / 2, R / 2)
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, resolution + 1)
    ys = np.linspace(y0, y1, resolution + 1)
    esc = np.zeros((len(ys), len(xs)), dtype=bool)
    # row strips bound peak memory; the result does not depend on the strip size
    rows = max(1, strip_points // len(xs))
    for r0 in range(0, len(ys), rows):
        esc[r0:r0 + rows] = _escapes(spec, xs[None, :] + 1j * ys[r0:r0 + rows, None], R, max_iter)
    mixed = (esc[:-1, :-1] != esc[1:, :-1]) | (esc[:-1, :-1] != esc[:-1, 1:]) | (esc[:-1, :-1] != esc[1:, 1:])
    iy, ix = np.nonzero(mixed)
    hx, hy = (x1 - x0) / resolution, (y1 - y0) / resolution
    pts = (x0 + (ix + 0.5) * hx) + 1j * (y0 + (iy + 0.5) * hy)
    return JuliaSample(points=pts, method="escape-time-boundary", depth=max_iter, seed=0)


def box_counts(points, scales) -> list:
    pts = np.asarray(points)
    if np.iscomplexobj(pts):
        xy = np.column_stack([pts.real, pts.imag])
    else:
        xy = pts.reshape(-1, 1).astype(float)
    origin = xy.min(axis=0)
    out = []
    for s in scales:
        idx = np.floor((xy - origin) / s).astype(np.int64)
        # one int64 key per cell: sorting a 1-d array beats unique(axis=0)
        key = idx[:, 0]
        for j in range(1, idx.shape[1]):
            key = key * (int(idx[:, j].max()) + 1) + idx[:, j]
        out.append(len(np.unique(key)))
    return out


def box_dimension(sample, scales) -> DimensionReport:
    """Least-squares slope of log N(delta) against log(1/delta).

    The bracket spans the slopes of all 2-scale sub-fits.
    """
    pts = sample.points if isinstance(sample, JuliaSample) else np.asarray(sample)
    scales = tuple(sorted(float(s) for s in scales))[::-1]
    if len(scales) < 5:
        raise ValueError("need at least 5 scales")
    counts = box_counts(pts, scales)
    x = np.log(1.0 / np.asarray(scales))
    y = np.log(np.asarray(counts, dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    pair = [(y[j] - y[i]) / (x[j] - x[i]) for i, j in combinations(range(len(x)), 2)]
    rep = DimensionReport(scales=scales, counts=tuple(counts), dimension=slope,
                          bracket=(float(min(pair)), float(max(pair))),
                          method=getattr(sample, "method", "points"))
    if counts[-1] >= 0.5 * len(pts):
        rep.undersampled = True
        rep.notes.append("finest-scale counts saturate at the sample size")
    return rep


def write_counts_csv(report: DimensionReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scale", "count"])
        for s, c in zip(report.scales, report.counts):
            w.writerow([repr(s), c])


@dataclass
class HypDimBracket:
    lower: float
    upper: float
    n_branches: int
    defined: bool = True


def _moran_root(lams) -> float:
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 1):
        raise ValueError("branch derivative bounds must exceed 1")
    g = lambda s: float(np.sum(lams ** (-s)) - 1.0)
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return brentq(g, 0.0, hi, xtol=1e-14)


def hyperbolic_dimension_lb(branches) -> HypDimBracket:
    """Solve sum_i lambda_i^{-s} = 1 with sup and inf derivative bounds.

    ``branches`` is a sequence of ``(inf|DF|, sup|DF|)`` pairs or objects
    with ``min_derivative`` / ``max_derivative`` attributes.
    """
    pairs = []
    for b in branches:
        if hasattr(b, "min_derivative"):
            pairs.append((b.min_derivative, b.max_derivative))
        else:
            pairs.append((float(b[0]), float(b[1])))
    if len(pairs) < 2:
        return HypDimBracket(0.0, 0.0, len(pairs), defined=False)
    lo = _moran_root([p[1] for p in pairs])
    hi = _moran_root([p[0] for p in pairs])
    return HypDimBracket(lo, hi, len(pairs))
