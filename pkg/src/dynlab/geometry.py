"""Cross-ratios, moduli of interval and disk pairs, and Koebe distortion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContainmentError, DegeneratePairError, PreconditionError


@dataclass(frozen=True)
class IntervalPair:
    """Open intervals ``outer`` = I and ``inner`` = J with J compactly in I."""

    outer: tuple
    inner: tuple

    def sides(self):
        (a, b), (c, d) = self.outer, self.inner
        return c - a, b - d

    def validate(self):
        (a, b), (c, d) = self.outer, self.inner
        left, right = self.sides()
        if not (a < b and c < d) or left <= 0 or right <= 0:
            raise DegeneratePairError(f"{self.inner} is not compactly inside {self.outer}")


@dataclass(frozen=True)
class ModulusValue:
    value: float

    def __float__(self):
        return self.value


def cross_ratio(pair: IntervalPair) -> float:
    """|I||J| / (|L||R|) where L, R are the components of I minus J."""
    pair.validate()
    (a, b), (c, d) = pair.outer, pair.inner
    left, right = pair.sides()
    return (b - a) * (d - c) / (left * right)


def modulus_from_cross_ratio(cr: float) -> float:
    inv = 1.0 / cr
    return 2.0 * math.log(math.sqrt(inv) + math.sqrt(1.0 + inv))


def interval_modulus(pair: IntervalPair) -> ModulusValue:
    return ModulusValue(modulus_from_cross_ratio(cross_ratio(pair)))


def mmod(outer, inner) -> float:
    """Shorthand returning the interval modulus as a float."""
    return interval_modulus(IntervalPair(tuple(outer), tuple(inner))).value


def disk_modulus(outer_disk, inner_disk) -> ModulusValue:
    """Lower bound for the modulus of the annulus between two disks.

    Disks are ``(center, radius)``. Concentric disks give log(R/r); otherwise
    log(R/(r + |center distance|)), which is a valid lower bound.
    """
    (c0, R), (c1, r) = outer_disk, inner_disk
    if R <= 0 or r <= 0:
        raise ContainmentError("radii must be positive")
    d = abs(complex(c0) - complex(c1))
    if d == 0 and r == R:
        return ModulusValue(0.0)
    if d + r > R * (1 + 1e-15):
        raise ContainmentError(f"disk {inner_disk} is not inside {outer_disk}")
    return ModulusValue(max(0.0, math.log(R / (r + d))))


def koebe_distortion_check(spec, component, eps: float, n_samples: int = 64) -> float:
    """Measured distortion max|Df^n| / min|Df^n| on the eps-subcomponent.

    ``component`` must be a diffeomorphic pull-back of a ball B(y, eta); the
    eps-subcomponent is its part mapped onto B(y, eps*eta).
    """
    from . import pullback

    if not component.diffeomorphic:
        raise PreconditionError("component is not diffeomorphic")
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    pts = pullback.sample_subcomponent(spec, component, eps, n_samples)
    from .maps import iterate_with_derivative

    _, d = iterate_with_derivative(spec, pts, component.depth)
    mags = np.abs(d)
    return float(mags.max() / mags.min())
