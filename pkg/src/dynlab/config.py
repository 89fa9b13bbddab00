"""Experiment configuration: schema, validation and a canonical hash.

A config file looks like::

    experiment = dims
    seed = 7
    criteria = 12

    [map]
    kind = complex-polynomial
    coefficients = 1, 0, -1

    [params]
    poincare_depth = 18
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import textformat
from .errors import ConfigError
from .maps import KINDS, REAL

REQUIRED = object()


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    """``"1-15"`` or ``"1, 2, 5"``."""
    s = s.strip()
    if "," not in s and "-" in s[1:]:
        a, b = s.split("-", 1)
        return tuple(range(int(a), int(b) + 1))
    return tuple(_int(x) for x in s.split(",") if x.strip())


def _point(s):
    z = complex(s.replace(" ", ""))
    return z.real if z.imag == 0 and "j" not in s else z


def _str(s):
    return s.strip()


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _expect(s):
    """``"1.5:stable, 2.5:diverging"`` -> ``{1.5: "stable", 2.5: "diverging"}``."""
    out = {}
    for item in s.split(","):
        if item.strip():
            k, v = item.split(":")
            out[float(k)] = v.strip()
    return out


_COUPLE = {"delta": (_float, REQUIRED), "r": (_float, 8.0)}

SCHEMAS = {
    "shrinking": ({"rho": (_float, REQUIRED), "depths": (_ints, (1, 15)), "n_base": (_int, 256),
                   "beta_min": (_float, 3.0)}, True),
    "badness": ({**_COUPLE, "depth": (_int, 12), "t_grid": (_floats, tuple(k / 10 for k in range(1, 11))),
                 "brute_depth": (_int, 6), "bad_max": (_float, 0.2)}, False),
    "induce": ({**_COUPLE, "max_time": (_int, 20), "dps": (_int, 40)}, False),
    "tail": ({**_COUPLE, "max_time": (_int, 20), "alpha": (_float, 1.0), "fit_lo": (_int, 5),
              "fit_hi": (_int, 20), "exponent_min": (_float, 3.0)}, False),
    "conformal": ({"s": (_float, REQUIRED), "base": (_point, REQUIRED), "depth": (_int, REQUIRED),
                   "hd": (_float, 1.0), "eps": (_float, 0.1), "delta_exponents": (_ints, (4, 10)),
                   "n_centers": (_int, 64), "n_arcs": (_int, 32), "tv_max": (_float, None),
                   "interval": (_floats, None), "interval_mass": (_float, None),
                   "mass_tol": (_float, 0.05)}, False),
    "density": ({"n_atoms": (_int, 2 ** 17), "cesaro_depth": (_int, 100), "bins": (_ints, (32, 64, 1024, 16384)),
                 "oracle": (_str, "none"), "window": (_floats, (0.1, 0.9)), "oracle_bins": (_int, 32),
                 "sup_max": (_float, 0.1), "cross_orbits": (_int, 100), "cross_length": (_int, 100000)}, True),
    "lp": ({"n_atoms": (_int, 2 ** 17), "cesaro_depth": (_int, 100), "levels": (_ints, (64, 1024, 16384)),
            "p_grid": (_floats, (1.0, 1.5, 2.5)), "expect": (_expect, None)}, False),
    "mixing": ({"phi": (_str, "cos_pi_x"), "psi": (_str, "cos_pi_x"), "n_max": (_int, 20),
                "samples": (_int, 10 ** 7), "batches": (_int, 64), "expect": (_str, None),
                "calibration_gamma": (_float, 3.0), "calibration_tol": (_float, 0.1)}, True),
    "dims": ({"x0": (_point, None), "s_grid": (_floats, None), "poincare_depth": (_int, 16),
              "sample": (_str, "auto"), "resolution": (_int, 8192), "n_points": (_int, 2_000_000),
              "scales": (_floats, None), "tol": (_float, 0.05), "hyp_delta": (_float, None),
              "hyp_r": (_float, 8.0), "hyp_max_time": (_int, 20), "hyp_branches": (_int, 50),
              "hyp_min": (_float, 0.9)}, True),
    "bc-probe": ({"r": (_float, REQUIRED), "delta_grid": (_floats, REQUIRED), "depth": (_int, 8)}, False),
    "decomp-check": ({**_COUPLE, "max_time": (_int, 20), "samples": (_int, 1000)}, True),
    "geometry": ({"trials": (_int, 10000)}, True),
    "degree-law": ({**_COUPLE, "depth": (_int, 8), "horizon": (_int, 12)}, False),
}

MAP_FREE = {"geometry"}
TOP_KEYS = {"experiment", "seed", "budget", "criteria", "name"}
MAP_KEYS = {"map.kind", "map.coefficients", "map.domain"}


@dataclass
class ExperimentConfig:
    """Validated experiment configuration.

    ``raw`` keeps the text-level key/value pairs; ``params`` holds the
    parsed parameter values with defaults filled in.
    """

    experiment: str
    raw: dict
    params: dict
    seed: int | None = None
    budget: int | None = None
    criteria: tuple = ()
    name: str = ""
    map_block: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def to_text(self) -> str:
        return textformat.serialize(self.raw)


def _canonical(raw: dict) -> dict:
    return {k.strip(): " ".join(str(v).split()) for k, v in raw.items()}


def config_hash(raw: dict) -> str:
    """SHA-256 of the sorted, whitespace-normalized key/value pairs."""
    blob = json.dumps(_canonical(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Check every key and collect all problems before raising."""
    raw = _canonical(raw)
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    problems = {}
    exp = raw.get("experiment")
    if exp is None:
        problems["experiment"] = "missing"
    elif exp not in SCHEMAS:
        problems["experiment"] = f"unknown experiment {exp!r}; expected one of {sorted(SCHEMAS)}"
    schema, stochastic = SCHEMAS.get(exp, ({}, False))
    params = {}
    for k, v in raw.items():
        if k in TOP_KEYS or k in MAP_KEYS:
            continue
        if k.startswith("params."):
            name = k[len("params."):]
            if exp in SCHEMAS and name not in schema:
                problems[k] = "unknown parameter"
            elif name in schema:
                try:
                    params[name] = schema[name][0](v)
                except (ValueError, TypeError) as e:
                    problems[k] = f"cannot parse {v!r}: {e}"
        else:
            problems[k] = "unknown key"
    for name, (_, default) in schema.items():
        if name not in params:
            if default is REQUIRED:
                problems[f"params.{name}"] = "missing"
            else:
                params[name] = default
    seed = budget = None
    if "seed" in raw:
        try:
            seed = _int(raw["seed"])
        except ValueError as e:
            problems["seed"] = str(e)
    elif stochastic:
        problems["seed"] = "missing (required for stochastic experiments)"
    if "budget" in raw:
        try:
            budget = _int(raw["budget"])
        except ValueError as e:
            problems["budget"] = str(e)
    criteria = ()
    if "criteria" in raw:
        try:
            criteria = _ints(raw["criteria"])
        except ValueError as e:
            problems["criteria"] = str(e)
    map_block = {k: v for k, v in raw.items() if k in MAP_KEYS}
    if exp not in MAP_FREE:
        for k in ("map.kind", "map.coefficients"):
            if k not in raw:
                problems[k] = "missing"
        kind = raw.get("map.kind")
        if kind is not None and kind not in KINDS:
            problems["map.kind"] = f"unknown kind {kind!r}"
        if kind == REAL and "map.domain" not in raw:
            problems["map.domain"] = "missing (required for real maps)"
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(experiment=exp, raw=raw, params=params, seed=seed, budget=budget,
                            criteria=criteria, name=raw.get("name", ""), map_block=map_block)


def load(path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = textformat.parse(text)
    except ValueError as e:
        raise ConfigError({"<file>": str(e)}) from None
    return validate(raw, overrides)
