"""Command-line runner: ``dynlab run`` for one config, ``dynlab suite`` for a manifest.

Reports are JSON with sorted keys and no wall-clock fields, so identical
configs and seeds give byte-identical files whatever the worker count.
Timestamps go to ``runs.log`` in the output directory instead.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, DynlabError
from .experiments import FAIL, PASS, UNDETERMINED, run_experiment
from .maps import map_from_config

log = logging.getLogger("dynlab")

CRITERIA = {
    1: "geometry kernel randomized checks",
    2: "degree law at depth <= 8",
    3: "bad pull-backs: pruned equals brute force (depth <= 6)",
    4: "decomposition identity on 1000 samples",
    5: "Markov property of induced branches",
    6: "tail T(m) nonincreasing, polynomial exponent >= 3",
    7: "badness exponent estimate <= 0.2",
    8: "shrinking exponent >= 3",
    9: "conformal measure of z^2: TV and regularity",
    10: "Chebyshev invariant density and L^p verdicts",
    11: "mixing: fitter calibration and Chebyshev decay",
    12: "Poincare exponent vs box dimension; hyperbolic bracket",
    13: "bit-identical reports across worker counts",
}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ERROR = 0, 1, 2, 3


@dataclass
class ReportRecord:
    """One experiment result. ``timestamp`` is kept out of the JSON file."""

    experiment: str
    config_hash: str
    params: dict
    values: dict
    verdict: str
    seed: int | None
    truncation: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    name: str = ""
    criteria: tuple = ()
    error: str | None = None
    timestamp: float | None = None

    @property
    def id(self) -> str:
        return f"{self.name or self.experiment}-{self.config_hash}"

    def to_json(self) -> str:
        d = {"id": self.id, "experiment": self.experiment, "config_hash": self.config_hash,
             "params": self.params, "values": self.values, "verdict": self.verdict, "seed": self.seed,
             "truncation": self.truncation, "notes": self.notes, "criteria": list(self.criteria),
             "error": self.error, "schema": 1}
        return json.dumps(jsonable(d), sort_keys=True, indent=2) + "\n"


def jsonable(x):
    """Recursively convert numpy and complex values into JSON-safe types."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": jsonable(x.real), "im": jsonable(x.imag)}
    if x is None or isinstance(x, str):
        return x
    return repr(x)


def execute(cfg: cfgmod.ExperimentConfig) -> tuple[ReportRecord, dict]:
    """Run one validated config; module errors become failing records."""
    spec = None if cfg.experiment in cfgmod.MAP_FREE else map_from_config(cfg.map_block)
    rec = ReportRecord(cfg.experiment, cfg.config_hash, cfg.raw, {}, FAIL, cfg.seed, name=cfg.name,
                       criteria=cfg.criteria)
    tables = {}
    try:
        out = run_experiment(cfg.experiment, spec, cfg.params, cfg.seed, cfg.budget)
        rec.values, rec.verdict, rec.truncation, rec.notes = out.values, out.verdict, out.truncation, out.notes
        tables = out.tables
    except DynlabError as e:
        rec.error = f"{type(e).__name__}: {e}"
    return rec, tables


def write_outputs(rec: ReportRecord, tables: dict, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{rec.id}.json"
    path.write_text(rec.to_json())
    for tname, rows in sorted(tables.items()):
        if not rows:
            continue
        with open(out / f"{rec.id}.{tname}.csv", "w", newline="") as fh:
            cols = list(rows[0])
            w = csv.writer(fh)
            w.writerow(cols)
            for r in rows:
                w.writerow([repr(v) if isinstance(v, float) else jsonable(v) for v in (r[c] for c in cols)])
    with open(out / "runs.log", "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {rec.id} {rec.verdict}\n")
    return path


def exit_code(rec: ReportRecord) -> int:
    if rec.error:
        return EXIT_ERROR
    if rec.verdict == PASS or (rec.verdict == UNDETERMINED and rec.values):
        return EXIT_OK
    return EXIT_FAIL


def _overrides(args) -> dict:
    ov = {}
    if getattr(args, "seed", None) is not None:
        ov["seed"] = args.seed
    if getattr(args, "budget", None) is not None:
        ov["budget"] = args.budget
    return ov


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("DYNLAB_OUT") or "dynlab-out")


def cmd_run(args) -> int:
    try:
        cfg = cfgmod.load(args.config, _overrides(args))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    rec, tables = execute(cfg)
    path = write_outputs(rec, tables, _out_dir(args))
    print(f"{rec.id}: {rec.verdict}" + (f" ({rec.error})" if rec.error else "") + f" -> {path}")
    return exit_code(rec)


def read_manifest(path) -> list:
    """Config paths, one per line, relative to the manifest's directory."""
    base = Path(path).parent
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(str(base / line))
    return out


def _job(args):
    path, overrides = args
    cfg = cfgmod.load(path, overrides)
    rec, tables = execute(cfg)
    return rec, tables


def run_suite(paths: list, out: Path, workers: int = 1, overrides: dict | None = None) -> dict:
    """Run every config; failures do not stop the suite.

    Configs with the same hash run once. The aggregate verdict is ``fail``
    if any experiment fails, ``pass`` if all pass, else ``undetermined``.
    """
    overrides = overrides or {}
    configs, problems, notes = [], {}, []
    seen = {}
    for p in paths:
        try:
            cfg = cfgmod.load(p, overrides)
        except ConfigError as e:
            problems[p] = e.problems
            continue
        if cfg.config_hash in seen:
            notes.append(f"{p}: duplicate of {seen[cfg.config_hash]} (hash {cfg.config_hash}), skipped")
            continue
        seen[cfg.config_hash] = p
        configs.append(p)
    jobs = [(p, overrides) for p in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    records = []
    for rec, tables in results:
        write_outputs(rec, tables, out)
        records.append(rec)
    verdicts = [r.verdict if r.values or r.error else UNDETERMINED for r in records]
    if problems:
        verdicts.append(FAIL)
    if not verdicts:
        agg = UNDETERMINED
    elif FAIL in verdicts:
        agg = FAIL
    elif all(v == PASS for v in verdicts):
        agg = PASS
    else:
        agg = UNDETERMINED
    table = []
    for cid, desc in CRITERIA.items():
        rows = [r for r in records if cid in r.criteria]
        if not rows:
            v = "not run"
        elif any(r.verdict == FAIL for r in rows):
            v = FAIL
        elif all(r.verdict == PASS for r in rows):
            v = PASS
        else:
            v = UNDETERMINED
        table.append({"criterion": cid, "description": desc, "verdict": v, "reports": [r.id for r in rows]})
    summary = {"verdict": agg, "reports": [{"id": r.id, "verdict": r.verdict} for r in records],
               "acceptance": table, "config_errors": problems, "notes": notes}
    return summary


def _write_summary(summary: dict, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "suite.json"
    path.write_text(json.dumps(jsonable(summary), sort_keys=True, indent=2) + "\n")
    return path


def _report_bytes(out: Path, summary: dict) -> dict:
    return {r["id"]: (out / f"{r['id']}.json").read_bytes() for r in summary["reports"]}


def cmd_suite(args) -> int:
    paths = read_manifest(args.config)
    out = _out_dir(args)
    summary = run_suite(paths, out, args.workers, _overrides(args))
    if args.check_determinism:
        other = out / "determinism-rerun"
        alt = 1 if args.workers > 1 else 2
        rerun = run_suite(paths, other, alt, _overrides(args))
        a, b = _report_bytes(out, summary), _report_bytes(other, rerun)
        same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
        row = next(r for r in summary["acceptance"] if r["criterion"] == 13)
        row["verdict"] = PASS if same else FAIL
        row["reports"] = [f"workers {args.workers} vs {alt}: {len(a)} reports"]
        if not same:
            summary["verdict"] = FAIL
    path = _write_summary(summary, out)
    width = max(len(d) for d in CRITERIA.values())
    for row in summary["acceptance"]:
        print(f"{row['criterion']:>2}  {row['description']:<{width}}  {row['verdict']}")
    print(f"suite: {summary['verdict']} -> {path}")
    for n in summary["notes"]:
        print(f"note: {n}")
    for p, probs in summary["config_errors"].items():
        print(f"config error in {p}: {probs}", file=sys.stderr)
    return EXIT_OK if summary["verdict"] in (PASS, UNDETERMINED) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, helptext in (("run", "run one experiment config"), ("suite", "run a manifest of configs")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="config file (run) or manifest (suite)")
        sp.add_argument("--out", help="output directory (default: $DYNLAB_OUT or ./dynlab-out)")
        sp.add_argument("--workers", type=int, default=1, help="parallel experiments in a suite")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--budget", type=int, help="node budget for enumerations")
        sp.add_argument("-v", "--verbose", action="store_true")
    sub.choices["suite"].add_argument("--check-determinism", action="store_true",
                                      help="rerun with another worker count and compare reports")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.cmd == "run":
        return cmd_run(args)
    return cmd_suite(args)


if __name__ == "__main__":
    sys.exit(main())
