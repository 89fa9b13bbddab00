"""Acceptance criteria, one test per criterion.

Every config in ``configs/acceptance.manifest`` runs once per session. A
criterion passes when all of its reports pass and their summed runtime
stays inside the limit. Each test prints a one-line verdict.
"""
import time
from pathlib import Path

import pytest

from dynlab import cli
from dynlab.config import load

ROOT = Path(__file__).resolve().parents[1]
MANIFEST = ROOT / "configs" / "acceptance.manifest"

# seconds
LIMITS = {1: 10, 2: 120, 3: 120, 4: 60, 5: 120, 6: 300, 7: 300, 8: 300, 9: 120, 10: 600, 11: 300, 12: 600}


@pytest.fixture(scope="module")
def acceptance_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    runs = []
    for path in cli.read_manifest(MANIFEST):
        cfg = load(path)
        t0 = time.perf_counter()
        rec, tables = cli.execute(cfg)
        runs.append((rec, time.perf_counter() - t0))
        cli.write_outputs(rec, tables, out)
    return out, runs


def _report(capsys, cid, ok, detail):
    with capsys.disabled():
        print(f"\n[acceptance] criterion {cid:>2} {'PASS' if ok else 'FAIL'}: {cli.CRITERIA[cid]} ({detail})")


@pytest.mark.parametrize("cid", sorted(LIMITS))
def test_criterion(cid, acceptance_runs, capsys):
    _, runs = acceptance_runs
    mine = [(rec, dt) for rec, dt in runs if cid in rec.criteria]
    total = sum(dt for _, dt in mine)
    bad = [f"{rec.id}={rec.verdict}" + (f" [{rec.error}]" if rec.error else "") for rec, _ in mine
           if rec.verdict != "pass"]
    ok = bool(mine) and not bad and total <= LIMITS[cid]
    detail = f"{len(mine)} reports, {total:.1f}s of {LIMITS[cid]}s"
    if bad:
        detail += "; " + ", ".join(bad)
    _report(capsys, cid, ok, detail)
    assert mine, "no report covers this criterion"
    assert not bad, detail
    assert total <= LIMITS[cid], detail


def test_criterion_13_determinism_across_workers(acceptance_runs, tmp_path, capsys):
    out, runs = acceptance_runs
    summary = cli.run_suite(cli.read_manifest(MANIFEST), tmp_path, workers=2)
    ids = sorted(r["id"] for r in summary["reports"])
    assert ids == sorted(rec.id for rec, _ in runs)
    differ = [i for i in ids if (out / f"{i}.json").read_bytes() != (tmp_path / f"{i}.json").read_bytes()]
    ok = not differ
    _report(capsys, 13, ok, f"{len(ids)} reports, workers 1 vs 2" + (f"; differ: {differ}" if differ else ""))
    assert ok
