import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynlab import ConfigError
from dynlab import cli
from dynlab.config import config_hash, load, validate
from dynlab.textformat import parse, serialize

REAL_X2 = {"map.kind": "real-polynomial-on-interval", "map.coefficients": "1, 0, -2", "map.domain": "-2, 2"}

SMALL = {
    "geometry.cfg": "experiment = geometry\nname = geo\nseed = 3\ncriteria = 1\n[params]\ntrials = 300\n",
    "conformal.cfg": ("experiment = conformal\nname = conf\ncriteria = 9\n[map]\nkind = real-polynomial-on-interval\n"
                      "coefficients = 1, 0, -2\ndomain = -2, 2\n[params]\ns = 1\nbase = 0.3\ndepth = 10\n"
                      "eps = 0.3\nn_centers = 8\ninterval = -1, 1\ninterval_mass = 0.5\n"),
    "mixing.cfg": ("experiment = mixing\nname = mix\nseed = 1\n[map]\nkind = real-polynomial-on-interval\n"
                   "coefficients = -4, 4, 0\ndomain = 0, 1\n[params]\nn_max = 5\nsamples = 20000\nbatches = 8\n"),
}


def _write(tmp_path, files):
    paths = []
    for name, text in files.items():
        p = tmp_path / name
        p.write_text(text)
        paths.append(str(p))
    return paths


keys = st.from_regex(r"[a-z][a-z_]{0,6}(\.[a-z][a-z_]{0,6})?", fullmatch=True)
# values are stored stripped, so generate them without outer spaces
values = st.from_regex(r"[A-Za-z0-9]([A-Za-z0-9_,.+\- ]{0,12}[A-Za-z0-9])?", fullmatch=True)


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(keys, values, max_size=8))
def test_text_round_trip(d):
    assert parse(serialize(d)) == d


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse("experiment geometry\n")
    with pytest.raises(ValueError):
        parse("a = 1\na = 2\n")


def test_config_error_lists_every_problem():
    raw = {"experiment": "conformal", "params.s": "x", "params.bogus": "1", "colour": "red",
           "map.kind": "real-polynomial-on-interval", "map.coefficients": "1, 0, -2"}
    with pytest.raises(ConfigError) as e:
        validate(raw)
    assert set(e.value.problems) == {"params.s", "params.bogus", "colour", "params.base", "params.depth",
                                     "map.domain"}


def test_stochastic_experiment_needs_seed():
    raw = {"experiment": "mixing", "map.kind": "real-polynomial-on-interval", "map.coefficients": "-4, 4, 0",
           "map.domain": "0, 1"}
    with pytest.raises(ConfigError) as e:
        validate(raw)
    assert set(e.value.problems) == {"seed"}
    assert validate(raw, {"seed": 5}).seed == 5


def test_unknown_experiment():
    with pytest.raises(ConfigError) as e:
        validate({"experiment": "nope"})
    assert "experiment" in e.value.problems


def test_hash_ignores_order_and_spacing():
    a = {"experiment": "conformal", "params.s": "1", "params.base": "0.3", "params.depth": "8", **REAL_X2}
    assert config_hash(a) == config_hash({k: f"  {v} " for k, v in a.items()})
    assert validate(a).config_hash == validate(dict(reversed(list(a.items())))).config_hash
    assert config_hash(a) != config_hash({**a, "params.depth": "9"})


def test_config_text_round_trip(tmp_path):
    for path in _write(tmp_path, SMALL):
        cfg = load(path)
        assert validate(parse(cfg.to_text())).config_hash == cfg.config_hash


def test_report_json_is_deterministic(tmp_path):
    (path,) = _write(tmp_path, {"geometry.cfg": SMALL["geometry.cfg"]})
    rec1, _ = cli.execute(load(path))
    rec2, _ = cli.execute(load(path))
    assert rec1.to_json() == rec2.to_json()
    d = json.loads(rec1.to_json())
    assert "timestamp" not in d and d["verdict"] == "pass" and d["id"] == rec1.id


def test_suite_dedupes_identical_configs(tmp_path):
    p1, = _write(tmp_path, {"a.cfg": SMALL["geometry.cfg"]})
    p2, = _write(tmp_path, {"b.cfg": "# same settings\n" + SMALL["geometry.cfg"].replace("seed = 3", "seed =  3")})
    summary = cli.run_suite([p1, p2], tmp_path / "out")
    assert len(summary["reports"]) == 1
    assert len(summary["notes"]) == 1 and "duplicate" in summary["notes"][0]


def test_empty_suite_is_undetermined(tmp_path):
    summary = cli.run_suite([], tmp_path / "out")
    assert summary["verdict"] == "undetermined" and summary["reports"] == []


def test_failure_does_not_abort_suite(tmp_path):
    failing = SMALL["conformal.cfg"].replace("interval_mass = 0.5", "interval_mass = 0.9").replace(
        "name = conf", "name = conf-bad")
    broken = ("experiment = bc-probe\nname = bc\n[map]\nkind = real-polynomial-on-interval\ncoefficients = 1, 0, -2\n"
              "domain = -2, 2\n[params]\nr = 1\ndelta_grid = 0.01\n")
    paths = _write(tmp_path, {"bad.cfg": failing, "err.cfg": broken, "geo.cfg": SMALL["geometry.cfg"]})
    summary = cli.run_suite(paths, tmp_path / "out")
    verdicts = {r["id"].split("-")[0]: r["verdict"] for r in summary["reports"]}
    assert summary["verdict"] == "fail"
    assert verdicts["geo"] == "pass" and len(summary["reports"]) == 3
    err = next(r for r in summary["reports"] if r["id"].startswith("bc-"))
    rec = json.loads((tmp_path / "out" / f"{err['id']}.json").read_text())
    assert rec["error"].startswith("PreconditionError")


def test_run_exit_codes(tmp_path, monkeypatch):
    good, = _write(tmp_path, {"g.cfg": SMALL["geometry.cfg"]})
    bad, = _write(tmp_path, {"x.cfg": "experiment = geometry\n[params]\ntrials = many\n"})
    monkeypatch.setenv("DYNLAB_OUT", str(tmp_path / "env-out"))
    assert cli.main(["run", "--config", good]) == cli.EXIT_OK
    assert list((tmp_path / "env-out").glob("geo-*.json"))
    assert cli.main(["run", "--config", bad]) == cli.EXIT_CONFIG
    failing, = _write(tmp_path, {"f.cfg": SMALL["conformal.cfg"].replace("interval_mass = 0.5",
                                                                        "interval_mass = 0.9")})
    assert cli.main(["run", "--config", failing, "--out", str(tmp_path / "o")]) == cli.EXIT_FAIL


def test_seed_override_changes_hash(tmp_path):
    path, = _write(tmp_path, {"g.cfg": SMALL["geometry.cfg"]})
    assert load(path).config_hash != load(path, {"seed": 4}).config_hash


def test_manifest_paths_are_relative(tmp_path):
    (tmp_path / "m.manifest").write_text("# comment\n\na.cfg\nsub/b.cfg\n")
    assert cli.read_manifest(tmp_path / "m.manifest") == [str(tmp_path / "a.cfg"), str(tmp_path / "sub/b.cfg")]


def test_worker_count_does_not_change_reports(tmp_path):
    paths = _write(tmp_path, SMALL)
    s1 = cli.run_suite(paths, tmp_path / "w1", workers=1)
    s2 = cli.run_suite(paths, tmp_path / "w2", workers=2)
    assert s1 == s2
    for r in s1["reports"]:
        name = f"{r['id']}.json"
        assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w2" / name).read_bytes()


def test_suite_command_prints_table(tmp_path, capsys):
    paths = _write(tmp_path, {"geometry.cfg": SMALL["geometry.cfg"]})
    (tmp_path / "m.manifest").write_text("geometry.cfg\n")
    code = cli.main(["suite", "--config", str(tmp_path / "m.manifest"), "--out", str(tmp_path / "o"),
                     "--check-determinism"])
    out = capsys.readouterr().out
    assert code == cli.EXIT_OK
    assert len([l for l in out.splitlines() if l[:2].strip().isdigit()]) == len(cli.CRITERIA)
    summary = json.loads((tmp_path / "o" / "suite.json").read_text())
    assert summary["acceptance"][12]["verdict"] == "pass"
