import json

import numpy as np
import pytest

from fxresponse.cli import RunConfig, UsageError, build_config, build_parser, main, read_config_file
from fxresponse.pairmeta import MAJORS, default_registry

N_EVENTS = 2000


def synth(out, pairs, **kw):
    argv = ["synth", "--pairs", ",".join(pairs), "--output-dir", str(out), "--n-events", str(N_EVENTS)]
    for k, v in kw.items():
        argv += [f"--{k.replace('_', '-')}"] + ([] if v is True else [str(v)])
    assert main(argv) == 0


def listing(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


@pytest.fixture(scope="module")
def majors_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("majors")
    synth(d, MAJORS, seed=1)
    return d


@pytest.fixture(scope="module")
def majors_run(majors_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    code = main(["response", "--input-dir", str(majors_dir), "--output-dir", str(out), "--years", "2019"])
    return code, out


def test_majors_both_scales_give_fourteen_files(majors_run):
    code, out = majors_run
    assert code == 0
    curves = sorted(p.name for p in out.glob("response_*.csv"))
    assert len(curves) == 14
    assert "response_EURUSD_2019_trade_exclude.csv" in curves
    assert "response_USDJPY_2019_physical_exclude.csv" in curves


def test_curve_has_one_row_per_lag(majors_run):
    _, out = majors_run
    lines = (out / "response_EURUSD_2019_trade_exclude.csv").read_text().splitlines()
    assert lines[0] == "tau,value,count" and len(lines) == 1001
    assert lines[-1].startswith("1000,")


def test_manifest_lists_everything(majors_run):
    _, out = majors_run
    manifest = json.loads((out / "manifest.json").read_text())
    emitted = sorted(p.name for p in out.glob("response_*"))
    assert manifest["outputs"] == emitted
    pairs = [(r["pair"], r["year"]) for r in manifest["results"]]
    assert sorted(pairs) == sorted((s, 2019) for s in MAJORS)
    assert manifest["exclusions"] == []
    entry = manifest["results"][0]
    assert entry["ingest"]["ticks"] == N_EVENTS and entry["ingest"]["lines_bad"] == 0


def test_unknown_pair_reported_others_proceed(majors_dir, tmp_path):
    code = main(["response", "--input-dir", str(majors_dir), "--output-dir", str(tmp_path),
                 "--pairs", "EUR/USD,ABC/XYZ", "--scale", "trade", "--tau-max", "5"])
    assert code == 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == ["response_EURUSD_2019_trade_exclude.csv"]
    assert [e["pair"] for e in manifest["exclusions"]] == ["ABC/XYZ"]
    assert "unknown pair" in manifest["exclusions"][0]["errors"][0]


def test_end_to_end_byte_identical(majors_dir, majors_run, tmp_path):
    _, first = majors_run
    assert main(["response", "--input-dir", str(majors_dir), "--output-dir", str(tmp_path)]) == 0
    assert listing(tmp_path) == listing(first)


def test_parallel_workers_match_serial(majors_dir, majors_run, tmp_path):
    _, first = majors_run
    code = main(["response", "--input-dir", str(majors_dir), "--output-dir", str(tmp_path), "--workers", "2"])
    assert code == 0
    a, b = listing(tmp_path), listing(first)
    ma, mb = json.loads(a.pop("manifest.json")), json.loads(b.pop("manifest.json"))
    assert a == b
    assert ma["config"].pop("workers") == 2 and mb["config"].pop("workers") == 1
    assert ma == mb


def test_json_format_and_include_zeros(majors_dir, tmp_path):
    code = main(["response", "--input-dir", str(majors_dir), "--output-dir", str(tmp_path),
                 "--pairs", "EUR/USD", "--format", "json", "--zero-handling", "include", "--tau-max", "20"])
    assert code == 0
    names = sorted(p.name for p in tmp_path.glob("response_*"))
    assert names == ["response_EURUSD_2019_physical_include.json", "response_EURUSD_2019_trade_exclude.json"]
    d = json.loads((tmp_path / names[0]).read_text())
    assert d["zero_handling"] == "include" and d["pair"] == "EUR/USD" and len(d["value"]) == 20


SPREADS = {"EUR/USD": 1.0, "GBP/USD": 3.0, "EUR/GBP": 5.0, "AUD/NZD": 7.0, "USD/TRY": 15.0, "USD/MXN": 40.0}


@pytest.fixture(scope="module")
def spread_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("spreads")
    synth(d, list(SPREADS), spread_pips=",".join(map(str, SPREADS.values())), start="2019-01-06")
    synth(d, list(SPREADS), spread_pips=",".join(map(str, SPREADS.values())), start="2011-01-02")
    return d


def _spread_groups(spread_dir, out, year, pairs=SPREADS):
    return main(["spread-groups", "--input-dir", str(spread_dir), "--output-dir", str(out),
                 "--years", str(year), "--pairs", ",".join(pairs), "--tau-max", "50"])


@pytest.mark.parametrize("year, n_groups", [(2019, 3), (2011, 2)])
def test_spread_groups_count(spread_dir, tmp_path, year, n_groups):
    assert _spread_groups(spread_dir, tmp_path, year) == 0
    summary = json.loads((tmp_path / f"groups_{year}.json").read_text())
    assert summary["emitted"] == {"trade": list(range(1, n_groups + 1)),
                                  "physical": list(range(1, n_groups + 1))}
    assert len(list(tmp_path.glob(f"group_{year}_trade_*"))) == n_groups
    rows = (tmp_path / f"spread_{year}.csv").read_text().splitlines()
    assert len(rows) == len(SPREADS) + 1
    got = {r.split(",")[0]: float(r.split(",")[2]) for r in rows[1:]}
    for sym, s in SPREADS.items():
        assert got[sym] == pytest.approx(s, rel=1e-9)


def test_spread_groups_assignment(spread_dir, tmp_path):
    _spread_groups(spread_dir, tmp_path, 2019)
    groups = json.loads((tmp_path / "groups_2019.json").read_text())["groups"]
    assert groups == {"1": ["EUR/USD", "GBP/USD"], "2": ["AUD/NZD", "EUR/GBP"], "3": ["USD/MXN", "USD/TRY"]}


def test_pair_without_data_is_excluded(spread_dir, tmp_path):
    code = _spread_groups(spread_dir, tmp_path, 2019, list(SPREADS) + ["USD/JPY"])
    assert code == 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert [e["pair"] for e in manifest["exclusions"]] == ["USD/JPY"]
    summary = json.loads((tmp_path / "groups_2019.json").read_text())
    assert summary["excluded"] == ["USD/JPY"]
    assert len(summary["emitted"]["trade"]) == 3


def test_group_curve_is_member_mean(spread_dir, tmp_path):
    _spread_groups(spread_dir, tmp_path, 2019)
    from fxresponse.response import ResponseCurve

    g3 = ResponseCurve.from_csv(tmp_path / "group_2019_trade_exclude_G3.csv", "trade")
    single = tmp_path / "single"
    main(["response", "--input-dir", str(spread_dir), "--output-dir", str(single), "--years", "2019",
          "--pairs", "USD/MXN,USD/TRY", "--scale", "trade", "--tau-max", "50"])
    a = ResponseCurve.from_csv(single / "response_USDMXN_2019_trade_exclude.csv", "trade")
    b = ResponseCurve.from_csv(single / "response_USDTRY_2019_trade_exclude.csv", "trade")
    np.testing.assert_allclose(g3.values, (a.values + b.values) / 2, rtol=1e-15)


def test_synth_deterministic(tmp_path):
    synth(tmp_path / "a", ["EUR/USD"], seed=5, weeks=2)
    synth(tmp_path / "b", ["EUR/USD"], seed=5, weeks=2)
    a, b = listing(tmp_path / "a"), listing(tmp_path / "b")
    assert a == b and len(a) == 2


def test_synth_file_parses(tmp_path):
    synth(tmp_path, ["USD/JPY"], seed=2, save_signs=True)
    (f,) = tmp_path.glob("DAT_ASCII_USDJPY_T_*.csv")
    first = f.read_text().splitlines()[0].split(",")
    assert 100 < float(first[1]) < 120
    assert len(list(tmp_path.glob("truth_*.npy"))) == 1


def test_synth_zero_events_warns(tmp_path, caplog):
    assert main(["synth", "--output-dir", str(tmp_path), "--n-events", "0"]) == 0
    assert "n_events=0" in caplog.text
    (f,) = tmp_path.glob("*.csv")
    assert f.read_text() == ""


def test_validate_reports_stats(majors_dir, capsys):
    assert main(["validate", "--input-dir", str(majors_dir), "--pairs", "EUR/USD,GBP/USD"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["EUR/USD 2019"]["ticks"] == N_EVENTS
    assert report["GBP/USD 2019"]["weeks_seen"] == 1


def test_validate_missing_inputs(tmp_path, capsys):
    assert main(["validate", "--input-dir", str(tmp_path), "--pairs", "EUR/USD"]) == 1
    assert json.loads(capsys.readouterr().out)["EUR/USD 2019"] == {"error": "no input files"}


def test_config_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\ntau_max = 50\npairs = EUR/USD, USD/JPY\ninput_dir = /from/config\nformat = json\n")
    monkeypatch.setenv("FXRESPONSE_INPUT_DIR", "/from/env")
    args = build_parser().parse_args(["response", "--config", str(cfg), "--tau-max", "7"])
    config = build_config(args)
    assert config.tau_max == 7
    assert config.pairs == ["EUR/USD", "USD/JPY"]
    assert str(config.input_dir) == "/from/env"
    assert config.format == "json"
    assert RunConfig().pairs == list(MAJORS)
    top = build_config(build_parser().parse_args(["--config", str(cfg), "response"]))
    assert top.tau_max == 50


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        read_config_file(cfg)


@pytest.mark.parametrize(
    "argv",
    [
        ["response", "--tau-max", "0"],
        ["response", "--stamp-tz", "Mars/Olympus"],
        ["spread-groups", "--years", "2008"],
        ["response", "--workers", "0"],
        ["synth", "--pairs", "EUR/USD,GBP/USD", "--spread-pips", "1,2,3"],
        ["synth", "--pairs", "ABC/XYZ"],
        ["synth", "--rho", "1.5"],
    ],
)
def test_usage_errors_exit_two(argv, tmp_path):
    argv = argv + ["--output-dir", str(tmp_path)]
    assert main(argv) == 2


def test_argparse_rejects_bad_choice():
    with pytest.raises(SystemExit) as exc:
        main(["response", "--scale", "weekly"])
    assert exc.value.code == 2


def test_fetch_hook_runs_when_inputs_missing(tmp_path):
    src = tmp_path / "src"
    synth(src, ["EUR/USD"], seed=3)
    inbox = tmp_path / "inbox"
    inbox.mkdir()
    hook = f"cp {src}/DAT_ASCII_{{pair}}_T_*.csv {{input_dir}}/"
    out = tmp_path / "out"
    code = main(["response", "--input-dir", str(inbox), "--output-dir", str(out), "--pairs", "EUR/USD",
                 "--scale", "trade", "--tau-max", "10", "--fetch-hook", hook])
    assert code == 0
    assert (out / "response_EURUSD_2019_trade_exclude.csv").exists()


def test_registry_default_pairs_resolve():
    reg = default_registry()
    assert all(s in reg for s in MAJORS)
