import json

import numpy as np
import pytest

from asymcat import cli


def run_main(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--label", "t"])


def report(tmp_path, command):
    return json.loads((tmp_path / command / "t" / "report.json").read_text())


def test_reproduce_ideal_writes_report(tmp_path):
    assert run_main(tmp_path, "reproduce-ideal") == cli.EXIT_OK
    r = report(tmp_path, "reproduce-ideal")
    assert r["ok"] and all(r["checks"].values())
    assert r["results"]["increment"] == pytest.approx(0.0982, abs=5e-4)
    assert r["config"]["protocol"] == "main"


def test_usage_errors_exit_2(tmp_path, capsys):
    assert run_main(tmp_path, "reproduce-ideal", "--protocol", "bogus") == cli.EXIT_USAGE
    assert run_main(tmp_path, "scan", "--grid", "2") == cli.EXIT_USAGE
    assert run_main(tmp_path, "noise", "--p-step", "0") == cli.EXIT_USAGE
    assert run_main(tmp_path, "reproduce-experiment", "--mp-real", "x.csv") == cli.EXIT_USAGE
    assert cli.main(["reproduce-ideal", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_USAGE
    assert cli.main(["no-such-command"]) == cli.EXIT_USAGE


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nprotocol = case2\nseed = 7\n")
    c = cli.build_config("reproduce-ideal", cli.read_config_file(cfg), {"seed": 3})
    assert c.protocol == "case2" and c.seed == 3
    with pytest.raises(cli.UsageError):
        cli.build_config("reproduce-ideal", {"nonsense": "1"}, {})
    with pytest.raises(cli.UsageError):
        cli.build_config("reproduce-ideal", {"catalyst_free": "maybe"}, {})


def test_hash_ignores_output_location():
    a = cli.build_config("optics", {}, {"out": "x", "label": "a", "jobs": 1})
    b = cli.build_config("optics", {}, {"out": "y", "label": "b", "jobs": 2})
    c = cli.build_config("optics", {}, {"seed": 1})
    assert a.hash == b.hash != c.hash


def test_same_seed_same_report(tmp_path):
    a = cli.run("reproduce-experiment", {"runs": 10, "out": str(tmp_path), "label": "a"})
    b = cli.run("reproduce-experiment", {"runs": 10, "out": str(tmp_path), "label": "b"})
    assert a.deterministic_view() == b.deterministic_view()
    assert (tmp_path / "reproduce-experiment" / "a" / "measured_choi.json").exists()


def test_optics_and_tomo_artifacts(tmp_path):
    assert run_main(tmp_path, "optics", "--samples", "5") == cli.EXIT_OK
    assert (tmp_path / "optics" / "t" / "circuit.json").exists()
    assert run_main(tmp_path, "tomo") == cli.EXIT_OK
    assert (tmp_path / "tomo" / "t" / "chi_sim_real.csv").exists()


def test_noise_scan_csv(tmp_path):
    assert run_main(tmp_path, "noise", "--protocol", "case2", "--grid", "5") == cli.EXIT_OK
    lines = (tmp_path / "noise" / "t" / "region.csv").read_text().splitlines()
    assert lines[0] == "delta_x,delta_z,raw_increment,corrected_increment,constraint_ok"
    # shifted catalysts outside the Bloch ball are skipped
    xs, zs = np.linspace(-0.3, 0.1, 5), np.linspace(-0.2, 0.2, 5)
    inside = sum((0.7430 + x) ** 2 + (0.4749 + z) ** 2 <= 1 for x in xs for z in zs)
    assert len(lines) == 1 + inside < 26


def test_failed_check_exits_1(tmp_path, monkeypatch):
    def broken(cfg, outdir, bundle):
        bundle.checks["always_false"] = False
    monkeypatch.setitem(cli.COMMANDS, "tomo", broken)
    assert run_main(tmp_path, "tomo") == cli.EXIT_FAILURE
    assert report(tmp_path, "tomo")["ok"] is False
