import csv

import pytest

from apdaloc.cli import build_parser, main
from apdaloc.config import ExperimentConfig

SMALL = """\
scenario:
  duration: 1.0
filter:
  r_init: 1000
  r_track: 100
  r_u: 50
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


def test_parser_flags():
    args = build_parser().parse_args(
        ["bench", "--config", "c.yaml", "--algorithm", "AL1", "--algorithm", "AL5", "--runs", "3", "--seed", "9",
         "--out", "o", "--workers", "2"]
    )
    assert args.algorithm == ["AL1", "AL5"] and args.runs == 3 and args.seed == 9 and args.workers == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["bench", "--algorithm", "AL6"])


def test_simulate_then_track(tmp_path, small_config):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(small_config), "--runs", "2", "--seed", "5", "--out", str(sim)]) == 0
    assert (sim / "run0001_scans.jsonl").exists() and (sim / "manifest.yaml").exists()
    truth = list(csv.reader((sim / "run0000_truth.csv").open()))
    assert truth[0] == ["n", "t", "x", "y", "vx", "vy"] and len(truth) == 22
    trk = tmp_path / "trk"
    rc = main(["track", "--config", str(small_config), "--scans", str(sim / "run0000_scans.jsonl"),
               "--algorithm", "AL3", "--out", str(trk)])
    assert rc == 0
    rows = list(csv.reader((trk / "track_AL3.csv").open()))
    assert rows[0][:6] == ["n", "t", "est_x", "est_y", "est_vx", "est_vy"] and len(rows) == 21


def test_bench_and_rerun_from_manifest(tmp_path, small_config):
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    assert main(["bench", "--config", str(small_config), "--algorithm", "AL2", "--runs", "2", "--out", str(out1)]) == 0
    assert main(["bench", "--config", str(out1 / "manifest.yaml"), "--out", str(out2)]) == 0
    for name in ("rmse_vs_time.csv", "rmse_cdf.csv", "summary.csv", "traces/AL2.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_config_command(capsys, small_config):
    assert main(["config", "--config", str(small_config), "--runs", "11"]) == 0
    cfg = ExperimentConfig.from_yaml(capsys.readouterr().out)
    assert cfg.runs == 11 and cfg.filter.r_u == 50


def test_bad_config_reports_error(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense: true\n")
    assert main(["bench", "--config", str(bad)]) == 2
    assert "invalid configuration" in capsys.readouterr().err
