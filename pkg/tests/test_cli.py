import json
import os

import pytest

from pskip.cli import main

CONFIG_YAML = """\
T: 300
repetitions: 2
master_seed: 5
problem:
  family: quadratic
  n: 8
  d: 5
  varsigma2: 1.0
  sigma2: 1.0
algorithm:
  name: proxskip
  alpha: 0.05
  p: 0.5
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(CONFIG_YAML)
    return str(path)


def run_cli(*argv):
    try:
        return main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        return exc.code


class TestRun:
    def test_success_writes_csv_and_echo(self, config_file, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli("run", "--config", config_file, "--out", out) == 0
        csvs = [f for f in os.listdir(out) if f.endswith("_result.csv")]
        echos = [f for f in os.listdir(out) if f.endswith("_config.json")]
        assert len(csvs) == 1 and len(echos) == 1
        header = open(os.path.join(out, csvs[0])).readline().strip()
        assert header == "iteration,comms,metric,mean,std,run_count"

    def test_override_is_echoed(self, config_file, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli("run", "--config", config_file,
                       "--set", "algorithm.p=0.2", "--out", out) == 0
        echo_file = [f for f in os.listdir(out) if f.endswith(".json")][0]
        echo = json.load(open(os.path.join(out, echo_file)))
        assert echo["config"]["algorithm"]["p"] == 0.2

    def test_bad_override_key(self, config_file, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli("run", "--config", config_file,
                       "--set", "hyper.q=1", "--out", out) == 2
        assert not os.path.exists(out) or not os.listdir(out)

    def test_missing_config(self, tmp_path):
        assert run_cli("run", "--config", str(tmp_path / "nope.yaml"),
                       "--out", str(tmp_path / "out")) == 3

    def test_unwritable_output(self, config_file, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        out = str(blocker / "out")  # parent is a file
        assert run_cli("run", "--config", config_file, "--out", out) == 4

    def test_all_diverged(self, config_file, tmp_path):
        out = str(tmp_path / "out")
        code = run_cli("run", "--config", config_file,
                       "--set", "algorithm.alpha=50.0", "--set", "x0=1.0",
                       "--out", out)
        assert code == 5

    def test_identical_invocations_byte_identical(self, config_file,
                                                  tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        run_cli("run", "--config", config_file, "--out", out1)
        run_cli("run", "--config", config_file, "--out", out2)
        (csv1,) = [f for f in os.listdir(out1) if f.endswith(".csv")]
        (csv2,) = [f for f in os.listdir(out2) if f.endswith(".csv")]
        assert csv1 == csv2
        assert open(os.path.join(out1, csv1), "rb").read() \
            == open(os.path.join(out2, csv2), "rb").read()


class TestSweep:
    def test_three_cells(self, config_file, tmp_path):
        out = str(tmp_path / "sweep")
        assert run_cli("sweep", "--config", config_file, "--axis", "p",
                       "--values", "1,0.5,0.2", "--out", out) == 0
        csvs = [f for f in os.listdir(out) if f.endswith("_result.csv")]
        assert len(csvs) == 3

    def test_invalid_axis(self, config_file, tmp_path):
        code = run_cli("sweep", "--config", config_file, "--axis", "zeta",
                       "--values", "1", "--out", str(tmp_path / "o"))
        assert code == 2  # argparse choices error


class TestVerify:
    def test_passes(self, capsys):
        assert run_cli("verify", "--seed", "0") == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_seed_changes_sample_not_verdict(self):
        assert run_cli("verify", "--seed", "31337") == 0

    def test_negative_control_names_property(self, capsys):
        assert run_cli("verify", "--seed", "0",
                       "--inject-fault", "equivalence-y0") == 1
        out = capsys.readouterr().out
        line = [ln for ln in out.splitlines() if "FAIL" in ln]
        assert len(line) == 1
        assert "primal-dual-equivalence" in line[0]


class TestPlot:
    def _make_results(self, config_file, tmp_path, values="1,0.5,0.2"):
        out = str(tmp_path / "res")
        run_cli("sweep", "--config", config_file, "--axis", "p",
                "--values", values, "--out", out)
        return [os.path.join(out, f) for f in sorted(os.listdir(out))
                if f.endswith("_result.csv")]

    def test_single_series(self, config_file, tmp_path):
        (csv,) = self._make_results(config_file, tmp_path, values="1")
        svg = str(tmp_path / "plot.svg")
        assert run_cli("plot", "--in", csv, "--y", "rel_error",
                       "--out", svg) == 0
        body = open(svg).read()
        assert body.count("<polyline") == 1
        assert "1e" in body  # log-scale tick labels

    def test_legend_from_config_echo(self, config_file, tmp_path):
        csvs = self._make_results(config_file, tmp_path)
        svg = str(tmp_path / "plot.svg")
        assert run_cli("plot", "--in", ",".join(csvs), "--x", "comms",
                       "--y", "rel_error", "--out", svg) == 0
        body = open(svg).read()
        assert body.count("<polyline") == 3
        for p in ("p=1", "p=0.5", "p=0.2"):
            assert p in body

    def test_deterministic_bytes(self, config_file, tmp_path):
        (csv,) = self._make_results(config_file, tmp_path, values="1")
        a, b = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
        run_cli("plot", "--in", csv, "--out", a)
        run_cli("plot", "--in", csv, "--out", b)
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_empty_csv_rejected(self, tmp_path):
        bad = tmp_path / "empty_result.csv"
        bad.write_text("iteration,comms,metric,mean,std,run_count\n")
        svg = str(tmp_path / "x.svg")
        assert run_cli("plot", "--in", str(bad), "--out", svg) == 2
        assert not os.path.exists(svg)

    def test_schema_mismatch_lists_columns(self, tmp_path, capsys):
        bad = tmp_path / "bad_result.csv"
        bad.write_text("iteration,comms,metric,avg\n0,0,rel_error,1.0\n")
        assert run_cli("plot", "--in", str(bad),
                       "--out", str(tmp_path / "x.svg")) == 2
        assert "schema mismatch" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert run_cli("plot", "--in", str(tmp_path / "nope.csv"),
                       "--out", str(tmp_path / "x.svg")) == 3

    def test_unknown_metric(self, config_file, tmp_path):
        (csv,) = self._make_results(config_file, tmp_path, values="1")
        assert run_cli("plot", "--in", csv, "--y", "loss",
                       "--out", str(tmp_path / "x.svg")) == 2
