import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cointkit.cli import main
from cointkit.data import read_panel_csv
from cointkit.formatting import fmt_pvalue, starred, stars
from cointkit.report import TABLE_FILES, AnalysisConfig


@pytest.fixture(scope="module")
def golden(tmp_path_factory):
    from pathlib import Path
    data = Path(__file__).resolve().parent / "data"
    out = tmp_path_factory.mktemp("golden")
    code = main(["run", "--input", str(data / "g7_synthetic.csv"), "--config", str(data / "g7_config.json"),
                 "--out", str(out)])
    return data, out, code


def run_golden(data, out, *extra):
    return main(["run", "--input", str(data / "g7_synthetic.csv"), "--config", str(data / "g7_config.json"),
                 "--out", str(out), *extra])


class TestGoldenReport:
    def test_exit_code(self, golden):
        assert golden[2] == 0

    def test_matches_committed_golden(self, golden):
        data, out, _ = golden
        assert (out / "report.txt").read_bytes() == (data / "golden_report.txt").read_bytes()

    def test_repeat_run_identical(self, golden, tmp_path):
        data, out, _ = golden
        assert run_golden(data, tmp_path) == 0
        assert (tmp_path / "report.txt").read_bytes() == (out / "report.txt").read_bytes()

    def test_concurrent_run_identical(self, golden, tmp_path):
        data, out, _ = golden
        assert run_golden(data, tmp_path, "--workers", "4") == 0
        assert (tmp_path / "report.txt").read_bytes() == (out / "report.txt").read_bytes()

    def test_block_headings_present(self, golden):
        text = (golden[1] / "report.txt").read_text()
        for tag in ("[P1]", "[P2]", "[T1]", "[T2]", "[T3]", "[T4]", "[T5]"):
            assert tag in text

    def test_csv_bundle(self, golden, tmp_path):
        data, _, _ = golden
        assert run_golden(data, tmp_path, "--format", "csv-bundle", "--profiles") == 0
        names = sorted(p.name for p in tmp_path.iterdir() if p.is_file())
        assert names == sorted([*TABLE_FILES.values(), "metadata.json"])
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["markets"] == ["US", "CA", "FR", "DE", "IT", "JP", "UK"]
        assert meta["config"]["numeraire"] == "US"
        t3 = list(csv.reader((tmp_path / "T3_causality.csv").open()))
        assert t3[0][0] == "cause\\effect" and len(t3) == 8
        profiles = sorted(p.name for p in (tmp_path / "profiles").iterdir())
        assert len(profiles) == 9
        assert "gh_level_shift_GH_ADF_star.csv" in profiles
        t2 = list(csv.reader((tmp_path / "T2_gregory_hansen.csv").open()))
        assert [r[1] for r in t2[1:3]] == ["EG_ADF", "GH_ADF_star"]


class TestErrors:
    def write_config(self, tmp_path, **overrides):
        from pathlib import Path
        data = Path(__file__).resolve().parent / "data"
        doc = json.loads((data / "g7_config.json").read_text())
        doc.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        return data, path

    def test_unknown_market_exits_2_without_report(self, tmp_path, capsys):
        data, cfg = self.write_config(tmp_path, numeraire="CH")
        out = tmp_path / "out"
        code = main(["run", "--input", str(data / "g7_synthetic.csv"), "--config", str(cfg), "--out", str(out)])
        assert code == 2
        assert not (out / "report.txt").exists()
        assert "CH" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path):
        data, cfg = self.write_config(tmp_path, colour="blue")
        assert main(["run", "--input", str(data / "g7_synthetic.csv"), "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_input(self, tmp_path):
        assert main(["run", "--input", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o")]) == 2

    def test_missing_base_date(self, tmp_path):
        data, cfg = self.write_config(tmp_path, base_date="1960-01-01")
        assert main(["run", "--input", str(data / "g7_synthetic.csv"), "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_empty_test_list(self, tmp_path):
        data, cfg = self.write_config(tmp_path, tests=[])
        out = tmp_path / "o"
        assert main(["run", "--input", str(data / "g7_synthetic.csv"), "--config", str(cfg), "--out", str(out)]) == 0
        text = (out / "report.txt").read_text()
        assert "input_sha256" in text and "[T1]" not in text

    def test_only_flag(self, golden, tmp_path):
        data, _, _ = golden
        assert run_golden(data, tmp_path, "--only", "unit_root") == 0
        text = (tmp_path / "report.txt").read_text()
        assert "[T1]" in text and "[T2]" not in text

    def test_failing_block_exits_1_and_writes(self, tmp_path):
        n = 60
        dates = np.busday_offset(np.datetime64("2000-01-03"), np.arange(n), roll="forward")
        lines = ["date,a,b"] + [f"{d},{100 + i},100" for i, d in enumerate(dates)]
        path = tmp_path / "p.csv"
        path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "o"
        code = main(["run", "--input", str(path), "--out", str(out), "--only", "descriptive",
                     "--config", str(self.base_config(tmp_path))])
        assert code == 1
        assert "failed" in (out / "report.txt").read_text().lower()

    def base_config(self, tmp_path):
        path = tmp_path / "base.json"
        path.write_text(json.dumps({"base_date": "2000-01-03"}))
        return path


class TestSimulateCommand:
    def test_writes_panel(self, tmp_path):
        from pathlib import Path
        spec = Path(__file__).resolve().parent / "data" / "g7_dgp.json"
        out = tmp_path / "sim.csv"
        assert main(["simulate", "--spec", str(spec), "--out", str(out), "--seed", "3"]) == 0
        p = read_panel_csv(out)
        assert p.names[0] == "US" and p.nobs == 700

    def test_prices_positive(self, tmp_path):
        from pathlib import Path
        spec = Path(__file__).resolve().parent / "data" / "g7_dgp.json"
        out = tmp_path / "sim.csv"
        assert main(["simulate", "--spec", str(spec), "--out", str(out), "--as-prices"]) == 0
        assert np.all(read_panel_csv(out).values > 0)

    def test_bad_spec(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"kind": "random_walk"}')
        assert main(["simulate", "--spec", str(path), "--out", str(tmp_path / "x.csv")]) == 2

    def test_console_module(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "cointkit.cli", "--help"], capture_output=True, text=True)
        assert r.returncode == 0 and "simulate" in r.stdout


class TestFormatting:
    def test_starred_statistic(self):
        assert starred(26.352024, stars(0.0001)) == "26.35202 **"
        assert starred(3.1, stars(0.03)) == "3.10000 *"
        assert starred(0.5, stars(0.5)) == "0.50000"

    def test_pvalue(self):
        assert fmt_pvalue(0.0000421) == "0.000042"
        assert fmt_pvalue(float("nan")) == "NA"


class TestConfig:
    def test_echo_strips_paths(self):
        cfg = AnalysisConfig.from_dict({"input": "/a/b/prices.csv", "output": "/tmp/x", "workers": 3})
        echo = cfg.echo()
        assert echo["input"] == "prices.csv"
        assert "output" not in echo and "workers" not in echo

    def test_from_dict_strict(self):
        from cointkit.errors import ConfigurationError
        with pytest.raises(ConfigurationError):
            AnalysisConfig.from_dict({"lags": 3})
        with pytest.raises(ConfigurationError):
            AnalysisConfig.from_dict({"level": 0.2})
