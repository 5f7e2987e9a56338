"""Regenerate the bundled synthetic G7-like panel and its golden report.

Run from the repository root:  python3 scripts/make_golden_fixture.py
"""
from pathlib import Path
import shutil
import tempfile

from cointkit.cli import main

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def build():
    csv_path = DATA / "g7_synthetic.csv"
    assert main(["simulate", "--spec", str(DATA / "g7_dgp.json"), "--out", str(csv_path), "--as-prices"]) == 0
    with tempfile.TemporaryDirectory() as tmp:
        code = main(["run", "--input", str(csv_path), "--config", str(DATA / "g7_config.json"), "--out", tmp])
        assert code == 0, code
        shutil.copy(Path(tmp) / "report.txt", DATA / "golden_report.txt")


if __name__ == "__main__":
    build()
