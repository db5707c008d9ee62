"""Drive the command-line runner programmatically and read its report.

Equivalent to:  invdecomp run --preset mgf-check --out <tmpdir>
"""

import json
import tempfile
from pathlib import Path

from invdecomp.cli import main

with tempfile.TemporaryDirectory() as out:
    rc = main(["run", "--preset", "mgf-check", "--out", out])
    print(f"\nexit code: {rc}")
    report = json.loads((Path(out) / "report.json").read_text())
    print("checks:", {name: c["status"] for name, c in report["checks"].items()})
    print("\nmgf.csv:")
    print((Path(out) / "mgf.csv").read_text())
    print("summary.txt:")
    print((Path(out) / "summary.txt").read_text())
