import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

SCHEMA_DIR = Path(__file__).resolve().parents[2] / "docs" / "schemas"
FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def binary():
    path = os.environ.get("TDCOX_BIN")
    if not path:
        pytest.skip("TDCOX_BIN is not set")
    return path


def run(*args, cwd=None):
    return subprocess.run([binary(), *map(str, args)], capture_output=True, text=True, cwd=cwd)


def run_ok(*args, cwd=None):
    proc = run(*args, cwd=cwd)
    assert proc.returncode == 0, proc.stderr
    return proc


def load_schema(name):
    return json.loads((SCHEMA_DIR / name).read_text())


def typed_rows(path, schema):
    """CSV rows as dicts, typed by the row schema: string columns stay strings, NA becomes null."""
    props = schema["properties"]
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                if props.get(key, {}).get("type") == "string":
                    row[key] = value
                elif value == "NA":
                    row[key] = None
                else:
                    row[key] = float(value)
            rows.append(row)
    return header, rows


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """Runs every command once on a small simulated problem."""
    root = tmp_path_factory.mktemp("runs")
    run_ok("simulate", "--n-subjects", 60, "--n-fixed", 3, "--n-td", 2, "--beta", "1,0,-1,0.5,0",
           "--test-fraction", 0.3, "--seed", 4, "--out-dir", root / "sim", "--quiet")
    train, test = root / "sim" / "train.csv", root / "sim" / "test.csv"
    run_ok("fit", "--data", train, "--alpha", 0.5, "--lambda", 0.02, "--out-dir", root / "fit", "--quiet")
    run_ok("path", "--data", train, "--alpha", 0.5, "--m", 30, "--out-dir", root / "path", "--quiet")
    run_ok("cv", "--data", train, "--alphas", "0.5,1", "--k", 3, "--m", 30, "--refit",
           "--out-dir", root / "cv", "--quiet")
    seen, lines = set(), test.read_text().splitlines()
    newdata = [lines[0]]
    for line in lines[1:]:
        sid = line.split(",", 1)[0]
        if sid not in seen:
            seen.add(sid)
            newdata.append(line)
    (root / "new.csv").write_text("\n".join(newdata) + "\n")
    run_ok("predict", "--data", train, "--fit", root / "fit" / "fit.json", "--newdata", root / "new.csv",
           "--out-dir", root / "predict", "--quiet")
    run_ok("concordance", "--data", test, "--fit", root / "fit" / "fit.json",
           "--out-dir", root / "concordance", "--quiet")
    return root
