import json
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SHIPPED = ("halfplane", "disc", "wedge")

# lines appended by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def _run(config: Path, out: Path):
    proc = subprocess.run(
        [sys.executable, "-m", "harmlab.lab_cli", "run", str(config), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    return proc.returncode, json.loads((out / "manifest.json").read_text())


@pytest.fixture(scope="session")
def shipped_runs(tmp_path_factory):
    """Every shipped config run twice with its own seed: {name: [(rc, manifest, dir), ...]}."""
    base = tmp_path_factory.mktemp("shipped")
    runs = {}
    for name in SHIPPED:
        runs[name] = []
        for k in range(2):
            out = base / f"{name}_{k}"
            rc, man = _run(CONFIGS / f"{name}.json", out)
            runs[name].append((rc, man, out))
    return runs
