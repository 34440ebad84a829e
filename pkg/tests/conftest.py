from pathlib import Path

import pytest

from openmqb.experiment import compile_file

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def configs():
    return CONFIGS


@pytest.fixture(scope="session")
def triiodide():
    return compile_file(CONFIGS / "triiodide.toml")


@pytest.fixture(scope="session")
def pyrazine():
    return compile_file(CONFIGS / "pyrazine.toml")


@pytest.fixture(scope="session")
def pyrazine_desk():
    return compile_file(CONFIGS / "pyrazine_desk.toml")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
