import json
from importlib import resources

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bessel_fixtures():
    text = resources.files("ehrelay").joinpath("data/bessel_fixtures.json").read_text()
    return [(p["n"], p["x"], float(p["value"])) for p in json.loads(text)["points"]]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
