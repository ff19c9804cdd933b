from __future__ import annotations

import pytest

from helpers import load_model_text
from vce.dsl import parse_model
from vce.model import bind


@pytest.fixture(scope="session")
def bsc():
    return parse_model(load_model_text("bsc.sem"))


@pytest.fixture(scope="session")
def rare_disease_source():
    return load_model_text("rare_disease.sem")


@pytest.fixture(scope="session")
def sprinkler():
    return parse_model(load_model_text("sprinkler.sem"))


@pytest.fixture(scope="session")
def sprinkler_functional_source():
    return load_model_text("sprinkler_functional.sem")


@pytest.fixture(scope="session")
def ramp_reset():
    return parse_model(load_model_text("ramp_reset.sem"))


@pytest.fixture(scope="session")
def crossover():
    return parse_model(load_model_text("crossover.sem"))


@pytest.fixture()
def rare_disease(rare_disease_source):
    def at(p: float):
        return bind(parse_model(rare_disease_source), {"p": p})

    return at


@pytest.fixture()
def sprinkler_functional(sprinkler_functional_source):
    def at(p: float):
        return bind(parse_model(sprinkler_functional_source), {"p": p})

    return at


# One visible pass/fail line per acceptance criterion.
_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _acceptance_results[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_results):
        name = nodeid.split("::")[-1]
        status = "PASS" if _acceptance_results[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{name}: {status}")
