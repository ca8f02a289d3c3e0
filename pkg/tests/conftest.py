import json
from pathlib import Path

import pytest

from hywban import neural, pipeline
from hywban.config import Config

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def golden():
    return json.loads((FIXTURES / "golden.json").read_text())


@pytest.fixture(scope="session")
def cfg():
    return Config()


@pytest.fixture(scope="session")
def dataset(cfg):
    return pipeline.make_dataset(cfg)


@pytest.fixture(scope="session")
def splits(cfg, dataset):
    return pipeline.split_dataset(cfg, dataset)


@pytest.fixture(scope="session")
def trained(cfg, dataset):
    """(model, autoencoder history, classifier history) for master seed 42."""
    return pipeline.train_models(cfg, dataset)


@pytest.fixture(scope="session")
def model(trained):
    return trained[0]


@pytest.fixture(scope="session")
def qmodel(model):
    return neural.quantize(model)


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
