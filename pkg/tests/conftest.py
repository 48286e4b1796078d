import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tdesloc.cli import Pipeline, bundled_model  # noqa: E402
from tdesloc.io import load_model  # noqa: E402
from tdesloc.localization import localize_all  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=20240611, help="seed for the randomized property suite")


@pytest.fixture(scope="session")
def seed(request):
    return request.config.getoption("--seed")


@pytest.fixture(scope="session")
def cell_model():
    return load_model(bundled_model())


@pytest.fixture(scope="session")
def cell(cell_model):
    return Pipeline.from_model(cell_model)


@pytest.fixture(scope="session")
def cell_units(cell):
    return localize_all(cell.plant, cell.sup, cell.cls)


def unit(units, kind, event):
    return next(u for u in units if u.kind == kind and u.event == event)
