import json
from importlib import resources

import numpy as np
import pytest

from pacurves.numerics import Grid


@pytest.fixture(scope="session")
def report_schema():
    return json.loads(resources.files("pacurves").joinpath("data/report.schema.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def grid(a=-1.0, b=1.0, h=1e-3):
    return Grid.uniform(a, b, h)


def max_abs(x):
    return float(np.max(np.abs(x)))
