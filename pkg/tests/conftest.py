import math

import numpy as np
import pytest

from mopp import AlphaSchedule, SolverConfig, get_problem, run

Z_EQUAL = np.array([1.0, 1.0]) / math.sqrt(2.0)


@pytest.fixture
def paper():
    return get_problem("paper_example")


@pytest.fixture(scope="session")
def golden_report():
    config = SolverConfig(variant="SPP", x0=(-1.0, 3.0), z=(1.0, 1.0), alpha=AlphaSchedule("const", 1.0))
    return run(get_problem("paper_example"), config)
