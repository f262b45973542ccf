import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from thermobeam import PhysicalParams, assemble, build_dofmap, build_generator  # noqa: E402
from thermobeam.fem import Mesh  # noqa: E402

ACCEPTANCE_LINES = []


def make_generator(params=None, n1=4, n2=4, bc_mode="clamped"):
    params = params or PhysicalParams()
    mesh = Mesh.for_params(params, n1, n2)
    dofmap = build_dofmap(mesh, bc_mode)
    return build_generator(assemble(params, mesh, dofmap), params.gamma), dofmap


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_gen():
    gen, _ = make_generator(n1=4, n2=3)
    return gen


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
