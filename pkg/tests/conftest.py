import os

import pytest

from sdairp.graph import bundled, load, parse_canonical

ACCEPTANCE: dict = {}

TRIANGLE = """nodes 3 depot 1 K {K} W {W} zeta {zeta}
arc 1 2 c 2 e 0.2 q 1
arc 1 3 c 3 e 0.3 q 1
arc 2 3 c 4 e 0.4 q 1
"""


def triangle(K=1, W=20, zeta=0):
    return parse_canonical(TRIANGLE.format(K=K, W=W, zeta=zeta), "triangle")


@pytest.fixture
def tri():
    return triangle()


@pytest.fixture(scope="session")
def monroy():
    return load(bundled("monroy_standin.txt"))


@pytest.fixture(scope="session")
def gdb19():
    return load(bundled("gdb19.dat"), binarize=True)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def monroy_costs_path():
    return os.environ.get("SDAIRP_MONROY_COSTS")
