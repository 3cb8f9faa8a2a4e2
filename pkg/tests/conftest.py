
import numpy as np
import pytest

from surfepr import _accel
from surfepr.stackup import DielectricLayer, Stackup



@pytest.fixture
def both_backends():
    """Yield a context switcher that runs a block on numba then numpy."""
    if not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    saved = _accel.get_backend()

    def run(fn):
        out = {}
        for name in ("numba", "numpy"):
            _accel.set_backend(name)
            out[name] = fn()
        return out

    yield run
    _accel.set_backend(saved)


@pytest.fixture(scope="session")
def three_layer():
    """Substrate, thin film and air over a ground plane."""
    return Stackup((DielectricLayer(11.9), DielectricLayer(4.0, 2.0), DielectricLayer(1.0)), bottom_pec=-25.0)


@pytest.fixture(scope="session")
def three_layer_tables(three_layer):
    from surfepr.greens import TableSet
    return TableSet.build(three_layer, [0, 1], [-0.3, 0.0, 0.7, 2.0, 2.4], (1e-3, 300.0), 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: one line per criterion, printed in the summary
ACCEPTANCE = []


@pytest.fixture
def acceptance(request):
    """Record a criterion outcome; a test that errors before recording is logged as FAIL."""
    lines = []

    def report(criterion, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}"
        lines.append(line)
        ACCEPTANCE.append(line)
        print(line)
        return passed

    yield report
    if not lines:
        ACCEPTANCE.append(f"FAIL  criterion {request.node.name}: raised before a result was recorded")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
