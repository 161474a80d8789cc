import pytest

from bayesnr import _kernels
from bayesnr.distributions import reference_model


@pytest.fixture(params=[b.BACKEND for b in _kernels.backends()])
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    mod = {b.BACKEND: b for b in _kernels.backends()}[request.param]
    monkeypatch.setattr(_kernels, "impl", mod)
    return mod


@pytest.fixture(scope="session")
def ref():
    return reference_model()


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
