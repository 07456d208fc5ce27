import numpy as np
import pytest

from opmethod.fock import FrequencyContext
from opmethod.pencil import PotentialSpec, assemble


def dense_ladder(omega, dim):
    """Dense x and p from the lowering operator, the independent reference."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    ad = a.T
    x = (a + ad) / np.sqrt(2 * omega)
    p = 1j * np.sqrt(omega / 2) * (ad - a)
    return x, p


@pytest.fixture
def pencil_factory():
    def make(L, lam, g, omega, dim):
        spec = PotentialSpec(L, lam, g)
        return assemble(spec, FrequencyContext.for_power(omega, dim, L))

    return make


# acceptance criteria register one line each; printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
