import numpy as np
import pytest

from opmethod.fock import FrequencyContext
from opmethod.omega import auto_solve
from opmethod.oracles import (
    DomainTooSmall,
    exact_case_L1,
    fd_eigenvector,
    fd_energy,
    fd_solve,
    pencil_eigen_near,
)
from opmethod.pencil import PotentialSpec, assemble


@pytest.mark.parametrize("g", [0.05, 0.25, 0.45])
def test_fd_exact_family(g):
    lam, E0 = exact_case_L1(g)
    r = fd_solve(PotentialSpec(1, lam, g), 0)
    assert abs(r.energy - E0) <= 1e-8
    assert r.error_estimate < 1e-6


def test_fd_harmonic_levels():
    spec = PotentialSpec(1, 0.0, 0.0)
    assert fd_solve(spec, 0).energy == pytest.approx(0.5, abs=1e-9)
    assert fd_solve(spec, 1).energy == pytest.approx(1.5, abs=1e-9)


def test_fd_second_order():
    spec = PotentialSpec(1, *exact_case_L1(0.2)[:1], 0.2)
    E0 = 0.3
    e1 = fd_energy(spec, 0, 10.0, 0.04) - E0
    e2 = fd_energy(spec, 0, 10.0, 0.02) - E0
    assert 3.5 <= e1 / e2 <= 4.5


def test_fd_domain_too_small():
    with pytest.raises(DomainTooSmall):
        fd_solve(PotentialSpec(1, 0.0, 0.0), 0, R=2.0)


def test_exact_case_range():
    with pytest.raises(ValueError):
        exact_case_L1(0.5)


def test_pencil_oracle_agrees_with_om_at_equal_basis():
    spec = PotentialSpec.from_table_units(3, 10.0, 10.0)
    sol = auto_solve(spec, 1)
    pen = assemble(spec, FrequencyContext.for_power(sol.omega, sol.dim, 3))
    # shift from the FD oracle keeps the comparison independent of the OM value
    orc = pencil_eigen_near(pen, fd_solve(spec, 1).energy)
    assert abs(orc.energy - sol.energy) <= 1e-10 * max(1.0, abs(sol.energy))


def test_pencil_oracle_harmonic_is_exact():
    pen = assemble(PotentialSpec(1, 0.0, 3.0), FrequencyContext.for_power(1.0, 80, 1))
    assert pencil_eigen_near(pen, 0.4).energy == pytest.approx(0.5, abs=1e-12)
    assert pencil_eigen_near(pen, 1.4).energy == pytest.approx(1.5, abs=1e-12)


def test_pencil_spectrum_is_real():
    from scipy.linalg import eig

    pen = assemble(PotentialSpec.from_table_units(2, 10.0, 10.0), FrequencyContext.for_power(3.0, 120, 2))
    w = eig(pen.l_prime.to_dense(), pen.l_dprime.to_dense(), right=False)
    w = w[np.argsort(w.real)][:4]
    assert np.max(np.abs(w.imag)) <= 1e-9


def test_fd_eigenvector_normalized():
    E, x, v = fd_eigenvector(PotentialSpec(1, 0.0, 0.0), 0, 8.0, 2001)
    h = x[1] - x[0]
    assert np.sum(v**2) * h == pytest.approx(1.0, abs=1e-12)
    assert E == pytest.approx(0.5, abs=1e-4)
