import math

import numpy as np
import pytest

from opmethod.fock import FrequencyContext
from opmethod.iteration import e_zeroth
from opmethod.omega import (
    NoExtremumInRange,
    OmegaScan,
    auto_solve,
    find_extremum,
    scan_omega,
    solve_at,
    solve_fixed,
    stable_basis_size,
)
from opmethod.pencil import PotentialSpec, assemble

ANCHOR = PotentialSpec(2, 0.250004194831227, 0.260754375208969)
ANCHOR_E = 1.18657366612601 / 2


def test_e_zeroth_anchor_value():
    pen = assemble(ANCHOR, FrequencyContext.for_power(2.0, 12, 2))
    assert 2 * e_zeroth(pen, 0) == pytest.approx(1.246216, abs=5e-6)


def test_scan_rows_and_extremum():
    scan = scan_omega(ANCHOR, 0, [0, 3, math.inf], 1.0, 5.0, steps=24)
    assert scan.energies.shape == (3, 24)
    ez = [e_zeroth(assemble(ANCHOR, FrequencyContext.for_power(w, 12, 2)), 0) for w in scan.omegas]
    np.testing.assert_array_equal(scan.row(0), ez)
    # Jacobi sweeps diverge at small omega; those points are holes, not errors
    conv = scan.row(math.inf)
    assert np.all(np.isfinite(conv[scan.omegas >= 1.5]))
    assert np.nanmax(np.abs(conv - ANCHOR_E)) < 1e-10
    ext = find_extremum(scan, 3)
    assert abs(ext.energy - ANCHOR_E) < 5e-3
    assert scan.extremum is not None and scan.extremum.omega == ext.omega


def test_scan_csv_rows_are_doubled():
    scan = scan_omega(ANCHOR, 0, [0], 1.0, 2.0, steps=8)
    rows = list(scan.to_csv_rows())
    assert len(rows) == 8
    assert rows[0][2] == 2 * scan.energies[0, 0]


def test_monotone_row_has_no_extremum():
    scan = OmegaScan(
        omegas=np.linspace(1, 2, 10),
        depths=[3],
        energies=np.linspace(1, 2, 10)[None, :],
        converged=np.zeros((1, 10), bool),
    )
    with pytest.raises(NoExtremumInRange):
        find_extremum(scan)


def test_extremum_skips_holes():
    w = np.linspace(0, 2, 21)
    row = (w - 1.2) ** 2
    row[5] = np.nan
    scan = OmegaScan(omegas=w + 1, depths=[3], energies=row[None, :], converged=np.zeros((1, 21), bool))
    ext = find_extremum(scan)
    assert ext.omega == pytest.approx(2.2, abs=1e-12)


def test_scan_rejects_bad_range():
    with pytest.raises(ValueError):
        scan_omega(ANCHOR, 0, [3], 2.0, 1.0)


def test_stable_basis_size_is_bounded():
    spec = PotentialSpec(4, 5.0, 0.0)
    n = stable_basis_size(spec, 2.0, 0, 1.0, 4000)
    assert 2 * spec.band + 2 <= n < 4000
    # the harmonic pencil is diagonal, so every row is stable
    assert stable_basis_size(PotentialSpec(1, 0.0, 0.0), 1.0, 0, 0.5, 500) == 500


def test_solve_at_matches_hinted_value():
    r = solve_at(PotentialSpec.from_table_units(2, 0.1, 0.1), 0, 1.74, 800)
    assert r.converged
    assert r.energy2 == pytest.approx(1.05529770725788, abs=1e-12)


def test_solve_fixed_returns_unconverged_iterate():
    spec = PotentialSpec.from_table_units(2, 1.0, 0.1)
    r = solve_fixed(spec, 0, 2.9, 22)
    assert r.energy2 == pytest.approx(1.36059173241772, abs=1e-10)
    assert r.iterations_used <= 22


def test_auto_solve_exact_family():
    g = 0.339
    sol = auto_solve(PotentialSpec(1, -g * (2 + g), g), 0)
    assert sol.energy == pytest.approx(0.5 - g, abs=1e-12)
    assert abs(sol.confirm_energy - sol.energy) <= 1e-10
    assert sol.attempts


def test_auto_solve_first_excited_state():
    spec = PotentialSpec.from_table_units(2, 0.1, 0.1)
    sol = auto_solve(spec, 1)
    other = solve_at(spec, 1, 1.3 * sol.omega, 3200)
    assert sol.energy == pytest.approx(other.energy, rel=1e-10)
    assert sol.result.coeffs[1] == 1.0
