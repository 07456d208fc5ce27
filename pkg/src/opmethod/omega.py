"""Choosing the free oscillator frequency omega.

Exact energies do not depend on omega, but finite-iteration estimates
``E^(s)(omega)`` do, and they are stationary near the exact value. This
module scans those curves, locates their stationary points and drives the
escalating solve used by the CLI.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import FrequencyContext
from .iteration import (
    DenominatorNearZero,
    IterationError,
    NotConverged,
    SolveConfig,
    SolveResult,
    TailOverflow,
    e_zeroth,
    om_iterate,
    om_steps,
)
from .pencil import Pencil, PotentialSpec, assemble

log = logging.getLogger(__name__)

MAX_BASIS = 4000
S_MAX_LADDER = (50, 200, 800, 3200, 12800)


class NoExtremumInRange(RuntimeError):
    pass


class ScanFailed(RuntimeError):
    """Every grid point of a scan failed."""


class EscalationBudgetExceeded(RuntimeError):
    def __init__(self, message: str, attempts=None):
        super().__init__(message)
        self.attempts = attempts or []


# basis sizing ----------------------------------------------------------------


def stable_basis_size(spec: PotentialSpec, omega: float, level: int, energy: float, n_max: int = MAX_BASIS) -> int:
    """Largest basis on which the Jacobi sweep stays contractive.

    For L >= 2 the row sums ``sum_{p!=k} |L'_kp - E L''_kp|`` eventually
    exceed the diagonal as k grows, and once the iterate's support reaches
    those rows round-off is amplified every sweep. Returns the first row
    past the best-conditioned one where the ratio crosses 1 (or ``n_max``).
    """
    p = assemble(spec, FrequencyContext.for_power(omega, n_max, spec.L))
    b = p.l_prime.half_bandwidth
    A = p.l_prime.data - energy * p.l_dprime.widen(b).data
    diag = np.abs(A[:, b])
    ratio = (np.abs(A).sum(axis=1) - diag) / np.where(diag > 0, diag, np.inf)
    ratio = ratio[: n_max - b]
    k0 = int(np.argmin(ratio))
    over = np.flatnonzero(ratio[k0:] > 1.0)
    size = k0 + int(over[0]) if len(over) else n_max
    return max(size, level + 2 * p.band + 2)


def _tail_is_growing(coeffs: np.ndarray, band: int) -> bool:
    """True when |C_k| has a minimum inside the basis and rises toward the edge."""
    mag = np.abs(coeffs)
    if not np.any(mag > 0):
        return False
    tail = mag[-band:].max()
    interior_min = mag[: len(mag) - band].min(initial=np.inf)
    nz = mag[: len(mag) - band][mag[: len(mag) - band] > 0]
    interior_min = nz.min() if len(nz) else interior_min
    return tail > 1e3 * interior_min


def solve_at(
    spec: PotentialSpec,
    level: int,
    omega: float,
    s_max: int,
    basis: int | None = None,
    e_tol: float | None = None,
    tail_tol: float = 1e-10,
    max_basis: int = MAX_BASIS,
) -> SolveResult:
    """Converged solve at a fixed omega with adaptive basis size.

    Without ``basis`` the size starts at ``level + 40*band`` clipped to the
    stability limit; a TailOverflow grows the basis (x2) when the
    coefficients are still decaying at the edge and shrinks it (x0.7) when
    they have started to grow again.
    """
    m = spec.band
    cfg = SolveConfig(level=level, s_max=s_max, e_tol=e_tol, tail_tol=tail_tol)
    fixed = basis is not None
    if fixed:
        N = int(basis)
        cap = N
    else:
        guess = e_zeroth(assemble(spec, FrequencyContext.for_power(omega, level + 2 * m + 2, spec.L)), level)
        cap = stable_basis_size(spec, omega, level, guess, max_basis)
        N = min(level + 40 * m, cap)
    floor = level + 2 * m + 2
    tried: set[int] = set()
    while True:
        tried.add(N)
        pencil = assemble(spec, FrequencyContext.for_power(omega, N, spec.L))
        try:
            return om_iterate(pencil, cfg)
        except TailOverflow as exc:
            if fixed:
                raise
            if _tail_is_growing(exc.result.coeffs, m):
                new = max(floor, int(0.7 * N))
            else:
                new = min(2 * N, cap if N < cap else max_basis)
            if new in tried or new == N:
                raise
            log.debug("omega=%g: basis %d -> %d after tail overflow", omega, N, new)
            N = new


# scans --------------------------------------------------------------------------


@dataclass
class OmegaScan:
    omegas: np.ndarray
    depths: list
    energies: np.ndarray  # (len(depths), len(omegas)); NaN marks a failed point
    converged: np.ndarray
    level: int = 0
    spec: PotentialSpec | None = None
    extremum: "Extremum | None" = None

    def row(self, depth) -> np.ndarray:
        return self.energies[self.depths.index(depth)]

    def to_csv_rows(self):
        """``(omega, s, energy2, converged)`` tuples in grid order."""
        for i, s in enumerate(self.depths):
            for j, w in enumerate(self.omegas):
                yield float(w), s, 2.0 * float(self.energies[i, j]), bool(self.converged[i, j])


@dataclass
class Extremum:
    omega: float
    energy: float
    candidates: list[tuple[float, float]] = field(default_factory=list)


def _finite_depth_energies(spec, level, omega, depths, max_basis):
    """E^(s) at each requested finite depth from one sweep sequence.

    The basis holds the full support of C^(s) (it grows by ``band`` per
    sweep), so these are the untruncated iterates.
    """
    m = spec.band
    top = max(depths)
    N = min(level + m * (top + 1) + 2 * m + 2, max_basis)
    pencil = assemble(spec, FrequencyContext.for_power(omega, N, spec.L))
    out = {}
    prev = None
    steps = om_steps(pencil, level)
    try:
        for s, (E, _) in enumerate(steps):
            if not np.isfinite(E):
                break
            if s in depths:
                ok = prev is not None and abs(E - prev) <= 1e-10 * max(1.0, abs(E))
                out[s] = (E, ok)
            prev = E
            if s >= top:
                break
    except DenominatorNearZero:
        pass
    finally:
        steps.close()
    return out


def scan_omega(
    spec: PotentialSpec,
    level: int,
    depths: Sequence,
    omega_lo: float,
    omega_hi: float,
    steps: int = 48,
    max_basis: int = MAX_BASIS,
) -> OmegaScan:
    """Tabulate ``E^(s)(omega)`` on a logarithmic grid.

    Finite entries of ``depths`` are iteration counts; ``math.inf`` (or the
    string ``"inf"``) requests a converged solve. Failed points are stored
    as NaN.
    """
    if not 0 < omega_lo < omega_hi:
        raise ValueError("need 0 < omega_lo < omega_hi")
    if steps < 8:
        raise ValueError("steps must be >= 8")
    spec.validate()
    depths = [math.inf if (d == "inf" or d == math.inf) else int(d) for d in depths]
    finite = sorted(d for d in depths if d != math.inf)
    omegas = np.geomspace(omega_lo, omega_hi, steps)
    energies = np.full((len(depths), steps), np.nan)
    conv = np.zeros((len(depths), steps), dtype=bool)
    for j, w in enumerate(omegas):
        got = _finite_depth_energies(spec, level, w, set(finite), max_basis) if finite else {}
        for i, d in enumerate(depths):
            if d == math.inf:
                try:
                    r = solve_at(spec, level, w, S_MAX_LADDER[-1], max_basis=max_basis)
                    energies[i, j] = r.energy
                    conv[i, j] = True
                except (IterationError, ValueError):
                    pass
            elif d in got:
                energies[i, j], conv[i, j] = got[d]
    if not np.any(np.isfinite(energies)):
        raise ScanFailed("all scan points failed")
    scan = OmegaScan(omegas=omegas, depths=depths, energies=energies, converged=conv, level=level, spec=spec)
    try:
        scan.extremum = find_extremum(scan)
    except NoExtremumInRange:
        scan.extremum = None
    return scan


def find_extremum(scan: OmegaScan, depth=None) -> Extremum:
    """Stationary point of one scan row.

    The default row is the deepest finite depth ``s > 0``; a converged
    (``inf``) row is flat and its stationary points are rounding noise.

    Every sign change of the forward difference between consecutive valid
    points gives a candidate, refined by a parabola through the bracketing
    triple. The leftmost candidate is returned; all are listed.
    """
    if depth is None:
        finite = [d for d in scan.depths if 0 < d < math.inf]
        depth = max(finite) if finite else max(scan.depths)
    row = scan.row(depth)
    w = scan.omegas
    cands: list[tuple[float, float]] = []
    for j in range(1, len(w) - 1):
        trio = row[j - 1 : j + 2]
        if not np.all(np.isfinite(trio)):
            continue
        d0, d1 = trio[1] - trio[0], trio[2] - trio[1]
        if d0 == 0 and d1 == 0:
            continue
        if d0 * d1 <= 0:
            x = w[j - 1 : j + 2]
            a, b, c = np.polyfit(x, trio, 2)
            if a != 0:
                xv = -b / (2 * a)
                if x[0] <= xv <= x[2]:
                    cands.append((float(xv), float(np.polyval([a, b, c], xv))))
                    continue
            cands.append((float(w[j]), float(trio[1])))
    if not cands:
        raise NoExtremumInRange(f"no stationary point of the s={depth} row in [{w[0]:g}, {w[-1]:g}]")
    return Extremum(omega=cands[0][0], energy=cands[0][1], candidates=cands)


# automatic solve -------------------------------------------------------------------


@dataclass
class AutoSolution:
    result: SolveResult
    omega: float
    s_max: int
    dim: int
    confirm_energy: float
    attempts: list[tuple[float, str]] = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.result.energy


def default_omega_hi(spec: PotentialSpec) -> float:
    return 8.0 * math.sqrt(1.0 + spec.g + abs(spec.lam))


def _solve_with_ladder(spec, level, omega, e_tol, max_basis):
    last = None
    for s_max in S_MAX_LADDER:
        try:
            return solve_at(spec, level, omega, s_max, e_tol=e_tol, max_basis=max_basis), s_max
        except NotConverged as exc:
            last = exc
            r = exc.result
            # divergence or garbage: no point in more sweeps at this omega
            if r is None or not np.isfinite(r.energy) or "diverged" in str(exc):
                raise
    raise last


def omega_candidates(spec: PotentialSpec, level: int, growth: float = 1.25, count: int = 16) -> list[float]:
    """Starting frequencies for ``auto_solve``.

    Stationary points of the s = 8 curve come first (largest first), each
    followed by a geometric climb, since strong coupling needs larger omega.
    """
    hi = default_omega_hi(spec)
    try:
        scan = scan_omega(spec, level, [8], 0.5, hi, steps=48)
        starts = sorted({round(c[0], 6) for c in (scan.extremum.candidates if scan.extremum else [])}, reverse=True)
    except ScanFailed:
        starts = []
    if not starts:
        starts = [1.0]
    out: list[float] = []
    for w0 in starts[:3]:
        for i in range(count):
            w = w0 * growth**i
            if all(abs(w / v - 1) > 0.05 for v in out):
                out.append(w)
    return out


def auto_solve(
    spec: PotentialSpec,
    level: int = 0,
    target_digits: int = 10,
    omega_ratio: float = 1.2,
    max_basis: int = MAX_BASIS,
    max_attempts: int = 40,
) -> AutoSolution:
    """Solve level ``level`` without user-supplied omega, s_max or basis.

    Each candidate omega is solved with an escalating s_max ladder and
    adaptive basis; a result is accepted once a second solve at
    ``omega_ratio * omega`` agrees to ``target_digits`` (relative to
    ``max(1, |E|)``).
    """
    spec.validate()
    tol = 10.0 ** (-target_digits)
    # slow contraction (rate ~0.99) leaves ~100x the last step as error
    e_tol_rel = max(1e-14, tol / 1000)
    attempts: list[tuple[float, str]] = []
    for omega in omega_candidates(spec, level):
        if len(attempts) >= max_attempts:
            break
        guess = abs(e_zeroth(assemble(spec, FrequencyContext.for_power(omega, level + 20, spec.L)), level))
        e_tol = e_tol_rel * max(1.0, guess)
        try:
            first, s_used = _solve_with_ladder(spec, level, omega, e_tol, max_basis)
        except (IterationError, ValueError) as exc:
            attempts.append((omega, type(exc).__name__))
            continue
        e_tol = e_tol_rel * max(1.0, abs(first.energy))
        try:
            second, _ = _solve_with_ladder(spec, level, omega * omega_ratio, e_tol, max_basis)
        except (IterationError, ValueError) as exc:
            attempts.append((omega, "confirm:" + type(exc).__name__))
            continue
        gap = abs(second.energy - first.energy) / max(1.0, abs(first.energy))
        attempts.append((omega, f"gap={gap:.2e}"))
        if gap <= tol:
            return AutoSolution(
                result=first,
                omega=omega,
                s_max=s_used,
                dim=first.dim,
                confirm_energy=second.energy,
                attempts=attempts,
            )
    raise EscalationBudgetExceeded(
        f"no omega gave {target_digits}-digit agreement for L={spec.L}, lam={spec.lam}, g={spec.g}, n={level}",
        attempts,
    )


def solve_fixed(
    spec: PotentialSpec,
    level: int,
    omega: float,
    s_max: int,
    basis: int | None = None,
    e_tol: float | None = None,
) -> SolveResult:
    """Exactly the iterate ``E^(s_max)`` (earlier if the energy stagnates).

    The default basis holds the full support ``level + band*(s_max + 1)``
    of the iterate, so no truncation enters. Unlike :func:`om_iterate` an
    exhausted budget is not an error here: the result comes back with
    ``converged=False``. Divergence and resonant denominators still raise.
    """
    m = spec.band
    N = basis if basis is not None else level + m * (s_max + 1) + 2 * m + 2
    pencil = assemble(spec, FrequencyContext.for_power(omega, N, spec.L))
    cfg = SolveConfig(level=level, s_max=s_max, e_tol=e_tol, tail_tol=math.inf)
    try:
        return om_iterate(pencil, cfg)
    except NotConverged as exc:
        if exc.result is None or "diverged" in str(exc):
            raise
        return exc.result
