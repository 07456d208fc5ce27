"""Fixed-point (operator-method) iteration for one level of a pencil.

Starting from the single Fock state ``C_k = delta_{nk}``, every sweep
updates all coefficients from the previous sweep (Jacobi ordering) and the
energy from the projection onto row ``n``:

    C_k <- -(sum_{p!=k} C_p L'_kp - E sum_{p!=k} C_p L''_kp) / (L'_kk - E L''_kk)
    E   <- (sum_p C_p L'_np) / (sum_p C_p L''_np)

with ``C_n`` pinned to 1. Both updates read the previous sweep's ``C`` and
``E``. The coupling window is the half-bandwidth of L', ``max(4, 2L)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .fock import BandedOperator
from .pencil import Pencil

log = logging.getLogger(__name__)


class IterationError(RuntimeError):
    """Base class; ``result`` holds the state reached when the error was raised."""

    def __init__(self, message: str, result: "SolveResult | None" = None):
        super().__init__(message)
        self.result = result


class DenominatorNearZero(IterationError):
    """``L'_kk - E L''_kk`` vanished for an active row: omega is resonant."""


class NotConverged(IterationError):
    """Iteration budget exhausted or the energy diverged."""


class TailOverflow(IterationError):
    """Energy settled but the coefficient tail did not: basis too small."""


@dataclass(frozen=True)
class SolveConfig:
    level: int = 0
    s_max: int = 200
    e_tol: float | None = None  # default: 1e-14 * max(1, |E|)
    tail_tol: float = 1e-10
    stagnation_window: int = 5
    divergence_factor: float = 1e6
    denom_rtol: float = 1e-12

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be non-negative")
        if self.s_max < 0:
            raise ValueError("s_max must be non-negative")
        if self.e_tol is not None and not self.e_tol > 0:
            raise ValueError("e_tol must be positive")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")

    def energy_tol(self, energy: float) -> float:
        return self.e_tol if self.e_tol is not None else 1e-14 * max(1.0, abs(energy))


@dataclass
class SolveResult:
    energy: float
    coeffs: np.ndarray
    iterations_used: int
    converged: bool
    residual_norm: float
    energy_trace: list[float] = field(default_factory=list)
    level: int = 0
    omega: float = float("nan")
    dim: int = 0

    @property
    def energy2(self) -> float:
        return 2.0 * self.energy

    @property
    def tail_max(self) -> float:
        return float(np.max(np.abs(self.coeffs[-self._band :]), initial=0.0)) if self._band else 0.0

    _band: int = 0


def _check_pencil(pencil: Pencil, level: int) -> None:
    m = pencil.band
    if pencil.dim <= level + m:
        raise ValueError(f"basis size {pencil.dim} must exceed level + band = {level + m}")


def e_zeroth(pencil: Pencil, n: int) -> float:
    """Energy estimate from the bare Fock state: ``L'_nn / L''_nn``."""
    if not 0 <= n < pencil.dim:
        raise ValueError(f"level {n} outside basis of size {pencil.dim}")
    den = pencil.l_dprime[n, n]
    assert den != 0.0, "L''_nn vanishes; impossible for g >= 0, omega > 0"
    return pencil.l_prime[n, n] / den


def om_steps(pencil: Pencil, n: int, denom_rtol: float = 1e-12) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(E^(s), C^(s))`` for s = 0, 1, 2, ... indefinitely.

    The caller decides when to stop. Rows whose parity differs from ``n``
    are never touched, so their coefficients stay exactly zero.
    """
    _check_pencil(pencil, n)
    lp, ldp = pencil.l_prime, pencil.l_dprime
    N = pencil.dim
    d1 = lp.diagonal(0)
    d2 = ldp.diagonal(0)
    active = (np.arange(N) - n) % 2 == 0
    active[n] = False
    # off-diagonal parts; row n of both operators for the energy update
    off1 = lp.data.copy()
    off1[:, lp.half_bandwidth] = 0.0
    off2 = ldp.data.copy()
    off2[:, ldp.half_bandwidth] = 0.0
    O1, O2 = BandedOperator(off1), BandedOperator(off2)

    C = np.zeros(N)
    C[n] = 1.0
    E = d1[n] / d2[n]
    yield E, C
    while True:
        # a diverging sweep overflows; callers detect that from E itself
        with np.errstate(over="ignore", invalid="ignore"):
            r1 = O1.matvec(C)
            r2 = O2.matvec(C)
        denom = d1 - E * d2
        scale = np.maximum(np.abs(d1), np.abs(E * d2))
        bad = active & (np.abs(denom) < denom_rtol * scale)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise DenominatorNearZero(f"resonant denominator at k={k} (omega={pencil.omega})")
        with np.errstate(over="ignore", invalid="ignore"):
            E_new = (d1[n] + r1[n]) / (d2[n] + r2[n])
            C_new = np.zeros(N)
            C_new[active] = -(r1[active] - E * r2[active]) / denom[active]
        C_new[n] = 1.0
        C, E = C_new, E_new
        yield E, C


def residual(pencil: Pencil, result: SolveResult) -> float:
    """``||(L' - E L'')C|| / ||L' C||`` over rows unaffected by truncation."""
    C = result.coeffs
    keep = pencil.dim - pencil.band
    with np.errstate(over="ignore", invalid="ignore"):
        a = pencil.l_prime.matvec(C)
        r = a - result.energy * pencil.l_dprime.matvec(C)
        den = np.linalg.norm(a[:keep])
        return float(np.linalg.norm(r[:keep]) / den) if den > 0 else float(np.linalg.norm(r[:keep]))


def _remaining_error(trace: list[float], window: int) -> float:
    """Estimated distance of ``trace[-1]`` from the limit.

    While the step sizes shrink monotonically the sweep is in its geometric
    regime, ``|dE_s| ~ rho^s``, and the rest of the series sums to
    ``|dE| rho / (1 - rho)``; with rho near 1 that is far larger than the
    last step. Once the steps stop shrinking they are rounding noise and
    the last step itself is the estimate.
    """
    step = abs(trace[-1] - trace[-2])
    if len(trace) < window + 2:
        return step
    steps = np.abs(np.diff(trace[-window - 2 :]))
    if not np.all(np.diff(steps) < 0):
        return step
    rho = (steps[-1] / steps[0]) ** (1.0 / window)
    return step * rho / (1.0 - rho)


def om_iterate(pencil: Pencil, cfg: SolveConfig) -> SolveResult:
    """Run the iteration until the energy stagnates or ``cfg.s_max`` sweeps.

    Raises
    ------
    DenominatorNearZero
        A diagonal denominator vanished; move omega.
    NotConverged
        ``s_max`` reached without stagnation, or the energy blew up.
    TailOverflow
        Energy stagnated but the last ``band`` coefficients exceed
        ``cfg.tail_tol``; enlarge the basis.
    """
    n = cfg.level
    m = pencil.band
    trace: list[float] = []
    streak = 0
    E0 = None
    C = None
    s = -1
    converged = False

    def make(E, C, s, ok):
        res = SolveResult(
            energy=float(E),
            coeffs=C,
            iterations_used=s,
            converged=ok,
            residual_norm=float("nan"),
            energy_trace=list(trace),
            level=n,
            omega=pencil.omega,
            dim=pencil.dim,
        )
        res._band = m
        res.residual_norm = residual(pencil, res)
        return res

    steps = om_steps(pencil, n, cfg.denom_rtol)
    try:
        for s, (E, C) in enumerate(steps):
            trace.append(float(E))
            if E0 is None:
                E0 = E
                continue
            if not np.isfinite(E) or abs(E) > cfg.divergence_factor * max(1.0, abs(E0)):
                raise NotConverged(f"energy diverged at s={s} (omega={pencil.omega})", make(E, C, s, False))
            if _remaining_error(trace, cfg.stagnation_window) <= cfg.energy_tol(E):
                streak += 1
            else:
                streak = 0
            if streak >= cfg.stagnation_window:
                converged = True
                break
            if s >= cfg.s_max:
                break
    except DenominatorNearZero as exc:
        if C is not None:
            exc.result = make(trace[-1], C, s, False)
        raise
    finally:
        steps.close()

    result = make(trace[-1], C, s, converged)
    if converged and result.tail_max > cfg.tail_tol:
        raise TailOverflow(
            f"tail coefficients {result.tail_max:.3e} exceed {cfg.tail_tol:.1e} at dim={pencil.dim}",
            result,
        )
    if not converged:
        raise NotConverged(
            f"no stagnation within s_max={cfg.s_max} (last step {abs(trace[-1] - trace[-2]) if len(trace) > 1 else float('nan'):.3e})",
            result,
        )
    return result
