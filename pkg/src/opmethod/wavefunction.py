"""Back-transform of Fock coefficients to the physical eigenfunction.

``Psi(x) = (1 + g x^2) sum_k C_k phi_k(x) / N`` where ``phi_k`` are the
oscillator eigenfunctions at frequency omega and ``N^2`` includes the
``(1 + g x^2)^2`` weight.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import FrequencyContext, op_combine, x_power, BandedOperator

# exp(-xi^2 / 2) underflows to zero near xi = 38.6
XI_LIMIT = 40.0


@dataclass
class WaveSample:
    xs: np.ndarray
    values: np.ndarray
    norm_sq: float
    level: int = 0
    clipped: np.ndarray | None = None  # points beyond the overflow guard, set to 0


def norm_squared(coeffs, g: float, omega: float) -> float:
    """``C^T (1 + g x^2)^2 C`` from banded x^2 and x^4 (no quadrature)."""
    C = np.asarray(coeffs, dtype=float)
    ctx = FrequencyContext.for_power(omega, len(C), 2)
    weight = op_combine(
        [
            (1.0, BandedOperator.identity(len(C))),
            (2.0 * g, x_power(ctx, 1)),
            (g * g, x_power(ctx, 2)),
        ]
    )
    return float(C @ weight.matvec(C))


def hermite_series(coeffs, omega: float, xs) -> tuple[np.ndarray, np.ndarray]:
    """``sum_k C_k phi_k(x)`` by the normalized three-term recurrence.

    ``phi_{k+1} = sqrt(2/(k+1)) xi phi_k - sqrt(k/(k+1)) phi_{k-1}`` with
    ``xi = sqrt(omega) x``. The Gaussian factor is carried as a separate
    exponent and the recurrence is rescaled whenever it grows large, so
    thousands of terms stay finite. Returns ``(values, clipped_mask)``.
    """
    C = np.asarray(coeffs, dtype=float)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    xi = np.sqrt(omega) * xs
    clipped = np.abs(xi) > XI_LIMIT
    xi_c = np.where(clipped, 0.0, xi)

    # phi_k = exp(log_scale) * cur, starting from cur = 1
    log_scale = 0.25 * np.log(omega / np.pi) - 0.5 * xi_c**2
    prev = np.zeros_like(xi_c)
    cur = np.ones_like(xi_c)
    acc = C[0] * cur if len(C) else np.zeros_like(xi_c)
    for k in range(len(C) - 1):
        nxt = np.sqrt(2.0 / (k + 1)) * xi_c * cur - np.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        acc = acc + C[k + 1] * cur
        big = np.abs(cur) > 1e150
        if np.any(big):
            s = np.where(big, 1e-150, 1.0)
            prev, cur, acc = prev * s, cur * s, acc * s
            log_scale = log_scale + np.where(big, np.log(1e150), 0.0)
    with np.errstate(under="ignore", over="ignore"):
        out = acc * np.exp(log_scale)
    out[clipped] = 0.0
    return out, clipped


def evaluate_psi(coeffs, g: float, omega: float, xs, level: int = 0, norm_sq: float | None = None) -> WaveSample:
    """Normalized ``Psi_n`` on ``xs``.

    ``C_level = 1`` and ``N > 0``, so the dominant Fock component enters
    with a positive sign.
    """
    xs = np.asarray(xs, dtype=float)
    if norm_sq is None:
        norm_sq = norm_squared(coeffs, g, omega)
    series, clipped = hermite_series(coeffs, omega, xs)
    values = (1.0 + g * xs**2) * series / np.sqrt(norm_sq)
    return WaveSample(xs=xs, values=values, norm_sq=norm_sq, level=level, clipped=clipped)


def count_nodes(values, rel_floor: float = 1e-8) -> int:
    """Sign changes of ``values`` ignoring points below ``rel_floor * max``."""
    v = np.asarray(values)
    keep = v[np.abs(v) > rel_floor * np.max(np.abs(v))]
    return int(np.count_nonzero(np.diff(np.sign(keep)) != 0))
