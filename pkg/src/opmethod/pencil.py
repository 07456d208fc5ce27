"""Potential parameters and the transformed operator pencil (L', L'').

Writing psi = (1 + g x^2) phi turns the rational potential into the
polynomial pencil

    L'  = p^2/2 + x^2/2 + (g/2)(p^2 x^2 + x^4) + lam x^(2L)
    L'' = 1 + g x^2

whose generalized eigenvalues are the bound-state energies. ``p^2 x^2`` is
kept in that order; the pencil is not symmetric for g > 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import (
    BandedOperator,
    FrequencyContext,
    op_combine,
    op_product,
    p_squared,
    x_power,
    x_squared,
)

SUPPORTED_L = (1, 2, 3, 4)


class SpectrumDomainError(ValueError):
    """Parameters outside the region where the spectrum is purely discrete."""


@dataclass(frozen=True)
class PotentialSpec:
    """``V(x) = x^2/2 + lam x^(2L) / (1 + g x^2)``.

    ``lam`` is the coefficient of the potential itself, not the doubled
    table value; use :meth:`from_table_units` for ``2*lam``.
    """

    L: int
    lam: float
    g: float

    @classmethod
    def from_table_units(cls, L: int, lambda2: float, g: float) -> "PotentialSpec":
        return cls(L=int(L), lam=lambda2 / 2.0, g=float(g))

    @property
    def lambda2(self) -> float:
        return 2.0 * self.lam

    @property
    def band(self) -> int:
        """Half-bandwidth of L' (the g terms reach +-4 even for L = 1)."""
        return max(4, 2 * self.L)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        return 0.5 * x2 + self.lam * x2**self.L / (1.0 + self.g * x2)

    def validate(self) -> "PotentialSpec":
        problem = validate_spectrum_domain(self)
        if problem is not None:
            raise SpectrumDomainError(problem)
        return self


def validate_spectrum_domain(spec: PotentialSpec) -> str | None:
    """Return ``None`` if ``spec`` has a discrete spectrum, else the violated condition."""
    L, lam, g = spec.L, spec.lam, spec.g
    if L not in SUPPORTED_L:
        return f"L must be one of {SUPPORTED_L}, got {L!r}"
    if not (np.isfinite(lam) and np.isfinite(g)):
        return "lambda and g must be finite"
    if g < 0:
        return f"g must be >= 0, got {g}"
    if L == 1:
        # asymptotically V ~ (1/2 + lam/g) x^2 for g > 0 and (1/2 + lam) x^2 at g = 0
        slope = 0.5 + lam if g == 0 else 0.5
        if slope <= 0:
            return f"L=1 with g=0 requires lambda > -1/2, got lambda={lam}"
        xs = np.linspace(-50.0, 50.0, 2001)
        v = spec.potential(xs)
        if not np.all(np.isfinite(v)) or v.min() < v[[0, -1]].min() - 1e12:
            return "potential is not bounded below on the check grid"
        return None
    if L == 2:
        if not lam > -g / 2:
            return f"L=2 requires lambda > -g/2 (= {-g / 2}), got lambda={lam}"
        return None
    if lam < 0:
        return f"L={L} requires lambda >= 0, got lambda={lam}"
    return None


@dataclass(frozen=True)
class Pencil:
    l_prime: BandedOperator
    l_dprime: BandedOperator
    omega: float
    spec: PotentialSpec

    @property
    def dim(self) -> int:
        return self.l_prime.dim

    @property
    def band(self) -> int:
        return self.spec.band


def assemble(spec: PotentialSpec, ctx: FrequencyContext) -> Pencil:
    """Assemble (L', L'') for ``spec`` in the Fock basis of ``ctx``."""
    spec.validate()
    need = 2 * spec.L + 4
    if ctx.pad < need:
        ctx = FrequencyContext(ctx.omega, ctx.dim, need)
    M = ctx.padded_dim
    X2 = x_squared(ctx, M)
    P2 = p_squared(ctx, M)
    X4 = op_product(X2, X2)
    X4 = (X4 + X4.T).scaled(0.5)
    lp = op_combine(
        [
            (0.5, P2),
            (0.5, X2),
            (0.5 * spec.g, op_product(P2, X2)),
            (0.5 * spec.g, X4),
        ]
    ).truncate(ctx.dim)
    if spec.lam != 0.0:
        lp = op_combine([(1.0, lp), (spec.lam, x_power(ctx, spec.L))])
    lp = lp.widen(spec.band) if lp.half_bandwidth < spec.band else lp
    ldp = op_combine([(1.0, BandedOperator.identity(ctx.dim)), (spec.g, x_squared(ctx))])
    return Pencil(l_prime=lp, l_dprime=ldp, omega=ctx.omega, spec=spec)


def normal_ordered_l_prime(spec: PotentialSpec, ctx: FrequencyContext) -> BandedOperator:
    """L' built directly from its normal-ordered ladder expansion.

    Diagonal, a+-^2 and a+-^4 bands are written out term by term, including
    the asymmetric pieces ``-(g/w^2) a+^2`` and ``(g/2)(a+^2 - a^2)``; the
    potential term is taken from the closed-form ``x^(2L)`` tables.
    """
    from .fock import x_power_closed_form

    w, g, n = ctx.omega, spec.g, ctx.dim
    k = np.arange(n, dtype=float)

    def raise_j(j, poly_vals):
        # poly(n) a+^j: row k >= j, source k - j
        src = k[j:] - j
        f = np.ones_like(src)
        for i in range(1, j + 1):
            f = f * (src + i)
        return np.r_[np.zeros(j), poly_vals[j:] * np.sqrt(f)]

    def lower_j(j, poly_vals):
        # poly(n) a^j: row k < n - j, source k + j
        src = k[: n - j]
        f = np.ones_like(src)
        for i in range(1, j + 1):
            f = f * (src + i)
        return poly_vals[: n - j] * np.sqrt(f)

    ones = np.ones(n)
    diag = (
        (1 / (4 * w) + w / 4) * (2 * k + 1)
        + 3 * g / (8 * w**2) * (2 * k**2 + 2 * k + 1)
        + g / 8 * (2 * k**2 + 2 * k - 1)
    )
    c4 = g / 8 * (1 / w**2 - 1)
    c2 = 1 / (4 * w) - w / 4 + 3 * g / (4 * w**2) + g / (2 * w**2) * k
    bands = {
        0: diag,
        -4: c4 * raise_j(4, ones),
        4: c4 * lower_j(4, ones),
        -2: raise_j(2, c2) - g / w**2 * raise_j(2, ones) + g / 2 * raise_j(2, ones),
        2: lower_j(2, c2) - g / 2 * lower_j(2, ones),
    }
    lp = BandedOperator.from_diagonals(n, bands)
    if spec.lam != 0.0:
        lp = op_combine([(1.0, lp), (spec.lam, x_power_closed_form(ctx, spec.L))])
    return lp


def verify_against_normal_ordered(pencil: Pencil, interior: int | None = None) -> float:
    """Max elementwise gap between the assembled L' and its normal-ordered rebuild.

    Only the leading ``interior`` rows/columns are compared (default: all but
    the last ``band`` states, where the rebuild has no truncation effects to
    mirror anyway).
    """
    ctx = FrequencyContext(pencil.omega, pencil.dim, 2 * pencil.spec.L + 4)
    ref = normal_ordered_l_prime(pencil.spec, ctx).to_dense()
    got = pencil.l_prime.to_dense()
    m = pencil.dim - pencil.band if interior is None else interior
    return float(np.max(np.abs(got[:m, :m] - ref[:m, :m]), initial=0.0))
