"""Banded matrix representations of x^2, p^2 and their products in the
harmonic-oscillator (Fock) basis |k, omega>.

Everything is built from the two tridiagonal-in-steps-of-two primitives
``x_squared`` and ``p_squared``; the closed-form normal-ordered expansions in
``x_power_closed_form`` exist only as an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class FrequencyContext:
    """Oscillator frequency, retained basis size and product padding."""

    omega: float
    dim: int
    pad: int = 12

    def __post_init__(self):
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive and finite, got {self.omega!r}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim!r}")
        if self.pad < 0:
            raise ValueError(f"pad must be non-negative, got {self.pad!r}")

    @classmethod
    def for_power(cls, omega: float, dim: int, L_max: int) -> "FrequencyContext":
        """Context with the default padding policy ``pad = 2 * L_max + 4``."""
        return cls(omega=float(omega), dim=int(dim), pad=2 * int(L_max) + 4)

    @property
    def padded_dim(self) -> int:
        return self.dim + self.pad


class BandedOperator:
    """Real square matrix with bounded half-bandwidth.

    Stored densely by diagonals: ``data[k, b + d] == M[k, k + d]`` for
    ``-b <= d <= b``. Slots that fall outside the matrix are kept at zero.
    Instances are treated as immutable; ``data`` is marked read-only.
    """

    __slots__ = ("data", "dim", "half_bandwidth")

    def __init__(self, data: np.ndarray):
        data = np.array(data, dtype=float)
        if data.ndim != 2 or data.shape[1] % 2 != 1:
            raise ValueError("band storage must have shape (dim, 2*b + 1)")
        dim, width = data.shape
        b = width // 2
        if not np.all(np.isfinite(data)):
            raise ValueError("banded operator entries must be finite")
        # zero the slots that point outside the matrix
        k = np.arange(dim)[:, None]
        d = np.arange(-b, b + 1)[None, :]
        data[(k + d < 0) | (k + d >= dim)] = 0.0
        data.setflags(write=False)
        self.data = data
        self.dim = dim
        self.half_bandwidth = b

    # construction helpers ------------------------------------------------
    @classmethod
    def zeros(cls, dim: int, half_bandwidth: int) -> "BandedOperator":
        return cls(np.zeros((dim, 2 * half_bandwidth + 1)))

    @classmethod
    def identity(cls, dim: int) -> "BandedOperator":
        return cls(np.ones((dim, 1)))

    @classmethod
    def from_diagonals(cls, dim: int, diagonals: dict[int, np.ndarray]) -> "BandedOperator":
        """Build from ``{offset: values}`` where ``values[k] = M[k, k + offset]``.

        Each array may be shorter than ``dim``; missing tail entries are zero.
        """
        b = max((abs(d) for d in diagonals), default=0)
        data = np.zeros((dim, 2 * b + 1))
        for d, vals in diagonals.items():
            vals = np.asarray(vals, dtype=float)
            data[: len(vals), b + d] = vals[:dim]
        return cls(data)

    @classmethod
    def from_dense(cls, M: np.ndarray, half_bandwidth: int | None = None) -> "BandedOperator":
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        if half_bandwidth is None:
            nz = np.argwhere(M != 0)
            half_bandwidth = int(np.max(np.abs(nz[:, 0] - nz[:, 1]))) if len(nz) else 0
        b = half_bandwidth
        data = np.zeros((n, 2 * b + 1))
        for d in range(-b, b + 1):
            diag = np.diagonal(M, offset=d)
            if d >= 0:
                data[: n - d, b + d] = diag
            else:
                data[-d:, b + d] = diag
        return cls(data)

    # views ----------------------------------------------------------------
    def diagonal(self, offset: int = 0) -> np.ndarray:
        """``M[k, k + offset]`` for every row k (zero where out of range)."""
        if abs(offset) > self.half_bandwidth:
            return np.zeros(self.dim)
        return self.data[:, self.half_bandwidth + offset].copy()

    def __getitem__(self, index: tuple[int, int]) -> float:
        k, p = index
        d = p - k
        if not (0 <= k < self.dim and 0 <= p < self.dim):
            raise IndexError(index)
        if abs(d) > self.half_bandwidth:
            return 0.0
        return float(self.data[k, self.half_bandwidth + d])

    def to_dense(self) -> np.ndarray:
        n, b = self.dim, self.half_bandwidth
        M = np.zeros((n, n))
        for d in range(-b, b + 1):
            vals = self.data[:, b + d]
            if d >= 0:
                M[np.arange(n - d), np.arange(d, n)] = vals[: n - d]
            else:
                M[np.arange(-d, n), np.arange(n + d)] = vals[-d:]
        return M

    def to_lapack_banded(self) -> np.ndarray:
        """Upper-diagonal-first layout used by ``scipy.linalg.solve_banded``."""
        n, b = self.dim, self.half_bandwidth
        ab = np.zeros((2 * b + 1, n))
        for d in range(-b, b + 1):
            # ab[b - d, j] = M[j - d, j]  ->  row k = j - d holds data[k, b + d]
            vals = self.data[:, b + d]
            if d >= 0:
                ab[b - d, d:] = vals[: n - d]
            else:
                ab[b - d, : n + d] = vals[-d:]
        return ab

    # algebra ----------------------------------------------------------------
    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.dim:
            raise ValueError(f"vector length {v.shape[0]} != dim {self.dim}")
        b = self.half_bandwidth
        vp = np.zeros(self.dim + 2 * b, dtype=np.result_type(v, float))
        vp[b : b + self.dim] = v
        out = np.zeros(self.dim, dtype=vp.dtype)
        for j in range(2 * b + 1):
            out += self.data[:, j] * vp[j : j + self.dim]
        return out

    def __matmul__(self, other):
        if isinstance(other, BandedOperator):
            return op_product(self, other)
        return self.matvec(other)

    def transpose(self) -> "BandedOperator":
        n, b = self.dim, self.half_bandwidth
        out = np.zeros_like(self.data)
        for d in range(-b, b + 1):
            # T[k, k + d] = M[k + d, k] = data[k + d, b - d]
            col = self.data[:, b - d]
            if d >= 0:
                out[: n - d, b + d] = col[d:]
            else:
                out[-d:, b + d] = col[: n + d]
        return BandedOperator(out)

    @property
    def T(self) -> "BandedOperator":
        return self.transpose()

    def widen(self, half_bandwidth: int) -> "BandedOperator":
        """Same matrix stored with a larger half-bandwidth."""
        b = self.half_bandwidth
        if half_bandwidth < b:
            raise ValueError("cannot narrow a banded operator by widening")
        out = np.zeros((self.dim, 2 * half_bandwidth + 1))
        out[:, half_bandwidth - b : half_bandwidth + b + 1] = self.data
        return BandedOperator(out)

    def truncate(self, dim: int) -> "BandedOperator":
        """Leading ``dim x dim`` block."""
        if dim > self.dim:
            raise ValueError(f"cannot truncate dim {self.dim} to larger {dim}")
        return BandedOperator(self.data[:dim])

    def scaled(self, c: float) -> "BandedOperator":
        return BandedOperator(c * self.data)

    def __add__(self, other: "BandedOperator") -> "BandedOperator":
        return op_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: "BandedOperator") -> "BandedOperator":
        return op_combine([(1.0, self), (-1.0, other)])

    def __rmul__(self, c: float) -> "BandedOperator":
        return self.scaled(float(c))

    def __repr__(self) -> str:
        return f"BandedOperator(dim={self.dim}, half_bandwidth={self.half_bandwidth})"


def op_combine(terms: Iterable[tuple[float, BandedOperator]]) -> BandedOperator:
    """Linear combination ``sum c_i A_i``; bandwidth is the max of the inputs."""
    terms = list(terms)
    if not terms:
        raise ValueError("op_combine needs at least one term")
    dims = {A.dim for _, A in terms}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch in op_combine: {sorted(dims)}")
    dim = dims.pop()
    b = max(A.half_bandwidth for _, A in terms)
    out = np.zeros((dim, 2 * b + 1))
    for c, A in terms:
        a = A.half_bandwidth
        out[:, b - a : b + a + 1] += c * A.data
    return BandedOperator(out)


def op_product(A: BandedOperator, B: BandedOperator) -> BandedOperator:
    """Matrix product of two banded operators of equal dim.

    The result is exact for the truncated matrices; entries near the lower
    right corner therefore differ from the infinite-basis product unless the
    operands were built on a padded basis (see ``x_power``).
    """
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch in op_product: {A.dim} != {B.dim}")
    n, a, b = A.dim, A.half_bandwidth, B.half_bandwidth
    c = a + b
    out = np.zeros((n, 2 * c + 1))
    # B rows shifted: Bp[k + a] = B row k
    Bp = np.zeros((n + 2 * a, 2 * b + 1))
    Bp[a : a + n] = B.data
    for e in range(-a, a + 1):
        Acol = A.data[:, a + e][:, None]
        rows = Bp[a + e : a + e + n]
        out[:, c + e - b : c + e + b + 1] += Acol * rows
    return BandedOperator(out)


def _step2(ctx_dim: int, omega: float) -> np.ndarray:
    j = np.arange(ctx_dim - 2, dtype=float)
    return np.sqrt((j + 1) * (j + 2)) / (2 * omega)


def x_squared(ctx: FrequencyContext, dim: int | None = None) -> BandedOperator:
    """``x^2 = ((2n + 1) + a+^2 + a^2) / (2 omega)`` on ``dim`` states (default ``ctx.dim``)."""
    n = ctx.dim if dim is None else dim
    k = np.arange(n, dtype=float)
    off = _step2(n, ctx.omega)
    return BandedOperator.from_diagonals(n, {0: (2 * k + 1) / (2 * ctx.omega), 2: off, -2: np.r_[0.0, 0.0, off]})


def p_squared(ctx: FrequencyContext, dim: int | None = None) -> BandedOperator:
    """``p^2 = omega((2n + 1) - a+^2 - a^2) / 2``."""
    n = ctx.dim if dim is None else dim
    w = ctx.omega
    k = np.arange(n, dtype=float)
    off = -(w**2) * _step2(n, w)
    return BandedOperator.from_diagonals(n, {0: w * (2 * k + 1) / 2, 2: off, -2: np.r_[0.0, 0.0, off]})


def x_power(ctx: FrequencyContext, L: int) -> BandedOperator:
    """``x^(2L)`` by repeated banded products with ``x^2``.

    Products are formed on ``ctx.dim + ctx.pad`` states and truncated to
    ``ctx.dim`` afterwards, so the retained block is exact when
    ``ctx.pad >= 2 * L``.
    """
    if int(L) != L or L < 1:
        raise ValueError(f"L must be a positive integer, got {L!r}")
    L = int(L)
    if ctx.pad < 2 * L:
        raise ValueError(f"pad={ctx.pad} too small for x^{2 * L}; need at least {2 * L}")
    X2 = x_squared(ctx, ctx.padded_dim)
    out = X2
    for _ in range(L - 1):
        out = op_product(out, X2)
    # symmetric in exact arithmetic; remove the rounding asymmetry of the products
    out = (out + out.T).scaled(0.5)
    return out.truncate(ctx.dim)


# Normal-ordered expansions of x^(2L): (overall factor, {j: poly}) with the
# result scaled by omega^-L. Key +j stands for P(n) a+^j, -j for P(n) a^j, 0 for
# the diagonal; P has lowest power first and n sits to the left of the ladder
# power, so it is evaluated at the row (destination) state.
_CLOSED_FORM: dict[int, tuple[float, dict[int, Sequence[float]]]] = {
    1: (1 / 2, {0: (1, 2), 2: (1,), -2: (1,)}),
    2: (1 / 4, {0: (3, 6, 6), 4: (1,), -4: (1,), 2: (-2, 4), -2: (6, 4)}),
    3: (
        1 / 8,
        {
            0: (15, 40, 30, 20),
            6: (1,),
            -6: (1,),
            4: (-9, 6),
            -4: (15, 6),
            2: (15, -15, 15),
            -2: (45, 45, 15),
        },
    ),
    4: (
        1 / 16,
        {
            0: (105, 280, 350, 140, 70),
            8: (1,),
            -8: (1,),
            6: (-20, 8),
            -6: (28, 8),
            4: (98, -84, 28),
            -4: (210, 140, 28),
            2: (-84, 196, -84, 56),
            -2: (420, 532, 252, 56),
        },
    ),
}


def _ladder_factor(src: np.ndarray, j: int) -> np.ndarray:
    """<src + j| a+^j |src> = sqrt((src + 1)...(src + j))."""
    out = np.ones_like(src, dtype=float)
    for i in range(1, j + 1):
        out *= src + i
    return np.sqrt(out)


def x_power_closed_form(ctx: FrequencyContext, L: int) -> BandedOperator:
    """``x^(2L)`` for L = 1..4 from explicit normal-ordered expansions.

    Independent of ``x_power``; used to validate the recursive products.
    """
    if L not in _CLOSED_FORM:
        raise ValueError(f"closed form available only for L in 1..4, got {L!r}")
    scale, bands = _CLOSED_FORM[L]
    n = ctx.dim
    pref = scale / ctx.omega**L
    diagonals: dict[int, np.ndarray] = {}
    for key, poly in bands.items():
        j = abs(key)
        if key == 0:
            k = np.arange(n, dtype=float)
            diagonals[0] = pref * np.polynomial.polynomial.polyval(k, poly)
        elif key > 0:
            # P(n) a+^j: <k|.|k - j>, below the diagonal
            k = np.arange(j, n, dtype=float)
            vals = np.polynomial.polynomial.polyval(k, poly) * _ladder_factor(k - j, j)
            diagonals[-j] = pref * np.r_[np.zeros(j), vals]
        else:
            # P(n) a^j: <k|.|k + j>, above the diagonal
            k = np.arange(n - j, dtype=float)
            diagonals[j] = pref * np.polynomial.polynomial.polyval(k, poly) * _ladder_factor(k, j)
    return BandedOperator.from_diagonals(n, diagonals)
