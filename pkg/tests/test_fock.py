import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opmethod.fock import (
    BandedOperator,
    FrequencyContext,
    op_combine,
    op_product,
    p_squared,
    x_power,
    x_power_closed_form,
    x_squared,
)

from conftest import dense_ladder


@pytest.mark.parametrize("omega", [0.5, 1.0, 3.0])
def test_x_squared_and_p_squared_match_dense_ladder(omega):
    dim = 30
    x, p = dense_ladder(omega, dim + 4)
    ctx = FrequencyContext(omega, dim)
    np.testing.assert_allclose(x_squared(ctx).to_dense(), (x @ x)[:dim, :dim], atol=1e-14)
    np.testing.assert_allclose(p_squared(ctx).to_dense(), (p @ p).real[:dim, :dim], atol=1e-13)


@pytest.mark.parametrize("L", [1, 2, 3, 4])
@pytest.mark.parametrize("omega", [0.5, 1.0, 3.0])
def test_x_power_matches_dense_matrix_power(L, omega):
    dim = 25
    x, _ = dense_ladder(omega, dim + 2 * L + 2)
    ref = np.linalg.matrix_power(x, 2 * L)[:dim, :dim]
    got = x_power(FrequencyContext.for_power(omega, dim, L), L).to_dense()
    np.testing.assert_allclose(got, ref, rtol=1e-13, atol=1e-13 * np.abs(ref).max())


@pytest.mark.parametrize("L", [1, 2, 3, 4])
@pytest.mark.parametrize("omega", [0.5, 1.0, 3.0])
def test_closed_form_agrees_with_recursion(L, omega):
    ctx = FrequencyContext.for_power(omega, 60, L)
    a = x_power(ctx, L).to_dense()
    b = x_power_closed_form(ctx, L).to_dense()
    assert np.max(np.abs(a - b)) <= 1e-13 * np.abs(a).max()


def test_ground_state_moments():
    # <0|x^(2L)|0> = (2L-1)!! / 2^L at omega = 1
    for L, val in [(2, 0.75), (3, 1.875), (4, 6.5625)]:
        ctx = FrequencyContext.for_power(1.0, 10, L)
        assert x_power(ctx, L)[0, 0] == pytest.approx(val, rel=1e-15)
        assert x_power_closed_form(ctx, L)[0, 0] == pytest.approx(val, rel=1e-15)


def test_x4_offdiagonal_element_is_symmetric():
    ctx = FrequencyContext.for_power(1.0, 10, 2)
    X4 = x_power_closed_form(ctx, 2)
    assert X4[2, 0] == pytest.approx(6 * np.sqrt(2) / 4, rel=1e-15)
    assert X4[0, 2] == pytest.approx(6 * np.sqrt(2) / 4, rel=1e-15)


def test_p2x2_ground_element():
    ctx = FrequencyContext.for_power(1.0, 10, 1)
    P2X2 = op_product(p_squared(ctx, ctx.padded_dim), x_squared(ctx, ctx.padded_dim)).truncate(10)
    assert P2X2[0, 0] == pytest.approx(-0.25, abs=1e-15)


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_parity_zeros_are_exact(L):
    ctx = FrequencyContext.for_power(1.7, 40, L)
    for op in (x_power(ctx, L), x_power_closed_form(ctx, L), p_squared(ctx), x_squared(ctx)):
        d = op.to_dense()
        i, j = np.indices(d.shape)
        assert np.all(d[(i + j) % 2 == 1] == 0.0)


def test_x_power_rejects_small_pad():
    with pytest.raises(ValueError):
        x_power(FrequencyContext(1.0, 10, pad=4), 4)


def test_banded_roundtrip_and_arithmetic():
    rng = np.random.default_rng(0)
    M = np.triu(np.tril(rng.normal(size=(12, 12)), 3), -3)
    B = BandedOperator.from_dense(M, 3)
    np.testing.assert_array_equal(B.to_dense(), M)
    np.testing.assert_array_equal(B.T.to_dense(), M.T)
    np.testing.assert_allclose((B @ B).to_dense(), M @ M, atol=1e-13)
    v = rng.normal(size=12)
    np.testing.assert_allclose(B.matvec(v), M @ v, atol=1e-13)
    np.testing.assert_allclose((2.0 * B - B).to_dense(), M, atol=1e-15)
    C = op_combine([(1.0, B), (-0.5, BandedOperator.identity(12))])
    np.testing.assert_allclose(C.to_dense(), M - 0.5 * np.eye(12), atol=1e-15)
    assert B.widen(5).to_dense().tolist() == M.tolist()
    np.testing.assert_array_equal(B.truncate(7).to_dense(), M[:7, :7])


def test_banded_data_is_read_only():
    B = BandedOperator.identity(4)
    with pytest.raises(ValueError):
        B.data[0, 0] = 2.0


def test_lapack_layout():
    M = np.arange(1.0, 26.0).reshape(5, 5)
    M = np.triu(np.tril(M, 1), -1)
    ab = BandedOperator.from_dense(M, 1).to_lapack_banded()
    # scipy layout: ab[u + i - j, j] = M[i, j]
    for i in range(5):
        for j in range(max(0, i - 1), min(5, i + 2)):
            assert ab[1 + i - j, j] == M[i, j]


@settings(max_examples=25, deadline=None)
@given(omega=st.floats(0.2, 5.0), L=st.integers(1, 4))
def test_x_power_scales_as_omega_to_minus_L(omega, L):
    base = x_power(FrequencyContext.for_power(1.0, 20, L), L).to_dense()
    got = x_power(FrequencyContext.for_power(omega, 20, L), L).to_dense()
    np.testing.assert_allclose(got, base / omega**L, rtol=1e-12, atol=1e-300)


@settings(max_examples=25, deadline=None)
@given(omega=st.floats(0.2, 5.0))
def test_p2_plus_x2_is_diagonal_hamiltonian(omega):
    # at frequency omega, p^2/2 + omega^2 x^2/2 = omega (n + 1/2)
    ctx = FrequencyContext(omega, 20)
    H = 0.5 * p_squared(ctx).to_dense() + 0.5 * omega**2 * x_squared(ctx).to_dense()
    np.testing.assert_allclose(H, np.diag(omega * (np.arange(20) + 0.5)), atol=1e-12 * omega)
