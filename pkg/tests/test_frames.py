import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spadeclip.frames import FrameOperator, MatrixFrame, conjugate_residual, verify_tight
from spadeclip.errors import DataError


def dft_matrix(L, M):
    """Explicit analysis matrix: rows are oversampled DFT atoms over L samples."""
    m = np.arange(M)[:, None]
    n = np.arange(L)[None, :]
    return np.exp(-2j * np.pi * m * n / M) / np.sqrt(M)


def test_analysis_of_impulse():
    f = FrameOperator(2, 4)
    np.testing.assert_allclose(f.analysis(np.array([1.0, 0.0])), [0.5] * 4, atol=1e-15)


def test_synthesis_inverts_impulse():
    f = FrameOperator(2, 4)
    np.testing.assert_allclose(f.synthesis(np.full(4, 0.5 + 0j)), [1.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("L, M", [(1, 1), (3, 3), (4, 8), (5, 12), (8, 32)])
def test_matches_explicit_matrix(L, M, rng):
    A = dft_matrix(L, M)
    f = FrameOperator(L, M)
    x = rng.normal(size=L)
    z = rng.normal(size=M) + 1j * rng.normal(size=M)
    np.testing.assert_allclose(f.analysis(x), A @ x, atol=1e-12)
    np.testing.assert_allclose(f.synthesis(z), (A.conj().T @ z).real, atol=1e-12)


def test_zero_in_zero_out():
    f = FrameOperator(8, 16)
    assert not f.analysis(np.zeros(8)).any()
    assert not f.synthesis(np.zeros(16, complex)).any()


@pytest.mark.parametrize("L", [1, 7, 64, 1024])
@pytest.mark.parametrize("redundancy", [1, 2, 4])
def test_verify_tight(L, redundancy):
    assert verify_tight(FrameOperator.with_redundancy(L, redundancy), trials=10) <= 1e-10


def test_degenerate_single_sample():
    assert verify_tight(FrameOperator(1, 1), trials=3) <= 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_adjointness(L, red, seed):
    f = FrameOperator.with_redundancy(L, red)
    g = np.random.default_rng(seed)
    x = g.normal(size=L)
    z = f.analysis(g.normal(size=L))  # conjugate-symmetric
    lhs = np.vdot(z, f.analysis(x)).real
    rhs = np.dot(f.synthesis(z), x)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_analysis_synthesis_is_contraction(L, red, seed):
    f = FrameOperator.with_redundancy(L, red)
    g = np.random.default_rng(seed)
    z = g.normal(size=f.channels) + 1j * g.normal(size=f.channels)
    assert np.linalg.norm(f.analysis(f.synthesis(z))) <= np.linalg.norm(z) * (1 + 1e-12)


def test_unitary_at_redundancy_one(rng):
    f = FrameOperator(16, 16)
    z = f.analysis(rng.normal(size=16))
    np.testing.assert_allclose(f.analysis(f.synthesis(z)), z, atol=1e-14)


def test_batched_last_axis(rng):
    f = FrameOperator(8, 16)
    X = rng.normal(size=(3, 8))
    Z = f.analysis(X)
    assert Z.shape == (3, 16)
    for i in range(3):
        np.testing.assert_array_equal(Z[i], f.analysis(X[i]))
    np.testing.assert_allclose(f.synthesis(Z), X, atol=1e-13)


def test_analysis_output_is_conjugate_symmetric(rng):
    f = FrameOperator(10, 20)
    assert conjugate_residual(f.analysis(rng.normal(size=10))) <= 1e-14


@pytest.mark.parametrize("L, M", [(0, 4), (4, 2)])
def test_invalid_shapes(L, M):
    with pytest.raises(DataError):
        FrameOperator(L, M)


def test_wrong_block_length():
    with pytest.raises(DataError):
        FrameOperator(4, 8).analysis(np.zeros(5))


@pytest.mark.parametrize("L, M", [(1, 2), (4, 8), (8, 16)])
def test_random_matrix_frame_is_tight(L, M, rng):
    f = MatrixFrame.random(L, M, rng)
    assert verify_tight(f, trials=20) <= 1e-12
