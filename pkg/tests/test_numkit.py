import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctxresponse import numkit
from ctxresponse.errors import BadPanelCount, BranchAmbiguity, NotHermitian, NotUnitary
from conftest import X, random_hermitian


def test_eig_identity():
    assert np.allclose(numkit.hermitian_eig(np.eye(2)).eigenvalues, [1, 1])


def test_eig_diagonal_is_permuted_identity():
    eig = numkit.hermitian_eig(np.diag([3.0, -1.0]))
    assert np.allclose(eig.eigenvalues, [-1, 3])
    assert np.allclose(np.abs(eig.eigenvectors), [[0, 1], [1, 0]])


def test_eig_pauli_x():
    assert np.allclose(numkit.hermitian_eig(X).eigenvalues, [-1, 1])


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        numkit.hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_projectors_group_degenerate_levels():
    levels = numkit.hermitian_eig(np.diag([0.0, 1.0, 1.0])).projectors()
    assert [round(e, 12) for e, _ in levels] == [0.0, 1.0]
    assert np.allclose(levels[1][1], np.diag([0, 1, 1]))


def test_expm_zero_exponent():
    assert np.allclose(numkit.expm_i_hermitian(X, 0.0), np.eye(2))


def test_expm_diagonal_phase():
    assert np.allclose(numkit.expm_i_hermitian(np.diag([0, np.pi]), 1.0), np.diag([1, -1]))


def test_expm_euler_formula():
    assert np.allclose(numkit.expm_i_hermitian(X, np.pi / 2), -1j * X)
    th = 0.37
    assert np.allclose(numkit.expm_i_hermitian(X, th), np.cos(th) * np.eye(2) - 1j * np.sin(th) * X)


def test_log_identity():
    assert np.allclose(numkit.unitary_log(np.eye(3)), 0)


def test_log_diagonal_phases():
    h = numkit.unitary_log(np.diag([1, np.exp(-1j * np.pi / 3)]))
    assert np.allclose(h, np.diag([0, np.pi / 3]), atol=1e-12)


def test_log_branch_ambiguity():
    with pytest.raises(BranchAmbiguity):
        numkit.unitary_log(np.diag([1.0, -1.0]))


def test_log_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        numkit.unitary_log(np.diag([1.0, 2.0]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_log_exp_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, d)
    h *= 3.0 / max(1.0, np.max(np.abs(np.linalg.eigvalsh(h))))  # spectrum inside (-pi, pi)
    back = numkit.unitary_log(numkit.expm_i_hermitian(h, 1.0))
    assert numkit.opnorm(back - h) <= 10 * numkit.DEFAULT_TOL * max(1, numkit.opnorm(h))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_eig_reconstruction(d, seed):
    a = random_hermitian(np.random.default_rng(seed), d)
    eig = numkit.hermitian_eig(a)
    assert numkit.opnorm(eig.reconstruct() - a) <= 10 * numkit.DEFAULT_TOL * max(1, numkit.opnorm(a))
    assert numkit.is_unitary(eig.eigenvectors)
    assert np.all(np.diff(eig.eigenvalues) >= 0)


def test_eig_is_deterministic(rng):
    a = random_hermitian(rng, 5)
    e1, e2 = numkit.hermitian_eig(a), numkit.hermitian_eig(a.copy())
    assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
    assert np.array_equal(e1.eigenvectors, e2.eigenvectors)


def test_predicates():
    assert numkit.is_hermitian(X) and numkit.is_unitary(X) and not numkit.is_psd(X)
    assert numkit.is_psd(np.eye(2)) and not numkit.is_hermitian(np.array([[0, 1j], [1j, 0]]))


def test_simpson_constant():
    m = np.array([[1, 2j], [0, 3]])
    assert np.allclose(numkit.simpson_integrate(lambda t: m, 0.0, 2.5, 8), 2.5 * m)


def test_simpson_sine():
    m = np.array([[1.0, -1], [2, 0.5]])
    val = numkit.simpson_integrate(lambda t: np.sin(t) * m, 0.0, np.pi, 64)
    assert np.allclose(val, 2 * m, rtol=1e-6)


def test_simpson_empty_interval():
    assert np.array_equal(numkit.simpson_integrate(lambda t: np.eye(2), 1.0, 1.0, 4), np.zeros((2, 2)))


@pytest.mark.parametrize("n", [0, 3, 7])
def test_simpson_panel_count(n):
    with pytest.raises(BadPanelCount):
        numkit.simpson_integrate(lambda t: np.eye(1), 0, 1, n)


def test_simpson_order():
    m = np.array([[1.0, 2.0], [0.5, -1.0]])
    exact = (np.exp(1j * 2.0) - 1) / 1j * m
    errs = [numkit.opnorm(numkit.simpson_integrate(lambda t: np.exp(1j * t) * m, 0, 2.0, n) - exact)
            for n in (8, 16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.9)
