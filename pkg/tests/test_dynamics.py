import numpy as np
import pytest

from ctxresponse import dynamics, numkit
from ctxresponse.certify import fit_scaling_exponent
from ctxresponse.errors import NotCyclic, NotDensityMatrix, NotHermitian, StepCountTooSmall
from conftest import KET0, PLUS, X, Y, Z, random_density, random_hermitian

H0 = np.diag([0.0, 1.0])
O = np.diag([0.0, 1.0])


def rabi(g, h0=H0, v=X):
    return dynamics.DrivenSystem(h0, dynamics.constant_pulse(v), g, 1.0)


def test_free_evolution():
    h0 = np.diag([0.2, -0.7, 1.3])
    sys = dynamics.DrivenSystem(h0, dynamics.constant_pulse(np.eye(3)), 0.0, 2.0)
    assert np.allclose(dynamics.propagate_exact(sys, 1.3), numkit.expm_i_hermitian(h0, 1.3), atol=1e-12)


def test_time_independent_closed_form():
    sys = rabi(0.3, h0=np.zeros((2, 2)))
    assert np.allclose(dynamics.propagate_exact(sys, 0.8), numkit.expm_i_hermitian(X, 0.3 * 0.8), atol=1e-12)


def test_midpoint_second_order():
    sys = dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(X, 1.0), 0.7, 1.0)
    ref = dynamics.propagate_exact(sys, 1.0, 4096, check_tol=None)
    errs = [numkit.opnorm(dynamics.propagate_exact(sys, 1.0, n, check_tol=None) - ref) for n in (16, 32, 64)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.allclose(ratios, 4.0, rtol=0.05)


def test_richardson_check_fires():
    sys = dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(X, 1.0), 3.0, 1.0)
    with pytest.raises(StepCountTooSmall):
        dynamics.propagate_exact(sys, 1.0, 4)


def test_propagator_unitary(rng):
    sys = dynamics.DrivenSystem(random_hermitian(rng, 4), dynamics.half_sine_pulse(random_hermitian(rng, 4), 1.0), 0.2, 1.0)
    u = dynamics.propagate_exact(sys, 1.0)
    assert numkit.opnorm(u.conj().T @ u - np.eye(4)) <= 10 * numkit.DEFAULT_TOL


def test_cyclic_check():
    with pytest.raises(NotCyclic):
        dynamics.DrivenSystem(H0, dynamics.constant_pulse(X), 0.1, 1.0, cyclic=True)
    dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(X, 1.0), 0.1, 1.0, cyclic=True)


def test_non_hermitian_h0():
    with pytest.raises(NotHermitian):
        dynamics.DrivenSystem(np.array([[0, 1], [0, 0]]), dynamics.constant_pulse(X), 0.1, 1.0)


def test_interaction_picture():
    op = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(dynamics.interaction_picture(op, H0, 0.0), op)
    assert np.allclose(dynamics.interaction_picture(Z, H0, 0.9), Z)
    t = 0.6
    assert np.allclose(dynamics.interaction_picture(op, H0, t), np.exp(-1j * t) * op)


def test_dyson_zero_coupling():
    assert np.allclose(dynamics.dyson_first_order(rabi(0.0), 1.0), np.eye(2))


def test_dyson_constant_v():
    # V = Z commutes with H0, so V_I = Z and the integral is t Z
    sys = rabi(0.1, v=Z)
    assert np.allclose(dynamics.dyson_first_order(sys, 0.5), np.eye(2) - 1j * 0.1 * 0.5 * Z)


def test_dyson_error_is_second_order():
    gs = np.logspace(-3, -1, 8)
    errs = []
    for g in gs:
        sys = dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(X, 1.0), g, 1.0)
        errs.append(numkit.opnorm(dynamics.dyson_first_order(sys, 1.0) - dynamics.propagate_interaction(sys, 1.0)))
    assert fit_scaling_exponent(gs, errs).slope == pytest.approx(2.0, abs=0.1)


def test_response_zero_coupling():
    assert abs(dynamics.delta_o_exact(rabi(0.0), PLUS, O, 1.0).delta_o) <= numkit.DEFAULT_TOL
    assert dynamics.delta_o_linear(rabi(0.0), PLUS, O, 1.0).delta_o == 0.0


def test_response_stationary_state():
    sys = rabi(0.2, v=Z)
    assert abs(dynamics.delta_o_exact(sys, KET0, O, 1.0).delta_o) < 1e-12


def rabi_closed_form(g, w, t):
    """Excited population for H = diag(0, w) + g X starting in |0>."""
    omega = np.sqrt(w**2 + 4 * g**2)
    return (2 * g / omega) ** 2 * np.sin(omega * t / 2) ** 2


def test_rabi_oracle():
    g = 1e-2
    res = dynamics.delta_o_exact(rabi(g), KET0, O, 1.0)
    assert res.delta_o == pytest.approx(rabi_closed_form(g, 1.0, 1.0), abs=1e-8)
    assert res.order_used == "exact"


def test_linear_commuting_is_zero():
    assert dynamics.delta_o_linear(rabi(0.1, v=Z), KET0, O, 1.0).delta_o == pytest.approx(0, abs=1e-15)


def test_first_order_agreement_is_bounded(rng):
    rho = random_density(rng, 2)
    ratios = []
    for g in np.logspace(-4, -1, 7):
        sys = dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(X, 1.0), g, 1.0)
        diff = dynamics.delta_o_exact(sys, rho, O, 1.0).delta_o - dynamics.delta_o_linear(sys, rho, O, 1.0).delta_o
        ratios.append(abs(diff) / g**2)
    assert max(ratios) < 10 * (ratios[-1] + 1e-3)


def test_first_order_slope_on_population_imbalance():
    # |0> has population imbalance, so the g^2 term survives and the gap is O(g^2)
    gs = np.logspace(-3, -1, 10)
    diffs = []
    for g in gs:
        sys = dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(Y, 1.0), g, 1.0)
        diffs.append(dynamics.delta_o_exact(sys, KET0, O, 1.0).delta_o - dynamics.delta_o_linear(sys, KET0, O, 1.0).delta_o)
    assert fit_scaling_exponent(gs, diffs).slope == pytest.approx(2.0, abs=0.1)


def test_picture_consistency(rng):
    h0, v, rho, o = (random_hermitian(rng, 3) for _ in range(4))
    rho = random_density(rng, 3)
    sys = dynamics.DrivenSystem(h0, dynamics.constant_pulse(v), 0.3, 1.0)
    u = dynamics.propagate_exact(sys, 0.7)
    u_i = dynamics.propagate_interaction(sys, 0.7)
    lhs = np.trace(u @ rho @ u.conj().T @ o)
    rhs = np.trace(u_i @ rho @ u_i.conj().T @ dynamics.interaction_picture(o, h0, 0.7))
    assert abs(lhs - rhs) <= 10 * numkit.DEFAULT_TOL


@pytest.mark.parametrize("c", [-3.0, 0.5, 7.0])
def test_shift_invariance(c, rng):
    rho = random_density(rng, 2)
    sys = dynamics.DrivenSystem(H0, dynamics.half_sine_pulse(X, 1.0), 0.05, 1.0)
    for fn in (dynamics.delta_o_exact, dynamics.delta_o_linear):
        a = fn(sys, rho, O, 1.0)
        b = fn(sys, rho, O + c * np.eye(2), 1.0)
        assert b.delta_o == pytest.approx(a.delta_o, abs=1e-12)
        assert b.o_max == pytest.approx(a.o_max)


def test_shift_recorded():
    res = dynamics.delta_o_exact(rabi(0.1), KET0, np.diag([-2.0, 3.0]), 1.0)
    assert res.o_shift == 2.0 and res.o_max == 5.0


def test_bad_density_matrix():
    with pytest.raises(NotDensityMatrix):
        dynamics.delta_o_exact(rabi(0.1), np.diag([1.2, -0.2]), O, 1.0)


def test_time_average_commuting():
    sys = rabi(0.1, v=Z)
    assert np.allclose(dynamics.time_averaged_perturbation(sys), Z)


def test_time_average_zero_mean():
    m = np.array([[1.0, 2.0], [2.0, -1.0]])
    sys = dynamics.DrivenSystem(np.zeros((2, 2)), lambda t: np.sin(2 * np.pi * t) * m, 0.1, 1.0)
    assert np.allclose(dynamics.time_averaged_perturbation(sys), 0, atol=1e-12)


def test_time_average_off_diagonal():
    w, tau = 2.3, 1.7
    sys = dynamics.DrivenSystem(np.diag([0.0, w]), dynamics.constant_pulse(X), 0.1, tau)
    x = dynamics.time_averaged_perturbation(sys)
    expected = abs((np.exp(1j * w * tau) - 1) / (1j * w)) / tau
    assert abs(x[0, 1]) == pytest.approx(expected, rel=1e-9)
    assert numkit.is_hermitian(x)
