import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctxresponse import ontomodel
from ctxresponse.certify import fit_scaling_exponent
from ctxresponse.errors import BadInputRange, BadParameters, UnknownLabel


def deterministic_om(mu, t):
    xi = np.eye(2)
    return ontomodel.FiniteOM(np.array(mu), {"T": np.array(t, dtype=float)}, xi, np.array([0.0, 1.0]))


def test_identity_transition_deterministic_response():
    om = deterministic_om([0.3, 0.7], np.eye(2))
    assert np.allclose(ontomodel.om_statistics(om, "T"), [0.3, 0.7])


def test_uniform_swap_invariant():
    om = deterministic_om([0.5, 0.5], [[0, 1], [1, 0]])
    assert np.array_equal(ontomodel.om_statistics(om, "T"), ontomodel.om_statistics(om, "T_id"))


def triple_loop(om, label):
    mu, t, xi = om.mu, om.transition(label), om.response
    out = []
    for k in range(xi.shape[0]):
        terms = []
        for lam in range(om.n_lambda):
            for lam2 in range(om.n_lambda):
                terms.append((float(mu[lam]) * float(t[lam2, lam])) * float(xi[k, lam2]))
        out.append(math.fsum(terms))
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_statistics_match_triple_loop(seed):
    om = ontomodel.sample_nc_model(seed, 5, 3, 0.1)
    for label in ("T", "T_star", "T_prime", "T_id"):
        assert ontomodel.om_statistics(om, label).tolist() == triple_loop(om, label)


def test_statistics_normalised():
    om = ontomodel.sample_nc_model(3, 6, 4, 0.2)
    assert ontomodel.om_statistics(om, "T").sum() == pytest.approx(1.0, abs=1e-12)


def test_unknown_label():
    om = deterministic_om([1.0, 0.0], np.eye(2))
    with pytest.raises(UnknownLabel):
        ontomodel.om_statistics(om, "nope")
    with pytest.raises(KeyError):
        ontomodel.om_delta_o(om, "T_star")


def test_validation():
    xi, o = np.eye(2), np.array([0.0, 1.0])
    with pytest.raises(BadInputRange):
        ontomodel.FiniteOM(np.array([0.6, 0.6]), {}, xi, o)
    with pytest.raises(BadInputRange):
        ontomodel.FiniteOM(np.array([0.5, 0.5]), {"T": np.array([[0.5, 0.5], [0.6, 0.5]])}, xi, o)
    with pytest.raises(BadInputRange):
        ontomodel.FiniteOM(np.array([0.5, 0.5]), {"T_id": np.array([[0.0, 1.0], [1.0, 0.0]])}, xi, o)
    with pytest.raises(BadInputRange):
        ontomodel.FiniteOM(np.array([0.5, 0.5]), {}, xi, np.array([-1.0, 1.0]))
    with pytest.raises(BadInputRange):
        ontomodel.FiniteOM(np.array([0.5, 0.5]), {}, np.array([[0.7, 0.2], [0.2, 0.8]]), o)


def test_identity_has_zero_response():
    om = ontomodel.sample_nc_model(1, 4, 3, 0.1)
    assert ontomodel.om_delta_o(om, "T_id") == 0.0


def test_zero_pd_forces_identity():
    for seed in range(20):
        om = ontomodel.sample_nc_model(seed, 5, 3, 0.0)
        assert np.array_equal(om.transition("T"), np.eye(5))
        assert ontomodel.om_delta_o(om, "T") == 0.0


def test_sampler_is_deterministic():
    a = ontomodel.sample_nc_model((9, 4), 6, 4, 0.15)
    b = ontomodel.sample_nc_model((9, 4), 6, 4, 0.15)
    for label in ("T", "T_star", "T_prime"):
        assert np.array_equal(a.transition(label), b.transition(label))
    assert np.array_equal(a.mu, b.mu) and np.array_equal(a.response, b.response)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 4), st.floats(0.0, 1.0))
def test_constraint_and_bound(seed, n_lambda, n_out, p_d):
    om = ontomodel.sample_nc_model(seed, n_lambda, n_out, p_d)
    assert om.constraint.verified_residual <= 1e-12
    assert ontomodel.nc_residual(om, p_d) <= 1e-12
    bound = 4 * p_d * om.o_max + 1e-12
    assert abs(ontomodel.om_delta_o(om, "T")) <= bound
    assert abs(ontomodel.om_delta_o(om, "T_star")) <= bound


def test_sampler_range_check():
    with pytest.raises(BadInputRange):
        ontomodel.sample_nc_model(0, 3, 2, 1.2)
    with pytest.raises(BadInputRange):
        ontomodel.sample_nc_model(0, 0, 2, 0.1)


def test_oracle_small_run():
    res = ontomodel.theorem_oracle(11, 2000, keep_rows=True)
    assert res.violations == res.symmetric_violations == res.chain_violations == 0
    assert 0 < res.max_ratio <= 4
    assert len(res.rows) == 2000


def test_zeno_nc():
    assert ontomodel.zeno_nc_survival(0.0, 3.0, 7) == 1.0
    assert ontomodel.zeno_nc_survival(1.0, 1.0, 10) == pytest.approx(0.99**10, abs=1e-12)
    for n in (10, 100, 1000):
        assert ontomodel.zeno_nc_survival(2.0, 1.5, n) >= 1 - 2.0 * 1.5**2 / n
    with pytest.raises(BadParameters):
        ontomodel.zeno_nc_survival(5.0, 1.0, 1)
    with pytest.raises(BadParameters):
        ontomodel.zeno_nc_survival(-1.0, 1.0, 3)


def test_zeno_quantum():
    assert ontomodel.zeno_quantum_survival(np.pi, 1.0, 1) == pytest.approx(0.0, abs=1e-15)
    assert ontomodel.zeno_quantum_survival(np.pi, 1.0, 100) >= 0.975
    with pytest.raises(BadParameters):
        ontomodel.zeno_quantum_survival(1.0, 1.0, 0)


def test_zeno_deficits_scale_as_inverse_n():
    ns = np.unique(np.logspace(1, 4, 10).astype(int))
    nc = [1 - ontomodel.zeno_nc_survival(1.0, 1.0, int(n)) for n in ns]
    q = [1 - ontomodel.zeno_quantum_survival(np.pi, 1.0, int(n)) for n in ns]
    assert fit_scaling_exponent(ns, nc).slope == pytest.approx(-1.0, abs=0.05)
    assert fit_scaling_exponent(ns, q).slope == pytest.approx(-1.0, abs=0.05)
    assert all(d <= 1.0 / n + 1e-15 for d, n in zip(nc, ns))
