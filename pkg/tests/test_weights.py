import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import i0, j0

from cvmacwilliams.errors import DomainError, TruncationRequiredError, ValidationError
from cvmacwilliams.lattice import square_gkp
from cvmacwilliams.weights import (
    CodeParams,
    WeightDistribution,
    analytic_weights,
    b_second_moment,
    cat,
    coherent,
    epsilon_profile,
    fock,
    gkp_ideal,
    normalization_integrals,
    ordering_check,
    qedc_epsilon,
)


def test_closed_forms_at_sample_points():
    r = np.array([0.0, 0.5, 1.7, 3.0])
    A, B = coherent()
    assert np.allclose(A(r), 2 * np.pi * r * np.exp(-(r**2) / 2))
    A, _ = fock(1)
    assert np.allclose(A(r), 2 * np.pi * r * (1 - r**2 / 2) ** 2 * np.exp(-(r**2) / 2))
    A, B = cat(4.0)
    assert np.allclose(A(r), 4 * np.pi * r * np.exp(-(r**2) / 2) * (1 + j0(8 * r)))
    direct_b = 4 * np.pi * r * np.exp(-(r**2) / 2) * (1 + math.exp(-32) * i0(8 * r))
    assert np.allclose(B(r), direct_b, rtol=1e-13)


def test_cat_b_stable_at_large_radius():
    _, B = cat(12.0)
    assert np.isfinite(B(np.array([200.0]))).all()


@pytest.mark.parametrize("model,trace_sq,K", [("coherent", 1, 1), ("fock:1", 1, 1), ("fock:3", 1, 1)])
def test_normalization_pure_states(model, trace_sq, K):
    A, B = analytic_weights(model)
    ia, ib = normalization_integrals((A, B))
    assert ia == pytest.approx(2 * np.pi * trace_sq, rel=1e-8)
    assert ib == pytest.approx(2 * np.pi * K**2, rel=1e-8)


def test_normalization_cat():
    ia, ib = normalization_integrals(cat(4.0))
    assert ia == pytest.approx(4 * np.pi * (1 + math.exp(-32)), rel=1e-8)
    assert ib == pytest.approx(8 * np.pi, rel=1e-8)


def test_comb_normalization_needs_truncation():
    W = WeightDistribution(1, None, [(0.0, 1.0), (1.0, 4.0)])
    with pytest.raises(TruncationRequiredError):
        normalization_integrals((W, W))


def test_small_cat_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        A, _ = cat(1.0)
    assert caught and "warning" in A.meta


def test_model_spec_errors():
    with pytest.raises(ValidationError):
        analytic_weights("squeezed")
    with pytest.raises(ValidationError):
        analytic_weights("fock:x")
    with pytest.raises(DomainError):
        fock(-1)


def test_code_params_validation():
    CodeParams(1, 2, 1.0, 0.0)
    for bad in [(0, 2, 1.0, 0.0), (1, 0.5, 1.0, 0.0), (1, 2, -1.0, 0.0), (1, 2, 1.0, 1.0), (1, 2, math.nan, 0)]:
        with pytest.raises(ValidationError):
            CodeParams(*bad)


def test_pure_state_epsilon_zero():
    A, B = coherent()
    for d in (0.5, 2.0, 5.0):
        assert qedc_epsilon(A, B, 1, d) == pytest.approx(0.0, abs=1e-12)


def test_cat_epsilon_against_dense_scan():
    A, B = cat(4.0)
    eps = qedc_epsilon(A, B, 2, 2.0)
    r = np.linspace(1e-6, 2.0, 400_001)[:-1]
    dens_a = 4 * np.pi * r * np.exp(-(r**2) / 2) * (1 + j0(8 * r))
    dens_b = 4 * np.pi * r * np.exp(-(r**2) / 2) * (1 + math.exp(-32) * i0(8 * r))
    direct = float(np.max(1 - dens_a / (2 * dens_b)))
    assert 0 < eps < 1
    assert eps == pytest.approx(direct, abs=1e-6)


def test_ideal_gkp_epsilon_zero_below_distance():
    A, B = gkp_ideal(square_gkp(), 8.0)
    assert qedc_epsilon(A, B, 2, math.sqrt(math.pi) * 0.999) == 0.0


def test_ideal_gkp_epsilon_one_at_distance():
    A, B = gkp_ideal(square_gkp(), 8.0)
    prof = epsilon_profile(A, B, 2, math.sqrt(math.pi) * 1.001)
    assert prof.eps == pytest.approx(1.0)
    assert prof.argmax == pytest.approx(math.sqrt(math.pi))


def test_ordering_holds_for_models():
    r = np.linspace(0, 10, 501)
    for model, K in [("coherent", 1), ("fock:1", 1), ("fock:3", 1), ("cat:4", 2), ("cat:2", 2)]:
        assert ordering_check(*analytic_weights(model), K, r)


def test_second_moment_coherent_and_scaling():
    _, B = coherent()
    assert b_second_moment(B) == pytest.approx(1.0, rel=1e-9)
    assert b_second_moment(B.scaled(3.0)) == pytest.approx(3.0, rel=1e-9)


def test_second_moment_fock_against_quad():
    _, B = fock(1)
    want = quad(lambda r: 2 * np.pi * r**3 * (1 - r**2 / 2) ** 2 * np.exp(-(r**2) / 2), 0, np.inf)[0] / (4 * np.pi)
    assert b_second_moment(B) == pytest.approx(want, rel=1e-9)


def test_second_moment_rejects_combs():
    _, B = gkp_ideal(square_gkp(), 6.0)
    with pytest.raises(TruncationRequiredError):
        b_second_moment(B)


def test_comb_masses():
    A, B = gkp_ideal(square_gkp(), 4.0)
    assert A.mass_at(0.0) == 4.0
    assert B.mass_at(0.0) == 2.0
    assert B.mass_at(math.sqrt(math.pi)) == 8.0
    assert A.mass_at(2 * math.sqrt(math.pi)) == 16.0


def test_delta_locations_must_increase():
    with pytest.raises(ValidationError):
        WeightDistribution(1, None, [(1.0, 1.0), (0.5, 1.0)])
