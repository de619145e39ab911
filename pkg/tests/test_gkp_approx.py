import math

import mpmath
import numpy as np
import pytest

from cvmacwilliams.errors import (
    ConsistencyError,
    ConvergenceError,
    DomainError,
    ResolutionError,
    TruncationError,
    ValidationError,
)
from cvmacwilliams.gkp_approx import (
    EnvelopeParams,
    FockOperator,
    approx_epsilon,
    approx_gkp_codespace,
    approx_weights,
    displacement_matrix,
    displacement_real,
    enveloped_char,
    enveloped_char_analytic,
    envelope_matrix,
    fidelity_identities,
    fit_log_slope,
    occupation_bounds,
    unitary_block,
)
from cvmacwilliams.hankel import Compact, RadialFunction, macwilliams_function, radial_integral
from cvmacwilliams.lattice import gkp_distance, hexagonal_gkp, scaled_integer_lattice, square_gkp
from cvmacwilliams.weights import WeightDistribution, fock

SQRT_PI = math.sqrt(math.pi)


def laguerre_element(m, n, a):
    # <m|D(a)|n> for real a from the associated Laguerre form
    x = mpmath.mpf(a) ** 2
    lo, hi = min(m, n), max(m, n)
    val = (
        mpmath.sqrt(mpmath.factorial(lo) / mpmath.factorial(hi))
        * mpmath.mpf(a) ** (hi - lo)
        * mpmath.exp(-x / 2)
        * mpmath.laguerre(lo, hi - lo, x)
    )
    return float(val if m >= n or (hi - lo) % 2 == 0 else -val)


@pytest.fixture(scope="module")
def cs03():
    return approx_gkp_codespace(square_gkp(), EnvelopeParams(0.3))


@pytest.fixture(scope="module")
def cs02():
    return approx_gkp_codespace(square_gkp(), EnvelopeParams(0.2))


@pytest.fixture(scope="module")
def w02(cs02):
    return approx_weights(cs02, np.linspace(0.0, 28.0, 701), check_resolution=False)


def test_displacement_elements_against_laguerre():
    a = 2.7
    D = displacement_real(a, 60)
    for m, n in [(0, 0), (3, 0), (0, 3), (7, 12), (12, 7), (40, 41), (59, 20)]:
        assert D[m, n] == pytest.approx(laguerre_element(m, n, a), abs=1e-13)


def test_displacement_vacuum_and_identity():
    xi = np.array([0.8, -1.1])
    D = displacement_matrix(xi, 120).entries
    assert D[0, 0] == pytest.approx(math.exp(-np.sum(xi**2) / 4), abs=1e-14)
    assert np.array_equal(displacement_matrix((0.0, 0.0), 10).entries, np.eye(10))


def test_displacement_unitary_on_block_and_truncation_guard():
    D = displacement_matrix((3.0, 1.0), 200).entries
    sub = D[:, :60]
    assert np.max(np.abs(sub.conj().T @ sub - np.eye(60))) < 1e-10
    with pytest.raises(TruncationError):
        displacement_matrix((20.0, 0.0), 100)


def test_displacement_composition_phase():
    x, y = np.array([0.6, 0.2]), np.array([-0.3, 0.9])
    M = 160
    Dx = displacement_matrix(x, M).entries
    Dy = displacement_matrix(y, M).entries
    Dxy = displacement_matrix(x + y, M).entries
    omega = x[0] * y[1] - x[1] * y[0]
    want = np.exp(-0.5j * omega) * Dxy
    assert np.max(np.abs((Dx @ Dy)[:40, :40] - want[:40, :40])) < 1e-10


def test_truncated_traces():
    # tr D(xi) stays bounded while tr D(xi)^+ D(xi) grows like the cutoff
    xi = (1.2, 0.0)
    traces = [abs(displacement_matrix(xi, M, check=False).trace()) for M in (50, 100, 200)]
    assert max(traces) < 5.0
    for M in (50, 100, 200):
        D = displacement_matrix(xi, M, check=False).entries
        norm = np.trace(D.conj().T @ D).real
        assert unitary_block(1.2 / math.sqrt(2), M) <= norm <= M


def test_envelope_matrix():
    E = envelope_matrix(EnvelopeParams(1e-8), 5).entries
    assert np.allclose(E, np.eye(5))
    p = EnvelopeParams(0.4)
    E = envelope_matrix(p, 400).entries
    assert np.trace(E @ E) == pytest.approx(1 / (1 - math.exp(-2 * 0.16)), rel=1e-12)


def test_enveloped_char_routes():
    p = EnvelopeParams(0.5)
    origin = enveloped_char((0, 0), p, (0, 0))
    assert origin.real == pytest.approx(1 / (1 - math.exp(-0.5)), rel=1e-8)
    sigma, xi = (1.0, 0.5), (-0.5, 1.0)
    val = enveloped_char(sigma, p, xi)
    assert abs(val.imag) <= 1e-9 * abs(val)
    assert val.real == pytest.approx(enveloped_char_analytic(sigma, p, xi), rel=1e-6)
    with pytest.raises(ConsistencyError):
        enveloped_char((3.0, 0.0), p, (2.5, 0.5), cutoff=12)


def test_codespace_orthonormal(cs03):
    S = cs03.states
    assert np.max(np.abs(S.conj() @ S.T - np.eye(2))) < 1e-10
    assert cs03.K == 2 and cs03.cutoff == math.ceil(12 / 0.09)
    P = cs03.projector()
    assert np.max(np.abs(P @ P - P)) < 1e-10
    assert cs03.maximally_mixed().trace().real == pytest.approx(1.0)
    wide = approx_gkp_codespace(square_gkp(), EnvelopeParams(0.5))
    assert np.max(np.abs(wide.states.conj() @ wide.states.T - np.eye(2))) < 1e-10


def test_codeword_overlap_shrinks():
    overlaps = [abs(approx_gkp_codespace(square_gkp(), EnvelopeParams(d)).overlap) for d in (0.4, 0.3, 0.2)]
    assert overlaps[0] > overlaps[1] > overlaps[2]
    assert overlaps[2] < 1e-6


def test_hexagonal_codespace():
    cs = approx_gkp_codespace(hexagonal_gkp(), EnvelopeParams(0.35))
    assert np.max(np.abs(cs.states.conj() @ cs.states.T - np.eye(2))) < 1e-10


def test_codespace_guards():
    with pytest.raises(DomainError):
        approx_gkp_codespace(square_gkp(), EnvelopeParams(0.05))
    with pytest.raises(ValidationError):
        approx_gkp_codespace(scaled_integer_lattice(1, math.sqrt(2 * math.pi)), EnvelopeParams(0.3))
    with pytest.raises(ConvergenceError):
        approx_gkp_codespace(square_gkp(), EnvelopeParams(0.3), cutoff=40)


def test_weights_signs_and_ordering(w02):
    assert np.all(w02.A >= -1e-12)
    assert np.all(w02.B >= -1e-12)
    assert np.all(w02.A <= 2 * w02.B * (1 + 1e-10) + 1e-14)
    assert np.all(w02.defect >= -1e-14)


def test_weights_ratio_profile(w02):
    r, A, B = w02.r, w02.A, w02.B
    inner = (r > 0) & (r < SQRT_PI / 2 - 0.35)
    assert np.all(np.abs(A[inner] / (2 * B[inner]) - 1) < 1e-5)
    near = np.argmin(np.abs(r - SQRT_PI))
    assert A[near] / (2 * B[near]) < 0.9


def test_weights_normalization(w02):
    ia = np.trapezoid(w02.A, w02.r)
    ib = np.trapezoid(w02.B, w02.r)
    assert ia == pytest.approx(4 * math.pi, rel=1e-3)
    assert ib == pytest.approx(8 * math.pi, rel=1e-3)


def test_sampled_transform_matches_direct(cs02, w02):
    f = RadialFunction.sampled(w02.r[w02.r <= 26.0], w02.A[w02.r <= 26.0], Compact(26.0))
    r = np.linspace(0.0, 4.0, 41)
    direct = approx_weights(cs02, r, check_resolution=False).B
    got = macwilliams_function(WeightDistribution(1, f))(r)
    assert np.max(np.abs(got - direct)) <= 2e-4
    assert radial_integral(f) == pytest.approx(4 * math.pi, rel=1e-3)


def test_resolution_guard(cs03):
    with pytest.raises(ResolutionError):
        approx_weights(cs03, [3.0], nodes=8)
    w = approx_weights(cs03, [0.5, 3.0])
    assert w.nodes == 2 * cs03.cutoff + 2


def test_epsilon_decreases_with_energy(cs02):
    L = square_gkp()
    margin = 0.2 * SQRT_PI
    e3 = approx_epsilon(L, EnvelopeParams(0.3), margin, points=64)
    e2 = approx_epsilon(L, EnvelopeParams(0.2), margin, points=64, codespace=cs02)
    assert 0 < e2.eps < e3.eps < 1
    assert e2.d == pytest.approx(gkp_distance(L) / 2 - margin)


def test_epsilon_shrinks_toward_the_origin(cs03):
    L = square_gkp()
    lam = gkp_distance(L)
    eps = [approx_epsilon(L, cs03.params, m, points=48, codespace=cs03).eps for m in (0.2, 0.5, 0.8)]
    assert eps[0] > eps[1] > eps[2]
    with pytest.raises(DomainError):
        approx_epsilon(L, cs03.params, lam)


def test_fit_log_slope_exact_line():
    d = np.array([0.3, 0.25, 0.2])
    assert fit_log_slope(d, 3.0 * np.exp(-0.7 / d**2)) == pytest.approx(-0.7, rel=1e-10)


def test_fidelity_pure_states():
    M = 60
    vac = np.zeros((M, M))
    vac[0, 0] = 1.0
    fe, stay = fidelity_identities(FockOperator(vac), 1.0)
    assert fe == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert stay == pytest.approx(fe, rel=1e-12)
    one = np.zeros((M, M))
    one[1, 1] = 1.0
    A, _ = fock(1)
    r = 1.7
    fe, _ = fidelity_identities(FockOperator(one), r)
    assert fe == pytest.approx(float(A(np.array([r]))[0]) / (2 * math.pi * r), rel=1e-10)
    assert fidelity_identities(FockOperator(one), 0.0) == pytest.approx((1.0, 1.0))


def test_fidelity_rejects_unnormalized():
    with pytest.raises(ValidationError):
        fidelity_identities(FockOperator(np.eye(3)), 1.0)


def test_fidelity_matches_weights_for_code(cs03):
    rho = cs03.maximally_mixed()
    w = approx_weights(cs03, [0.8])
    fe, stay = fidelity_identities(rho, 0.8)
    S = 2 * math.pi * 0.8
    assert fe == pytest.approx(w.A[0] / (4 * S), abs=1e-10)
    assert stay == pytest.approx(w.B[0] / (4 * S), abs=1e-10)


def test_occupation_bounds_coherent_state():
    M = 80
    alpha = 1.5 + 0.5j
    n = np.arange(M)
    from scipy.special import gammaln

    psi = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)) * np.exp(1j * n * np.angle(alpha))
    rho = FockOperator(np.outer(psi, psi.conj()), hermitian=True)
    best, nbar = occupation_bounds(rho)
    assert nbar == pytest.approx(abs(alpha) ** 2, rel=1e-10)
    assert best == pytest.approx(0.0, abs=1e-10)


def test_second_moment_chain(cs02, w02):
    # (1/4 pi) int r^2 B / K^2 = 2 nbar + 1 for the maximally mixed code state
    rho = cs02.maximally_mixed()
    cell = 2 * np.array([[SQRT_PI, 0.0], [0.0, SQRT_PI]])
    best, nbar = occupation_bounds(rho, cell)
    moment = np.trapezoid(w02.r**2 * w02.B, w02.r) / (4 * math.pi * 4)
    assert moment == pytest.approx(2 * nbar + 1, rel=1e-5)
    assert best <= moment <= 4 * nbar + 3
    assert best <= nbar
