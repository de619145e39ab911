"""Acceptance suite: one check per criterion, each reporting a PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
import math
import os
import time

import mpmath
import numpy as np
import pytest

from cvmacwilliams.bounds import (
    MAGIC_DMAX,
    MAGIC_FAMILIES,
    AuxFunctionTable,
    LevenshteinFunction,
    d_plus,
    lemma2_supremum_check,
    lev_fhat,
    lev_g,
    magic_quotient_check,
    quad_bound_constant,
)
from cvmacwilliams.gkp_approx import (
    EnvelopeParams,
    approx_epsilon,
    approx_gkp_codespace,
    approx_weights,
    fidelity_identities,
    fit_log_slope,
)
from cvmacwilliams.hankel import involution_residual, macwilliams_function
from cvmacwilliams.lattice import (
    code_size,
    e8_gkp,
    gkp_distance,
    gkp_weights,
    hexagonal_gkp,
    length_spectrum,
    poisson_macwilliams_residual,
    square_gkp,
)
from cvmacwilliams.specfun import bessel_zero, zonal
from cvmacwilliams.weights import analytic_weights, cat, coherent, fock, normalization_integrals, ordering_check

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from another directory
    ACCEPTANCE_LINES = {}

SQRT_PI = math.sqrt(math.pi)
MARGIN = 0.2 * SQRT_PI


def report(n, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def max_error(W, want, r) -> float:
    return float(np.max(np.abs(macwilliams_function(W)(r) - want(r))))


def test_criterion_01_coherent_eigenfunction():
    start = time.perf_counter()
    A, _ = coherent()
    r = np.linspace(0.0, 6.0, 601)
    err = float(np.max(np.abs(macwilliams_function(A)(r) - 2 * np.pi * r * np.exp(-(r**2) / 2))))
    elapsed = time.perf_counter() - start
    report(1, err <= 1e-6 and elapsed < 5, f"max error {err:.2e} (<= 1e-6), {elapsed:.2f} s (< 5 s)")


def test_criterion_02_fock_fixed_points():
    start = time.perf_counter()
    r = np.linspace(0.0, 8.0, 801)
    errs = {n: max_error(fock(n)[0], fock(n)[0], r) for n in (1, 3)}
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) <= 1e-5 and elapsed < 10
    report(2, ok, f"max errors n=1 {errs[1]:.2e}, n=3 {errs[3]:.2e} (<= 1e-5), {elapsed:.2f} s (< 10 s)")


def test_criterion_03_cat_closed_form():
    start = time.perf_counter()
    A, B = cat(4.0)
    r = np.linspace(0.0, 10.0, 1001)
    err = max_error(A, B, r)
    elapsed = time.perf_counter() - start
    report(3, err <= 1e-6 and elapsed < 10, f"max error {err:.2e} (<= 1e-6), {elapsed:.2f} s (< 10 s)")


def test_criterion_04_cat_normalization():
    ia, ib = normalization_integrals(cat(4.0))
    ra = abs(ia / (4 * np.pi * (1 + math.exp(-32))) - 1)
    rb = abs(ib / (8 * np.pi) - 1)
    report(4, max(ra, rb) <= 1e-8, f"relative errors int A {ra:.1e}, int B {rb:.1e} (<= 1e-8)")


def test_criterion_05_involution():
    r = np.linspace(0.0, 8.0, 81)
    res = {m: involution_residual(analytic_weights(m)[0], 1, r) for m in ("coherent", "fock:1", "fock:3", "cat:4")}
    detail = ", ".join(f"{m} {v:.1e}" for m, v in res.items())
    report(5, max(res.values()) <= 1e-5, f"residuals {detail} (<= 1e-5)")


def test_criterion_06_square_gkp():
    L = square_gkp()
    entries = length_spectrum(L, 6.0).entries()[:3]
    want = [(0.0, 1), (2 * SQRT_PI, 4), (math.sqrt(8 * math.pi), 4)]
    spec_ok = all(abs(a - b) <= 1e-10 and m == n for (a, m), (b, n) in zip(entries, want))
    K = code_size(L)
    dist = gkp_distance(L)
    res = poisson_macwilliams_residual(L, 1.0, 12.0)
    ok = spec_ok and abs(K - 2) <= 1e-12 and abs(dist - SQRT_PI) <= 1e-10 and res <= 1e-8
    report(6, ok, f"spectrum {'ok' if spec_ok else entries}, K {K:.12g}, distance error {abs(dist - SQRT_PI):.1e}, "
           f"Poisson residual {res:.1e} (<= 1e-8)")


def test_criterion_07_levenshtein_endpoints():
    errs = {}
    for N in (1, 2, 4):
        lev = LevenshteinFunction(N)
        ratio = lev.f(0.0) / float(lev_fhat(N, 0.0))
        want = lev.jN ** (2 * N) / (math.factorial(N) * 2**N)
        errs[N] = abs(ratio / want - 1)
        if N == 1:
            value = ratio
    y = np.linspace(0.0, 2 * np.pi, 101)
    closed = (4 * np.pi + 2 * np.sin(y) - 2 * y) / (4 * np.sqrt(2 * np.pi**3))
    half = float(np.max(np.abs(lev_fhat(0.5, y) - closed)))
    ok = max(errs.values()) <= 1e-8 and abs(value - 7.3410) <= 5e-5 and half <= 1e-6
    report(7, ok, f"ratio errors {', '.join(f'N={k} {v:.1e}' for k, v in errs.items())} (<= 1e-8), "
           f"N=1 ratio {value:.6f}, N=1/2 closed-form error {half:.1e} (<= 1e-6)")


def _d_plus_reference(N: int) -> float:
    mpmath.mp.dps = 30
    j = mpmath.besseljzero(N, 1)
    num = 16 * mpmath.factorial(N) * abs(mpmath.besselj(N - 1, j))
    den = 3 * mpmath.sqrt(mpmath.pi) * mpmath.gamma(mpmath.mpf(2 * N - 1) / 2) * j ** (N - 2)
    return float((num / den) ** (mpmath.mpf(1) / 6))


def test_criterion_08_thresholds():
    err = abs(d_plus(1) - _d_plus_reference(1))
    checks = {(N, f): lemma2_supremum_check(N, f * d_plus(N), points=4096) for N in (1, 2) for f in (0.5, 1.0)}
    half = d_plus(0.5)
    ok = err <= 1e-10 and all(checks.values()) and abs(half - (12 * math.pi) ** (1 / 6)) <= 1e-12
    report(8, ok, f"d_plus(1) = {d_plus(1):.12f} error {err:.1e} (<= 1e-10), sup checks "
           f"{sum(checks.values())}/4, N=1/2 bound {half:.4f}")


def test_criterion_09_e8_saturation():
    L = e8_gkp(2, strict=False)
    d = gkp_distance(L)
    K = code_size(L)
    derr = abs(d - 2 ** (7 / 8) * SQRT_PI)
    rel = abs(K * d**8 / (4 * math.pi) ** 4 - 1)
    valid = L.is_gkp()
    report(9, derr <= 1e-9 and rel <= 1e-6 and valid,
           f"distance error {derr:.1e}, K d^8 relative error {rel:.1e}, integral symplectic form: {valid} "
           "(the K=2 scaling of E8 is not a GKP lattice)")


def test_criterion_10_quadratic_constants():
    worst = 0.0
    for N in (1, 2, 4):
        j = bessel_zero(N, 1)
        x = np.linspace(0.0, j, 10_000)
        g_gap = lev_g(N, x) - 0.5 * quad_bound_constant(N) * (x - j) ** 2
        z_gap = zonal(N, x) - zonal(N, j) - 9 / (2 ** (N + 2) * math.factorial(N)) * (x - j) ** 2
        worst = max(worst, float(np.max(g_gap)), float(np.max(z_gap)))
    report(10, worst <= 1e-15, f"largest excess over the quadratic bounds {worst:.2e} (<= 1e-15)")


def test_criterion_11_finite_energy_slope():
    start = time.perf_counter()
    L = square_gkp()
    deltas = [0.22, 0.18, 0.15, 0.13]
    eps = [approx_epsilon(L, EnvelopeParams(dv), MARGIN).eps for dv in deltas]
    slope = fit_log_slope(deltas, eps)
    target = -gkp_distance(L) * MARGIN / 8
    elapsed = time.perf_counter() - start
    ok = slope < 0 and abs(slope - target) <= 0.35 * abs(target) and elapsed < 600
    eps_text = ", ".join(f"{e:.2e}" for e in eps)
    report(11, ok, f"eps {eps_text}; slope {slope:.4f} vs {target:.4f} +- 35%; {elapsed:.0f} s (< 600 s)")


def test_criterion_12_fidelity_identities():
    cs = approx_gkp_codespace(square_gkp(), EnvelopeParams(0.2))
    rho = cs.maximally_mixed()
    radii = [0.5, 1.0, 1.5]
    w = approx_weights(cs, radii)
    worst = 0.0
    for r, a, b in zip(radii, w.A, w.B):
        fe, stay = fidelity_identities(rho, r)
        S = 2 * math.pi * r
        worst = max(worst, abs(a / (4 * S) - fe), abs(b / (4 * S) - stay))
    report(12, worst <= 1e-4, f"largest mismatch {worst:.1e} (<= 1e-4)")


def test_criterion_13_ordering():
    r = np.linspace(0.0, 10.0, 1001)
    fails = [m for m, K in [("coherent", 1), ("fock:1", 1), ("fock:3", 1), ("cat:4", 2), ("cat:2", 2)]
             if not ordering_check(*analytic_weights(m), K, r)]
    signs_ok = all(
        np.all(W.density(r) >= 0) for m in ("coherent", "fock:1", "fock:3", "cat:4") for W in analytic_weights(m)
    )
    cs = approx_gkp_codespace(square_gkp(), EnvelopeParams(0.25))
    w = approx_weights(cs, np.linspace(0.0, 6.0, 121), check_resolution=False)
    approx_ok = bool(np.all(w.A >= 0) and np.all(w.B >= 0) and np.all(w.A <= 2 * w.B * (1 + 1e-9) + 1e-300))
    comb_ok = True
    for L in (square_gkp(), hexagonal_gkp()):
        A, B = gkp_weights(L, 8.0)
        K = code_size(L)
        lam = gkp_distance(L)
        for loc, mb in zip(B.locations, B.masses):
            ma = A.mass_at(loc)
            comb_ok &= mb >= 0 and ma >= 0 and ma <= K * mb * (1 + 1e-12)
            if loc < lam - 1e-9:
                comb_ok &= abs(ma - K * mb) <= 1e-12 * K * mb
        comb_ok &= all(B.mass_at(loc) > 0 for loc in A.locations)
    ok = not fails and signs_ok and approx_ok and comb_ok
    report(13, ok, f"analytic ordering failures {fails}, signs {signs_ok}, finite-energy GKP {approx_ok}, "
           f"ideal combs {comb_ok}")


def _magic_tables():
    f8 = os.environ.get("CVMW_F8_TABLE")
    if not f8:
        return None
    h8 = os.environ.get("CVMW_F8_FHAT_TABLE")
    return AuxFunctionTable.from_csv(f8), AuxFunctionTable.from_csv(h8) if h8 else None


def test_magic_function_tables():
    tables = _magic_tables()
    if tables is None:
        ACCEPTANCE_LINES[14] = "MAGIC TABLES: SKIPPED - set CVMW_F8_TABLE (and optionally CVMW_F8_FHAT_TABLE)"
        pytest.skip("external E8 magic-function tables not provided")
    f_table, h_table = tables
    origin = MAGIC_FAMILIES["e8"][3]
    sup_in, at_in = magic_quotient_check(f_table, h_table, "e8", MAGIC_DMAX["e8"])
    sup_out, _ = magic_quotient_check(f_table, h_table, "e8", 3.6)
    ok = abs(sup_in / origin - 1) <= 1e-4 and at_in <= 1e-6 and sup_out > origin * (1 + 1e-4)
    line = f"MAGIC TABLES: {'PASS' if ok else 'FAIL'} - sup {sup_in:.6g} at {at_in:.2g}, d=3.6 sup {sup_out:.6g}"
    ACCEPTANCE_LINES[14] = line
    print(line)
    assert ok, line


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
            except pytest.skip.Exception as exc:
                print(f"{name}: skipped ({exc})")
