"""Finite-energy single-mode GKP codes in a truncated Fock basis.

Conventions: xi = (q, p) in phase space, alpha = (q + i p) / sqrt(2),
D(x) D(y) = exp(-(i/2) x^T Omega y) D(x + y) and <0|D(xi)|0> = exp(-|xi|^2 / 4).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import (
    ConsistencyError,
    ConvergenceError,
    DomainError,
    ResolutionError,
    TruncationError,
    ValidationError,
)
from .hankel import Gaussian, RadialFunction, symplectic_form
from .lattice import SymplecticLattice, code_size, dual_lattice, enumerate_vectors, gkp_distance, lll_reduce
from .weights import WeightDistribution, epsilon_profile

__all__ = [
    "FockOperator",
    "EnvelopeParams",
    "default_cutoff",
    "displacement_real",
    "displacement_matrix",
    "envelope_matrix",
    "enveloped_char",
    "enveloped_char_analytic",
    "Codespace",
    "approx_gkp_codespace",
    "ApproxWeights",
    "approx_weights",
    "approx_epsilon",
    "approx_qedc_epsilon",
    "fit_log_slope",
    "fidelity_identities",
    "occupation_bounds",
]

MIN_DELTA = 0.08


@dataclass(frozen=True)
class FockOperator:
    """Operator on span{|0>, ..., |M-1>}."""

    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValidationError("Fock operator must be square")
        if not np.all(np.isfinite(e)):
            raise ValidationError("Fock operator entries must be finite")
        if self.hermitian and not np.allclose(e, e.conj().T, atol=1e-12):
            raise ValidationError("operator flagged hermitian is not")

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


@dataclass(frozen=True)
class EnvelopeParams:
    delta: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise DomainError("envelope width must be positive")

    @property
    def T(self) -> float:
        return math.tanh(self.delta**2 / 2)


def default_cutoff(delta: float) -> int:
    return int(math.ceil(12.0 / delta**2))


def displacement_real(a: float, M: int) -> np.ndarray:
    """Real matrix <m|D(a)|n> for real a >= 0, truncated to M levels.

    Each diagonal m - n = k is generated by the normalised associated
    Laguerre recurrence in n, seeded at n = 0 in log space.
    """
    if a < 0:
        raise DomainError("use a >= 0 and rotate for complex amplitudes")
    x = a * a
    k = np.arange(M, dtype=float)
    D = np.zeros((M, M))
    if x == 0.0:
        return np.eye(M)
    g0 = np.exp(0.5 * k * math.log(x) - x / 2 - 0.5 * gammaln(k + 1))
    g1 = (1 + k - x) / np.sqrt(1 + k) * g0
    idx = np.arange(M)
    D[idx, 0] = g0
    if M > 1:
        D[idx[1:], 1] = g1[:-1]
    gm2, gm1 = g0, g1
    for n in range(2, M):
        kk = k[: M - n]
        g = ((2 * n - 1 + kk - x) * gm1[: M - n] - np.sqrt((n - 1) * (n + kk - 1)) * gm2[: M - n]) / np.sqrt(
            n * (n + kk)
        )
        D[n + idx[: M - n], n] = g
        gm2, gm1 = gm1, g
    lower = np.tril(D, -1)
    sign = np.where((idx[:, None] - idx[None, :]) % 2, -1.0, 1.0)
    return D + (lower * sign).T


def _phase_rotate(D: np.ndarray, theta: float) -> np.ndarray:
    ph = np.exp(1j * theta * np.arange(D.shape[0]))
    return ph[:, None] * D * ph[None, :].conj()


def unitary_block(a: float, M: int) -> int:
    """Number of leading levels on which the truncated D(a) is unitary."""
    return max(0, int((math.sqrt(M) - a - 8.0) ** 2)) if math.sqrt(M) > a + 8.0 else 0


def displacement_matrix(xi, cutoff: int, check: bool = True) -> FockOperator:
    """Truncated Fock matrix of D(xi) for xi = (q, p)."""
    q, p = (float(v) for v in xi)
    alpha = complex(q, p) / math.sqrt(2)
    a = abs(alpha)
    if a == 0.0:
        return FockOperator(np.eye(cutoff))
    if check:
        block = unitary_block(a, cutoff)
        if block < 1:
            raise TruncationError(f"cutoff {cutoff} too small for |xi| = {abs(alpha) * math.sqrt(2):.3g}")
    D = _phase_rotate(displacement_real(a, cutoff), math.atan2(p, q))
    if check:
        sub = D[:, :block]
        defect = float(np.max(np.abs(sub.conj().T @ sub - np.eye(block))))
        if defect > 1e-8:
            raise TruncationError(f"truncated displacement not unitary on its block (defect {defect:.2g})")
    return FockOperator(D)


def envelope_matrix(params: EnvelopeParams, cutoff: int) -> FockOperator:
    """exp(-delta^2 n) as a diagonal Fock matrix."""
    return FockOperator(np.diag(np.exp(-params.delta**2 * np.arange(cutoff))), hermitian=True)


def enveloped_char_analytic(sigma, params: EnvelopeParams, xi) -> float:
    """Closed form of tr(D(xi)^+ E D(sigma) E) with E = exp(-delta^2 n)."""
    s = np.asarray(sigma, dtype=float)
    x = np.asarray(xi, dtype=float)
    t = params.T
    pref = t / (1.0 - math.exp(-params.delta**2)) ** 2
    return pref * math.exp(-(np.sum((x - s) ** 2) / t + t * np.sum((x + s) ** 2)) / 8.0)


def enveloped_char(sigma, params: EnvelopeParams, xi, cutoff: int | None = None, rtol: float = 1e-6) -> complex:
    """tr(D(xi)^+ E D(sigma) E) from Fock matrices, cross-checked against the closed form."""
    # exp(-2 delta^2 M) must sit below double precision
    reach = float(np.sum(np.square(sigma)) + np.sum(np.square(xi)))
    M = cutoff or int(math.ceil(20.0 / params.delta**2 + reach + 20))
    E = np.exp(-params.delta**2 * np.arange(M))
    Dx = displacement_matrix(xi, M, check=False).entries
    Ds = displacement_matrix(sigma, M, check=False).entries
    fock = complex(np.sum(Dx.conj() * (E[:, None] * Ds * E[None, :])))
    exact = enveloped_char_analytic(sigma, params, xi)
    scale = max(abs(exact), 1e-12 / (1.0 - math.exp(-2 * params.delta**2)))
    if abs(fock - exact) > rtol * scale:
        raise ConsistencyError(f"Fock trace {fock} and closed form {exact} disagree")
    return fock


# --- codespace ---------------------------------------------------------------


@dataclass(frozen=True)
class Codespace:
    states: np.ndarray  # shape (2, M), orthonormal rows
    lattice: SymplecticLattice
    params: EnvelopeParams
    cutoff: int
    overlap: complex  # <0|1> of the enveloped codewords before orthogonalisation
    terms: int

    @property
    def K(self) -> int:
        return self.states.shape[0]

    def projector(self) -> np.ndarray:
        return self.states.T @ self.states.conj()

    def maximally_mixed(self) -> FockOperator:
        return FockOperator(self.projector() / self.K, hermitian=True)


def _logical_basis(L: SymplecticLattice) -> tuple[np.ndarray, np.ndarray]:
    """Basis s1, s2 of the dual lattice with s1^T Omega s2 = pi."""
    B = lll_reduce(dual_lattice(L).M)
    s1, s2 = B[0], B[1]
    w = s1 @ symplectic_form(1) @ s2
    if abs(abs(w) - math.pi) > 1e-9:
        raise ValidationError("dual basis does not have symplectic product pi")
    return (s1, s2) if w > 0 else (s2, s1)


def _coherent_sum(points: np.ndarray, weights: np.ndarray, delta: float, M: int) -> np.ndarray:
    """sum_v w_v exp(-delta^2 n) <n|alpha(v)> for phase-space points v."""
    alpha = (points[:, 0] + 1j * points[:, 1]) / math.sqrt(2)
    mag = np.abs(alpha)
    n = np.arange(M)
    out = np.zeros(M, dtype=complex)
    step = 256
    for s in range(0, len(alpha), step):
        m = mag[s : s + step, None]
        logm = np.log(np.maximum(m, 1e-300))
        logamp = -(m**2) / 2 + n[None, :] * logm - 0.5 * gammaln(n + 1)[None, :] - delta**2 * n[None, :]
        logamp[:, 0] = -(mag[s : s + step] ** 2) / 2  # 0 * log 0 = 0
        phase = np.exp(1j * np.angle(alpha[s : s + step])[:, None] * n[None, :])
        out += (weights[s : s + step, None] * np.exp(logamp) * phase).sum(axis=0)
    return out


def _codewords(L: SymplecticLattice, params: EnvelopeParams, M: int, radius: float | None):
    s1, s2 = _logical_basis(L)
    G = np.array([2 * s1, s2])
    R = radius or math.sqrt(2.0 * (M + 12.0 * math.sqrt(M) + 60.0))
    _, vecs = enumerate_vectors(G, R, return_vectors=True)
    ab = np.round(vecs @ np.linalg.inv(G)).astype(np.int64)
    a, b = ab[:, 0], ab[:, 1]
    sign = np.where((a * b) % 2, -1.0, 1.0)
    psi0 = _coherent_sum(vecs, sign.astype(complex), params.delta, M)
    psi1 = _coherent_sum(vecs + s1, sign * np.exp(-0.5j * math.pi * b), params.delta, M)
    return psi0, psi1, len(vecs)


def _orthonormalize(psi0: np.ndarray, psi1: np.ndarray) -> np.ndarray:
    e0 = psi0 / np.linalg.norm(psi0)
    v = psi1.copy()
    for _ in range(2):
        v = v - np.vdot(e0, v) * e0
    e1 = v / np.linalg.norm(v)
    return np.array([e0, e1])


def approx_gkp_codespace(
    L: SymplecticLattice,
    params: EnvelopeParams,
    cutoff: int | None = None,
    radius: float | None = None,
    check_convergence: bool = True,
) -> Codespace:
    """Orthonormal basis of the enveloped single-mode K = 2 GKP code."""
    if L.N != 1:
        raise ValidationError("finite-energy codes are single-mode only")
    if abs(code_size(L) - 2.0) > 1e-9:
        raise ValidationError("finite-energy construction needs K = 2")
    if params.delta < MIN_DELTA:
        raise DomainError(f"delta below {MIN_DELTA} needs an impractical Fock cutoff")
    M = cutoff or default_cutoff(params.delta)
    psi0, psi1, terms = _codewords(L, params, M, radius)
    overlap = np.vdot(psi0, psi1) / (np.linalg.norm(psi0) * np.linalg.norm(psi1))
    states = _orthonormalize(psi0, psi1)
    if check_convergence:
        M2 = int(math.ceil(1.25 * M))
        p0, p1, _ = _codewords(L, params, M2, radius)
        drift = max(
            abs(np.vdot(w, w).real / np.vdot(v, v).real - 1.0) for v, w in ((psi0, p0), (psi1, p1))
        )
        if drift > 1e-6:
            raise ConvergenceError(f"codeword norms change by {drift:.2g} when the cutoff grows 25%")
    return Codespace(states, L, params, M, complex(overlap), terms)


# --- weights on circles ---------------------------------------------------------


@dataclass
class ApproxWeights:
    r: np.ndarray
    A: np.ndarray
    B: np.ndarray
    defect: np.ndarray  # K B - A computed without cancellation
    nodes: int

    def distributions(self, hint: Gaussian | None = None) -> tuple[WeightDistribution, WeightDistribution]:
        hint = hint or Gaussian(float(self.r[-1]) / 6.0)
        fa = RadialFunction.sampled(self.r, self.A, hint, label="A")
        fb = RadialFunction.sampled(self.r, self.B, hint, label="B")
        return WeightDistribution(1, fa), WeightDistribution(1, fb)


@lru_cache(maxsize=8)
def _diag_index(M: int) -> np.ndarray:
    i = np.arange(M)
    return (i[:, None] - i[None, :] + M - 1).ravel()


def _diagonal_sums(P: np.ndarray) -> np.ndarray:
    """c_k = sum_{m - n = k} P[m, n] for k = -(M-1)..M-1."""
    M = P.shape[0]
    idx = _diag_index(M)
    re = np.bincount(idx, weights=P.real.ravel(), minlength=2 * M - 1)
    im = np.bincount(idx, weights=P.imag.ravel(), minlength=2 * M - 1)
    return re + 1j * im


def _circle_samples(coef: np.ndarray, nodes: int) -> np.ndarray:
    """Values of sum_k c_k e^{i k theta} at theta_l = 2 pi l / nodes."""
    M = (len(coef) + 1) // 2
    ks = np.arange(-(M - 1), M)
    folded = np.zeros(nodes, dtype=complex)
    np.add.at(folded, ks % nodes, coef)
    return np.fft.ifft(folded) * nodes


def _weights_at(states: np.ndarray, r: float, nodes_list: list[int]) -> list[tuple[float, float, float]]:
    M = states.shape[1]
    D = displacement_real(r / math.sqrt(2), M)
    K = states.shape[0]
    coefs = {}
    for i in range(K):
        for j in range(K):
            coefs[i, j] = _diagonal_sums(states[i].conj()[:, None] * D * states[j][None, :])
    out = []
    for nodes in nodes_list:
        vals = {key: _circle_samples(c, nodes) for key, c in coefs.items()}
        mean = lambda f: float(np.mean(f)) * 2 * math.pi * r  # noqa: E731
        trace = sum(vals[i, i] for i in range(K))
        A = mean(np.abs(trace) ** 2)
        B = mean(sum(np.abs(v) ** 2 for v in vals.values()))
        diff = sum(np.abs(vals[i, i] - vals[j, j]) ** 2 for i in range(K) for j in range(i + 1, K))
        off = sum(np.abs(vals[i, j]) ** 2 for i in range(K) for j in range(K) if i != j)
        out.append((A, B, mean(diff + K * off)))
    return out


def approx_weights(codespace: Codespace, r_grid, nodes: int | None = None, check_resolution: bool = True) -> ApproxWeights:
    """A(r) and B(r) of the codespace by trapezoidal angular quadrature.

    With the default node count (> 2M) the trapezoid rule is exact for the
    band-limited angular integrand; a doubled-node rerun guards other choices.
    """
    states = codespace.states
    M = states.shape[1]
    n = nodes or 2 * M + 2
    r = np.atleast_1d(np.asarray(r_grid, dtype=float))
    A = np.empty_like(r)
    B = np.empty_like(r)
    defect = np.empty_like(r)
    for i, rv in enumerate(r):
        runs = _weights_at(states, float(rv), [n, 2 * n] if check_resolution else [n])
        A[i], B[i], defect[i] = runs[0]
        if check_resolution:
            a2, b2, _ = runs[1]
            scale = max(abs(b2), 1e-300)
            if abs(A[i] - a2) > 1e-6 * scale or abs(B[i] - b2) > 1e-6 * scale:
                raise ResolutionError(f"angular quadrature unresolved at r={rv} with {n} nodes")
    return ApproxWeights(r, A, B, defect, n)


@dataclass
class EpsilonResult:
    eps: float
    argmax: float
    distance: float
    d: float
    cutoff: int


def approx_epsilon(L: SymplecticLattice, params: EnvelopeParams, delta_margin: float, points: int = 256,
                   codespace: Codespace | None = None) -> EpsilonResult:
    """eps-hat on [0, lambda/2 - margin) with lambda the code distance."""
    lam = gkp_distance(L)
    if not 0 < delta_margin < lam / 2:
        raise DomainError(f"margin must lie in (0, {lam / 2})")
    d = lam / 2 - delta_margin
    cs = codespace or approx_gkp_codespace(L, params)
    cache: dict[float, tuple[float, float, float]] = {}

    def at(x):
        xs = np.atleast_1d(x)
        missing = [float(v) for v in xs if float(v) not in cache]
        if missing:
            w = approx_weights(cs, missing, check_resolution=False)
            for v, a, b, e in zip(missing, w.A, w.B, w.defect):
                cache[v] = (a, b, e)
        return np.array([cache[float(v)] for v in xs])

    prof = epsilon_profile(
        lambda x: at(x)[:, 0],
        lambda x: at(x)[:, 1],
        cs.K,
        d,
        grid=np.linspace(0.0, d, points, endpoint=False),
        defect=lambda x: at(x)[:, 2],
    )
    return EpsilonResult(prof.eps, prof.argmax, lam, d, cs.cutoff)


def approx_qedc_epsilon(L: SymplecticLattice, params: EnvelopeParams, delta_margin: float, points: int = 256) -> float:
    return approx_epsilon(L, params, delta_margin, points).eps


def fit_log_slope(deltas, eps) -> float:
    """Least-squares slope of log(eps) against 1 / delta^2."""
    x = 1.0 / np.asarray(deltas, dtype=float) ** 2
    y = np.log(np.asarray(eps, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# --- channel identities -------------------------------------------------------------


def fidelity_identities(rho: FockOperator, r: float, nodes: int | None = None) -> tuple[float, float]:
    """Entanglement fidelity and stay probability of rho under the circle-averaged
    displacement channel of radius r, from explicit Fock matrices."""
    R = rho.entries
    M = R.shape[0]
    if abs(np.trace(R) - 1) > 1e-9:
        raise ValidationError("rho must have unit trace")
    nodes = nodes or 2 * M + 2  # exact for the band-limited angular integrand
    D0 = displacement_real(r / math.sqrt(2), M)
    fe = 0.0
    stay = 0.0
    for th in 2 * np.pi * np.arange(nodes) / nodes:
        D = _phase_rotate(D0, th)
        fe += abs(np.sum(D * R.T)) ** 2
        DR = D @ R
        stay += float(np.real(np.sum(R.T * (DR @ D.conj().T))))
    return fe / nodes, stay / nodes


def occupation_bounds(rho: FockOperator, cell: np.ndarray | None = None, scan: int = 41) -> tuple[float, float]:
    """(min over displacements of <n> after displacing rho, <n> of rho).

    The minimum is taken on a scan of ``cell`` (rows = cell vectors) and
    compared with the closed-form minimiser alpha = -<a>.
    """
    R = rho.entries
    M = R.shape[0]
    n = np.arange(M)
    nbar = float(np.real(np.sum(n * np.diag(R))))
    a_exp = complex(np.sum(np.sqrt(n[1:]) * np.diag(R, 1)))  # tr(rho a)
    best = nbar - abs(a_exp) ** 2
    if cell is not None:
        t = np.linspace(0.0, 1.0, scan)
        pts = t[:, None, None] * cell[0] + t[None, :, None] * cell[1]
        alpha = (pts[..., 0] + 1j * pts[..., 1]) / math.sqrt(2)
        occ = nbar + 2 * np.real(alpha * np.conj(a_exp)) + np.abs(alpha) ** 2
        best = min(best, float(np.min(occ)))
    return best, nbar
