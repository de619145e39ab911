"""Symplectic (GKP) lattices: duals, code size, length spectra and the
Poisson-summation form of the MacWilliams identity.

Generators hold basis vectors as rows, phase-space coordinates are ordered
(q_1..q_N, p_1..p_N) and the symplectic form is Omega = [[0, I], [-I, 0]].
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import (
    BudgetExceededError,
    DomainError,
    GKPConditionError,
    TruncationError,
    ValidationError,
)
from .hankel import symplectic_form

__all__ = [
    "SymplecticLattice",
    "LengthSpectrum",
    "dual_lattice",
    "code_size",
    "same_lattice",
    "contains",
    "lll_reduce",
    "enumerate_vectors",
    "length_spectrum",
    "gkp_distance",
    "gkp_weights",
    "poisson_macwilliams_residual",
    "scaled_integer_lattice",
    "square_gkp",
    "hexagonal_gkp",
    "e8_generator",
    "e8_gkp",
    "golay_code",
    "leech_generator",
    "leech_first_shell",
    "catalog",
    "load_lattice",
    "save_lattice",
]

GKP_TOL = 1e-9
MERGE_TOL = 1e-9
DEFAULT_BUDGET = 10**7


class SymplecticLattice:
    """Lattice in R^{2N} given by a generator whose rows are basis vectors.

    With ``validate`` the GKP condition (all symplectic products of basis
    vectors in 2 pi Z) is enforced; duals and exploratory scalings are built
    with ``validate=False``.
    """

    def __init__(self, M, validate: bool = True, name: str = ""):
        M = np.array(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise ValidationError("generator must be a square matrix of even size")
        if not np.all(np.isfinite(M)):
            raise ValidationError("generator entries must be finite")
        if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.abs(M).max()) ** M.shape[0]:
            raise ValidationError("generator is singular")
        self.M = M
        self.N = M.shape[0] // 2
        self.name = name
        if validate and not self.is_gkp():
            raise GKPConditionError(
                f"symplectic products not in 2 pi Z (max defect {self.gkp_defect():.3g})"
            )

    @property
    def dim(self) -> int:
        return 2 * self.N

    def symplectic_gram(self) -> np.ndarray:
        return self.M @ symplectic_form(self.N) @ self.M.T

    def gkp_defect(self) -> float:
        """Largest distance of a symplectic basis product / 2 pi from an integer."""
        g = self.symplectic_gram() / (2 * np.pi)
        return float(np.max(np.abs(g - np.round(g))))

    def is_gkp(self, tol: float = GKP_TOL) -> bool:
        return self.gkp_defect() <= tol

    def scaled(self, c: float, validate: bool = False) -> "SymplecticLattice":
        return SymplecticLattice(c * self.M, validate=validate, name=f"{c:g}*{self.name}")

    def __repr__(self) -> str:
        return f"SymplecticLattice(N={self.N}, name={self.name!r})"


def _generator(L) -> np.ndarray:
    return L.M if isinstance(L, SymplecticLattice) else np.asarray(L, dtype=float)


def dual_lattice(L: SymplecticLattice) -> SymplecticLattice:
    """Symplectic dual: all vectors with symplectic product in 2 pi Z against L."""
    omega = symplectic_form(L.N)
    try:
        Md = 2 * np.pi * np.linalg.inv(L.M @ omega).T
    except np.linalg.LinAlgError as exc:
        raise ValidationError("singular generator") from exc
    return SymplecticLattice(Md, validate=False, name=f"dual({L.name})")


def code_size(L) -> float:
    """K = |det M| / (2 pi)^N."""
    M = _generator(L)
    return abs(float(np.linalg.det(M))) / (2 * np.pi) ** (M.shape[0] // 2)


def contains(outer, inner, tol: float = 1e-8) -> bool:
    """True iff every basis vector of ``inner`` is an integer combination of ``outer``."""
    coords = _generator(inner) @ np.linalg.inv(_generator(outer))
    return bool(np.max(np.abs(coords - np.round(coords))) <= tol)


def same_lattice(L1, L2, tol: float = 1e-8) -> bool:
    """Equality of the generated lattices (unimodular change of basis)."""
    return contains(L1, L2, tol) and contains(L2, L1, tol)


def lll_reduce(B, delta: float = 0.99) -> np.ndarray:
    """LLL reduction of the row basis ``B``."""
    B = np.array(B, dtype=float)
    n = B.shape[0]

    def gso(B):
        Bs = np.zeros_like(B)
        mu = np.zeros((n, n))
        for i in range(n):
            v = B[i].copy()
            for j in range(i):
                mu[i, j] = B[i] @ Bs[j] / (Bs[j] @ Bs[j])
                v -= mu[i, j] * Bs[j]
            Bs[i] = v
        return Bs, mu

    Bs, mu = gso(B)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[k] -= q * B[j]
                mu[k, : j + 1] -= q * np.append(mu[j, :j], 1.0)
        bk = Bs[k] @ Bs[k]
        bk1 = Bs[k - 1] @ Bs[k - 1]
        if bk >= (delta - mu[k, k - 1] ** 2) * bk1:
            k += 1
        else:
            B[[k - 1, k]] = B[[k, k - 1]]
            Bs, mu = gso(B)
            k = max(k - 1, 1)
    return B


def enumerate_vectors(L, r_max: float, budget: int = DEFAULT_BUDGET, return_vectors: bool = False):
    """All lattice vectors of norm <= r_max (Fincke-Pohst, after LLL).

    Returns the squared norms (and optionally the vectors) including the
    zero vector. The tree is expanded breadth-first in chunks so that the
    innermost work is vectorized.
    """
    B = lll_reduce(_generator(L))
    n = B.shape[0]
    R = np.linalg.qr(B.T, mode="r")
    diag = np.diag(R).copy()
    R2 = r_max * r_max * (1 + 1e-12) + 1e-300
    out_norms: list[np.ndarray] = []
    out_coeffs: list[np.ndarray] = []
    visited = [0]
    chunk = 200_000

    def expand(C: np.ndarray, partial: np.ndarray, j: int) -> None:
        if j < 0:
            out_norms.append(partial)
            if return_vectors:
                out_coeffs.append(C)
            return
        t = C[:, j + 1 :] @ R[j, j + 1 :] if j + 1 < n else np.zeros(len(C))
        rjj = abs(diag[j])
        center = -t / diag[j]
        rad = np.sqrt(np.maximum(R2 - partial, 0.0)) / rjj
        lo = np.ceil(center - rad - 1e-12)
        hi = np.floor(center + rad + 1e-12)
        counts = np.maximum(hi - lo + 1, 0).astype(np.int64)
        total = int(counts.sum())
        visited[0] += total
        if visited[0] > budget:
            raise BudgetExceededError(f"enumeration exceeded budget of {budget} nodes")
        if total == 0:
            return
        parent = np.repeat(np.arange(len(C)), counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        cj = lo[parent] + offs
        newp = partial[parent] + (diag[j] * cj + t[parent]) ** 2
        keep = newp <= R2
        parent, cj, newp = parent[keep], cj[keep], newp[keep]
        newC = C[parent]
        newC[:, j] = cj
        for s in range(0, len(newC), chunk):
            expand(newC[s : s + chunk], newp[s : s + chunk], j - 1)

    expand(np.zeros((1, n)), np.zeros(1), n - 1)
    norms = np.concatenate(out_norms) if out_norms else np.zeros(0)
    if return_vectors:
        coeffs = np.concatenate(out_coeffs) if out_coeffs else np.zeros((0, n))
        return norms, coeffs @ B
    return norms


@dataclass(frozen=True)
class LengthSpectrum:
    lengths: np.ndarray
    multiplicities: np.ndarray
    r_max: float

    def entries(self) -> list[tuple[float, int]]:
        return [(float(a), int(b)) for a, b in zip(self.lengths, self.multiplicities)]

    def __len__(self) -> int:
        return len(self.lengths)


def _group(lengths: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.sort(lengths)
    if not len(lengths):
        return lengths, np.zeros(0, dtype=int)
    breaks = np.nonzero(np.diff(lengths) > tol)[0] + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [len(lengths)]])
    reps = np.array([lengths[a:b].mean() for a, b in zip(starts, ends)])
    return reps, ends - starts


def length_spectrum(L, r_max: float, budget: int = DEFAULT_BUDGET) -> LengthSpectrum:
    """Lengths of lattice vectors up to ``r_max`` with their multiplicities."""
    if not r_max > 0:
        raise DomainError("r_max must be positive")
    norms = enumerate_vectors(L, r_max, budget)
    lengths = np.sqrt(np.maximum(norms, 0.0))
    lengths[lengths < 1e-9] = 0.0
    reps, mult = _group(lengths[lengths <= r_max * (1 + 1e-12)])
    reps[0] = 0.0
    return LengthSpectrum(reps, mult, r_max)


def _shortest_nonzero(M: np.ndarray) -> float:
    B = lll_reduce(M)
    bound = float(np.min(np.linalg.norm(B, axis=1)))
    norms = enumerate_vectors(B, bound * (1 + 1e-9))
    return float(np.sqrt(np.min(norms[norms > 1e-18])))


def gkp_distance(L: SymplecticLattice) -> float:
    """Length of the shortest nonzero vector of the symplectic dual."""
    return _shortest_nonzero(dual_lattice(L).M)


def gkp_weights(L: SymplecticLattice, r_max: float):
    """Delta-comb distributions A = K^2 spec(L) and B = K spec(L^perp) up to r_max."""
    from .weights import WeightDistribution

    K = code_size(L)
    sa = length_spectrum(L, r_max)
    sb = length_spectrum(dual_lattice(L), r_max)
    meta = {"model": f"gkp:{L.name}", "K": K}
    A = WeightDistribution(L.N, None, list(zip(sa.lengths, K * K * sa.multiplicities)), r_max=r_max, meta=meta)
    B = WeightDistribution(L.N, None, list(zip(sb.lengths, K * sb.multiplicities)), r_max=r_max, meta=meta)
    return A, B


def poisson_macwilliams_residual(L: SymplecticLattice, s: float, r_max: float) -> float:
    """Relative mismatch of K sum_{L^perp} g_s against K^2 sum_L hat g_s.

    g_s(r) = exp(-r^2 / (2 s^2)) on R^{2N}; hat g_s(r) = s^{2N} exp(-s^2 r^2 / 2).
    """
    if not s > 0:
        raise DomainError("gaussian scale must be positive")
    N = L.N
    tail = max(math.exp(-(r_max**2) / (2 * s * s)), s ** (2 * N) * math.exp(-(s * s) * r_max**2 / 2))
    if tail > 1e-14:
        raise TruncationError(f"gaussian tail {tail:.2g} at r_max={r_max} is too large for s={s}")
    K = code_size(L)
    nd = enumerate_vectors(dual_lattice(L), r_max)
    nl = enumerate_vectors(L, r_max)
    lhs = K * float(np.sum(np.exp(-nd / (2 * s * s))))
    rhs = K * K * s ** (2 * N) * float(np.sum(np.exp(-(s * s) * nl / 2)))
    return abs(lhs - rhs) / lhs


# --- catalog -----------------------------------------------------------------


def scaled_integer_lattice(N: int, c: float, validate: bool = True) -> SymplecticLattice:
    """c Z^{2N}; a GKP lattice when c^2 is a multiple of 2 pi."""
    return SymplecticLattice(c * np.eye(2 * N), validate=validate, name=f"{c:g}Z^{2 * N}")


def square_gkp() -> SymplecticLattice:
    """2 sqrt(pi) Z^2: square GKP qubit (K = 2)."""
    return SymplecticLattice(2 * math.sqrt(math.pi) * np.eye(2), name="square")


def hexagonal_gkp() -> SymplecticLattice:
    """Hexagonal GKP qubit with K = 2."""
    c = math.sqrt(8 * math.pi / math.sqrt(3))
    M = c * np.array([[1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    return SymplecticLattice(M, name="hexagonal")


def e8_generator() -> np.ndarray:
    """Unimodular E8 basis in the D8 + (1/2)^8 coordinates."""
    B = np.zeros((8, 8))
    B[0, 0] = 2.0
    for i in range(1, 7):
        B[i, i - 1], B[i, i] = -1.0, 1.0
    B[7] = 0.5
    return B


def _e8_structures() -> dict[str, np.ndarray]:
    """Orthogonal complex structures (J^2 = -1) preserving E8."""
    i_blk = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    j_blk = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
    zero = np.zeros((4, 4))
    Ji = np.block([[i_blk, zero], [zero, i_blk]])
    Jj = np.block([[j_blk, zero], [zero, j_blk]])
    return {"complex": Ji, "quaternion": (Ji + Jj) / math.sqrt(2)}


def _symplectic_frame(J: np.ndarray) -> np.ndarray:
    """Orthogonal R with R^T Omega R = J (rows u_1..u_n, -J u_1..-J u_n)."""
    dim = J.shape[0]
    n = dim // 2
    us: list[np.ndarray] = []
    span: list[np.ndarray] = []
    for e in np.eye(dim):
        v = e.copy()
        for w in span:
            v -= (v @ w) * w
        if np.linalg.norm(v) < 1e-8:
            continue
        v /= np.linalg.norm(v)
        jv = J @ v
        us.append(v)
        span.extend([v, jv])
        if len(us) == n:
            break
    rows = us + [-(J @ u) for u in us]
    return np.array(rows)


def _e8_lattice(a2: float, structure: str, validate: bool, name: str) -> SymplecticLattice:
    J = _e8_structures()[structure]
    R = _symplectic_frame(J)
    M = math.sqrt(a2) * e8_generator() @ R.T
    return SymplecticLattice(M, validate=validate, name=name)


def e8_gkp(code_size_: float, strict: bool = True) -> SymplecticLattice:
    """A GKP code on 4 modes whose lattice is a scaled copy of E8.

    Valid sizes are m^4 (scale^2 = 2 pi m, standard complex structure) and
    4 m^4 (scale^2 = 2 pi sqrt(2) m, quaternionic structure). Other sizes
    have no E8-shaped GKP lattice; with ``strict=False`` the determinant
    scaling scale^8 = K (2 pi)^4 is returned anyway, without the GKP check.
    """
    K = float(code_size_)
    m = round(K ** 0.25)
    if m >= 1 and abs(m**4 - K) < 1e-9:
        return _e8_lattice(2 * math.pi * m, "complex", True, f"E8,K={K:g}")
    m = round((K / 4) ** 0.25)
    if m >= 1 and abs(4 * m**4 - K) < 1e-9:
        return _e8_lattice(2 * math.pi * math.sqrt(2) * m, "quaternion", True, f"E8,K={K:g}")
    if strict:
        raise GKPConditionError(f"no E8-shaped GKP lattice has code size {K:g}")
    a2 = (K * (2 * math.pi) ** 4) ** 0.25
    return _e8_lattice(a2, "complex", False, f"E8-scaled,K={K:g}")


@lru_cache(maxsize=1)
def golay_code() -> np.ndarray:
    """All 4096 codewords of the extended binary Golay code (quadratic-residue construction)."""
    residues = {(i * i) % 23 for i in range(1, 23)}
    v = np.zeros(23, dtype=np.int64)
    v[0] = 1
    v[list(residues)] = 1
    rows = [np.append(np.roll(v, k), np.roll(v, k).sum() % 2) for k in range(23)]
    rows.append(np.ones(24, dtype=np.int64))
    basis = _gf2_basis(np.array(rows) % 2)
    coeffs = np.array(list(itertools.product([0, 1], repeat=len(basis))))
    return (coeffs @ basis) % 2


def _gf2_basis(M: np.ndarray) -> np.ndarray:
    M = M.copy()
    r = 0
    for c in range(M.shape[1]):
        piv = [i for i in range(r, len(M)) if M[i, c]]
        if not piv:
            continue
        M[[r, piv[0]]] = M[[piv[0], r]]
        for i in range(len(M)):
            if i != r and M[i, c]:
                M[i] ^= M[r]
        r += 1
    return M[:r]


def _integer_hnf(rows: Iterable[Iterable[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of an integer spanning set (full rank)."""
    A = [list(map(int, r)) for r in rows]
    ncol = len(A[0])
    out: list[list[int]] = []
    for c in range(ncol):
        while True:
            nz = [r for r in A if r[c] != 0]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda r: abs(r[c]))
            p = nz[0]
            for r in nz[1:]:
                q = r[c] // p[c]
                for k in range(c, ncol):
                    r[k] -= q * p[k]
        piv = next((r for r in A if r[c] != 0), None)
        if piv is None:
            raise ValidationError("spanning set is not full rank")
        A.remove(piv)
        if piv[c] < 0:
            piv = [-x for x in piv]
        out.append(piv)
        A = [r for r in A if any(r)]
    for i in range(len(out)):
        for j in range(i):
            q = out[j][i] // out[i][i]
            out[j] = [a - q * b for a, b in zip(out[j], out[i])]
    return out


@lru_cache(maxsize=1)
def _leech_integer_basis() -> np.ndarray:
    words = golay_code()
    basis = _gf2_basis(words)
    span = [2 * w for w in basis]
    for i in range(1, 24):
        e = np.zeros(24, dtype=np.int64)
        e[0], e[i] = 4, 4
        span.append(e.copy())
        e[i] = -4
        span.append(e)
    span.append(np.array([-3] + [1] * 23))
    return np.array(_integer_hnf(span), dtype=float)


def leech_generator() -> np.ndarray:
    """Unimodular generator of the Leech lattice (minimal norm 2)."""
    return _leech_integer_basis() / math.sqrt(8)


def leech_first_shell() -> int:
    """Count of minimal vectors from the three Golay-code shapes, each checked for membership."""
    H = _leech_integer_basis()
    Hinv = np.linalg.inv(H)
    words = golay_code()
    octads = words[words.sum(axis=1) == 8]
    vecs = []
    for o in octads:
        idx = np.nonzero(o)[0]
        for signs in itertools.product([1, -1], repeat=7):
            last = int(np.prod(signs))
            v = np.zeros(24)
            v[idx] = 2 * np.array(signs + (last,))
            vecs.append(v)
    for i, j in itertools.combinations(range(24), 2):
        for si in (4, -4):
            for sj in (4, -4):
                v = np.zeros(24)
                v[i], v[j] = si, sj
                vecs.append(v)
    for i in range(24):
        base = np.ones(24)
        base[i] = -3
        for w in words:
            vecs.append(base * np.where(w == 1, -1.0, 1.0))
    V = np.array(vecs)
    coords = V @ Hinv
    member = np.max(np.abs(coords - np.round(coords)), axis=1) < 1e-8
    norm_ok = np.abs((V * V).sum(axis=1) - 32) < 1e-9
    return int(np.sum(member & norm_ok))


def catalog(name: str) -> SymplecticLattice:
    """Lattices by name: square, hexagonal, selfdual, e8:K."""
    key, _, arg = name.lower().partition(":")
    if key == "square":
        return square_gkp()
    if key in ("hexagonal", "hex"):
        return hexagonal_gkp()
    if key == "selfdual":
        return scaled_integer_lattice(int(arg or 1), math.sqrt(2 * math.pi))
    if key == "e8":
        return e8_gkp(float(arg or 4))
    raise ValidationError(f"unknown catalog lattice {name!r}")


def load_lattice(path: str | os.PathLike, validate: bool = True) -> SymplecticLattice:
    """Text format: first line N, then 2N rows of 2N numbers."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValidationError("empty lattice file")
    try:
        N = int(lines[0])
        rows = [[float(x) for x in ln.replace(",", " ").split()] for ln in lines[1:]]
    except ValueError as exc:
        raise ValidationError(f"malformed lattice file: {exc}") from exc
    if N < 1 or len(rows) != 2 * N or any(len(r) != 2 * N for r in rows):
        raise ValidationError(f"expected {2 * N} rows of {2 * N} entries")
    return SymplecticLattice(np.array(rows), validate=validate, name=os.path.basename(str(path)))


def save_lattice(L: SymplecticLattice, path: str | os.PathLike) -> None:
    from ._io import atomic_write

    body = f"{L.N}\n" + "\n".join(" ".join(repr(float(x)) for x in row) for row in L.M) + "\n"
    atomic_write(path, body)
