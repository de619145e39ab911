"""Weight distributions A and B of bosonic codes and derived quantities."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, EvaluationError, TruncationRequiredError, ValidationError
from .hankel import (
    Compact,
    Gaussian,
    QuadratureConfig,
    RadialFunction,
    bessel_integral,
)
from .specfun import bessel_i0e, laguerre
from scipy.special import j0

__all__ = [
    "WeightDistribution",
    "CodeParams",
    "coherent",
    "fock",
    "cat",
    "gkp_ideal",
    "analytic_weights",
    "normalization_integrals",
    "qedc_epsilon",
    "epsilon_profile",
    "b_second_moment",
    "ordering_check",
    "CAT_MIN_ALPHA",
]

CAT_MIN_ALPHA = 2.0


class WeightDistribution:
    """Radial distribution: optional continuous density plus delta masses.

    ``r_max`` marks a delta comb that was truncated at that radius; a comb
    without it is treated as infinite.
    """

    def __init__(
        self,
        N: float,
        continuous: RadialFunction | None = None,
        discrete: Sequence[tuple[float, float]] | None = None,
        *,
        r_max: float | None = None,
        meta: dict | None = None,
    ):
        if not (N >= 0.5 and (2 * N) == int(2 * N)):
            raise ValidationError("N must be a positive integer or half-integer")
        self.N = N
        self.continuous = continuous
        pairs = list(discrete or [])
        locs = np.array([float(p[0]) for p in pairs])
        masses = np.array([float(p[1]) for p in pairs])
        if len(locs) and (np.any(locs < 0) or np.any(np.diff(locs) <= 0)):
            raise ValidationError("delta locations must be non-negative and strictly increasing")
        self.locations = locs
        self.masses = masses
        self.r_max = r_max
        self.meta = dict(meta or {})

    @property
    def masses_or_empty(self) -> np.ndarray:
        return self.masses if len(self.masses) else np.zeros(0)

    @property
    def is_comb(self) -> bool:
        return self.continuous is None and len(self.locations) > 0

    def density(self, r):
        """Continuous part evaluated at r (zero if absent)."""
        if self.continuous is None:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self.continuous(r)

    __call__ = density

    def scaled(self, c: float) -> "WeightDistribution":
        cont = None if self.continuous is None else self.continuous.scaled(c)
        pairs = list(zip(self.locations, c * self.masses))
        return WeightDistribution(self.N, cont, pairs, r_max=self.r_max, meta=self.meta)

    def mass_at(self, location: float, tol: float = 1e-9) -> float:
        hit = np.abs(self.locations - location) <= tol
        return float(self.masses[hit].sum())

    def __repr__(self) -> str:
        return (
            f"WeightDistribution(N={self.N}, continuous={self.continuous!r}, "
            f"deltas={len(self.locations)}, r_max={self.r_max})"
        )


@dataclass(frozen=True)
class CodeParams:
    """The quadruple (N, K, d, eps) describing an error-detecting code."""

    N: int
    K: float
    d: float
    eps: float

    def __post_init__(self):
        vals = (self.N, self.K, self.d, self.eps)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("code parameters must be finite")
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError("N must be a positive integer")
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if self.d <= 0:
            raise ValidationError("d must be positive")
        if not 0 <= self.eps < 1:
            raise ValidationError("eps must lie in [0, 1)")


def _pair(N, fa, fb, **meta):
    return WeightDistribution(N, fa, meta=meta), WeightDistribution(N, fb, meta=meta)


def coherent() -> tuple[WeightDistribution, WeightDistribution]:
    f = RadialFunction(lambda r: 2 * np.pi * r * np.exp(-(r**2) / 2), decay=Gaussian(1.0), label="coherent")
    return _pair(1, f, f, model="coherent", K=1, trace_sq=1.0)


def fock(n: int) -> tuple[WeightDistribution, WeightDistribution]:
    if int(n) != n or n < 0:
        raise DomainError("Fock index must be a non-negative integer")
    n = int(n)

    def dens(r):
        return 2 * np.pi * r * laguerre(n, r**2 / 2) ** 2 * np.exp(-(r**2) / 2)

    f = RadialFunction(dens, decay=Gaussian(1.0), omega=math.sqrt(4 * n + 2), label=f"fock:{n}")
    return _pair(1, f, f, model=f"fock:{n}", K=1, trace_sq=1.0)


def cat(alpha_norm: float) -> tuple[WeightDistribution, WeightDistribution]:
    """Two-component cat code with the overlap between components neglected."""
    a = float(alpha_norm)
    if not a > 0:
        raise DomainError("cat amplitude must be positive")
    meta = {"model": f"cat:{a:g}", "K": 2, "trace_sq": 2.0 * (1.0 + math.exp(-2 * a * a))}
    meta["normalization_defect"] = math.exp(-2 * a * a)
    if a < CAT_MIN_ALPHA:
        msg = f"cat amplitude {a} below separation threshold {CAT_MIN_ALPHA}; closed forms are inaccurate"
        meta["warning"] = msg
        warnings.warn(msg, stacklevel=2)

    def dens_a(r):
        return 4 * np.pi * r * np.exp(-(r**2) / 2) * (1.0 + j0(2 * a * r))

    def dens_b(r):
        # e^{-2a^2} I0(2ar) e^{-r^2/2} = i0e(2ar) e^{-(r-2a)^2/2}
        return 4 * np.pi * r * (np.exp(-(r**2) / 2) + bessel_i0e(2 * a * r) * np.exp(-((r - 2 * a) ** 2) / 2))

    fa = RadialFunction(dens_a, decay=Gaussian(1.0), omega=2 * a, label="cat A")
    fb = RadialFunction(dens_b, decay=Gaussian(1.0, 2 * a), label="cat B")
    return _pair(1, fa, fb, **meta)


def gkp_ideal(lattice, r_max: float):
    from .lattice import gkp_weights

    return gkp_weights(lattice, r_max)


def analytic_weights(model) -> tuple[WeightDistribution, WeightDistribution]:
    """Closed-form (A, B) for a model spec such as ``"coherent"``, ``"fock:3"``,
    ``"cat:4"`` or ``("gkp", lattice, r_max)``."""
    if isinstance(model, tuple):
        kind, *args = model
    else:
        kind, _, arg = str(model).partition(":")
        args = [arg] if arg else []
    kind = kind.lower()
    try:
        if kind == "coherent":
            return coherent()
        if kind == "fock":
            return fock(int(args[0]))
        if kind == "cat":
            return cat(float(args[0]))
        if kind == "gkp":
            lattice, r_max = args
            return gkp_ideal(lattice, float(r_max))
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"bad model spec {model!r}: {exc}") from exc
    raise ValidationError(f"unknown model {model!r}")


def _integral(W: WeightDistribution, power: float = 0.0, cfg: QuadratureConfig | None = None) -> float:
    """int r^power dW over continuous and discrete parts."""
    total = 0.0
    f = W.continuous
    if f is not None:
        h = f if power == 0 else (lambda r: f(r) * r**power)
        total += bessel_integral(h, f.decay, 1.0, 0.0, cfg, omega=f.omega, knots=f.knots, support_end=f.support_end)
    if len(W.locations):
        total += float(np.sum(W.masses * W.locations**power))
    return total


def normalization_integrals(W, K_expected: float | None = None, cfg: QuadratureConfig | None = None):
    """(int A dr, int B dr).

    For a projector of trace K on N modes these equal (2 pi)^N tr(P^2) and
    (2 pi)^N K^2; ``K_expected`` is only echoed into the check helpers.
    """
    A, B = W
    for X in (A, B):
        if len(X.locations) and X.r_max is None:
            raise TruncationRequiredError("delta comb needs an r_max truncation to be summed")
    return _integral(A, cfg=cfg), _integral(B, cfg=cfg)


def _as_callable(W) -> Callable:
    return W.density if isinstance(W, WeightDistribution) else W


@dataclass
class EpsilonProfile:
    eps: float
    argmax: float
    skipped: list = field(default_factory=list)
    bracket: tuple[float, float] = (0.0, 0.0)


def _comb_epsilon(A: WeightDistribution, B: WeightDistribution, K: float, d: float) -> EpsilonProfile:
    eps, at = 0.0, 0.0
    for loc, mb in zip(B.locations, B.masses):
        if loc >= d or mb <= 0:
            continue
        val = 1.0 - A.mass_at(loc) / (K * mb)
        if val > eps:
            eps, at = val, loc
    return EpsilonProfile(min(max(eps, 0.0), 1.0), at)


def epsilon_profile(
    A,
    B,
    K: float,
    d: float,
    grid=None,
    defect: Callable | None = None,
    refine: bool = True,
    points: int = 2048,
) -> EpsilonProfile:
    """Grid supremum of 1 - A/(K B) on [0, d), with local refinement.

    ``defect`` may supply K B - A directly when that difference is known
    without cancellation; the ratio is then defect / (K B).
    """
    if not d > 0 or not K > 0:
        raise DomainError("need d > 0 and K > 0")
    if isinstance(A, WeightDistribution) and A.is_comb and isinstance(B, WeightDistribution) and B.is_comb:
        return _comb_epsilon(A, B, K, d)
    fa, fb = _as_callable(A), _as_callable(B)
    r = np.linspace(0.0, d, points, endpoint=False) if grid is None else np.asarray(grid, dtype=float)
    r = r[(r >= 0) & (r < d)]
    b = np.asarray(fb(r), dtype=float)
    if not len(b) or np.max(b) <= 0:
        raise EvaluationError("no grid point with B > 0")
    ok = b > 1e-14 * np.max(b)
    skipped = r[~ok].tolist()
    if not np.any(ok):
        raise EvaluationError("empty usable grid")
    rs = r[ok]

    def eps_at(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        bb = np.asarray(fb(x), dtype=float)
        if defect is not None:
            return np.asarray(defect(x), dtype=float) / (K * bb)
        return 1.0 - np.asarray(fa(x), dtype=float) / (K * bb)

    vals = eps_at(rs)
    i = int(np.argmax(vals))
    best, at = float(vals[i]), float(rs[i])
    lo = float(rs[max(i - 1, 0)])
    hi = float(rs[i + 1]) if i + 1 < len(rs) else d
    if refine and hi > lo:
        res = minimize_scalar(
            lambda x: -float(eps_at(x)[0]), bounds=(lo, min(hi, np.nextafter(d, 0))), method="bounded",
            options={"xatol": 1e-10 * max(1.0, d)},
        )
        if -res.fun > best:
            best, at = float(-res.fun), float(res.x)
    return EpsilonProfile(min(max(best, 0.0), 1.0), at, skipped, (lo, hi))


def qedc_epsilon(A, B, K: float, d: float, grid=None, defect: Callable | None = None) -> float:
    """Smallest eps with A(r) >= (1 - eps) K B(r) on [0, d), clamped to [0, 1]."""
    return epsilon_profile(A, B, K, d, grid, defect).eps


def b_second_moment(B: WeightDistribution, cfg: QuadratureConfig | None = None) -> float:
    """(1 / 4 pi) int B(r) r^2 dr for a gaussian-decaying continuous B."""
    if B.continuous is None or len(B.locations):
        raise TruncationRequiredError("second moment diverges for delta combs")
    if not isinstance(B.continuous.decay, (Gaussian, Compact)):
        raise ValidationError("second moment needs gaussian (or compact) decay")
    return _integral(B, 2.0, cfg) / (4 * np.pi)


def ordering_check(A, B, K: float, grid) -> bool:
    """True iff A(r) <= K B(r) (1 + 1e-9) on every grid point."""
    r = np.asarray(grid, dtype=float)
    a = np.asarray(_as_callable(A)(r), dtype=float)
    b = np.asarray(_as_callable(B)(r), dtype=float)
    return bool(np.all(a <= K * b * (1 + 1e-9) + 1e-300))
