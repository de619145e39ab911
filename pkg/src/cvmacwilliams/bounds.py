"""Code-size bounds from auxiliary radial functions.

Contains the Levenshtein auxiliary pair (f, hat f), the generic
Cohn-Elkies style evaluator working on tabulated (f, hat f), the closed-form
Levenshtein bound with its validity threshold, and the quotient checks used
for externally supplied E8 / Leech magic-function tables.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline, interp1d
from scipy.optimize import minimize_scalar
from scipy.special import betainc

from .errors import (
    ConsistencyError,
    CoverageError,
    DomainError,
    InvalidAuxiliaryFunctionError,
    SchemaError,
    ValidityWindowError,
)
from .hankel import Polynomial, QuadratureConfig, RadialFunction, radial_fourier
from .specfun import bessel_j, bessel_zero, bessel_zeros, check_order, gamma_fn, sphere_area, zonal

__all__ = [
    "LevenshteinFunction",
    "AuxFunctionTable",
    "lev_f",
    "lev_g",
    "lev_fhat",
    "levenshtein_table",
    "cohn_elkies_bound",
    "cohn_elkies_search",
    "levenshtein_bound",
    "levenshtein_critical_distance",
    "d_plus",
    "lemma2_supremum_check",
    "quad_bound_constant",
    "magic_table_for_distance",
    "magic_quotient_check",
    "MAGIC_FAMILIES",
]

PRODUCT_WINDOW = 0.25
PRODUCT_ZEROS = 64


def _check_N(N) -> float:
    check_order(N - 1)
    return float(N)


class LevenshteinFunction:
    """The pair f(x) = (1 - x^2) hat g(x)^2 and its 2N-dimensional transform.

    hat g(x) = 2^N N! J_N(j x) / ((j x)^N (1 - x^2)) with j the first zero of
    J_N, so that f(0) = hat g(0) = 1 and f has its first zero at x = 1.
    """

    def __init__(self, N: float):
        self.N = _check_N(N)
        self.jN = bessel_zero(self.N, 1)
        self.norm = 2.0**self.N * gamma_fn(self.N + 1.0)
        self.cN = self.norm / self.jN ** (2 * self.N)
        self._edge = bessel_j(self.N - 1, self.jN)

    # -- f and hat g -----------------------------------------------------
    def _ghat_product(self, x: np.ndarray) -> np.ndarray:
        N, j = self.N, self.jN
        zs = bessel_zeros(N, PRODUCT_ZEROS)
        t = (x[:, None] * j) ** 2 / zs[None, 1:] ** 2
        with np.errstate(divide="ignore"):
            logs = np.sum(np.log(np.abs(1.0 - t)), axis=1)
        sign = np.prod(np.sign(1.0 - t), axis=1)
        inv2 = 1.0 / zs**2
        s1 = 1.0 / (4.0 * (N + 1)) - inv2.sum()
        s2 = 1.0 / (16.0 * (N + 1) ** 2 * (N + 2)) - (inv2**2).sum()
        s3 = 1.0 / (32.0 * (N + 1) ** 3 * (N + 2) * (N + 3)) - (inv2**3).sum()
        z2 = (x * j) ** 2
        logs = logs - z2 * s1 - z2**2 * s2 / 2.0 - z2**3 * s3 / 3.0
        return sign * np.exp(logs)

    def ghat(self, x):
        xa = np.abs(np.asarray(x, dtype=float))
        flat = xa.reshape(-1)
        out = np.empty_like(flat)
        near = np.abs(flat - 1.0) < PRODUCT_WINDOW
        if np.any(near):
            out[near] = self._ghat_product(flat[near])
        far = ~near
        if np.any(far):
            xf = flat[far]
            out[far] = self.norm * zonal(self.N + 1, self.jN * xf) / (1.0 - xf**2)
        out = out.reshape(xa.shape)
        return float(out) if out.ndim == 0 else out

    def f(self, x):
        xa = np.abs(np.asarray(x, dtype=float))
        res = (1.0 - xa**2) * np.asarray(self.ghat(xa)) ** 2
        return float(res) if np.ndim(res) == 0 else res

    __call__ = f

    # -- g -------------------------------------------------------------------
    def g(self, x):
        xa = np.abs(np.asarray(x, dtype=float))
        N, j = self.N, self.jN
        inside = xa < j
        val = self.cN * (1.0 - j ** (N - 1) * zonal(N, np.where(inside, xa, 0.0)) / self._edge)
        res = np.where(inside, val, 0.0)
        return float(res) if np.ndim(res) == 0 else res

    # -- hat f -----------------------------------------------------------------
    def radial(self) -> RadialFunction:
        return RadialFunction(self.f, decay=Polynomial(2 * self.N + 3), omega=2 * self.jN, label="levenshtein f")

    def fhat_hankel(self, y, cfg: QuadratureConfig | None = None):
        return radial_fourier(self.radial(), self.N, y, cfg)

    def _cap_fraction(self, rho: np.ndarray, y: float) -> np.ndarray:
        """Fraction of the rho-sphere (in R^{2N}) inside the j-ball centred at distance y."""
        j = self.jN
        if y == 0.0:
            return (rho < j).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            c0 = (rho**2 + y * y - j * j) / (2.0 * rho * y)
        c0 = np.where(rho > 0, c0, np.where(y < j, -np.inf, np.inf))
        n = 2 * self.N
        if n == 1:
            return 0.5 * ((c0 <= 1.0).astype(float) + (c0 <= -1.0).astype(float))
        cc = np.clip(c0, -1.0, 1.0)
        half = 0.5 * betainc((n - 1) / 2.0, 0.5, 1.0 - cc * cc)
        return np.where(cc >= 0, half, 1.0 - half)

    def fhat_convolution(self, y, nodes: int = 96):
        """c_N / (2 pi)^N times the integral of g over the j-ball displaced by y."""
        ya = np.atleast_1d(np.asarray(y, dtype=float))
        j, N = self.jN, self.N
        x, w = leggauss(nodes)
        out = np.empty_like(ya)
        for i, yv in enumerate(ya):
            if yv >= 2 * j:
                out[i] = 0.0
                continue
            kink = abs(j - yv)
            total = 0.0
            if yv < j and kink > 0:
                # sphere fully inside the ball below the kink
                rho = kink * (x + 1) / 2
                total += np.sum(w * kink / 2 * self.g(rho) * sphere_area(int(2 * N - 1), rho))
            span = math.sqrt(j - kink)
            u = span * (x + 1) / 2
            rho = kink + u * u
            integrand = self.g(rho) * sphere_area(int(2 * N - 1), rho) * self._cap_fraction(rho, yv)
            total += np.sum(w * span / 2 * 2 * u * integrand)
            out[i] = self.cN / (2 * np.pi) ** N * total
        return float(out[0]) if np.ndim(y) == 0 else out

    def fhat(self, y, cfg: QuadratureConfig | None = None, route: str = "both", tol: float = 1e-5):
        """hat f(y). ``route`` is "hankel", "convolution" or "both" (cross-checked)."""
        if route == "convolution":
            return self.fhat_convolution(y)
        if route == "hankel":
            return self.fhat_hankel(y, cfg)
        if route != "both":
            raise DomainError(f"unknown route {route!r}")
        a = np.asarray(self.fhat_hankel(y, cfg))
        b = np.asarray(self.fhat_convolution(y))
        gap = float(np.max(np.abs(a - b)))
        if gap > tol:
            raise ConsistencyError(f"hankel and convolution routes differ by {gap:.3g}")
        return float(a) if a.ndim == 0 else a


@lru_cache(maxsize=32)
def _lev(N: float) -> LevenshteinFunction:
    return LevenshteinFunction(N)


def lev_f(N, x):
    return _lev(_check_N(N)).f(x)


def lev_g(N, x):
    return _lev(_check_N(N)).g(x)


def lev_fhat(N, y, cfg: QuadratureConfig | None = None, route: str = "both"):
    return _lev(_check_N(N)).fhat(y, cfg, route)


# --- tables ------------------------------------------------------------------


class AuxFunctionTable:
    """Samples of an auxiliary pair (f, hat f) on a common ascending grid."""

    def __init__(self, x, f, fhat, sign_distance: float | None = None, label: str = "", interpolation: str = "cubic"):
        x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        fhat = np.asarray(fhat, dtype=float)
        if x.ndim != 1 or len(x) < 4 or x.shape != f.shape or x.shape != fhat.shape:
            raise SchemaError("table needs >= 4 rows of matching x, f, fhat")
        if np.any(np.diff(x) <= 0):
            raise SchemaError("table abscissae must be strictly increasing")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(fhat))):
            raise SchemaError("table values must be finite")
        if interpolation not in ("cubic", "linear"):
            raise SchemaError("interpolation must be 'cubic' or 'linear'")
        self.x, self.f, self.fhat = x, f, fhat
        self.sign_distance = sign_distance
        self.label = label
        self.interpolation = interpolation
        make = CubicSpline if interpolation == "cubic" else (lambda a, b: interp1d(a, b, assume_sorted=True))
        self._f = make(x, f)
        self._fh = make(x, fhat)

    def f_at(self, x):
        return self._eval(self._f, x)

    def fhat_at(self, x):
        return self._eval(self._fh, x)

    def _eval(self, fn, x):
        xa = np.asarray(x, dtype=float)
        if np.any(xa < self.x[0] - 1e-12) or np.any(xa > self.x[-1] + 1e-12):
            raise CoverageError(f"abscissa outside table range [{self.x[0]}, {self.x[-1]}]")
        return np.asarray(fn(np.clip(xa, self.x[0], self.x[-1])), dtype=float)

    def check_signs(self, d: float) -> None:
        bad = np.nonzero(self.fhat < -1e-12)[0]
        if len(bad):
            xb = float(self.x[bad[0]])
            raise InvalidAuxiliaryFunctionError(f"hat f negative at x={xb}", xb)
        below = (self.x < d) & (self.f < -1e-12)
        above = (self.x > d) & (self.f > 1e-12)
        for mask, what in ((below, "negative below"), (above, "positive above")):
            idx = np.nonzero(mask)[0]
            if len(idx):
                xb = float(self.x[idx[0]])
                raise InvalidAuxiliaryFunctionError(f"f {what} d={d} at x={xb}", xb)

    @classmethod
    def from_csv(cls, path: str | os.PathLike, interpolation: str = "cubic", label: str | None = None):
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "f", "fhat"]:
            raise SchemaError("table CSV must start with header x,f,fhat")
        for rec in reader:
            if len(rec) != 3:
                raise SchemaError(f"bad table row {rec!r}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise SchemaError(f"bad number in row {rec!r}") from exc
        if not rows:
            raise SchemaError("empty table")
        a = np.array(rows)
        return cls(a[:, 0], a[:, 1], a[:, 2], label=label or os.path.basename(str(path)), interpolation=interpolation)


def levenshtein_table(N, d: float, x_max: float | None = None, points: int = 2049, route: str = "convolution"):
    """Levenshtein pair rescaled to distance d: f(x/d) and d^{2N} hat f(d x)."""
    lev = _lev(_check_N(N))
    x_max = x_max or 1.5 * d
    x = np.linspace(0.0, x_max, points)
    f = lev.f(x / d)
    fh = d ** (2 * lev.N) * np.asarray(lev.fhat(d * x, route=route))
    return AuxFunctionTable(x, f, fh, sign_distance=d, label=f"levenshtein N={N:g} d={d:g}")


# --- Cohn-Elkies evaluator --------------------------------------------------------


@dataclass
class SupResult:
    value: float
    at: float
    bracket: tuple[float, float]
    excluded: list = field(default_factory=list)


def _grid_sup(ratio, lo_end: float, hi_end: float, points: int, valid) -> SupResult:
    x = np.linspace(lo_end, hi_end, points)
    ok = valid(x)
    excluded = x[~ok].tolist()
    xs = x[ok]
    if not len(xs):
        raise DomainError("no admissible grid point")
    vals = ratio(xs)
    i = int(np.argmax(vals))
    best, at = float(vals[i]), float(xs[i])
    lo = float(xs[max(i - 1, 0)])
    hi = float(xs[min(i + 1, len(xs) - 1)])
    if hi > lo:
        res = minimize_scalar(lambda t: -float(ratio(np.array([t]))[0]), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, hi_end)})
        if -res.fun > best:
            best, at = float(-res.fun), float(res.x)
    return SupResult(best, at, (lo, hi), excluded)


def cohn_elkies_search(table: AuxFunctionTable, N, d: float, eps: float = 0.0, points: int = 4096) -> SupResult:
    """sup_{[0, d]} f / hat f divided by (1 - eps), with the maximiser."""
    if not d > 0:
        raise DomainError("d must be positive")
    if not 0 <= eps < 1:
        raise DomainError("eps must lie in [0, 1)")
    table.check_signs(d)
    fmax = float(np.max(table.fhat))
    res = _grid_sup(
        lambda x: table.f_at(x) / table.fhat_at(x),
        0.0,
        d,
        points,
        lambda x: table.fhat_at(x) > 1e-14 * fmax,
    )
    res.value /= 1.0 - eps
    return res


def cohn_elkies_bound(table: AuxFunctionTable, N, d: float, eps: float = 0.0, points: int = 4096) -> float:
    return cohn_elkies_search(table, N, d, eps, points).value


# --- Levenshtein closed forms -------------------------------------------------------


def d_plus(N) -> float:
    """Threshold below which the Levenshtein quotient peaks at the origin."""
    N = _check_N(N)
    if N == 0.5:
        return (12 * math.pi) ** (1.0 / 6.0)
    j = bessel_zero(N, 1)
    num = 16.0 * gamma_fn(N + 1) * abs(bessel_j(N - 1, j))
    den = 3.0 * math.sqrt(math.pi) * gamma_fn((2 * N - 1) / 2.0) * j ** (N - 2)
    return (num / den) ** (1.0 / 6.0)


def levenshtein_bound(N, d: float, eps: float = 0.0) -> float:
    """K_max = j^{2N} / ((1 - eps) N! 2^N d^{2N}) for 0 < d <= d_plus(N)."""
    N = _check_N(N)
    if not d > 0 or not 0 <= eps < 1:
        raise DomainError("need d > 0 and eps in [0, 1)")
    dp = d_plus(N)
    if d > dp:
        raise ValidityWindowError(f"d={d} exceeds the validity threshold d_plus={dp}", dp)
    j = bessel_zero(N, 1)
    return j ** (2 * N) / ((1 - eps) * gamma_fn(N + 1) * 2**N * d ** (2 * N))


def levenshtein_critical_distance(N, K: float, eps: float = 0.0) -> float:
    """Distance at which the Levenshtein expression equals K (no validity check)."""
    N = _check_N(N)
    j = bessel_zero(N, 1)
    return (j ** (2 * N) / ((1 - eps) * gamma_fn(N + 1) * 2**N * K)) ** (1.0 / (2 * N))


def lemma2_supremum_check(N, d: float, points: int = 4096) -> bool:
    """True iff max over [0, d] of f(x/d) / hat f(x d) sits at x = 0 (1e-9 slack)."""
    lev = _lev(_check_N(N))
    x = np.linspace(0.0, d, points)
    fh = np.asarray(lev.fhat(x * d, route="convolution"))
    ok = fh > 1e-14 * np.max(fh)
    ratio = lev.f(x[ok] / d) / fh[ok]
    return bool(np.max(ratio) <= ratio[0] * (1 + 1e-9))


def quad_bound_constant(N) -> float:
    """C = 9 / (2 j^{N+1} |J_{N-1}(j)|)."""
    N = _check_N(N)
    j = bessel_zero(N, 1)
    return 9.0 / (2.0 * j ** (N + 1) * abs(bessel_j(N - 1, j)))


# --- magic-function tables ----------------------------------------------------------

MAGIC_FAMILIES = {
    # (mode count, f argument factor, hat f divisor, origin value of the quotient)
    "e8": (4, math.sqrt(2.0), math.sqrt(2.0), (2 * math.pi) ** 4),
    "leech": (12, 2.0, 2.0, (2 * math.pi) ** 12),
}
MAGIC_DMAX = {"e8": 3.4286, "leech": 4.9193}


def _family(name: str):
    try:
        return MAGIC_FAMILIES[name.lower()]
    except KeyError as exc:
        raise DomainError(f"unknown magic family {name!r}") from exc


def magic_table_for_distance(table: AuxFunctionTable, family: str, d: float, points: int = 2049) -> AuxFunctionTable:
    """Rescale a root-normalised magic pair so that f changes sign at distance d."""
    N, a, b, _ = _family(family)
    x = np.linspace(0.0, min(table.x[-1] * d / a, table.x[-1] * a / d), points)
    s = a / d
    f = table.f_at(s * x)
    fh = table.fhat_at(x / s) / s ** (2 * N)
    return AuxFunctionTable(x, f, fh, sign_distance=d, label=f"{table.label} scaled to d={d:g}")


def _interp_error(table: AuxFunctionTable, col: str, xs: np.ndarray) -> float:
    vals = table.f if col == "f" else table.fhat
    coarse = CubicSpline(table.x[::2], vals[::2])
    full = table.f_at(xs) if col == "f" else table.fhat_at(xs)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    return float(np.max(np.abs(coarse(np.clip(xs, table.x[0], table.x[::2][-1])) - full)) / scale)


def magic_quotient_check(f_table: AuxFunctionTable, fhat_table: AuxFunctionTable | None, family: str, d: float,
                         points: int = 4096, check_interpolation: bool = True):
    """Grid supremum over x in [0, 1] of f(a x) / hat f(d^2 x / b) and its location.

    (a, b) = (sqrt2, sqrt2) for E8 and (2, 2) for Leech. Returns (sup, at).
    """
    _, a, b, _ = _family(family)
    ft = f_table
    ht = fhat_table or f_table
    need_f, need_h = a, d * d / b
    if ft.x[0] > 0 or ft.x[-1] < need_f or ht.x[0] > 0 or ht.x[-1] < need_h:
        raise CoverageError(f"tables must cover f on [0, {need_f:.4g}] and hat f on [0, {need_h:.4g}]")
    x = np.linspace(0.0, 1.0, points)
    if check_interpolation:
        err = max(_interp_error(ft, "f", a * x), _interp_error(ht, "fhat", need_h * x))
        if err > 1e-4:
            raise CoverageError(f"table interpolation error estimate {err:.2g} exceeds 1e-4")
    hmax = float(np.max(ht.fhat))
    res = _grid_sup(
        lambda t: ft.f_at(a * t) / ht.fhat_at(need_h * t),
        0.0,
        1.0,
        points,
        lambda t: ht.fhat_at(need_h * t) > 1e-14 * hmax,
    )
    return res.value, res.at
