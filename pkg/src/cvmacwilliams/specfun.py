"""Special functions: Bessel J and its zeros, I0, Laguerre, Gamma, sphere areas.

Orders are restricted to integers and half-integers >= -1/2. Integer orders
go through scipy.special.jv; half-integer orders are built from the
trigonometric closed forms of J_{-1/2} and J_{1/2}.
"""
from __future__ import annotations

import math
from functools import lru_cache
from numbers import Real

import numpy as np
from scipy import optimize, special

from .errors import DomainError, OrderDomainError, OverflowRangeError

__all__ = [
    "check_order",
    "bessel_j",
    "bessel_zero",
    "bessel_zeros",
    "bessel_i0",
    "bessel_i0e",
    "laguerre",
    "sphere_area",
    "zonal",
    "gamma_fn",
    "beta_fn",
    "bessel_ratio_product",
]

I0_MAX_ARG = 700.0


def check_order(nu) -> float:
    """Return ``nu`` as a float after checking it is an integer or half-integer >= -1/2."""
    if not isinstance(nu, Real):
        raise OrderDomainError(f"Bessel order must be real, got {nu!r}")
    twice = 2.0 * float(nu)
    if not math.isfinite(twice) or twice != round(twice):
        raise OrderDomainError(f"Bessel order {nu} is not an integer or half-integer")
    if twice < -1:
        raise OrderDomainError(f"Bessel order {nu} is below -1/2")
    return twice / 2.0


def _is_half(nu: float) -> bool:
    return (2.0 * nu) % 2 == 1


def _series_ratio(nu: float, x: np.ndarray, terms: int = 60) -> np.ndarray:
    """J_nu(x) / x^nu from the power series; meant for modest x."""
    q = -(x * x) / 4.0
    term = np.full_like(x, 1.0 / (2.0**nu * math.gamma(nu + 1.0)))
    total = term.copy()
    for k in range(1, terms):
        term = term * q / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _half_integer_j(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    # series where upward recurrence would lose accuracy
    small = x < nu + 1.0
    if np.any(small):
        xs = x[small]
        out[small] = _series_ratio(nu, xs) * xs**nu if nu != -0.5 else np.sqrt(2.0 / (np.pi * xs)) * np.cos(xs)
    big = ~small
    if np.any(big):
        xb = x[big]
        pref = np.sqrt(2.0 / (np.pi * xb))
        jm = pref * np.cos(xb)  # J_{-1/2}
        j = pref * np.sin(xb)  # J_{1/2}
        if nu == -0.5:
            out[big] = jm
        else:
            order = 0.5
            while order < nu:
                jm, j = j, (2.0 * order / xb) * j - jm
                order += 1.0
            out[big] = j
    return out


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x) for x >= 0.

    Accepts scalars or arrays; returns the same shape.
    """
    nu = check_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise DomainError("bessel_j needs finite x >= 0")
    if _is_half(nu):
        flat = xa.reshape(-1)
        res = np.empty_like(flat)
        zero = flat == 0.0
        res[zero] = np.inf if nu == -0.5 else 0.0
        if np.any(~zero):
            res[~zero] = _half_integer_j(nu, flat[~zero])
        res = res.reshape(xa.shape)
    else:
        res = special.jv(nu, xa)
    return float(res) if np.ndim(res) == 0 else res


def zonal(N, x):
    """phi_N(x) = J_{N-1}(x) / x^{N-1}, continuous at x = 0."""
    nu = check_order(N - 1)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("zonal needs x >= 0")
    if nu == -0.5:
        res = math.sqrt(2.0 / math.pi) * np.cos(xa)
    elif nu == 0.0:
        res = special.j0(xa)
    else:
        flat = xa.reshape(-1)
        res = np.empty_like(flat)
        small = flat < 2.0
        if np.any(small):
            res[small] = _series_ratio(nu, flat[small])
        if np.any(~small):
            xb = flat[~small]
            res[~small] = bessel_j(nu, xb) / xb**nu
        res = res.reshape(xa.shape)
    return float(res) if np.ndim(res) == 0 else res


def zonal_at_zero(N) -> float:
    return 1.0 / (2.0 ** (N - 1) * math.gamma(N))


@lru_cache(maxsize=256)
def _zeros_cached(nu: float, count: int) -> tuple:
    found: list[float] = []
    step = 0.25
    lo = 0.0 if nu > -0.5 else 1e-12
    f = lambda t: bessel_j(nu, t)  # noqa: E731
    while len(found) < count:
        # scan a chunk long enough for the remaining zeros (spacing > 2 for nu >= -1/2)
        hi = lo + step * max(64, int(4 * (count - len(found)) * math.pi / step / 2))
        xs = np.arange(lo, hi + step / 2, step)
        if xs[0] == 0.0:
            xs[0] = 1e-12
        vals = f(xs)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        for i in idx:
            found.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15))
            if len(found) == count:
                break
        lo = xs[-1]
    return tuple(found)


def bessel_zeros(nu, count: int) -> np.ndarray:
    """First ``count`` positive zeros of J_nu."""
    nu = check_order(nu)
    if count < 1:
        raise DomainError("count must be >= 1")
    # cache on a rounded-up count so repeated small requests share work
    size = max(8, 1 << (count - 1).bit_length())
    return np.array(_zeros_cached(nu, size)[:count])


def bessel_zero(nu, k: int) -> float:
    """k-th positive zero j_{nu,k} of J_nu (k >= 1)."""
    if int(k) != k or k < 1:
        raise DomainError("zero index k must be a positive integer")
    return float(bessel_zeros(nu, int(k))[-1])


def bessel_i0(x):
    """Modified Bessel function I0(x), x in [0, 700]."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > I0_MAX_ARG):
        raise OverflowRangeError(f"bessel_i0 argument exceeds {I0_MAX_ARG}")
    res = special.i0(xa)
    return float(res) if np.ndim(res) == 0 else res


def bessel_i0e(x):
    """Exponentially scaled I0(x) e^{-|x|}; no range limit."""
    res = special.i0e(np.asarray(x, dtype=float))
    return float(res) if np.ndim(res) == 0 else res


def laguerre(n: int, x):
    """Laguerre polynomial L_n(x) by the three-term recurrence."""
    if int(n) != n or n < 0:
        raise DomainError("laguerre degree must be a non-negative integer")
    xa = np.asarray(x, dtype=float)
    prev = np.ones_like(xa)
    if n == 0:
        res = prev
    else:
        cur = 1.0 - xa
        for k in range(1, int(n)):
            prev, cur = cur, ((2 * k + 1 - xa) * cur - k * prev) / (k + 1)
        res = cur
    return float(res) if np.ndim(res) == 0 else res


def gamma_fn(x: float) -> float:
    if x <= 0:
        raise DomainError("gamma_fn needs a positive argument")
    return math.gamma(x)


def beta_fn(a: float, b: float) -> float:
    return gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)


def sphere_area(k: int, r):
    """Surface area of the k-sphere (embedded in R^{k+1}) of radius r."""
    if k < 0:
        raise DomainError("sphere dimension must be >= 0")
    c = 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)
    return c * np.asarray(r, dtype=float) ** k if np.ndim(r) else c * float(r) ** k


def bessel_ratio_product(nu, x, nzeros: int = 200, tail_correction: bool = True):
    """J_nu(x)/x^nu from the Weierstrass product over the first ``nzeros`` zeros.

    The omitted factors are folded in through the exact Rayleigh sums
    sum_k j_k^{-2p} for p = 1, 2, 3, which leaves an O(x^8 / j_n^8) error
    instead of the O(x^2 / n) error of the bare product.
    """
    nu = check_order(nu)
    zs = bessel_zeros(nu, nzeros)
    xa = np.asarray(x, dtype=float)
    t = (xa.reshape(-1, 1) ** 2) / zs**2
    with np.errstate(divide="ignore"):
        logs = np.sum(np.log(np.abs(1.0 - t)), axis=1)
    sign = np.prod(np.sign(1.0 - t), axis=1)
    if tail_correction:
        s1, s2, s3 = _rayleigh_tails(nu, zs)
        x2 = xa.reshape(-1) ** 2
        logs = logs - x2 * s1 - x2**2 * s2 / 2.0 - x2**3 * s3 / 3.0
    res = (sign * np.exp(logs) / (2.0**nu * math.gamma(nu + 1.0))).reshape(xa.shape)
    return float(res) if np.ndim(res) == 0 else res


def _rayleigh_tails(nu: float, zs: np.ndarray) -> tuple[float, float, float]:
    """Sums of j^-2, j^-4, j^-6 over the zeros beyond ``zs``."""
    s1 = 1.0 / (4.0 * (nu + 1))
    s2 = 1.0 / (16.0 * (nu + 1) ** 2 * (nu + 2))
    s3 = 1.0 / (32.0 * (nu + 1) ** 3 * (nu + 2) * (nu + 3))
    inv2 = 1.0 / zs**2
    return s1 - inv2.sum(), s2 - (inv2**2).sum(), s3 - (inv2**3).sum()
