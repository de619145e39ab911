"""Radial Fourier transform in 2N dimensions and the Bessel-kernel MacWilliams map.

Everything reduces to integrals of the form

    I(y) = int_0^inf h(r) phi_N(y r) dr,     phi_N(x) = J_{N-1}(x) / x^{N-1},

evaluated with Gauss-Legendre panels whose width follows the combined
oscillation frequency of kernel and integrand. How the upper limit is
handled depends on the decay hint attached to the integrand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, BudgetExceededError, DomainError, IntegrabilityError, ValidationError
from .specfun import check_order, zonal

__all__ = [
    "Gaussian",
    "Polynomial",
    "Compact",
    "RadialFunction",
    "QuadratureConfig",
    "bessel_integral",
    "radial_integral",
    "radial_fourier",
    "macwilliams_function",
    "macwilliams_transform",
    "involution_residual",
    "zonal_surface_integral",
    "symplectic_form",
]


@dataclass(frozen=True)
class Gaussian:
    """Envelope exp(-(r - center)^2 / (2 scale^2)) times a polynomial."""

    scale: float = 1.0
    center: float = 0.0


@dataclass(frozen=True)
class Polynomial:
    """|f(r)| <= C r^{-power} for large r."""

    power: float


@dataclass(frozen=True)
class Compact:
    radius: float


DecayHint = Union[Gaussian, Polynomial, Compact]


def _check_hint(hint) -> None:
    if isinstance(hint, Gaussian):
        if not (hint.scale > 0 and math.isfinite(hint.scale) and hint.center >= 0):
            raise ValidationError("gaussian hint needs scale > 0 and center >= 0")
    elif isinstance(hint, Polynomial):
        if not math.isfinite(hint.power):
            raise ValidationError("polynomial hint needs a finite power")
    elif isinstance(hint, Compact):
        if not hint.radius > 0:
            raise ValidationError("compact support radius must be positive")
    else:
        raise ValidationError(f"unknown decay hint {hint!r}")


class RadialFunction:
    """A function of r >= 0, either closed-form or sampled on a grid.

    ``omega`` is the angular frequency of any oscillation carried by the
    function itself (e.g. 2|alpha| for the cat-state J0 term). The
    quadrature engine resolves it on top of the kernel oscillation.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray] | None = None,
        *,
        r: Sequence[float] | None = None,
        values: Sequence[float] | None = None,
        decay: DecayHint | None = None,
        omega: float = 0.0,
        label: str = "",
    ):
        if (func is None) == (r is None):
            raise ValidationError("give either a callable or sampled (r, values)")
        self.omega = float(omega)
        self.label = label
        self.knots: np.ndarray | None = None
        if func is not None:
            if decay is None:
                raise ValidationError("closed-form radial functions need a decay hint")
            self._func = func
            self._spline = None
        else:
            r = np.asarray(r, dtype=float)
            v = np.asarray(values, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
                raise ValidationError("sampled grid needs >= 2 matching r and values")
            if np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ValidationError("sampled abscissae must be non-negative and strictly increasing")
            if not np.all(np.isfinite(v)):
                raise ValidationError("sampled values must be finite")
            self.knots = r
            self._values = v
            self._spline = CubicSpline(r, v)
            self._func = None
            if decay is None:
                decay = Compact(float(r[-1]))
        _check_hint(decay)
        self.decay = decay

    @classmethod
    def sampled(cls, r, values, decay: DecayHint | None = None, omega: float = 0.0, label: str = ""):
        return cls(r=r, values=values, decay=decay, omega=omega, label=label)

    @property
    def is_sampled(self) -> bool:
        return self._spline is not None

    @property
    def values(self) -> np.ndarray:
        if self._spline is None:
            raise ValidationError("closed-form function has no stored samples")
        return self._values

    @property
    def support_end(self) -> float:
        end = math.inf
        if isinstance(self.decay, Compact):
            end = self.decay.radius
        if self.knots is not None:
            end = min(end, float(self.knots[-1]))
        return end

    def __call__(self, r):
        ra = np.asarray(r, dtype=float)
        if self._spline is not None:
            out = np.where(
                (ra >= self.knots[0]) & (ra <= self.knots[-1]),
                self._spline(np.clip(ra, self.knots[0], self.knots[-1])),
                0.0,
            )
        else:
            out = np.asarray(self._func(ra), dtype=float)
            out = np.broadcast_to(out, ra.shape).copy() if out.shape != ra.shape else out
        if isinstance(self.decay, Compact):
            out = np.where(ra <= self.decay.radius, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def scaled(self, c: float) -> "RadialFunction":
        if self.is_sampled:
            return RadialFunction.sampled(self.knots, c * self._values, self.decay, self.omega)
        f = self._func
        return RadialFunction(lambda r: c * f(r), decay=self.decay, omega=self.omega)

    def __repr__(self) -> str:
        kind = "sampled" if self.is_sampled else "closed"
        return f"RadialFunction({kind}, decay={self.decay}, omega={self.omega}, label={self.label!r})"


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs of the panel quadrature.

    ``truncation`` overrides the radius derived from the decay hint (for
    polynomial hints it is the first of the three extrapolation radii).
    """

    truncation: float | None = None
    panels_per_half_period: int = 4
    nodes_per_panel: int = 16
    tail_tol: float = 1e-9
    max_nodes: int = 4_000_000

    def __post_init__(self):
        if self.truncation is not None and not self.truncation > 0:
            raise ValidationError("truncation radius must be positive")
        if self.panels_per_half_period < 4:
            raise ValidationError("need at least 4 panels per half period")
        if self.nodes_per_panel < 8:
            raise ValidationError("need at least 8 nodes per panel")
        if not 0 < self.tail_tol < 1:
            raise ValidationError("tail tolerance must lie in (0, 1)")


DEFAULT_CONFIG = QuadratureConfig()


def _panel_nodes(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    half = (b - a) / 2.0
    nodes = (a + b) / 2.0 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def _edges(lo: float, hi: float, width: float, knots: np.ndarray | None) -> np.ndarray:
    count = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, count + 1)
    if knots is not None:
        inner = knots[(knots > lo) & (knots < hi)]
        if len(inner):
            edges = np.unique(np.concatenate([edges, inner]))
    return edges


def _panel_width(freq: float, feature: float, cfg: QuadratureConfig) -> float:
    half_period = math.pi / freq if freq > 0 else math.inf
    return min(half_period, feature) / cfg.panels_per_half_period


def _gaussian_radius(h: Callable, hint: Gaussian, tol: float) -> float:
    s, c = hint.scale, hint.center
    radius = c + s * math.sqrt(2.0 * math.log(1e3 / tol)) + 2.0 * s
    probe = np.linspace(0.0, radius, 400)
    peak = max(float(np.max(np.abs(h(probe)))), 1e-300)
    for _ in range(60):
        edge = np.linspace(radius, radius + 3.0 * s, 32)
        if np.max(np.abs(h(edge))) <= 1e-3 * tol * max(peak, 1.0):
            break
        radius += s
    return radius


def _integrate_range(h, N, ys, lo, hi, width, knots, cfg) -> np.ndarray:
    edges = _edges(lo, hi, width, knots)
    nodes, weights = _panel_nodes(edges, cfg.nodes_per_panel)
    if len(nodes) > cfg.max_nodes:
        raise BudgetExceededError(f"{len(nodes)} quadrature nodes exceed the budget of {cfg.max_nodes}")
    hw = h(nodes) * weights
    out = np.empty(len(ys))
    chunk = max(1, 4_000_000 // max(1, len(nodes)))
    for start in range(0, len(ys), chunk):
        yy = ys[start : start + chunk]
        kern = zonal(N, np.abs(yy[:, None] * nodes[None, :]))
        out[start : start + chunk] = kern @ hw
    return out


def _tail_exponent(q: float, N: float, y: float) -> float:
    # kernel contributes (y r)^{1/2 - N} decay when y > 0
    return q - 1.0 if y == 0 else q - 1.0 + (N - 0.5)


def bessel_integral(
    h: Callable[[np.ndarray], np.ndarray],
    hint: DecayHint,
    N: float,
    y,
    cfg: QuadratureConfig | None = None,
    omega: float = 0.0,
    knots: np.ndarray | None = None,
    support_end: float = math.inf,
):
    """int_0^inf h(r) phi_N(y r) dr for scalar or array y >= 0.

    For a polynomial hint the power refers to h itself.
    """
    cfg = cfg or DEFAULT_CONFIG
    check_order(N - 1)
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(ya < 0) or not np.all(np.isfinite(ya)):
        raise DomainError("transform argument must be finite and >= 0")
    out = np.empty_like(ya)
    order = np.argsort(ya)
    # group arguments so that one panel layout serves each group
    groups = np.array_split(order, max(1, int(math.ceil(len(ya) / 64))))
    for idx in groups:
        ys = ya[idx]
        freq = float(ys.max()) + omega
        if isinstance(hint, Gaussian):
            width = _panel_width(freq, hint.scale, cfg)
            radius = cfg.truncation or _gaussian_radius(h, hint, cfg.tail_tol)
            radius = min(radius, support_end)
            out[idx] = _integrate_range(h, N, ys, 0.0, radius, width, knots, cfg)
        elif isinstance(hint, Compact):
            radius = min(hint.radius, support_end)
            width = _panel_width(freq, max(radius / 8.0, 1e-3), cfg)
            out[idx] = _integrate_range(h, N, ys, 0.0, radius, width, knots, cfg)
        else:
            out[idx] = [_polynomial_tail_integral(h, hint.power, N, yv, cfg, omega, knots, support_end) for yv in ys]
    return float(out[0]) if np.ndim(y) == 0 else out


def _wynn_epsilon(partial: np.ndarray) -> tuple[float, float]:
    """Wynn epsilon acceleration; returns the last two even-column estimates."""
    n = len(partial)
    prev = np.zeros(n + 1)
    cur = np.asarray(partial, dtype=float).copy()
    estimates = [float(cur[-1])]
    for k in range(1, n):
        diff = cur[1:] - cur[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = prev[1 : len(cur)] + 1.0 / diff
        if not np.all(np.isfinite(nxt)):
            break
        prev, cur = cur, nxt
        if k % 2 == 0:
            estimates.append(float(cur[-1]))
    last = estimates[-1]
    before = estimates[-2] if len(estimates) > 1 else float(partial[-2])
    return last, abs(last - before)


def _polynomial_tail_integral(h, q, N, y, cfg, omega, knots, support_end) -> float:
    q1 = _tail_exponent(q, N, y)
    if q1 <= 0:
        raise IntegrabilityError(f"decay power {q} too slow for convergence at y={y}")
    width = _panel_width(y + omega, 1.0, cfg)
    base = cfg.truncation or 64.0
    if support_end < math.inf:
        return float(_integrate_range(h, N, np.array([y]), 0.0, support_end, width, knots, cfg)[0])
    head = float(_integrate_range(h, N, np.array([y]), 0.0, base, width, knots, cfg)[0])
    if y > 0:
        # oscillating tail: partial sums at kernel half-periods, then Wynn epsilon
        step = math.pi / y
        edges = base + step * np.arange(25)
        sums = [head]
        for a, b in zip(edges[:-1], edges[1:]):
            w = min(math.pi / (y + omega), max(1.0, a / 8.0)) / cfg.panels_per_half_period
            sums.append(sums[-1] + float(_integrate_range(h, N, np.array([y]), a, b, w, None, cfg)[0]))
        full, err = _wynn_epsilon(np.array(sums))
    else:
        radii = [base, 2 * base, 4 * base]
        parts = [head] + [
            float(_integrate_range(h, N, np.array([y]), a, b, max(width, a / 64.0), knots, cfg)[0])
            for a, b in zip(radii[:-1], radii[1:])
        ]
        i1, i2, i3 = np.cumsum(parts)
        # tail model I(inf) - I(R) = a R^{-q1} + b R^{-q1-2}
        rs = np.array(radii)
        mat = np.column_stack([np.ones(3), rs ** (-q1), rs ** (-q1 - 2.0)])
        full = float(np.linalg.solve(mat, [i1, i2, i3])[0])
        ratio = 2.0 ** (-q1)
        one_term = i3 + (i3 - i2) * ratio / (1.0 - ratio)
        err = abs(full - one_term)
    if err > cfg.tail_tol * max(1.0, abs(full)):
        raise AccuracyError(
            f"polynomial tail did not converge at y={y} (estimate {err:.3g})", partial=full, error_estimate=err
        )
    return full


def radial_integral(f: RadialFunction, cfg: QuadratureConfig | None = None) -> float:
    """int_0^inf f(r) dr with the same panel machinery."""
    return bessel_integral(
        f, f.decay, 1.0, 0.0, cfg, omega=f.omega, knots=f.knots, support_end=f.support_end
    )


def radial_fourier(f: RadialFunction, N: float, y, cfg: QuadratureConfig | None = None):
    """Unitary Fourier transform of a radial function on R^{2N}.

    hat f(y) = y^{1-N} int_0^inf J_{N-1}(y r) r^N f(r) dr, with the y = 0
    value taken as the continuous limit.
    """
    check_order(N - 1)
    hint = f.decay
    if isinstance(hint, Polynomial):
        if hint.power <= N + 1:
            raise IntegrabilityError(f"need decay power > N + 1 = {N + 1}, got {hint.power}")
        if np.any(np.asarray(y) == 0) and hint.power <= 2 * N:
            raise IntegrabilityError(f"need decay power > 2N = {2 * N} at y = 0")
        hint = Polynomial(hint.power - (2 * N - 1))
    twoN1 = 2.0 * N - 1.0

    def h(r):
        return r**twoN1 * f(r)

    return bessel_integral(h, hint, N, y, cfg, omega=f.omega, knots=f.knots, support_end=f.support_end)


def _dual_hint(hint: DecayHint, omega: float) -> tuple[DecayHint, float]:
    if isinstance(hint, Gaussian):
        return Gaussian(1.0 / hint.scale, omega), hint.center
    return Polynomial(2.0), 0.0


def macwilliams_function(A, N: float | None = None, cfg: QuadratureConfig | None = None) -> RadialFunction:
    """The dual distribution r -> B(r) as a lazily evaluated radial function.

    B(r) = r^{2N-1} int_0^inf phi_N(r x) A(x) dx plus the exact kernel sum of
    any delta masses in ``A``.
    """
    N = A.N if N is None else N
    cont = A.continuous
    locs, masses = A.locations, A.masses_or_empty
    twoN1 = 2.0 * N - 1.0

    def evaluate(r):
        ra = np.asarray(r, dtype=float)
        flat = ra.reshape(-1)
        total = np.zeros_like(flat)
        if cont is not None:
            total += bessel_integral(
                cont, cont.decay, N, flat, cfg, omega=cont.omega, knots=cont.knots, support_end=cont.support_end
            )
        if len(locs):
            total += zonal(N, flat[:, None] * locs[None, :]) @ masses
        return (flat**twoN1 * total).reshape(ra.shape)

    if cont is not None:
        hint, omega = _dual_hint(cont.decay, cont.omega)
    else:
        hint, omega = Polynomial(2.0), float(locs.max()) if len(locs) else 0.0
    return RadialFunction(evaluate, decay=hint, omega=omega, label="macwilliams")


def macwilliams_transform(A, N: float | None, r_grid, cfg: QuadratureConfig | None = None):
    """Dual weight distribution of ``A`` sampled on ``r_grid``.

    The result is a WeightDistribution whose continuous part holds the
    samples (cubic interpolation between them).
    """
    from .weights import WeightDistribution

    N = A.N if N is None else N
    r = np.asarray(r_grid, dtype=float)
    lazy = macwilliams_function(A, N, cfg)
    values = lazy(r)
    hint = lazy.decay if not isinstance(lazy.decay, Polynomial) else Compact(float(r[-1]))
    return WeightDistribution(N, RadialFunction.sampled(r, values, hint, lazy.omega, "B"))


def involution_residual(A, N: float | None, r_grid, cfg: QuadratureConfig | None = None) -> float:
    """max |T(T(A)) - A| / max |A| on ``r_grid``, T the MacWilliams map."""
    from .weights import WeightDistribution

    N = A.N if N is None else N
    if A.continuous is None:
        raise ValidationError("involution check needs a continuous part")
    r = np.asarray(r_grid, dtype=float)
    orig = A.density(r)
    scale = float(np.max(np.abs(orig)))
    if scale == 0.0:
        return 0.0
    once = WeightDistribution(N, macwilliams_function(A, N, cfg))
    twice = macwilliams_function(once, N, cfg)(r)
    return float(np.max(np.abs(twice - orig)) / scale)


def symplectic_form(N: int) -> np.ndarray:
    """Omega = [[0, I], [-I, 0]] in (q_1..q_N, p_1..p_N) ordering."""
    eye = np.eye(N)
    zero = np.zeros((N, N))
    return np.block([[zero, eye], [-eye, zero]])


def zonal_surface_integral(N: int, r: float, eta, nodes: int | None = None) -> complex:
    """(|eta|^{N-1} / (2 pi r)^N) * surface integral of exp(-i xi^T Omega eta) over |xi| = r.

    Deterministic angular quadrature: trapezoid on the circle for N = 1,
    Gauss-Legendre x trapezoid x trapezoid on S^3 for N = 2.
    """
    eta = np.asarray(eta, dtype=float)
    if N not in (1, 2):
        raise ValidationError("zonal_surface_integral supports N = 1 or 2")
    if eta.shape != (2 * N,):
        raise ValidationError(f"eta must have length {2 * N}")
    if not r > 0:
        raise DomainError("radius must be positive")
    v = symplectic_form(N) @ eta  # xi^T Omega eta = xi . v
    t = r * float(np.linalg.norm(v))
    n = nodes or int(2 * math.ceil(t) + 64)
    th = 2.0 * np.pi * np.arange(n) / n
    norm = float(np.linalg.norm(eta))
    if N == 1:
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        surface = r * (2.0 * np.pi / n) * np.sum(np.exp(-1j * r * (u @ v)))
        return complex(surface / (2.0 * np.pi * r))
    x, w = leggauss(max(32, n // 2))
    psi = (x + 1.0) * np.pi / 4.0
    wpsi = w * np.pi / 4.0 * np.cos(psi) * np.sin(psi)
    c1, s1 = np.cos(th), np.sin(th)
    total = 0.0j
    dth = (2.0 * np.pi / n) ** 2
    for p, wp in zip(psi, wpsi):
        a = np.cos(p) * (c1[:, None] * v[0] + s1[:, None] * v[1])
        b = np.sin(p) * (c1[None, :] * v[2] + s1[None, :] * v[3])
        total += wp * dth * np.sum(np.exp(-1j * r * (a + b)))
    surface = r**3 * total
    return complex(norm * surface / (2.0 * np.pi * r) ** 2)
