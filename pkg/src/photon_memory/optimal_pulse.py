"""The matched-filter input pulse and its closed-form transmitted field.

The optimal input for an absorber of length ``L`` is the time-reversed
regular kernel ``F_in(t) = -A(L) Phi(-t, L)``.  After the medium the field
is the mirror image of the input plus a residual ``gamma``::

    F(t, L) = gamma(t, L) + A(L) Phi(t, L)

``gamma`` is an alternating series in half-integer modified Bessel
functions.  Its terms grow to about ``exp(alpha L / T2)`` before they decay,
so it is summed in binary floating point of adaptive precision (gmpy2).
Dense grids are served by piecewise Chebyshev interpolation of the series.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import quad

from .errors import (
    ConfigurationError,
    DomainError,
    SeriesTruncationWarning,
    TruncatedPulseWarning,
)
from .medium import MediumParams, b_of, g_of, impulse_response_regular, norm_const
from .signal_core import Signal, TimeGrid, default_grid

__all__ = [
    "OptimalPulseSpec",
    "build_optimal",
    "truncated_probability",
    "gamma_series",
    "gamma_limit_series",
    "gamma_on_grid",
    "gamma_asymptotic",
    "analytic_output",
    "default_m_max",
]

TRUNCATION_ERROR = 1e-4
TRUNCATION_WARN = 1e-6
SERIES_RTOL = 1e-12
GUARD_BITS = 64
CHEB_NODES = 17
CHEB_RTOL = 1e-13


def default_m_max(p: MediumParams, t: float = 0.0) -> int:
    """Term budget covering the peak of the series terms with margin."""
    B = 0.5 * p.optical_depth
    scale = max(B, math.sqrt(B * abs(t) / p.T2))
    return int(math.ceil(2.0 * math.e * scale + 20.0 * math.sqrt(scale) + 60.0))


@dataclass(frozen=True)
class OptimalPulseSpec:
    """Absorber, sampling grid and series budget for the optimal pulse.

    ``grid`` defaults to :func:`default_grid` for the optical depth and
    ``m_max=None`` picks :func:`default_m_max` per evaluation point.
    """

    params: MediumParams
    grid: TimeGrid | None = None
    m_max: int | None = None
    _resolved: TimeGrid = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.params.optical_depth <= 0:
            raise DomainError("optical depth must be positive")
        if self.m_max is not None and (int(self.m_max) != self.m_max or self.m_max < 1):
            raise DomainError("m_max must be a positive integer")
        g = self.grid or default_grid(self.params.optical_depth, self.params.T2)
        object.__setattr__(self, "_resolved", g)

    @property
    def time_grid(self) -> TimeGrid:
        return self._resolved


def _tail_probability(p: MediumParams, x: float) -> float:
    A2 = norm_const(p) ** 2
    L = p.L

    def f(t):
        return impulse_response_regular(p, L, t) ** 2

    step = 4.0 * p.T2
    total, lo = 0.0, x
    while True:
        piece = quad(f, lo, lo + step, limit=400, epsabs=0.0, epsrel=1e-10)[0]
        total += piece
        lo += step
        if piece <= 1e-16 * max(total, 1e-300) or lo - x > 200.0 * p.T2:
            return A2 * total


def truncated_probability(p: MediumParams, grid: TimeGrid) -> float:
    """Probability of the optimal pulse that falls before the grid start."""
    # a sample at t_start still carries half a cell
    edge = -(grid.t_start - 0.5 * grid.dt)
    if edge <= 0:
        return 1.0
    return _tail_probability(p, edge)


def _required_window(p: MediumParams, target: float) -> float:
    x = p.T2
    while _tail_probability(p, x) > target:
        x *= 1.25
    return x


def build_optimal(spec: OptimalPulseSpec) -> Signal:
    """Optimal input ``-A(L) Phi(-t, L)`` sampled on the grid; zero for t > 0."""
    p, grid = spec.params, spec.time_grid
    lost = truncated_probability(p, grid)
    if lost >= TRUNCATION_ERROR:
        need = _required_window(p, TRUNCATION_WARN)
        raise ConfigurationError(
            f"grid start {grid.t_start:.4g} discards probability {lost:.2e}; "
            f"start the grid at t <= {-need:.4g}"
        )
    if lost > TRUNCATION_WARN:
        warnings.warn(
            f"grid start discards probability {lost:.2e} of the pulse",
            TruncatedPulseWarning,
            stacklevel=2,
        )
    A = norm_const(p)
    values = -A * impulse_response_regular(p, p.L, -grid.times)
    return Signal(grid, values)


def _log2(v) -> float:
    return float(gmpy2.log2(v)) if v > 0 else -math.inf


def _series_sum(B: float, x: float, m_max: int, bits: int):
    """Sum of ``sum_m (-1)^m B^m x^(m-1) / (m! (m-1)!) * Kt_m(x)`` at fixed precision.

    ``Kt_m = sqrt(pi x / 2) (2/pi) K_{m-1/2}(x)`` is carried in the variable
    ``k0``; it equals ``exp(-x)`` times a polynomial in ``1/x``.
    Returns the sum, the number of terms, log2 of the largest term and a convergence flag.
    """
    with gmpy2.context(precision=bits):
        X = gmpy2.mpfr(x)
        Bm = gmpy2.mpfr(B)
        ex = gmpy2.exp(-X)
        k0, k1 = ex, ex * (1 + 1 / X)
        inv = 1 / X
        coef = Bm
        total = gmpy2.mpfr(0)
        biggest = gmpy2.mpfr(0)
        prev = None
        for m in range(1, m_max + 1):
            term = coef * k0
            total = total - term if m % 2 else total + term
            if term > biggest:
                biggest = term
            if prev is not None and term < prev and term <= SERIES_RTOL * 1e-3 * abs(total):
                return float(total), m, _log2(biggest), True
            prev = term
            k0, k1 = k1, k0 + (2 * m + 1) * inv * k1
            coef = coef * Bm * X / ((m + 1) * m)
        return float(total), m_max, _log2(biggest), False


def _limit_sum(B: float, m_max: int, bits: int):
    """Value of the series at ``x = 0``: ``sum (-1)^m B^m (2m-2)! / (m! (m-1)!^2 2^(m-1))``."""
    with gmpy2.context(precision=bits):
        Bm = gmpy2.mpfr(B)
        coef = Bm
        total = gmpy2.mpfr(0)
        biggest = gmpy2.mpfr(0)
        prev = None
        for m in range(1, m_max + 1):
            total = total - coef if m % 2 else total + coef
            if coef > biggest:
                biggest = coef
            if prev is not None and coef < prev and coef <= SERIES_RTOL * 1e-3 * abs(total):
                return float(total), m, _log2(biggest), True
            prev = coef
            # ratio of consecutive terms
            coef = coef * Bm * (2 * m) * (2 * m - 1) / ((m + 1) * m * m * 2)
        return float(total), m_max, _log2(biggest), False


def _adaptive(fn, B: float, x: float, m_max: int):
    est = max(2.0 * B, 2.0 * math.sqrt(B * x)) / math.log(2.0)
    bits = int(est) + GUARD_BITS + 16
    for _ in range(6):
        value, terms, log_big, ok = fn(bits)
        if value == 0.0:
            return value, terms, ok, bits
        lost = max(log_big - math.log2(abs(value)), 0.0)
        if bits - lost >= GUARD_BITS:
            return value, terms, ok, bits
        bits = int(lost) + GUARD_BITS + 16
    return value, terms, ok, bits


@lru_cache(maxsize=65536)
def _gamma_reduced(B: float, x: float, m_max: int):
    if x == 0.0:
        return _adaptive(lambda bits: _limit_sum(B, m_max, bits), B, 0.0, m_max)
    return _adaptive(lambda bits: _series_sum(B, x, m_max, bits), B, x, m_max)


def gamma_series(p: MediumParams, t, m_max: int | None = None, full_output: bool = False):
    """Residual field ``gamma(t, L)`` from its Bessel series.

    ``t`` may be a scalar or an array.  At ``t = 0`` the limit series is
    summed.  ``m_max=None`` sizes the term budget to the argument; when the
    budget runs out a :class:`SeriesTruncationWarning` is issued and, with
    ``full_output``, ``info["converged"]`` is False.
    """
    if p.optical_depth <= 0:
        raise DomainError("optical depth must be positive")
    if m_max is not None and (int(m_max) != m_max or m_max < 1):
        raise DomainError("m_max must be a positive integer")
    A = norm_const(p)
    B = 0.5 * p.optical_depth
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape)
    converged = True
    max_terms = 0
    for i, ti in enumerate(t_arr.flat):
        x = abs(ti) / p.T2
        budget = int(m_max) if m_max is not None else default_m_max(p, ti)
        value, terms, ok, _ = _gamma_reduced(B, x, budget)
        out.flat[i] = A * value / p.T2
        converged &= ok
        max_terms = max(max_terms, terms)
    if not converged:
        warnings.warn(
            f"gamma series not converged within m_max={m_max}",
            SeriesTruncationWarning,
            stacklevel=2,
        )
    result = float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))
    if full_output:
        return result, {"converged": converged, "terms": max_terms}
    return result


def gamma_limit_series(p: MediumParams, m_max: int | None = None) -> float:
    """``gamma(0, L)`` from the limit series; equals ``-A b g`` exactly."""
    return gamma_series(p, 0.0, m_max=m_max)


def _panel_fit(f, a: float, b: float):
    nodes = np.cos(np.pi * (np.arange(CHEB_NODES) + 0.5) / CHEB_NODES)
    x = 0.5 * (a + b) + 0.5 * (b - a) * nodes
    coef = chebyshev.chebfit(nodes, f(x), CHEB_NODES - 1)
    return coef


@lru_cache(maxsize=32)
def _gamma_panels(alpha: float, L: float, T2: float, x_max: float, m_max: int | None):
    p = MediumParams(alpha, L, T2)
    g0 = abs(gamma_series(p, 0.0, m_max=m_max))
    tol = CHEB_RTOL * max(g0, 1e-300)

    def f(x):
        return gamma_series(p, x, m_max=m_max)

    width = T2 / (4.0 * math.sqrt(p.optical_depth))
    edges = [0.0]
    while edges[-1] < x_max:
        edges.append(min(x_max, edges[-1] + width * 2.0 ** (len(edges) - 1)))
    stack = list(zip(edges[:-1], edges[1:]))[::-1]
    panels = []
    while stack:
        a, b = stack.pop()
        coef = _panel_fit(f, a, b)
        if np.max(np.abs(coef[-3:])) <= tol or b - a < 1e-6 * T2:
            panels.append((a, b, coef))
        else:
            mid = 0.5 * (a + b)
            stack.append((mid, b))
            stack.append((a, mid))
    panels.sort(key=lambda item: item[0])
    return tuple(panels)


def gamma_on_grid(p: MediumParams, t, m_max: int | None = None) -> np.ndarray:
    """``gamma`` at many points via adaptive Chebyshev panels in ``|t|``.

    Panels are bisected until their trailing coefficients drop below
    ``1e-13 |gamma(0)|``.
    """
    t_arr = np.asarray(t, dtype=float)
    x = np.abs(t_arr).reshape(-1)
    if x.size == 0:
        return np.zeros(t_arr.shape)
    x_max = float(np.max(x))
    if x_max == 0.0:
        return np.full(t_arr.shape, gamma_series(p, 0.0, m_max=m_max))
    panels = _gamma_panels(p.alpha, p.L, p.T2, x_max, m_max)
    starts = np.array([a for a, _, _ in panels])
    idx = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(panels) - 1)
    out = np.empty_like(x)
    for k in np.unique(idx):
        a, b, coef = panels[k]
        sel = idx == k
        u = (2.0 * x[sel] - (a + b)) / (b - a)
        out[sel] = chebyshev.chebval(u, coef)
    return out.reshape(t_arr.shape)


def gamma_asymptotic(p: MediumParams, t):
    """Large-depth form ``-sqrt(b) g / sqrt(1 - g) * exp(-|t| sqrt(alpha L) / T2)``."""
    b = b_of(p, p.L)
    g = g_of(p, p.L)
    peak = -math.sqrt(b) * g / math.sqrt(1.0 - g)
    t_arr = np.asarray(t, dtype=float)
    out = peak * np.exp(-np.abs(t_arr) * math.sqrt(p.optical_depth) / p.T2)
    return float(out) if np.ndim(t) == 0 else out


def analytic_output(spec: OptimalPulseSpec) -> Signal:
    """Transmitted field ``gamma(t) - F_in(-t)`` for the optimal input on the grid of ``spec``."""
    p, grid = spec.params, spec.time_grid
    t = grid.times
    A = norm_const(p)
    mirrored = A * impulse_response_regular(p, p.L, t)
    return Signal(grid, gamma_on_grid(p, t, m_max=spec.m_max) + mirrored)
