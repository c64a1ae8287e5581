"""Homogeneously broadened resonant absorber.

Frequencies are measured from the line centre; ``T2 = 2 T1`` (radiative
dephasing only).  The regular part of the impulse response at depth ``z`` is

    Phi(t, z) = b(z) * J1(2 sqrt(b(z) t)) / sqrt(b(z) t) * theta(t) * exp(-t / T2),
    b(z) = alpha z / (2 T2),

and the full response is ``delta(t) - Phi(t, z)``.  The delta part is never
sampled: callers pass the input through and convolve only with ``-Phi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularMediumError, ThinSliceWarning
from .signal_core import Signal, TimeGrid
from .specfun import bessel_i0e, bessel_i1e, phi_shape

__all__ = [
    "MediumParams",
    "Kernel",
    "b_of",
    "g_of",
    "g_of_depth",
    "norm_const",
    "transfer_thin",
    "transfer_thick",
    "impulse_response_regular",
    "regular_kernel",
    "alpha_from_geometry",
    "geometric_factor",
    "THIN_SLICE_LIMIT",
]

THIN_SLICE_LIMIT = 0.1


@dataclass(frozen=True)
class MediumParams:
    """Absorber parameters: absorption coefficient, length and coherence time."""

    alpha: float
    L: float
    T2: float = 1.0

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise DomainError(f"L must be positive, got {self.L}")
        if not (self.T2 > 0 and math.isfinite(self.T2)):
            raise DomainError(f"T2 must be positive, got {self.T2}")

    @classmethod
    def from_optical_depth(cls, alpha_L: float, T2: float = 1.0, L: float = 1.0) -> "MediumParams":
        return cls(alpha=alpha_L / L, L=L, T2=T2)

    @property
    def T1(self) -> float:
        return self.T2 / 2.0

    @property
    def optical_depth(self) -> float:
        return self.alpha * self.L

    D = optical_depth

    def at_depth(self, z: float) -> "MediumParams":
        """Same absorber cut to length ``z``."""
        return MediumParams(self.alpha, z, self.T2)


def _check_depth(p: MediumParams, x: float):
    if not (0.0 <= x <= p.L * (1 + 1e-12)):
        raise DomainError(f"depth {x} outside [0, {p.L}]")


def b_of(p: MediumParams, x: float) -> float:
    """Coupling rate ``alpha x / (2 T2)`` of a layer of thickness ``x``."""
    _check_depth(p, x)
    return p.alpha * x / (2.0 * p.T2)


def g_of_depth(optical_depth: float) -> float:
    """``exp(-D/2) (I0(D/2) + I1(D/2))`` for optical depth ``D``; in (0, 1]."""
    if optical_depth < 0 or math.isnan(optical_depth):
        raise DomainError("optical depth must be >= 0")
    half = 0.5 * optical_depth
    return float(bessel_i0e(half) + bessel_i1e(half))


def g_of(p: MediumParams, x: float) -> float:
    if x < 0:
        raise DomainError("g_of requires x >= 0")
    return g_of_depth(p.alpha * x)


def norm_const(p: MediumParams, x: float | None = None) -> float:
    """Normalisation ``A = [b (1 - g)]^-1/2`` of the optimal pulse for length ``x`` (default L).

    Units are ``sqrt(time)``.
    """
    x = p.L if x is None else x
    depth = p.alpha * x
    if depth <= 0:
        raise SingularMediumError("optical depth must be positive: no optimal pulse exists")
    b = depth / (2.0 * p.T2)
    one_minus_g = _one_minus_g(depth)
    return 1.0 / math.sqrt(b * one_minus_g)


def _one_minus_g(depth: float) -> float:
    # 1 - g loses digits for tiny depth
    if depth < 1e-3:
        return depth / 4.0 - depth**2 / 16.0 + 5.0 * depth**3 / 384.0
    return 1.0 - g_of_depth(depth)


def transfer_thin(p: MediumParams, dz: float, omega):
    """Thin-slice transfer ``1 - b(dz) i / (omega + i/T2)``."""
    if p.alpha * dz >= THIN_SLICE_LIMIT:
        warnings.warn(
            f"alpha*dz = {p.alpha * dz:.3g} is not thin (limit {THIN_SLICE_LIMIT})",
            ThinSliceWarning,
            stacklevel=2,
        )
    b = p.alpha * dz / (2.0 * p.T2)
    w = np.asarray(omega, dtype=float)
    out = 1.0 - b * 1j / (w + 1j / p.T2)
    return complex(out) if np.ndim(omega) == 0 else out


def transfer_thick(p: MediumParams, z: float, omega):
    """Transfer function ``exp(-b(z) i / (omega + i/T2))`` of a layer of depth ``z``."""
    b = b_of(p, z)
    w = np.asarray(omega, dtype=float)
    out = np.exp(-b * 1j / (w + 1j / p.T2))
    return complex(out) if np.ndim(omega) == 0 else out


def impulse_response_regular(p: MediumParams, z: float, t):
    """Regular part ``Phi(t, z)`` of the impulse response; ``Phi(0) = b/2`` (theta(0) = 1/2)."""
    b = b_of(p, z)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t_arr)
    pos = t_arr > 0
    tp = t_arr[pos]
    out[pos] = b * phi_shape(b * tp) * np.exp(-tp / p.T2)
    out[t_arr == 0] = 0.5 * b
    return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


def regular_kernel(p: MediumParams, z: float, dt: float, n: int) -> Signal:
    """``Phi(., z)`` sampled on the lags ``0, dt, ..., (n-1) dt`` as a causal kernel."""
    grid = TimeGrid(0.0, dt, n)
    return Signal(grid, impulse_response_regular(p, z, grid.times))


@dataclass(frozen=True)
class Kernel:
    """Response of the absorber between the entrance face and depth ``depth``."""

    params: MediumParams
    depth: float

    def __post_init__(self):
        _check_depth(self.params, self.depth)

    @property
    def b(self) -> float:
        return b_of(self.params, self.depth)

    def transfer(self, omega):
        return transfer_thick(self.params, self.depth, omega)

    def regular(self, t):
        return impulse_response_regular(self.params, self.depth, t)

    def first_zero(self) -> float:
        """First zero of ``Phi``: ``j_{1,1}^2 T2 / (2 alpha z)``."""
        return 3.8317059702075125**2 / (4.0 * self.b)


def geometric_factor(wavelength: float, area: float) -> float:
    """``mu = 3 lambda^2 / (8 pi S)`` for a beam of cross-section ``S``."""
    if wavelength <= 0 or area <= 0:
        raise DomainError("wavelength and area must be positive")
    return 3.0 * wavelength**2 / (8.0 * math.pi * area)


def alpha_from_geometry(mu: float, linear_density: float) -> float:
    """Resonant absorption coefficient ``4 mu N_p / dz`` from atoms per unit length."""
    if mu <= 0 or linear_density <= 0:
        raise DomainError("mu and linear density must be positive")
    return 4.0 * mu * linear_density
