"""Time-domain model of optically thin slices and their cascade.

A slice holding ``N_p`` atoms with geometric factor ``mu`` responds to an
incoming amplitude ``F_in`` with a collective excitation ``c(t)`` driven
through an exponential memory kernel, and re-emits ``sqrt(N_p mu / T1) c(t)``
into the forward mode.  Stacking ``n`` such slices of thickness ``L/n``
approaches propagation through the thick medium with a first-order
(``O(1/n)``) product error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, GridError, ThinSliceWarning
from .medium import THIN_SLICE_LIMIT, MediumParams
from .signal_core import Signal, TimeGrid, convolve

__all__ = [
    "SliceParams",
    "SliceState",
    "causal_exponential",
    "slice_excitation",
    "slice_output",
    "thin_scatter",
    "cascade",
]

KERNEL_CUTOFF = 1e-12


@dataclass(frozen=True)
class SliceParams:
    """Cooperative coupling ``N_p * mu`` of one slice and the population lifetime ``T1``."""

    np_mu: float
    T1: float

    def __post_init__(self):
        if self.np_mu < 0:
            raise DomainError("np_mu must be >= 0")
        if self.T1 <= 0:
            raise DomainError("T1 must be positive")

    @classmethod
    def from_medium(cls, p: MediumParams, dz: float) -> "SliceParams":
        # alpha = 4 mu N_p / dz
        return cls(np_mu=p.alpha * dz / 4.0, T1=p.T1)

    @property
    def decay_rate(self) -> float:
        return (self.np_mu + 1.0) / (2.0 * self.T1)


@dataclass(frozen=True, eq=False)
class SliceState:
    """Excitation amplitude ``c(t)`` of a slice on a time grid."""

    grid: TimeGrid
    c: np.ndarray

    def __post_init__(self):
        data = np.array(self.c, dtype=complex, copy=True).reshape(-1)
        if data.size != self.grid.n:
            raise GridError("state length does not match its grid")
        data.setflags(write=False)
        object.__setattr__(self, "c", data)


def _start_correction(x: np.ndarray, r: float) -> np.ndarray:
    # half weight for the first sample (trapezoid end rule at the grid start)
    return 0.5 * x[0] * r ** np.arange(x.size)


def causal_exponential(s: Signal, rate: float, method: str = "recursive") -> np.ndarray:
    """Trapezoid quadrature of ``integral_0^(t - t_start) s(t - tau) exp(-rate tau) dtau`` on the grid.

    Only samples from the grid start onward contribute.  ``recursive`` runs
    the exact first-order recursion; ``fft`` convolves with the kernel
    sampled until it falls below ``KERNEL_CUTOFF``.
    """
    dt = s.dt
    x = s.samples
    r = math.exp(-rate * dt)
    if method == "recursive":
        acc = lfilter([1.0], [1.0, -r], x)
        return dt * (acc - 0.5 * x - _start_correction(x, r))
    if method == "fft":
        n_k = min(s.grid.n, int(math.ceil(-math.log(KERNEL_CUTOFF) / (rate * dt))) + 1)
        lags = dt * np.arange(n_k)
        weights = np.exp(-rate * lags)
        weights[0] = 0.5
        kernel = Signal(TimeGrid(0.0, dt, max(n_k, 2)), np.pad(weights, (0, max(0, 2 - n_k))))
        return convolve(s, kernel).samples[: s.grid.n] - dt * _start_correction(x, r)
    raise ValueError(f"unknown method {method!r}")


def slice_excitation(
    input: Signal, sp: SliceParams, c_init: complex = 0.0, method: str = "recursive"
) -> SliceState:
    """Excitation of a slice driven by ``input``; ``c_init`` is the amplitude at the grid start."""
    rate = sp.decay_rate
    t = input.t - input.grid.t_start
    homogeneous = c_init * np.exp(-rate * t)
    driven = causal_exponential(input, rate, method=method)
    return SliceState(input.grid, homogeneous - math.sqrt(sp.np_mu / sp.T1) * driven)


def slice_output(input: Signal, state: SliceState, sp: SliceParams) -> Signal:
    """Forward field behind the slice: ``F_in + sqrt(N_p mu / T1) c``."""
    if not input.grid.is_compatible(state.grid):
        raise GridError("input and slice state live on different grids")
    return Signal(input.grid, input.samples + math.sqrt(sp.np_mu / sp.T1) * state.c)


def _warn_thick(p: MediumParams, dz: float):
    if p.alpha * dz >= THIN_SLICE_LIMIT:
        warnings.warn(
            f"slice optical depth {p.alpha * dz:.3g} is not below {THIN_SLICE_LIMIT}",
            ThinSliceWarning,
            stacklevel=3,
        )


def thin_scatter(input: Signal, p: MediumParams, dz: float, method: str = "recursive") -> Signal:
    """Forward scattering by a thin slice, ``F_in - b(dz) integral F_in(t - tau) exp(-tau/T2) dtau``.

    The cooperative shift of the decay rate is neglected here, unlike
    :func:`slice_excitation`.
    """
    if dz < 0:
        raise DomainError("slice thickness must be >= 0")
    _warn_thick(p, dz)
    b = p.alpha * dz / (2.0 * p.T2)
    if b == 0.0:
        return input
    return Signal(input.grid, input.samples - b * causal_exponential(input, 1.0 / p.T2, method))


def cascade(input: Signal, p: MediumParams, n: int) -> Signal:
    """Apply ``n`` thin slices of thickness ``L/n`` in sequence."""
    if int(n) != n or n < 1:
        raise DomainError("slice count must be a positive integer")
    dz = p.L / n
    _warn_thick(p, dz)
    b = p.alpha * dz / (2.0 * p.T2)
    x = input.samples.copy()
    dt = input.dt
    r = math.exp(-dt / p.T2)
    decay = r ** np.arange(x.size)
    for _ in range(int(n)):
        acc = lfilter([1.0], [1.0, -r], x)
        x = x - b * dt * (acc - 0.5 * x - 0.5 * x[0] * decay)
    return Signal(input.grid, x)
