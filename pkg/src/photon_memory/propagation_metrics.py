"""Propagation through the absorber, atomic excitation profiles and storage metrics.

Signs: the atomic amplitude density follows the driven-oscillator form

    c'(t, z) = -sqrt(alpha / 2 T2) * integral_0^inf F(t - tau, z) exp(-tau / T2) dtau

so that ``c' = +sqrt(2 T2 / alpha) dF/dz``.  The closed forms
:func:`atomic_amplitude_closed` and :func:`field_at_zero_closed` are returned
with their textbook global sign; compare magnitudes against the numerics.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special
from scipy.integrate import trapezoid

from .errors import DomainError
from .medium import (
    MediumParams,
    b_of,
    g_of,
    impulse_response_regular,
    norm_const,
    regular_kernel,
    transfer_thick,
)
from .optimal_pulse import gamma_on_grid
from .signal_core import (
    Signal,
    TimeGrid,
    convolve,
    forward_transform,
    inverse_transform,
    probability,
)

__all__ = [
    "ExcitationProfile",
    "MetricsReport",
    "SimulationResult",
    "propagate",
    "field_at",
    "field_inside_decomposition",
    "atomic_amplitude",
    "atomic_amplitude_closed",
    "field_at_zero_closed",
    "efficiency",
    "efficiency_asymptotic",
    "absorption_probability",
    "absorption_probability_closed",
    "first_burst_fraction",
    "flatness_metrics",
    "default_z_grid",
    "simulate",
    "BURST_RULE",
]

# e^-40 ~ 4e-18: kernel samples past this many T2 are dropped
KERNEL_SPAN = 40.0
SPECTRAL_PERIODS = 8
BURST_RULE = (
    "burst = [0, t1], t1 = first zero crossing after the largest |F| at t > 0 "
    "of Re(F * conj(phase of F at that peak)), linearly interpolated"
)


def _check_z(p: MediumParams, z: float):
    if not (0.0 <= z <= p.L * (1 + 1e-12)):
        raise DomainError(f"depth {z} outside [0, {p.L}]")


def _kernel_length(s: Signal, T2: float) -> int:
    return max(2, min(s.grid.n, int(math.ceil(KERNEL_SPAN * T2 / s.dt)) + 1))


def propagate(input: Signal, p: MediumParams, z: float, method: str = "kernel") -> Signal:
    """Field at depth ``z`` for the input ``F(t, 0)``.

    ``kernel`` (default) subtracts the causal convolution with the sampled
    regular kernel, using ``Phi(0) = b/2``; it is second order in ``dt`` even
    when the input jumps.  ``spectral`` multiplies the sampled spectrum by
    the transfer function; it rings near discontinuities of the input.
    """
    _check_z(p, z)
    if z == 0.0 or p.alpha == 0.0:
        return input
    if method == "kernel":
        kernel = regular_kernel(p, z, input.dt, _kernel_length(input, p.T2))
        scattered = convolve(input, kernel).samples[: input.grid.n]
        return Signal(input.grid, input.samples - scattered)
    if method == "spectral":
        spec = forward_transform(input)
        return inverse_transform(spec.with_samples(spec.samples * transfer_thick(p, z, spec.omega)))
    raise ValueError(f"unknown method {method!r}")


def _interp(s: Signal, t: float) -> complex:
    x = s.t
    return complex(np.interp(t, x, s.samples.real) + 1j * np.interp(t, x, s.samples.imag))


def field_at(input: Signal, p: MediumParams, z: float, t: float) -> complex:
    """``F(t, z)`` at a single time, which need not be a grid point.

    The input term is linearly interpolated, so a jump between two samples
    contributes its mean value.
    """
    _check_z(p, z)
    direct = _interp(input, t)
    if z == 0.0:
        return direct
    lag = t - input.t
    mask = (lag >= 0) & (lag <= KERNEL_SPAN * p.T2)
    phi = impulse_response_regular(p, z, lag[mask])
    return direct - input.dt * complex(np.sum(input.samples[mask] * phi))


def _optimal_samples(p: MediumParams, length: float, t: np.ndarray) -> np.ndarray:
    return -norm_const(p, length) * impulse_response_regular(p.at_depth(length), length, -t)


def field_inside_decomposition(p: MediumParams, z: float, grid: TimeGrid) -> Signal:
    """Field at depth ``0 < z < L`` for the optimal input, assembled from sub-length pieces.

    With ``F_x`` the optimal input for length ``x`` and ``gamma_x`` its residual::

        F(t, z) = A(L) / (A(z) A(L-z)) (gamma_z * F_{L-z})(t) + A(L)/A(z) gamma_z(t)
                  + A(L)/A(L-z) F_{L-z}(t) - A(L)/A(z) F_z(-t)
    """
    if not (0.0 < z < p.L):
        raise DomainError("decomposition needs 0 < z < L; use propagate at the end faces")
    rest = p.L - z
    A_L, A_z, A_r = norm_const(p), norm_const(p, z), norm_const(p, rest)
    t = grid.times
    f_rest = _optimal_samples(p, rest, t)
    f_z_mirror = _optimal_samples(p, z, -t)
    pz = p.at_depth(z)
    half = grid.n - 1
    lags = grid.dt * np.arange(-half, half + 1)
    gamma_lags = gamma_on_grid(pz, lags)
    gamma_t = gamma_on_grid(pz, t)
    conv = convolve(Signal(grid, f_rest), Signal(TimeGrid(lags[0], grid.dt, lags.size), gamma_lags))
    conv_t = conv.samples[half : half + grid.n]
    values = (
        A_L / (A_z * A_r) * conv_t
        + A_L / A_z * gamma_t
        + A_L / A_r * f_rest
        - A_L / A_z * f_z_mirror
    )
    return Signal(grid, values)


@dataclass(frozen=True, eq=False)
class ExcitationProfile:
    """Atomic amplitude density ``c'(t, z)`` over depth at a fixed time."""

    z_grid: np.ndarray
    c_values: np.ndarray
    t: float = 0.0
    params: MediumParams | None = None

    def __post_init__(self):
        z = np.array(self.z_grid, dtype=float).reshape(-1)
        c = np.array(self.c_values, dtype=complex).reshape(-1)
        if z.size != c.size:
            raise DomainError("z_grid and c_values differ in length")
        if z.size > 1 and np.any(np.diff(z) <= 0):
            raise DomainError("z_grid must be strictly increasing")
        z.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "z_grid", z)
        object.__setattr__(self, "c_values", c)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.c_values)


def default_z_grid(p: MediumParams, n: int = 512, refine: int = 4) -> np.ndarray:
    """Uniform depth grid refined near the far face, where the profile dips."""
    base = np.linspace(0.0, p.L, n)
    depth = p.optical_depth
    if depth <= 0:
        return base
    layer = min(p.L, 3.0 * 2.0 * math.log(2.0) / math.sqrt(depth) * p.L)
    step = p.L / (n - 1) / refine
    fine = p.L - step * np.arange(int(math.ceil(layer / step)) + 1)
    fine = fine[fine >= 0.0]
    # drop refinement points that coincide with base points up to rounding
    near = np.abs(fine[:, None] - base[None, :]).min(axis=1) < 1e-9 * p.L
    return np.unique(np.concatenate([base, fine[~near]]))


def atomic_amplitude(
    input: Signal,
    p: MediumParams,
    z_grid=None,
    t: float = 0.0,
    method: str = "kernel",
) -> ExcitationProfile:
    """Amplitude density ``c'(t, z)`` over ``z_grid`` (default :func:`default_z_grid`).

    Methods:

    ``kernel``
        medium and atomic memory combined into ``exp(-tau/T2) J0(2 sqrt(b(z) tau))``
        and applied to the input once per depth.
    ``spectral``
        frequency integral of the input spectrum against ``H(w, z) i / (w + i/T2)``,
        with the periodic images of the sampled spectrum folded onto the band.
    ``derivative``
        ``sqrt(2 T2 / alpha) dF(t, z)/dz`` by central differences of :func:`field_at`.
    """
    z = default_z_grid(p) if z_grid is None else np.asarray(z_grid, dtype=float).reshape(-1)
    if z.size and (z.min() < 0 or z.max() > p.L * (1 + 1e-12)):
        raise DomainError("z_grid must lie in [0, L]")
    scale = math.sqrt(p.alpha / (2.0 * p.T2))
    if scale == 0.0:
        return ExcitationProfile(z, np.zeros(z.size, dtype=complex), t, p)
    if method == "kernel":
        values = _amplitude_kernel(input, p, z, t)
    elif method == "spectral":
        values = _amplitude_spectral(input, p, z, t)
    elif method == "derivative":
        values = _amplitude_derivative(input, p, z, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExcitationProfile(z, values, t, p)


def _amplitude_kernel(input: Signal, p: MediumParams, z: np.ndarray, t: float) -> np.ndarray:
    scale = math.sqrt(p.alpha / (2.0 * p.T2))
    lag = t - input.t
    mask = (lag >= 0) & (lag <= KERNEL_SPAN * p.T2)
    lag = lag[mask]
    f = input.samples[mask]
    weights = np.exp(-lag / p.T2) * input.dt
    weights[lag == 0] *= 0.5
    weighted = f * weights
    # |J0| <= 1, so samples far below the largest product cannot matter
    big = np.abs(weighted)
    keep = big > 1e-18 * big.max() if big.size else big > 0
    weighted, lag = weighted[keep], lag[keep]
    out = np.empty(z.size, dtype=complex)
    for i, zi in enumerate(z):
        b = p.alpha * zi / (2.0 * p.T2)
        out[i] = -scale * np.sum(weighted * special.j0(2.0 * np.sqrt(b * lag)))
    return out


def _amplitude_spectral(
    input: Signal, p: MediumParams, z: np.ndarray, t: float, periods: int = SPECTRAL_PERIODS
) -> np.ndarray:
    # The spectrum of the samples is periodic in w with period W = 2 pi / dt up to
    # the phase exp(i k W t_start); folding the kernel images back onto the band
    # keeps the slowly decaying i / (w + i/T2) tail that a jump in the input excites.
    scale = math.sqrt(p.alpha / (2.0 * p.T2))
    spec = forward_transform(input)
    w = spec.omega
    period = 2.0 * math.pi / input.dt
    base = np.exp(-1j * w * t) * spec.samples * (spec.dw / math.sqrt(2.0 * math.pi))
    out = np.zeros(z.size, dtype=complex)
    for k in range(-periods, periods + 1):
        images = w + period * k
        weight = base * (1j / (images + 1j / p.T2)) * np.exp(1j * period * k * (input.grid.t_start - t))
        for i, zi in enumerate(z):
            out[i] -= scale * np.sum(weight * transfer_thick(p, zi, images))
    return out


def _amplitude_derivative(input: Signal, p: MediumParams, z: np.ndarray, t: float) -> np.ndarray:
    scale = math.sqrt(2.0 * p.T2 / p.alpha)
    h = 1e-4 * p.L
    out = np.empty(z.size, dtype=complex)
    for i, zi in enumerate(z):
        lo, hi = max(zi - h, 0.0), min(zi + h, p.L)
        out[i] = scale * (field_at(input, p, hi, t) - field_at(input, p, lo, t)) / (hi - lo)
    return out


def atomic_amplitude_closed(p: MediumParams, z):
    """Large-depth closed form of ``c'(0, z)`` for the optimal input (textbook sign)."""
    depth = p.optical_depth
    plateau = norm_const(p) * math.sqrt(b_of(p, p.L)) / math.sqrt(p.L)
    z_arr = np.asarray(z, dtype=float)
    shape = 1.0 - np.exp(-p.alpha * (p.L - z_arr) / (2.0 * math.sqrt(depth))) / math.sqrt(math.pi)
    out = -plateau * shape
    return float(out) if np.ndim(z) == 0 else out


def field_at_zero_closed(p: MediumParams, z):
    """Large-depth closed form of ``F(0, z)`` for the optimal input."""
    A = norm_const(p)

    def one(zi):
        _check_z(p, zi)
        bz = b_of(p, zi)
        br = b_of(p, p.L - zi) if zi < p.L else 0.0
        damp = math.exp(-br * p.T2 / (1.0 + math.sqrt(p.alpha * zi)))
        return A * (-bz * g_of(p, zi) * damp - br / 2.0 + bz / 2.0)

    if np.ndim(z) == 0:
        return one(float(z))
    return np.array([one(float(v)) for v in np.asarray(z, dtype=float).reshape(-1)]).reshape(np.shape(z))


def efficiency(input: Signal, output: Signal, full_output: bool = False):
    """``E = [P_out(t > 0) - P_out(t < 0)] / P_in(t < 0)``.

    With ``full_output`` also returns the pieces and the plain retrieval ratio.
    """
    p_in = probability(input, -math.inf, 0.0)
    if p_in <= 0.0:
        raise DomainError("input carries no probability before t = 0; efficiency undefined")
    after = probability(output, 0.0, math.inf)
    before = probability(output, -math.inf, 0.0)
    value = (after - before) / p_in
    if full_output:
        return value, {
            "retrieved_after_zero": after,
            "leak_before_zero": before,
            "input_probability": p_in,
            "retrieval_ratio": after / p_in,
        }
    return value


def efficiency_asymptotic(p: MediumParams, full_output: bool = False):
    """Square-root law ``1 - 4 / sqrt(pi alpha L)``; flagged out of regime below ``16/pi``."""
    depth = p.optical_depth
    if depth <= 0:
        raise DomainError("optical depth must be positive")
    value = 1.0 - 4.0 / math.sqrt(math.pi * depth)
    if full_output:
        return value, {"out_of_regime": depth <= 16.0 / math.pi}
    return value


def absorption_probability_closed(p: MediumParams) -> float:
    """``1 - 2 / sqrt(pi alpha L) + 1 / (pi sqrt(alpha L))``."""
    d = p.optical_depth
    return 1.0 - 2.0 / math.sqrt(math.pi * d) + 1.0 / (math.pi * math.sqrt(d))


def absorption_probability(profile: ExcitationProfile, full_output: bool = False):
    """``integral |c'|^2 dz`` over the profile by the trapezoid rule."""
    z, c = profile.z_grid, profile.c_values
    value = float(trapezoid(np.abs(c) ** 2, z)) if z.size > 1 else 0.0
    if full_output:
        closed = None
        if profile.params is not None and profile.params.optical_depth > 0:
            closed = absorption_probability_closed(profile.params)
        return value, {"closed_form": closed}
    return value


def first_burst_fraction(output: Signal, full_output: bool = False):
    """Share of the ``t > 0`` probability carried by the first lobe after the peak."""
    total = probability(output, 0.0, math.inf)
    info = {"rule": BURST_RULE, "no_crossing": True, "t1": math.inf}
    if total <= 0.0:
        raise DomainError("output has no probability at t > 0")
    t = output.t
    pos = np.nonzero(t >= 0.0)[0]
    peak = pos[np.argmax(np.abs(output.samples[pos]))]
    phase = output.samples[peak] / abs(output.samples[peak])
    proj = (output.samples[peak:] * np.conj(phase)).real
    cross = np.nonzero(proj[1:] <= 0.0)[0]
    if cross.size == 0:
        return (1.0, info) if full_output else 1.0
    k = cross[0]
    y0, y1 = proj[k], proj[k + 1]
    t0 = t[peak + k]
    t1 = t0 + output.dt * y0 / (y0 - y1) if y0 != y1 else t0
    value = probability(output, 0.0, t1) / total
    info.update(no_crossing=False, t1=float(t1))
    return (value, info) if full_output else value


def _layer_width(z: np.ndarray, m: np.ndarray, plateau: float) -> float:
    dip = plateau - m[-1]
    if plateau <= 0 or abs(dip) <= 1e-12 * plateau:
        return 0.0
    excess = np.abs(m - plateau) - 0.5 * abs(dip)
    k = z.size - 1
    while k > 0 and excess[k] > 0:
        k -= 1
    if excess[k] > 0:
        return float(z[-1] - z[0])
    if k == z.size - 1:
        return 0.0
    # linear interpolation of the crossing between k and k + 1
    e0, e1 = excess[k], excess[k + 1]
    zc = z[k] + (z[k + 1] - z[k]) * (-e0) / (e1 - e0)
    return float(z[-1] - zc)


def flatness_metrics(profile: ExcitationProfile, plateau_rule: str = "self_consistent") -> tuple[float, float]:
    """Coefficient of variation of ``|c'|`` on the plateau and width of the far-end layer.

    The layer is where ``|c'|`` departs from the plateau level by more than
    half the far-end dip; the plateau level is the median of ``|c'|`` outside
    the layer.  ``self_consistent`` iterates these two definitions to a fixed
    point starting from the near half, ``near_half`` stops after the first
    step (median over the near half of the sample).
    """
    z, m = profile.z_grid, profile.magnitude
    if z.size < 2:
        return 0.0, 0.0
    z0, z1 = z[0], z[-1]
    if plateau_rule not in ("self_consistent", "near_half"):
        raise ValueError(f"unknown plateau rule {plateau_rule!r}")
    width = 0.5 * (z1 - z0)
    seen = set()
    for _ in range(100):
        region = m[z <= z1 - width + 1e-12 * (z1 - z0)]
        plateau = float(np.median(region if region.size else m))
        new = _layer_width(z, m, plateau)
        if plateau_rule == "near_half" or new == width or new in seen:
            width = new
            break
        seen.add(new)
        width = new
    keep = z <= z1 - width + 1e-12 * (z1 - z0)
    vals = m[keep] if np.count_nonzero(keep) else m
    mean = float(np.mean(vals))
    cv = float(np.std(vals) / mean) if mean > 0 else 0.0
    return cv, width


@dataclass
class MetricsReport:
    """Storage metrics of one run; asymptotic forms are reported beside the numerics."""

    efficiency: float
    efficiency_asymptotic: float
    leak_before_zero: float
    retrieved_after_zero: float
    p_abs: float
    p_abs_closed: float
    first_burst_fraction: float
    peak_density: float
    peak_time: float
    flatness_cv: float
    boundary_layer_width: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    input: Signal
    output: Signal
    profile: ExcitationProfile
    report: MetricsReport


def simulate(
    input: Signal,
    p: MediumParams,
    z_grid=None,
    method: str = "kernel",
) -> SimulationResult:
    """Propagate ``input`` through the absorber and evaluate every metric."""
    output = propagate(input, p, p.L, method=method)
    profile = atomic_amplitude(input, p, z_grid, t=0.0)
    eff, parts = efficiency(input, output, full_output=True)
    eff_asym, asym_info = efficiency_asymptotic(p, full_output=True)
    burst, burst_info = first_burst_fraction(output, full_output=True)
    cv, width = flatness_metrics(profile)
    pos = output.t > 0
    dens = np.abs(output.samples[pos]) ** 2
    k = int(np.argmax(dens))
    report = MetricsReport(
        efficiency=eff,
        efficiency_asymptotic=eff_asym,
        leak_before_zero=parts["leak_before_zero"],
        retrieved_after_zero=parts["retrieved_after_zero"],
        p_abs=absorption_probability(profile),
        p_abs_closed=absorption_probability_closed(p),
        first_burst_fraction=burst,
        peak_density=float(dens[k]),
        peak_time=float(output.t[pos][k]),
        flatness_cv=cv,
        boundary_layer_width=width,
        metadata={
            "burst_rule": BURST_RULE,
            "burst_no_crossing": burst_info["no_crossing"],
            "efficiency_out_of_regime": asym_info["out_of_regime"],
            "retrieval_ratio": parts["retrieval_ratio"],
            "input_probability": parts["input_probability"],
            "propagation_method": method,
        },
    )
    return SimulationResult(input, output, profile, report)
