import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from photon_memory.errors import EdgeLeakageWarning, EmptyWindowWarning, GridError
from photon_memory.signal_core import (
    Signal,
    TimeGrid,
    convolve,
    convolve_direct,
    default_grid,
    forward_transform,
    inverse_transform,
    probability,
    time_reverse,
)


def gaussian(grid, centre=0.0, width=1.0, carrier=0.0):
    return Signal.from_function(grid, lambda t: np.exp(-((t - centre) ** 2) / (2 * width**2) + 1j * carrier * t))


def random_signal(rng, n, dt=0.05, t_start=-3.0):
    return Signal(TimeGrid(t_start, dt, n), rng.normal(size=n) + 1j * rng.normal(size=n))


class TestTimeGrid:
    def test_points_are_exact_multiples(self):
        g = TimeGrid(-1.5, 0.25, 8)
        assert np.array_equal(g.times, -1.5 + 0.25 * np.arange(8))
        assert g.t_end == -1.5 + 0.25 * 7

    @pytest.mark.parametrize("dt,n", [(0.0, 4), (-1.0, 4), (0.1, 1), (math.nan, 4)])
    def test_invalid(self, dt, n):
        with pytest.raises(GridError):
            TimeGrid(0.0, dt, n)

    def test_centered_grid_straddles_origin(self):
        g = TimeGrid.centered(0.1, 16)
        t = g.times
        assert t[7] == pytest.approx(-0.05)
        assert t[8] == pytest.approx(0.05)
        assert 0.0 not in t

    @pytest.mark.parametrize("alpha_L", [0.5, 1, 10, 100, 1000])
    def test_default_grid(self, alpha_L):
        g = default_grid(alpha_L)
        assert g.n & (g.n - 1) == 0
        assert g.t_start <= -20.0 and g.t_end >= 20.0
        # several samples inside the first lobe of the medium response
        assert 7.34 / max(alpha_L, 1) / g.dt >= 16


class TestSignal:
    def test_length_must_match(self):
        with pytest.raises(GridError):
            Signal(TimeGrid(0, 1, 4), np.ones(3))

    def test_samples_immutable(self):
        s = Signal(TimeGrid(0, 1, 4), np.ones(4))
        with pytest.raises(ValueError):
            s.samples[0] = 2

    def test_from_arrays_uniform(self):
        t = np.linspace(-1, 1, 11)
        s = Signal.from_arrays(t, t**2)
        assert s.dt == pytest.approx(0.2)
        assert s.grid.t_start == -1.0

    def test_from_arrays_rejects_nonuniform(self):
        t = np.array([0.0, 0.1, 0.25, 0.3])
        with pytest.raises(GridError):
            Signal.from_arrays(t, np.ones(4))

    def test_arithmetic_requires_same_grid(self):
        a = Signal(TimeGrid(0, 1, 4), np.ones(4))
        b = Signal(TimeGrid(0.5, 1, 4), np.ones(4))
        with pytest.raises(GridError):
            a + b
        assert np.allclose((a - a).samples, 0)
        assert np.allclose((a * 2.0).samples, 2)
        assert np.allclose((-a).samples, -1)


class TestTransforms:
    def test_one_sided_exponential(self):
        # sqrt(2) theta(-t) e^t  ->  pi^-1/2 / (1 + i w) with the exp(+i w t) kernel
        g = TimeGrid.centered(1e-3, 1 << 16)
        s = Signal.from_function(g, lambda t: np.where(t < 0, math.sqrt(2) * np.exp(t), 0.0))
        sp = forward_transform(s)
        w = sp.omega
        band = np.abs(w) <= 5
        exact = 1 / math.sqrt(math.pi) / (1 + 1j * w[band])
        assert np.max(np.abs(sp.samples[band] - exact)) < 1e-4
        centre = np.argmin(np.abs(w))
        assert w[centre] == 0.0
        assert abs(sp.samples[centre]) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-6)

    def test_sign_convention_lower_half_plane(self):
        # the spectrum above continues to 1/(1 + i w): pole at w = +i only,
        # so along w = -i y its magnitude decays
        g = TimeGrid.centered(1e-3, 1 << 16)
        s = Signal.from_function(g, lambda t: np.where(t < 0, math.sqrt(2) * np.exp(t), 0.0))
        sp = forward_transform(s)
        y = np.array([0.0, 1.0, 4.0, 20.0])
        dt_sum = np.array([np.sum(s.samples * np.exp(1j * (-1j * yy) * s.t)) * s.dt for yy in y]) / math.sqrt(2 * math.pi)
        assert np.all(np.diff(np.abs(dt_sum)) < 0)
        centre = np.argmin(np.abs(sp.omega))
        assert dt_sum[0] == pytest.approx(sp.samples[centre], rel=1e-10)

    def test_gaussian_pair(self):
        g = TimeGrid.centered(0.01, 4096)
        sp = forward_transform(gaussian(g))
        assert np.allclose(sp.samples, np.exp(-sp.omega**2 / 2), atol=1e-12)

    def test_zero_signal(self):
        g = TimeGrid.centered(0.1, 64)
        sp = forward_transform(Signal.zeros(g))
        assert np.all(sp.samples == 0)

    def test_round_trip(self):
        g = TimeGrid(-7.3, 0.02, 1024)
        s = gaussian(g, centre=-1.0, carrier=3.0)
        back = inverse_transform(forward_transform(s))
        assert back.grid.is_compatible(g)
        assert np.linalg.norm(back.samples - s.samples) / np.linalg.norm(s.samples) < 1e-10

    def test_parseval(self):
        g = TimeGrid(-10.0, 0.01, 2048)
        s = gaussian(g, centre=0.7, width=0.8, carrier=-2.0)
        sp = forward_transform(s)
        assert sp.norm() ** 2 == pytest.approx(s.norm() ** 2, rel=1e-8)

    def test_band_limited_constant_spectrum_is_sinc(self):
        g = TimeGrid.centered(0.05, 1024)
        sp = forward_transform(Signal.zeros(g))
        band = 4.0
        box = sp.with_samples((np.abs(sp.omega) <= band).astype(complex))
        s = inverse_transform(box)
        # first zero of the sinc at pi / W
        t = s.t
        centre = np.abs(t) < 0.2
        assert np.all(s.samples.real[centre] > 0)
        zero = math.pi / band
        near = np.argmin(np.abs(t - zero))
        assert abs(s.samples[near]) < 0.05 * np.max(np.abs(s.samples))

    def test_edge_warning(self):
        g = TimeGrid(0.0, 0.1, 64)
        with pytest.warns(EdgeLeakageWarning):
            forward_transform(Signal(g, np.ones(64)))


class TestConvolve:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(7)
        a = random_signal(rng, 512)
        k = random_signal(rng, 512, t_start=0.3)
        fast = convolve(a, k)
        slow = convolve_direct(a, k)
        assert fast.grid.is_compatible(slow.grid)
        assert np.linalg.norm(fast.samples - slow.samples) / np.linalg.norm(slow.samples) <= 1e-9

    def test_identity_kernel(self):
        rng = np.random.default_rng(1)
        a = random_signal(rng, 100, dt=0.1)
        delta = Signal(TimeGrid(0.0, 0.1, 2), [1 / 0.1, 0.0])
        out = convolve(a, delta)
        assert np.allclose(out.samples[: a.grid.n], a.samples)
        assert abs(out.samples[-1]) < 1e-12
        assert out.grid.t_start == a.grid.t_start

    def test_rectangles_make_triangle(self):
        w, dt = 2.0, 0.01
        n = int(round(w / dt))
        rect = Signal(TimeGrid(0.0, dt, n), np.ones(n))
        tri = convolve(rect, rect)
        assert tri.peak() == pytest.approx(w, rel=1e-2)
        assert tri.grid.n == 2 * n - 1

    def test_mismatched_step(self):
        with pytest.raises(GridError):
            convolve(Signal(TimeGrid(0, 0.1, 4), np.ones(4)), Signal(TimeGrid(0, 0.2, 4), np.ones(4)))

    @settings(max_examples=25, deadline=None)
    @given(
        arrays(np.float64, 256, elements=st.floats(-1, 1)),
        arrays(np.float64, 256, elements=st.floats(-1, 1)),
        st.floats(-2, 2),
    )
    def test_linear_and_commutative(self, x, y, c):
        g = TimeGrid(-1.0, 0.05, 256)
        h = TimeGrid(0.5, 0.05, 256)
        sx, sy, k = Signal(g, x), Signal(g, y), Signal(h, y[::-1])
        lhs = convolve(sx + sy * c, k).samples
        rhs = convolve(sx, k).samples + c * convolve(sy, k).samples
        assert np.allclose(lhs, rhs, atol=1e-10)
        ab = convolve(sx, k)
        ba = convolve(k, sx)
        assert ab.grid.t_start == pytest.approx(ba.grid.t_start)
        assert np.allclose(ab.samples, ba.samples, atol=1e-10)


class TestProbability:
    def test_zero_signal(self):
        assert probability(Signal.zeros(TimeGrid.centered(0.1, 32))) == 0.0

    def test_trapezoid_end_weights(self):
        g = TimeGrid(0.0, 0.5, 5)
        s = Signal(g, np.ones(5))
        value, info = probability(s, full_output=True)
        assert value == pytest.approx(2.0)
        assert info["snap_distance"] == 0.0

    def test_additivity(self):
        rng = np.random.default_rng(3)
        s = random_signal(rng, 300, dt=0.03, t_start=-4.5)
        total = probability(s)
        for split in [-2.0, 0.0, 0.015, 1.2345]:
            assert probability(s, -math.inf, split) + probability(s, split, math.inf) == pytest.approx(total, rel=1e-12)

    def test_snap_distance_reported(self):
        g = TimeGrid(0.0, 1.0, 10)
        _, info = probability(Signal(g, np.ones(10)), 0.0, 3.3, full_output=True)
        assert info["snap_distance"] == pytest.approx(0.2)

    def test_empty_window(self):
        s = Signal(TimeGrid(0.0, 1.0, 4), np.ones(4))
        with pytest.warns(EmptyWindowWarning):
            value, info = probability(s, 10.0, 20.0, full_output=True)
        assert value == 0.0 and info["empty"]


class TestTimeReverse:
    def test_exponential_mirrors(self):
        g = TimeGrid.centered(0.01, 2000)
        s = Signal.from_function(g, lambda t: np.where(t < 0, np.exp(t), 0.0))
        r = time_reverse(s)
        expected = np.where(r.t > 0, np.exp(-r.t), 0.0)
        assert np.allclose(r.samples, expected)

    def test_involution_and_probability(self):
        rng = np.random.default_rng(5)
        s = random_signal(rng, 77)
        r = time_reverse(s)
        rr = time_reverse(r)
        assert rr.grid.t_start == pytest.approx(s.grid.t_start)
        assert np.array_equal(rr.samples, s.samples)
        assert probability(r) == pytest.approx(probability(s))


def test_no_warning_on_decayed_signal():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        forward_transform(gaussian(TimeGrid.centered(0.01, 4096)))
