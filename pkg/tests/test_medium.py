import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from photon_memory.errors import DomainError, SingularMediumError, ThinSliceWarning
from photon_memory.medium import (
    Kernel,
    MediumParams,
    alpha_from_geometry,
    b_of,
    g_of,
    g_of_depth,
    geometric_factor,
    impulse_response_regular,
    norm_const,
    regular_kernel,
    transfer_thick,
    transfer_thin,
)
from photon_memory.signal_core import Signal, TimeGrid, forward_transform, inverse_transform

mpmath.mp.dps = 40


def depth(d, T2=1.0):
    return MediumParams.from_optical_depth(d, T2)


class TestParams:
    def test_derived(self):
        p = MediumParams(alpha=20.0, L=0.5, T2=2.0)
        assert p.T1 == 1.0
        assert p.optical_depth == 10.0
        assert p.D == 10.0
        assert p.at_depth(0.25).optical_depth == 5.0

    @pytest.mark.parametrize("kw", [dict(alpha=-1, L=1), dict(alpha=1, L=0), dict(alpha=1, L=1, T2=0), dict(alpha=math.inf, L=1)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            MediumParams(**kw)


class TestScalars:
    def test_b(self):
        p = depth(10)
        assert b_of(p, 0.0) == 0.0
        assert b_of(p, 1.0) == 5.0
        assert b_of(p, 0.3) + b_of(p, 0.5) == pytest.approx(b_of(p, 0.8))
        with pytest.raises(DomainError):
            b_of(p, 1.5)
        with pytest.raises(DomainError):
            b_of(p, -0.1)

    def test_g_reference(self):
        assert g_of_depth(0.0) == 1.0
        assert g_of(depth(100), 1.0) == pytest.approx(0.1125, abs=2e-4)
        exact = mpmath.exp(-50) * (mpmath.besseli(0, 50) + mpmath.besseli(1, 50))
        assert g_of_depth(100.0) == pytest.approx(float(exact), rel=1e-13)

    def test_g_monotone_and_asymptotic(self):
        d = np.logspace(-3, 4, 200)
        g = np.array([g_of_depth(v) for v in d])
        assert np.all(np.diff(g) < 0)
        assert np.all((g > 0) & (g <= 1))
        assert g_of_depth(1000.0) == pytest.approx(2 / math.sqrt(math.pi * 1000), rel=1e-2)

    def test_g_negative(self):
        with pytest.raises(DomainError):
            g_of(depth(1), -0.5)

    @pytest.mark.parametrize("d", [1e-6, 1e-3, 0.5, 10, 100, 1000])
    def test_norm_const_identity(self, d):
        p = depth(d)
        A = norm_const(p)
        exact = 1 - mpmath.exp(-mpmath.mpf(d) / 2) * (mpmath.besseli(0, mpmath.mpf(d) / 2) + mpmath.besseli(1, mpmath.mpf(d) / 2))
        assert A**2 * b_of(p, 1.0) * float(exact) == pytest.approx(1.0, rel=1e-10)

    def test_norm_const_reference(self):
        assert norm_const(depth(100)) == pytest.approx(0.1501, abs=2e-4)

    def test_norm_const_thin_divergence(self):
        # 1 - g ~ D/4, so A^2 b ~ 4/D
        p = depth(1e-4)
        assert norm_const(p) ** 2 * b_of(p, 1.0) == pytest.approx(4 / 1e-4, rel=1e-4)

    def test_norm_const_singular(self):
        with pytest.raises(SingularMediumError):
            norm_const(MediumParams(0.0, 1.0))

    @pytest.mark.parametrize("d", [0.3, 10.0, 100.0])
    def test_kernel_energy(self, d):
        # integral Phi^2 dt = b (1 - g), which makes A the normalisation
        p = depth(d)
        b = b_of(p, 1.0)
        f = lambda t: impulse_response_regular(p, 1.0, t) ** 2
        total = sum(quad(f, a, a + 1.0, limit=200, epsabs=0, epsrel=1e-12)[0] for a in range(60))
        assert total == pytest.approx(b * (1 - g_of(p, 1.0)), rel=1e-8)


class TestTransfer:
    def test_thin_values(self):
        p = depth(1.0)
        assert transfer_thin(p, 0.0, 3.0) == 1.0
        assert transfer_thin(p, 0.05, 0.0) == pytest.approx(1 - 0.05 / 2)
        assert abs(transfer_thin(p, 0.05, 1e9)) == pytest.approx(1.0, abs=1e-9)

    def test_thin_warning(self):
        with pytest.warns(ThinSliceWarning):
            transfer_thin(depth(10), 0.5, 0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            transfer_thin(depth(1), 0.05, 0.0)

    def test_thick_values(self):
        p = depth(10)
        assert transfer_thick(p, 1.0, 0.0) == pytest.approx(6.7379e-3, rel=1e-4)
        assert transfer_thick(p, 0.0, 2.0) == 1.0
        with pytest.raises(DomainError):
            transfer_thick(p, 1.2, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1e6, 1e6), st.floats(0, 1), st.floats(1e-3, 1e3))
    def test_passive(self, w, z, d):
        assert abs(transfer_thick(depth(d), z, w)) <= 1.0 + 1e-15

    def test_semigroup(self):
        p = depth(50)
        w = np.linspace(-30, 30, 301)
        assert np.allclose(transfer_thick(p, 0.3, w) * transfer_thick(p, 0.5, w), transfer_thick(p, 0.8, w), rtol=1e-13, atol=1e-300)

    def test_slice_limit_first_order(self):
        p = depth(10)
        w = np.linspace(-20, 20, 801)
        exact = transfer_thick(p, 1.0, w)
        errs = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ThinSliceWarning)
            for n in (100, 1000, 10000):
                errs.append(np.max(np.abs(transfer_thin(p, 1.0 / n, w) ** n - exact)))
        slope = np.polyfit(np.log10([100, 1000, 10000]), np.log10(errs), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.05)


class TestImpulseResponse:
    def test_causal_and_theta_convention(self):
        p = depth(10)
        assert impulse_response_regular(p, 1.0, -0.1) == 0.0
        assert impulse_response_regular(p, 1.0, 0.0) == 2.5
        assert impulse_response_regular(p, 1.0, 1e-14) == pytest.approx(5.0)

    @pytest.mark.parametrize("z", [0.1, 0.5, 1.0])
    def test_first_zero(self, z):
        from scipy.optimize import brentq

        p = depth(30)
        k = Kernel(p, z)
        expected = 7.3410 / (30 * z)
        root = brentq(lambda t: impulse_response_regular(p, z, t), 0.5 * expected, 1.5 * expected, xtol=1e-15)
        assert root == pytest.approx(expected, rel=1e-3)
        assert k.first_zero() == pytest.approx(root, rel=1e-10)

    @pytest.mark.parametrize("d", [1.0, 10.0, 100.0])
    def test_fourier_pair(self, d):
        # (H - 1) has a 1/w tail from the jump of Phi at t = 0; subtract the
        # transform of b exp(-t) theta(t), which carries the same jump, and add it back in time
        p = depth(d)
        b = b_of(p, 1.0)
        g = TimeGrid.centered(1e-3, 1 << 17)
        sp = forward_transform(Signal.zeros(g))
        w = sp.omega
        pole = b * 1j / (w + 1j)
        smooth = (transfer_thick(p, 1.0, w) - 1.0 + pole) / math.sqrt(2 * math.pi)
        t = g.times
        recovered = inverse_transform(sp.with_samples(smooth)).samples.real - np.where(t > 0, b * np.exp(-t), 0.0)
        window = (t > 0) & (t <= 10)
        err = np.max(np.abs(recovered[window] + impulse_response_regular(p, 1.0, t[window])))
        assert err <= 1e-3 * b

    @pytest.mark.parametrize("d", [1.0, 10.0, 100.0])
    def test_area(self, d):
        p = depth(d)
        f = lambda t: impulse_response_regular(p, 1.0, t)
        area = sum(quad(f, a, a + 0.5, limit=400, epsabs=1e-16, epsrel=1e-11)[0] for a in np.arange(0, 60, 0.5))
        assert area == pytest.approx(1 - math.exp(-d / 2), rel=1e-6)

    def test_regular_kernel_samples(self):
        p = depth(4)
        k = regular_kernel(p, 1.0, 0.01, 50)
        assert k.grid.t_start == 0.0
        assert k.samples[0] == 1.0
        assert k.samples[3].real == pytest.approx(impulse_response_regular(p, 1.0, 0.03))

    def test_kernel_depth_checked(self):
        with pytest.raises(DomainError):
            Kernel(depth(1), 2.0)
        k = Kernel(depth(10), 0.5)
        assert k.b == 2.5
        assert k.transfer(0.0) == pytest.approx(math.exp(-2.5))
        assert k.regular(0.0) == 1.25


class TestGeometry:
    def test_alpha(self):
        assert alpha_from_geometry(0.01, 250) == pytest.approx(10.0)
        with pytest.raises(DomainError):
            alpha_from_geometry(0.0, 1.0)

    def test_mu(self):
        lam, S = 7.8e-7, 1e-10
        mu = geometric_factor(lam, S)
        assert mu * S == pytest.approx(3 * lam**2 / (8 * math.pi))
        assert geometric_factor(lam, 2 * S) == pytest.approx(mu / 2)
        with pytest.raises(DomainError):
            geometric_factor(-1.0, S)
