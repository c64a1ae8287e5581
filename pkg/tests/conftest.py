"""Shared, lazily computed pipelines; the large-depth runs take seconds each."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from photon_memory import MediumParams, OptimalPulseSpec, build_optimal, propagate
from photon_memory.propagation_metrics import atomic_amplitude, default_z_grid


def rel_l2(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


class Cases:
    @functools.lru_cache(maxsize=None)
    def medium(self, alpha_L: float) -> MediumParams:
        return MediumParams.from_optical_depth(alpha_L)

    @functools.lru_cache(maxsize=None)
    def spec(self, alpha_L: float) -> OptimalPulseSpec:
        return OptimalPulseSpec(self.medium(alpha_L))

    @functools.lru_cache(maxsize=None)
    def pulse(self, alpha_L: float):
        return build_optimal(self.spec(alpha_L))

    @functools.lru_cache(maxsize=None)
    def output(self, alpha_L: float):
        return propagate(self.pulse(alpha_L), self.medium(alpha_L), 1.0)

    @functools.lru_cache(maxsize=None)
    def profile(self, alpha_L: float):
        p = self.medium(alpha_L)
        return atomic_amplitude(self.pulse(alpha_L), p, default_z_grid(p), t=0.0)


_CASES = Cases()


@pytest.fixture(scope="session")
def cases() -> Cases:
    return _CASES
