"""Shared oracles for the test suite.

The quadrature oracle below integrates the min-distance integrand directly
against the density, keeping it independent of the partial-moment closed
forms used by the library paths it checks.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from quantchar import measures as ms


def qerr_power_quad_oracle(mu, grid, p):
    """e_{N,p}^p by direct adaptive quadrature of min_i |t - x_i|^p."""
    xs = np.unique(np.asarray(grid, dtype=float).reshape(-1))
    if isinstance(mu, ms.Dirac):
        return float(np.min(np.abs(xs - mu.c)) ** p)
    lo, hi = ms._integration_limits(mu)
    kinks = [float(k) for k in 0.5 * (xs[:-1] + xs[1:])]

    def integrand(t):
        return float(np.min(np.abs(t - xs)) ** p * ms.density_1d(mu, t))

    pieces = [lo] + [k for k in kinks if lo < k < hi] + [hi]
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        val, _ = quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12, limit=300)
        total += val
    return total


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240405))
