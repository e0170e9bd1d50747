"""Reconstruction of a measure from its quantization error function.

Every operator here consumes only an :class:`EFunctionHandle` (an opaque
evaluator of ``x -> e_{N,p}(mu, x)``) and never inspects the measure
itself, so passing tests genuinely certify that the error function alone
determines the quantity being recovered.

Probability outputs are clamped to [0, 1] after estimation; each clamp is
logged, never silent.  Handles backed by Monte Carlo pools are frozen at
construction and thread-safe to share.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad, quad

from . import measures as ms
from . import quanterror as qe
from .geometry import (
    EUCLIDEAN,
    NormSpec,
    NoCoveringConstructionError,
    as_grid,
    bounded_cell_grid_euclidean,
    cell_radius,
    covering_grid,
    lr_norm,
)

__all__ = [
    "EFunctionHandle",
    "MollifierSpec",
    "UnboundedCellError",
    "EvaluatorInconsistencyError",
    "efunction",
    "make_mollifier",
    "mollifier_phi",
    "mollified_density",
    "cdf_from_e11",
    "survival_from_e22",
    "reduce_even_p",
]

log = logging.getLogger(__name__)


class UnboundedCellError(ValueError):
    """The origin cell of the requested mollifier grid is not bounded."""


class EvaluatorInconsistencyError(ArithmeticError):
    """An e-function evaluator returned values violating a sure inequality."""


@dataclass(frozen=True)
class EFunctionHandle:
    """Evaluator of one measure's error function at a fixed level and order.

    ``power(grid)`` returns e_{N,p}^p; calling the handle returns e_{N,p}.
    Deterministic for a fixed construction.
    """

    n_points: int
    p: float
    dim: int
    norm: NormSpec
    power: object  # callable grid -> e^p

    def pth_power(self, grid) -> float:
        g = as_grid(grid, self.dim)
        if g.shape[0] != self.n_points:
            raise ValueError(f"handle expects {self.n_points}-point grids, got {g.shape[0]}")
        return float(self.power(g))

    def __call__(self, grid) -> float:
        return self.pth_power(grid) ** (1.0 / self.p)


def efunction(
    mu: ms.Measure,
    N: int,
    p: float,
    norm: NormSpec = EUCLIDEAN,
    mc_samples: int | None = None,
    seed: int | None = None,
) -> EFunctionHandle:
    """Build the e_{N,p} evaluator for ``mu``.

    Exact for discrete measures and analytic 1D families (closed forms or
    per-cell quadrature); anything else is frozen once into a common
    random number pool of ``mc_samples`` draws.
    """
    d = ms.dimension(mu)
    if isinstance(mu, ms.DiscreteMeasure):
        power = lambda g: qe.qerr_power_discrete(mu, g, p, norm)
    elif isinstance(mu, (ms.Dirac, ms.Uniform, ms.Normal, ms.LogNormal)):
        try:
            qe.qerr_power_analytic_1d(mu, [[0.0]], p)
        except qe.McFallbackRequired:
            raise
        power = lambda g: qe.qerr_power_analytic_1d(mu, g, p)
    else:
        if mc_samples is None or seed is None:
            raise ValueError("sampler-backed handles require mc_samples and seed")
        pool = ms.DiscreteMeasure(
            atoms=ms.sample(mu, mc_samples, seed),
            weights=np.full(mc_samples, 1.0 / mc_samples),
        )
        power = lambda g: qe.qerr_power_discrete(pool, g, p, norm)
    return EFunctionHandle(n_points=N, p=float(p), dim=d, norm=norm, power=power)


# ---------------------------------------------------------------------------
# Mollifier construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MollifierSpec:
    """Grid-based approximate identity data.

    ``base_grid`` is {0, a_1, ..., a_{N-1}} with a bounded origin cell;
    ``c_phi`` is the total mass of the raw kernel, computed by adaptive
    quadrature for d <= 2 and Monte Carlo (with reported standard error)
    above.  ``c_phi`` does not depend on ``epsilon``.
    """

    base_grid: np.ndarray
    p: float
    norm: NormSpec
    c_phi: float
    epsilon: float
    origin_cell_radius: float
    c_phi_std_error: float = 0.0


def mollifier_phi(base_grid, p: float, norm: NormSpec, xi) -> np.ndarray:
    """Raw kernel min_{a != 0} |xi - a|^p - min_{a} |xi - a|^p (>= 0)."""
    g = as_grid(base_grid)
    x = np.atleast_2d(np.asarray(xi, dtype=float))
    if x.shape[1] != g.shape[1]:
        x = x.reshape(-1, g.shape[1])
    d_all = lr_norm(x[:, None, :] - g[None, :, :], norm, axis=2)
    without0 = d_all[:, 1:].min(axis=1)
    return np.maximum(without0**p - d_all.min(axis=1) ** p, 0.0)


def make_mollifier(d: int, p: float, norm: NormSpec = EUCLIDEAN, epsilon: float = 0.1, mc_budget: int = 200_000) -> MollifierSpec:
    """Build a mollifier grid and normalizing constant for (d, norm, p).

    The grid is {0} plus a sphere covering when one is constructible,
    falling back to the centered-simplex construction for the Euclidean
    norm.  Quadrature tolerance for the mass is 1e-8 (d <= 2).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    try:
        centers = covering_grid(d, norm)
        grid = np.concatenate([np.zeros((1, d)), centers], axis=0)
    except NoCoveringConstructionError:
        if norm.r != 2.0:
            raise
        grid = bounded_cell_grid_euclidean(d, 1.0)
    radius = cell_radius(grid, 0, norm, directions=512, seed=20170811)
    if not math.isfinite(radius):
        raise UnboundedCellError("origin cell of the mollifier grid is unbounded")
    R = radius * (1.0 + 1e-6) + 1e-12
    se = 0.0
    if d == 1:
        c_phi, _ = quad(
            lambda t: float(mollifier_phi(grid, p, norm, [[t]])[0]),
            -R,
            R,
            epsabs=1e-10,
            epsrel=1e-10,
            limit=300,
        )
    elif d == 2:
        c_phi, _ = dblquad(
            lambda y, x: float(mollifier_phi(grid, p, norm, [[x, y]])[0]),
            -R,
            R,
            -R,
            R,
            epsabs=1e-8,
            epsrel=1e-8,
        )
    else:
        u = ms.uniform_stream(20170811, 0, mc_budget, per_sample=d)
        pts = -R + 2.0 * R * u
        vals = mollifier_phi(grid, p, norm, pts)
        vol = (2.0 * R) ** d
        c_phi = float(vals.mean()) * vol
        se = float(vals.std(ddof=1)) / math.sqrt(mc_budget) * vol
    if c_phi <= 0.0:
        raise EvaluatorInconsistencyError("kernel mass must be positive")
    return MollifierSpec(
        base_grid=grid,
        p=float(p),
        norm=norm,
        c_phi=float(c_phi),
        epsilon=float(epsilon),
        origin_cell_radius=float(radius),
        c_phi_std_error=se,
    )


def mollified_density(
    handle: EFunctionHandle,
    spec: MollifierSpec,
    x,
    neg_tol: float | None = None,
) -> float:
    """Kernel-smoothed density of mu at ``x`` from its error function alone.

    Evaluates (e^p(mu, xt) - e^p(mu, xt0)) / (C_phi eps^(d+p)) where ``xt``
    repeats the first shifted center and ``xt0`` restores the center ``x``
    itself, exactly the two tuples whose difference integrates the scaled
    kernel against mu.  A negative value beyond ``neg_tol`` signals an
    inconsistent evaluator; small negatives are clamped to 0 and logged.
    """
    g = spec.base_grid
    N, d = g.shape
    if handle.n_points != N:
        raise ValueError(f"handle level {handle.n_points} != mollifier grid size {N}")
    if handle.p != spec.p:
        raise ValueError("handle and mollifier disagree on p")
    x = np.asarray(x, dtype=float).reshape(1, d)
    shifted = x - spec.epsilon * g[1:]  # N-1 points
    xt = np.concatenate([shifted[:1], shifted], axis=0)
    xt0 = np.concatenate([x, shifted], axis=0)
    scale = spec.c_phi * spec.epsilon ** (d + spec.p)
    val = (handle.pth_power(xt) - handle.pth_power(xt0)) / scale
    if neg_tol is None:
        neg_tol = 1e-9 / scale
    if val < -neg_tol:
        raise EvaluatorInconsistencyError(
            f"mollified density {val} below -{neg_tol}: evaluator violates e(xt) >= e(xt0)"
        )
    if val < 0.0:
        log.info("clamped mollified density %.3e to 0 at x=%s", val, x.ravel().tolist())
        return 0.0
    return float(val)


# ---------------------------------------------------------------------------
# One-dimensional and projective reconstructions
# ---------------------------------------------------------------------------


def _clamp_unit(val: float, what: str) -> float:
    if val < 0.0 or val > 1.0:
        log.info("clamped %s estimate %.6g into [0, 1]", what, val)
    return min(max(val, 0.0), 1.0)


def cdf_from_e11(handle: EFunctionHandle, x: float, h: float | None = None) -> float:
    """CDF estimate from the level-1, order-1 error function.

    The right derivative of e_{1,1}(mu, .) is 2 F(x) - 1, so a forward
    difference of the handle recovers F.  Result clamped to [0, 1].
    """
    if handle.n_points != 1 or handle.p != 1.0 or handle.dim != 1:
        raise ValueError("cdf_from_e11 requires an N=1, p=1, d=1 handle")
    if h is None:
        h = 1e-5 * (1.0 + abs(x))
    slope = (handle([[x + h]]) - handle([[x]])) / h
    return _clamp_unit(0.5 * (1.0 + slope), "cdf")


def survival_from_e22(
    handle: EFunctionHandle,
    u,
    lam: float,
    h: float | None = None,
) -> float:
    """Survival of the projection (xi | u) from the level-2 quadratic error.

    Stage one turns squared-error differences along the ray {t u} into the
    partial expectation psi(m) of ((xi|u) - m)_+ at midpoints m; stage two
    takes a forward difference of psi, whose right derivative is minus the
    survival function.  Result clamped to [0, 1].
    """
    if handle.n_points != 2 or handle.p != 2.0:
        raise ValueError("survival_from_e22 requires an N=2, p=2 handle")
    u = np.asarray(u, dtype=float).reshape(-1)
    if abs(lr_norm(u, EUCLIDEAN) - 1.0) > 1e-9:
        raise ValueError("u must be a Euclidean unit vector")
    if handle.norm.r != 2.0:
        raise ValueError("survival_from_e22 is a Euclidean (p=2) identity")
    if h is None:
        h = 1e-4 * (1.0 + abs(lam))

    def psi(lam_lo):
        a = lam_lo * u
        b = (lam_lo + h) * u
        same = handle.pth_power(np.stack([a, a]))
        pair = handle.pth_power(np.stack([a, b]))
        return (same - pair) / (2.0 * h)

    val = (psi(lam) - psi(lam + h)) / h
    return _clamp_unit(val, "survival")


def reduce_even_p(handle: EFunctionHandle, a: float, b: float, h: float = 1e-3) -> float:
    """Estimate e_{2,p-2}^{p-2}(mu, (a, b)) from the order-p error function.

    Central finite differences of the second-derivative combination
    (d2/da2 + d2/db2 - 2 d2/dadb) of e_{2,p}^p, divided by p(p-1).  Valid
    for even p >= 4 and measures with a continuous density; requires
    a < b - 2h so the stencil never crosses the midpoint-cell swap.
    """
    p = handle.p
    if handle.n_points != 2 or handle.dim != 1:
        raise ValueError("reduce_even_p requires an N=2, d=1 handle")
    if p < 4 or p != int(p) or int(p) % 2:
        raise ValueError("reduce_even_p requires even p >= 4")
    if not a < b - 2.0 * h:
        raise ValueError("requires a < b - 2h")

    def E(aa, bb):
        return handle.pth_power([[aa], [bb]])

    e00 = E(a, b)
    d2a = (E(a + h, b) - 2.0 * e00 + E(a - h, b)) / h**2
    d2b = (E(a, b + h) - 2.0 * e00 + E(a, b - h)) / h**2
    dab = (E(a + h, b + h) - E(a + h, b - h) - E(a - h, b + h) + E(a - h, b - h)) / (4.0 * h**2)
    return (d2a + d2b - 2.0 * dab) / (p * (p - 1.0))
