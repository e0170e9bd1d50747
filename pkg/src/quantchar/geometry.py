"""l_r norms, Voronoi membership, bounded-cell detection, sphere coverings.

Everything here is a pure function over immutable inputs; direction batches
in :func:`cell_radius` and :func:`verify_covering` can be partitioned across
workers with per-batch derived seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import helmert
from scipy.special import ndtri

from .measures import uniform_stream

__all__ = [
    "NormSpec",
    "EUCLIDEAN",
    "CoveringCertificate",
    "NoCoveringConstructionError",
    "lr_norm",
    "nearest_index",
    "in_open_cell",
    "covering_grid",
    "verify_covering",
    "bounded_cell_grid_euclidean",
    "cell_radius",
    "sphere_directions",
    "as_grid",
]


@dataclass(frozen=True)
class NormSpec:
    """An isotropic l_r norm on R^d, ``r`` in [1, inf] (``math.inf`` allowed)."""

    r: float = 2.0

    def __post_init__(self):
        if not (self.r >= 1.0):
            raise ValueError("r must be >= 1")

    @property
    def is_strictly_convex(self):
        return 1.0 < self.r < math.inf


EUCLIDEAN = NormSpec(2.0)


class NoCoveringConstructionError(ValueError):
    """No covering construction is known for this (d, r) pair."""


def lr_norm(v, spec: NormSpec = EUCLIDEAN, axis: int = -1):
    """`(sum |v_i|^r)^(1/r)`, or max |v_i| for r = inf."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if spec.r == math.inf:
        return a.max(axis=axis)
    if spec.r == 1.0:
        return a.sum(axis=axis)
    if spec.r == 2.0:
        return np.sqrt((a * a).sum(axis=axis))
    return (a**spec.r).sum(axis=axis) ** (1.0 / spec.r)


def as_grid(points, dim: int | None = None) -> np.ndarray:
    """Normalize grid input to a ``(N, d)`` float array (duplicates allowed)."""
    g = np.asarray(points, dtype=float)
    if g.ndim == 0:
        g = g.reshape(1, 1)
    elif g.ndim == 1:
        g = g[:, None] if dim in (None, 1) else g[None, :]
    if g.ndim != 2 or g.shape[0] < 1:
        raise ValueError("grid must be a nonempty (N, d) array")
    if dim is not None and g.shape[1] != dim:
        raise ValueError(f"grid dimension {g.shape[1]} != expected {dim}")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid points must be finite")
    return g


def nearest_index(xi, grid, spec: NormSpec = EUCLIDEAN) -> int:
    """Smallest index of a grid point at minimal distance from ``xi``."""
    g = as_grid(grid)
    x = np.asarray(xi, dtype=float).reshape(1, -1)
    if x.shape[1] != g.shape[1]:
        raise ValueError("dimension mismatch")
    d = lr_norm(g - x, spec, axis=1)
    return int(np.argmin(d))  # argmin returns the first minimizer: ties go low


def in_open_cell(xi, grid, i: int, spec: NormSpec = EUCLIDEAN) -> bool:
    """Strict membership of ``xi`` in the open Voronoi cell of grid point i."""
    g = as_grid(grid)
    if not 0 <= i < g.shape[0]:
        raise IndexError("cell index out of range")
    x = np.asarray(xi, dtype=float).reshape(1, -1)
    d = lr_norm(g - x, spec, axis=1)
    own = d[i]
    others = np.delete(d, i)
    if others.size == 0:
        return True
    return bool(own < others.min())


# ---------------------------------------------------------------------------
# Sphere coverings
# ---------------------------------------------------------------------------


def covering_grid(d: int, spec: NormSpec) -> np.ndarray:
    """Unit-sphere centers whose closed unit balls cover the unit sphere.

    Explicit constructions, by case:

    * d = 1 (any r): {-1, +1};
    * r = inf (any d): {-e1, +e1};
    * d = 2, r = 1: {(-1/2, 1/2), (1/2, -1/2)};
    * d = 2, 1 < r < inf: {(0, 1), (+-(1 - 2^-r)^(1/r), -1/2)};
    * 2^r >= d: {+-e_i, i = 1..d}.

    Raises :class:`NoCoveringConstructionError` outside this table.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    r = spec.r
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if r == math.inf:
        out = np.zeros((2, d))
        out[0, 0], out[1, 0] = -1.0, 1.0
        return out
    if d == 2 and r == 1.0:
        return np.array([[-0.5, 0.5], [0.5, -0.5]])
    if d == 2 and 1.0 < r < math.inf:
        x = (1.0 - 2.0**-r) ** (1.0 / r)
        return np.array([[0.0, 1.0], [x, -0.5], [-x, -0.5]])
    if 2.0**r >= d:
        eye = np.eye(d)
        return np.concatenate([eye, -eye], axis=0)
    raise NoCoveringConstructionError(f"no construction known for d={d}, r={r}")


def sphere_directions(d: int, spec: NormSpec, count: int, seed: int) -> np.ndarray:
    """Directions on the l_r unit sphere with full support.

    Standard Gaussian vectors normalized under the given norm.  This is not
    the uniform law on the l_r sphere, but it charges every open subset,
    which is all covering verification needs.
    """
    u = uniform_stream(seed, 0, count, per_sample=d)
    z = ndtri(u)
    n = lr_norm(z, spec, axis=1)
    # a zero Gaussian row has probability 0; nudge instead of resampling
    bad = n < 1e-12
    if np.any(bad):
        z[bad, 0] = 1.0
        n = lr_norm(z, spec, axis=1)
    return z / n[:, None]


@dataclass(frozen=True)
class CoveringCertificate:
    """Numeric evidence that unit balls around ``centers`` cover the sphere."""

    centers: np.ndarray
    r: float
    max_min_distance: float
    sample_count: int
    seed: int

    @property
    def valid(self) -> bool:
        return self.max_min_distance <= 1.0 + 1e-9


def verify_covering(grid, spec: NormSpec, samples: int, seed: int) -> CoveringCertificate:
    """Sample the unit sphere and report the worst distance to the centers."""
    g = as_grid(grid)
    on_sphere = np.abs(lr_norm(g, spec, axis=1) - 1.0)
    if on_sphere.max() > 1e-9:
        raise ValueError("all covering centers must lie on the unit sphere")
    pts = sphere_directions(g.shape[1], spec, samples, seed)
    worst = 0.0
    for lo in range(0, samples, 65536):  # chunked to bound memory
        block = pts[lo : lo + 65536]
        dmin = lr_norm(block[:, None, :] - g[None, :, :], spec, axis=2).min(axis=1)
        worst = max(worst, float(dmin.max()))
    return CoveringCertificate(
        centers=g, r=spec.r, max_min_distance=worst, sample_count=samples, seed=seed
    )


# ---------------------------------------------------------------------------
# Bounded open cells
# ---------------------------------------------------------------------------


def bounded_cell_grid_euclidean(d: int, scale: float = 1.0) -> np.ndarray:
    """Grid {0} + centered regular-simplex vertices (d + 2 points).

    The simplex vertices (circumradius ``scale``, barycenter at the origin)
    form an affine basis around 0, so the open cell of the origin is
    bounded for the Euclidean norm.  Uses the Helmert embedding of the
    standard simplex: canonical and well-conditioned in every dimension.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    H = helmert(d + 1, full=False)  # (d, d+1) orthonormal rows, sum-zero space
    verts = (np.eye(d + 1) - 1.0 / (d + 1)) @ H.T  # (d+1, d)
    verts *= scale / np.sqrt(d / (d + 1.0))
    return np.concatenate([np.zeros((1, d)), verts], axis=0)


def cell_radius(
    grid,
    i: int,
    spec: NormSpec = EUCLIDEAN,
    directions: int = 256,
    seed: int = 0,
    t_max: float | None = None,
    tol: float = 1e-9,
    margin: float = 1e-9,
) -> float:
    """Radius of the open Voronoi cell of grid point i, or ``inf``.

    Along each sampled direction ``u`` the set {t : x_i + t u in open cell}
    is an interval starting at 0 (open cells are star-shaped relative to
    their center), so its endpoint is located by bisection.  Returns the
    maximum endpoint over the sampled directions; ``math.inf`` as soon as
    one ray is still strictly inside at the ``t_max`` horizon.

    Membership requires a relative ``margin`` below the competing distance:
    for norms that are not strictly convex (l1, linf), exact distance ties
    along whole rays would otherwise flip on float rounding noise.  Tie
    rays are not part of the open cell, so the margin only makes the
    reported radius conservative by O(margin).
    """
    g = as_grid(grid)
    n, d = g.shape
    if not 0 <= i < n:
        raise IndexError("cell index out of range")
    if n == 1:
        return math.inf
    if t_max is None:
        diam = float(lr_norm(g[:, None, :] - g[None, :, :], spec, axis=2).max())
        t_max = 1e3 * (diam + 1.0)
    x0 = g[i]
    others = np.delete(g, i, axis=0)
    dirs = sphere_directions(d, spec, directions, seed)

    def inside(ts):
        pts = x0[None, :] + ts[:, None] * dirs
        own = lr_norm(pts - x0[None, :], spec, axis=1)
        rest = lr_norm(pts[:, None, :] - others[None, :, :], spec, axis=2).min(axis=1)
        return own < rest - margin * (1.0 + own)

    if bool(inside(np.full(directions, t_max)).any()):
        return math.inf
    lo = np.zeros(directions)
    hi = np.full(directions, float(t_max))
    while float((hi - lo).max()) > tol:
        mid = 0.5 * (lo + hi)
        ok = inside(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return float(hi.max())
