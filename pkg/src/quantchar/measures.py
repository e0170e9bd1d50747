"""Probability measures: moments, CDFs, quantiles and partial expectations.

Three representations are supported:

* analytic one-dimensional families (``Dirac``, ``Uniform``, ``Normal``,
  ``LogNormal``) with closed forms wherever they exist,
* ``DiscreteMeasure`` (weighted atoms in any dimension) with exact sums,
* ``SampledMeasure`` (a pure counter-based sampler) for Monte Carlo work.

All measure objects are immutable after construction and safe to share
across threads.  Sampling is a pure function of ``(seed, index)``: parallel
consumers partition index ranges instead of sharing generator state.

The Gaussian CDF used by every closed form in this package is
:func:`normal_cdf` (``scipy.special.ndtr``, exact to double precision);
its inverse is :func:`normal_quantile`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

__all__ = [
    "Dirac",
    "Uniform",
    "Normal",
    "LogNormal",
    "DiscreteMeasure",
    "SampledMeasure",
    "Measure",
    "Analytic1D",
    "MomentDivergenceError",
    "UnsupportedRepresentationError",
    "normal_cdf",
    "normal_quantile",
    "dimension",
    "mean",
    "moment",
    "cdf_1d",
    "empirical_cdf_1d",
    "quantile_1d",
    "call_price",
    "partial_moments_1d",
    "partial_second_moment_1d",
    "sample",
    "uniform_stream",
    "standard_gaussian_sampled",
    "support_interval",
    "measure_from_json",
    "measure_to_json",
]


class MomentDivergenceError(ArithmeticError):
    """A moment evaluated to a nonfinite value."""


class UnsupportedRepresentationError(TypeError):
    """The requested operation has no implementation for this representation."""


def normal_cdf(x):
    """Standard normal CDF, the single source of truth for all closed forms."""
    return ndtr(x)


def normal_quantile(q):
    """Inverse of :func:`normal_cdf`."""
    return ndtri(q)


def _normal_pdf(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dirac:
    """Point mass at ``c``."""

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError("Dirac location must be finite")


@dataclass(frozen=True)
class Uniform:
    """Uniform law on ``[a, b]``, ``a < b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("Uniform requires finite a < b")


@dataclass(frozen=True)
class Normal:
    """Gaussian law with mean ``m`` and standard deviation ``s > 0``."""

    m: float
    s: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.s > 0.0):
            raise ValueError("Normal requires finite m and s > 0")


@dataclass(frozen=True)
class LogNormal:
    """Law of ``exp(s Z + m)`` with ``Z`` standard normal, ``s > 0``."""

    m: float
    s: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.s > 0.0):
            raise ValueError("LogNormal requires finite m and s > 0")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms ``atoms[k]`` (shape ``(n, d)``) with weights summing to 1."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_1d(np.asarray(self.atoms, dtype=float))
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise ValueError("atoms must be a nonempty (n, d) array")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != atoms.shape[0]:
            raise ValueError("atoms and weights lengths differ")
        if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be nonnegative and finite")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self):
        return self.atoms.shape[1]


@dataclass(frozen=True)
class SampledMeasure:
    """Measure known only through a deterministic counter-based sampler.

    ``draw(seed, start, count)`` must return samples ``start .. start+count-1``
    as a ``(count, dim)`` array, with sample ``i`` depending only on
    ``(seed, i)``.  Moments are Monte Carlo estimates and must be requested
    with an explicit ``(samples, seed)`` pair; there are no hidden defaults.
    """

    dim: int
    draw: Callable[[int, int, int], np.ndarray] = field(compare=False)
    label: str = "sampled"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


Analytic1D = Union[Dirac, Uniform, Normal, LogNormal]
Measure = Union[Dirac, Uniform, Normal, LogNormal, DiscreteMeasure, SampledMeasure]

_ANALYTIC = (Dirac, Uniform, Normal, LogNormal)


def dimension(mu: Measure) -> int:
    if isinstance(mu, _ANALYTIC):
        return 1
    return mu.dim


# ---------------------------------------------------------------------------
# Counter-based uniform stream (Philox)
# ---------------------------------------------------------------------------

# One Philox 128-bit counter block yields 4 float64 draws; sample i consumes
# the blocks [i*bpp, (i+1)*bpp) so that it is a pure function of (seed, i).


def uniform_stream(seed: int, start: int, count: int, per_sample: int = 1) -> np.ndarray:
    """Uniforms in (0, 1) for sample indices ``start .. start+count-1``.

    Returns shape ``(count, per_sample)``.  Identical ``(seed, index)`` always
    yields identical rows, regardless of how index ranges are partitioned.
    """
    if count < 0 or start < 0:
        raise ValueError("start and count must be nonnegative")
    bpp = (per_sample + 3) // 4
    bit = np.random.Philox(key=np.uint64(seed), counter=[np.uint64(start) * bpp, 0, 0, 0])
    u = np.random.Generator(bit).random(count * bpp * 4)
    u = u.reshape(count, bpp * 4)[:, :per_sample]
    # keep the inverse-CDF transforms finite
    return np.clip(u, 1e-300, 1.0 - 1e-16)


def standard_gaussian_sampled(dim: int) -> SampledMeasure:
    """Standard Gaussian on R^dim as a counter-based sampler."""

    def draw(seed, start, count):
        u = uniform_stream(seed, start, count, per_sample=dim)
        return ndtri(u)

    return SampledMeasure(dim=dim, draw=draw, label=f"gaussian{dim}d")


def sample(mu: Measure, n: int, seed: int, start: int = 0) -> np.ndarray:
    """Draw samples ``start .. start+n-1`` of ``mu`` as a ``(n, d)`` array.

    Deterministic in ``(seed, index)``; see the module docstring for the
    parallel-partitioning contract.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(mu, Dirac):
        return np.full((n, 1), mu.c)
    if isinstance(mu, Uniform):
        u = uniform_stream(seed, start, n)
        return mu.a + (mu.b - mu.a) * u
    if isinstance(mu, Normal):
        u = uniform_stream(seed, start, n)
        return mu.m + mu.s * ndtri(u)
    if isinstance(mu, LogNormal):
        u = uniform_stream(seed, start, n)
        return np.exp(mu.m + mu.s * ndtri(u))
    if isinstance(mu, DiscreteMeasure):
        u = uniform_stream(seed, start, n)[:, 0]
        cums = np.cumsum(mu.weights)
        idx = np.searchsorted(cums, u, side="left")
        idx = np.minimum(idx, len(cums) - 1)
        return mu.atoms[idx]
    if isinstance(mu, SampledMeasure):
        out = np.asarray(mu.draw(seed, start, n), dtype=float)
        return out.reshape(n, mu.dim)
    raise UnsupportedRepresentationError(f"cannot sample {type(mu).__name__}")


# ---------------------------------------------------------------------------
# CDF / quantile / density
# ---------------------------------------------------------------------------


def cdf_1d(mu: Measure, t):
    """mu((-inf, t]) for a one-dimensional measure (right-continuous)."""
    t = np.asarray(t, dtype=float)
    if isinstance(mu, Dirac):
        return (t >= mu.c).astype(float)
    if isinstance(mu, Uniform):
        return np.clip((t - mu.a) / (mu.b - mu.a), 0.0, 1.0)
    if isinstance(mu, Normal):
        return ndtr((t - mu.m) / mu.s)
    if isinstance(mu, LogNormal):
        out = np.zeros_like(t, dtype=float)
        pos = t > 0
        out = np.where(pos, ndtr((np.log(np.where(pos, t, 1.0)) - mu.m) / mu.s), out)
        return out
    if isinstance(mu, DiscreteMeasure):
        if mu.dim != 1:
            raise ValueError("cdf_1d requires a 1-dimensional measure")
        a = mu.atoms[:, 0]
        return (mu.weights[None, :] * (a[None, :] <= np.atleast_1d(t)[:, None])).sum(axis=1).reshape(t.shape)
    raise UnsupportedRepresentationError(
        "cdf_1d has no closed form for a sampler; use empirical_cdf_1d(mu, t, samples, seed)"
    )


def empirical_cdf_1d(mu: Measure, t, samples: int, seed: int):
    """Empirical-CDF estimate of mu((-inf, t]) from ``samples`` draws."""
    xs = sample(mu, samples, seed)[:, 0]
    t = np.asarray(t, dtype=float)
    return (xs[None, :] <= np.atleast_1d(t)[:, None]).mean(axis=1).reshape(t.shape)


def quantile_1d(mu: Measure, q):
    """Generalized inverse CDF: smallest x with F(x) >= q."""
    q = np.asarray(q, dtype=float)
    if np.any((q < 0.0) | (q > 1.0)):
        raise ValueError("quantile levels must lie in [0, 1]")
    if isinstance(mu, Dirac):
        return np.full_like(q, mu.c)
    if isinstance(mu, Uniform):
        return mu.a + (mu.b - mu.a) * q
    if isinstance(mu, Normal):
        return mu.m + mu.s * ndtri(q)
    if isinstance(mu, LogNormal):
        return np.exp(mu.m + mu.s * ndtri(q))
    if isinstance(mu, DiscreteMeasure):
        if mu.dim != 1:
            raise ValueError("quantile_1d requires a 1-dimensional measure")
        order = np.argsort(mu.atoms[:, 0], kind="stable")
        xs = mu.atoms[order, 0]
        cums = np.cumsum(mu.weights[order])
        idx = np.searchsorted(cums, q, side="left")
        idx = np.minimum(idx, len(xs) - 1)
        return xs[idx]
    raise UnsupportedRepresentationError("quantile_1d requires an analytic or discrete measure")


def density_1d(mu: Analytic1D, x):
    """Lebesgue density of an absolutely continuous analytic family."""
    x = np.asarray(x, dtype=float)
    if isinstance(mu, Uniform):
        return np.where((x >= mu.a) & (x <= mu.b), 1.0 / (mu.b - mu.a), 0.0)
    if isinstance(mu, Normal):
        return _normal_pdf((x - mu.m) / mu.s) / mu.s
    if isinstance(mu, LogNormal):
        out = np.zeros_like(x, dtype=float)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        out = np.where(pos, _normal_pdf((np.log(xs) - mu.m) / mu.s) / (mu.s * xs), out)
        return out
    raise UnsupportedRepresentationError(f"{type(mu).__name__} has no density")


# ---------------------------------------------------------------------------
# Moments and partial expectations
# ---------------------------------------------------------------------------


def mean(mu: Measure) -> float:
    if isinstance(mu, Dirac):
        return mu.c
    if isinstance(mu, Uniform):
        return 0.5 * (mu.a + mu.b)
    if isinstance(mu, Normal):
        return mu.m
    if isinstance(mu, LogNormal):
        return math.exp(mu.m + 0.5 * mu.s**2)
    if isinstance(mu, DiscreteMeasure):
        if mu.dim != 1:
            raise ValueError("mean is 1D here; use moment for d > 1")
        return float(mu.weights @ mu.atoms[:, 0])
    raise UnsupportedRepresentationError("mean of a sampler needs explicit Monte Carlo")


def _variance(mu: Analytic1D) -> float:
    if isinstance(mu, Dirac):
        return 0.0
    if isinstance(mu, Uniform):
        return (mu.b - mu.a) ** 2 / 12.0
    if isinstance(mu, Normal):
        return mu.s**2
    if isinstance(mu, LogNormal):
        return (math.exp(mu.s**2) - 1.0) * math.exp(2.0 * mu.m + mu.s**2)
    raise UnsupportedRepresentationError(type(mu).__name__)


def moment(mu: Measure, p: float, center=0.0, samples: int | None = None, seed: int | None = None) -> float:
    """``int |xi - center|^p dmu`` (l2 norm for d > 1).

    Closed forms are used for the analytic families whenever available
    (``p`` in {1, 2}, uniform laws for any ``p``, lognormal laws about 0);
    otherwise an adaptive quadrature against the density is performed.
    ``SampledMeasure`` requires explicit ``samples`` and ``seed``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if isinstance(mu, DiscreteMeasure):
        c = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)), (mu.dim,))
        dists = np.linalg.norm(mu.atoms - c[None, :], axis=1)
        return float(mu.weights @ dists**p)
    if isinstance(mu, SampledMeasure):
        if samples is None or seed is None:
            raise ValueError("moments of a SampledMeasure require explicit samples and seed")
        c = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)), (mu.dim,))
        xs = sample(mu, samples, seed)
        val = float(np.mean(np.linalg.norm(xs - c[None, :], axis=1) ** p))
        if not math.isfinite(val):
            raise MomentDivergenceError("Monte Carlo moment is nonfinite (heavy tail?)")
        return val
    c = float(np.asarray(center).reshape(-1)[0]) if np.ndim(center) else float(center)
    if isinstance(mu, Dirac):
        return abs(mu.c - c) ** p
    if isinstance(mu, Uniform):
        lo, hi = mu.a - c, mu.b - c
        w = mu.b - mu.a
        if lo >= 0.0:
            return (hi ** (p + 1) - lo ** (p + 1)) / ((p + 1) * w)
        if hi <= 0.0:
            return ((-lo) ** (p + 1) - (-hi) ** (p + 1)) / ((p + 1) * w)
        return ((-lo) ** (p + 1) + hi ** (p + 1)) / ((p + 1) * w)
    if p == 2.0:
        return _variance(mu) + (mean(mu) - c) ** 2
    if p == 1.0:
        p0, p1, _ = partial_moments_1d(mu, c)
        val = c * (2.0 * float(p0) - 1.0) - 2.0 * float(p1) + mean(mu)
        return max(val, 0.0)
    if isinstance(mu, LogNormal) and c == 0.0:
        return math.exp(p * mu.m + 0.5 * (p * mu.s) ** 2)
    val, _ = quad(
        lambda x: abs(x - c) ** p * float(density_1d(mu, x)),
        *_integration_limits(mu),
        epsabs=1e-12,
        epsrel=1e-11,
        limit=400,
    )
    if not math.isfinite(val):
        raise MomentDivergenceError("moment quadrature diverged")
    return val


def _integration_limits(mu: Analytic1D):
    if isinstance(mu, Uniform):
        return mu.a, mu.b
    if isinstance(mu, Normal):
        return -np.inf, np.inf
    if isinstance(mu, LogNormal):
        return 0.0, np.inf
    raise UnsupportedRepresentationError(type(mu).__name__)


def partial_moments_1d(mu: Measure, t):
    """Partial moments ``P_k(t) = int_(-inf, t] xi^k dmu`` for k = 0, 1, 2.

    The interval is closed on the right: an atom exactly at ``t`` counts.
    Vectorized over ``t``; returns a tuple of three arrays (or scalars).
    """
    t = np.asarray(t, dtype=float)
    if isinstance(mu, Dirac):
        ind = (mu.c <= t).astype(float)
        return ind, mu.c * ind, mu.c**2 * ind
    if isinstance(mu, Uniform):
        w = mu.b - mu.a
        u = np.clip(t, mu.a, mu.b)
        p0 = (u - mu.a) / w
        p1 = (u**2 - mu.a**2) / (2.0 * w)
        p2 = (u**3 - mu.a**3) / (3.0 * w)
        return p0, p1, p2
    if isinstance(mu, Normal):
        z = (t - mu.m) / mu.s
        Phi, phi = ndtr(z), _normal_pdf(z)
        p0 = Phi
        p1 = mu.m * Phi - mu.s * phi
        p2 = (mu.m**2 + mu.s**2) * Phi - mu.s * (t + mu.m) * phi
        return p0, p1, p2
    if isinstance(mu, LogNormal):
        pos = t > 0
        logt = np.log(np.where(pos, t, 1.0))
        out = []
        for k in (0, 1, 2):
            mk = math.exp(k * mu.m + 0.5 * (k * mu.s) ** 2)
            z = (logt - mu.m - k * mu.s**2) / mu.s
            out.append(np.where(pos, mk * ndtr(z), 0.0))
        return tuple(out)
    if isinstance(mu, DiscreteMeasure):
        if mu.dim != 1:
            raise ValueError("partial moments are 1D")
        a = mu.atoms[:, 0]
        mask = a[None, :] <= np.atleast_1d(t)[:, None]
        w = mu.weights[None, :]
        p0 = (w * mask).sum(axis=1).reshape(t.shape)
        p1 = (w * a[None, :] * mask).sum(axis=1).reshape(t.shape)
        p2 = (w * a[None, :] ** 2 * mask).sum(axis=1).reshape(t.shape)
        return p0, p1, p2
    raise UnsupportedRepresentationError("partial moments require an analytic or discrete measure")


def partial_second_moment_1d(mu: Measure, a: float, b: float):
    """Split second moments about the midpoint ``m = (a+b)/2``.

    Returns ``(int_(-inf,m] (xi-a)^2 dmu, int_(m,inf) (xi-b)^2 dmu)``; the
    midpoint itself belongs to the left piece.  Their sum is the squared
    two-point quadratic quantization error at the grid ``(a, b)``.
    """
    if a > b:
        raise ValueError("requires a <= b")
    m = 0.5 * (a + b)
    p0, p1, p2 = (float(v) for v in partial_moments_1d(mu, m))
    m1 = mean(mu)
    m2 = moment(mu, 2.0, 0.0)
    left = p2 - 2.0 * a * p1 + a**2 * p0
    right = (m2 - p2) - 2.0 * b * (m1 - p1) + b**2 * (1.0 - p0)
    return max(left, 0.0), max(right, 0.0)


def call_price(mu: Measure, K: float) -> float:
    """Partial expectation E(X - K)_+ of a one-dimensional measure."""
    if isinstance(mu, Dirac):
        return max(mu.c - K, 0.0)
    if isinstance(mu, Uniform):
        if K >= mu.b:
            return 0.0
        if K <= mu.a:
            return 0.5 * (mu.a + mu.b) - K
        return (mu.b - K) ** 2 / (2.0 * (mu.b - mu.a))
    if isinstance(mu, Normal):
        z = (mu.m - K) / mu.s
        return float((mu.m - K) * ndtr(z) + mu.s * _normal_pdf(z))
    if isinstance(mu, LogNormal):
        ex = math.exp(mu.m + 0.5 * mu.s**2)
        if K <= 0.0:
            return ex - K
        d1 = (mu.m + mu.s**2 - math.log(K)) / mu.s
        return float(ex * ndtr(d1) - K * ndtr(d1 - mu.s))
    if isinstance(mu, DiscreteMeasure):
        if mu.dim != 1:
            raise ValueError("call_price is 1D")
        return float(mu.weights @ np.maximum(mu.atoms[:, 0] - K, 0.0))
    raise UnsupportedRepresentationError("call_price requires an analytic or discrete measure")


def support_interval(mu: Measure):
    """Effective support ``[lo, hi]`` (8 sigma for unbounded families)."""
    if isinstance(mu, Dirac):
        return mu.c, mu.c
    if isinstance(mu, Uniform):
        return mu.a, mu.b
    if isinstance(mu, Normal):
        return mu.m - 8.0 * mu.s, mu.m + 8.0 * mu.s
    if isinstance(mu, LogNormal):
        return 0.0, math.exp(mu.m + 8.0 * mu.s)
    if isinstance(mu, DiscreteMeasure):
        return float(mu.atoms.min()), float(mu.atoms.max())
    raise UnsupportedRepresentationError("no support interval for a sampler")


# ---------------------------------------------------------------------------
# JSON measure specification (CLI / service wire format)
# ---------------------------------------------------------------------------

_KINDS = ("dirac", "uniform", "normal", "lognormal", "discrete")


def measure_from_json(spec) -> Measure:
    """Build a measure from the JSON wire format.

    ``{"kind": ..., "params": {...}, "atoms": [[...]], "weights": [...]}``
    with kind one of dirac | uniform | normal | lognormal | discrete.
    """
    if isinstance(spec, (str, bytes)):
        spec = json.loads(spec)
    kind = spec.get("kind")
    params = spec.get("params") or {}
    if kind == "dirac":
        return Dirac(c=float(params["c"]))
    if kind == "uniform":
        return Uniform(a=float(params["a"]), b=float(params["b"]))
    if kind == "normal":
        return Normal(m=float(params["m"]), s=float(params["s"]))
    if kind == "lognormal":
        return LogNormal(m=float(params["m"]), s=float(params["s"]))
    if kind == "discrete":
        atoms = np.asarray(spec["atoms"], dtype=float)
        return DiscreteMeasure(atoms=atoms, weights=np.asarray(spec["weights"], dtype=float))
    raise ValueError(f"unknown measure kind {kind!r}; expected one of {_KINDS}")


def measure_to_json(mu: Measure) -> dict:
    if isinstance(mu, Dirac):
        return {"kind": "dirac", "params": {"c": mu.c}}
    if isinstance(mu, Uniform):
        return {"kind": "uniform", "params": {"a": mu.a, "b": mu.b}}
    if isinstance(mu, Normal):
        return {"kind": "normal", "params": {"m": mu.m, "s": mu.s}}
    if isinstance(mu, LogNormal):
        return {"kind": "lognormal", "params": {"m": mu.m, "s": mu.s}}
    if isinstance(mu, DiscreteMeasure):
        return {
            "kind": "discrete",
            "params": {},
            "atoms": mu.atoms.tolist(),
            "weights": mu.weights.tolist(),
        }
    raise UnsupportedRepresentationError("samplers have no JSON form")
