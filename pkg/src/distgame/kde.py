"""Kernel density estimates of payoff (loss) distributions.

Two kernels are supported: the compactly supported Epanechnikov kernel,
used for fast tail comparisons, and the Gaussian kernel, whose full support
is what the equilibrium solver needs.  Models are immutable; truncation
returns a new model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import ConfigError, InputError

EPANECHNIKOV = "epanechnikov"
GAUSSIAN = "gaussian"
KERNELS = (EPANECHNIKOV, GAUSSIAN)

# Beyond this many bandwidths the Gaussian kernel is below double precision.
GAUSS_REACH = 40.0


@dataclass(frozen=True)
class SampleSet:
    """Empirical observations for one payoff cell, sorted ascending."""

    values: tuple[float, ...]

    def __init__(self, values: Iterable[float]):
        vals = sorted(float(v) for v in values)
        if not vals:
            raise InputError("sample set is empty")
        if not all(math.isfinite(v) for v in vals):
            raise InputError("sample set contains non-finite values")
        object.__setattr__(self, "values", tuple(vals))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def min(self) -> float:
        return self.values[0]

    @property
    def max(self) -> float:
        return self.values[-1]

    def shifted(self, s: float) -> "SampleSet":
        return SampleSet(v + s for v in self.values)


@dataclass(frozen=True)
class Explicit:
    h: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigError(f"bandwidth must be positive, got h={self.h}")


@dataclass(frozen=True)
class PowerLaw:
    """Bandwidth ``c * n**(-alpha)``; consistency needs ``0 < alpha < 1/2``."""

    c: float
    alpha: float = 0.2

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigError(f"power-law constant must be positive, got c={self.c}")
        if not 0 < self.alpha < 0.5:
            raise ConfigError(f"power-law exponent must lie in (0, 1/2), got alpha={self.alpha}")


BandwidthRule = Explicit | PowerLaw


def bandwidth(rule: BandwidthRule, n: int) -> float:
    if n < 1:
        raise InputError(f"sample size must be at least 1, got {n}")
    if isinstance(rule, Explicit):
        return rule.h
    if isinstance(rule, PowerLaw):
        return rule.c * n ** (-rule.alpha)
    raise ConfigError(f"unknown bandwidth rule {rule!r}")


def default_rule(samples: SampleSet) -> PowerLaw:
    """Power law scaled by the sample standard deviation (falls back to 1)."""
    sd = float(np.std(samples.array, ddof=1)) if len(samples) > 1 else 0.0
    return PowerLaw(c=sd if sd > 0 else 1.0, alpha=0.2)


def _epan_cdf(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, -1.0, 1.0)
    return (2.0 + 3.0 * u - u**3) / 4.0


@dataclass(frozen=True)
class KdeModel:
    """Kernel density estimate, optionally truncated at ``cutoff``.

    ``mass`` is the untruncated probability below the cutoff; a renormalized
    model divides its density by it so that it integrates to one on
    ``(-inf, cutoff]``.
    """

    kernel: str
    samples: SampleSet
    bandwidth: float
    cutoff: float | None = None
    renormalize: bool = True
    mass: float = 1.0
    _x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if not self.bandwidth > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")
        x = self.samples.array
        x.setflags(write=False)
        object.__setattr__(self, "_x", x)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def truncated(self) -> bool:
        return self.cutoff is not None

    @property
    def compact(self) -> bool:
        return self.kernel == EPANECHNIKOV or self.truncated

    @property
    def norm(self) -> float:
        return self.mass if (self.truncated and self.renormalize) else 1.0

    def support(self) -> tuple[float, float]:
        """Closed support interval; the upper end is ``inf`` for untruncated Gaussians."""
        h = self.bandwidth
        if self.kernel == EPANECHNIKOV:
            lo, hi = self.samples.min - h, self.samples.max + h
        else:
            lo, hi = -math.inf, math.inf
        if self.cutoff is not None:
            hi = min(hi, self.cutoff)
        return lo, hi

    def effective_range(self) -> tuple[float, float]:
        """Finite interval carrying all mass up to double precision."""
        h = self.bandwidth
        if self.kernel == EPANECHNIKOV:
            lo, hi = self.samples.min - h, self.samples.max + h
        else:
            lo, hi = self.samples.min - GAUSS_REACH * h, self.samples.max + GAUSS_REACH * h
        if self.cutoff is not None:
            hi = min(hi, self.cutoff)
        return lo, hi

    def _raw_density(self, x: np.ndarray) -> np.ndarray:
        h = self.bandwidth
        u = (x[..., None] - self._x) / h
        if self.kernel == EPANECHNIKOV:
            k = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
        else:
            k = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        return k.sum(axis=-1) / (self.n * h)

    def _raw_cdf(self, x: np.ndarray) -> np.ndarray:
        u = (x[..., None] - self._x) / self.bandwidth
        if self.kernel == EPANECHNIKOV:
            c = _epan_cdf(u)
        else:
            c = special.ndtr(u)
        return c.mean(axis=-1)

    def density(self, x):
        """Pointwise density; zero beyond the cutoff of a truncated model."""
        xa = np.asarray(x, dtype=float)
        f = self._raw_density(xa) / self.norm
        if self.cutoff is not None:
            f = np.where(xa <= self.cutoff, f, 0.0)
        return f if f.ndim else float(f)

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        c = self._raw_cdf(xa)
        if self.cutoff is not None:
            c = np.minimum(c, self.mass) / self.norm
        c = np.clip(c, 0.0, 1.0)
        return c if c.ndim else float(c)

    def quantile(self, p: float) -> float:
        """Inverse cdf by bracketed root search."""
        if not 0.0 < p < 1.0:
            raise InputError(f"quantile level must lie in (0, 1), got {p}")
        lo, hi = self.effective_range()
        if self.cdf(hi) < p:  # only possible through rounding at the cutoff
            return hi
        return optimize.brentq(lambda t: self.cdf(t) - p, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    def integrate(self, lo: float, hi: float) -> float:
        """Adaptive quadrature of the density over ``[lo, hi]``."""
        a, b = self.effective_range()
        lo, hi = max(lo, a), min(hi, b)
        if hi <= lo:
            return 0.0
        h = self.bandwidth
        if self.kernel == EPANECHNIKOV:
            brk = np.concatenate([self._x - h, self._x + h])
        else:
            brk = self._x
        brk = np.unique(brk[(brk > lo) & (brk < hi)])
        edges = np.concatenate([[lo], brk, [hi]])
        total = 0.0
        for a_, b_ in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(self.density, a_, b_, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += val
        return total

    def truncate(self, alpha: float, renormalize: bool = True) -> "KdeModel":
        """Cut the model off at its own ``(1 - alpha)``-quantile."""
        if not 0.0 < alpha < 1.0:
            raise InputError(f"risk threshold must lie in (0, 1), got {alpha}")
        return self.truncate_at(self.quantile(1.0 - alpha), renormalize)

    def truncate_at(self, a: float, renormalize: bool = True) -> "KdeModel":
        """Cut the model off at a given point (used for a game-wide cutoff)."""
        mass = float(self._raw_cdf(np.asarray(a, dtype=float)))
        if self.cutoff is not None:
            a = min(a, self.cutoff)
            mass = min(mass, self.mass)
        if mass <= 0.0:
            raise InputError(f"cutoff {a} leaves no probability mass")
        return replace(self, cutoff=float(a), renormalize=renormalize, mass=mass)

    def shifted(self, s: float) -> "KdeModel":
        cutoff = None if self.cutoff is None else self.cutoff + s
        return replace(self, samples=self.samples.shifted(s), cutoff=cutoff)


def estimate(samples: SampleSet | Sequence[float], kernel: str = GAUSSIAN, rule: BandwidthRule | None = None) -> KdeModel:
    if not isinstance(samples, SampleSet):
        samples = SampleSet(samples)
    if rule is None:
        rule = default_rule(samples)
    return KdeModel(kernel=kernel, samples=samples, bandwidth=bandwidth(rule, len(samples)))


def truncate(model: KdeModel, alpha: float, renormalize: bool = True) -> KdeModel:
    return model.truncate(alpha, renormalize)


def discretize_counts(histogram: Sequence[tuple[int, int]]) -> SampleSet:
    """Expand an integer-valued histogram into samples half a unit left of each point."""
    if not histogram:
        raise InputError("histogram is empty")
    vals = []
    for point, count in histogram:
        if int(count) != count or count < 1:
            raise InputError(f"count for point {point} must be a positive integer, got {count}")
        if int(point) != point or point < 0:
            raise InputError(f"histogram points must be nonnegative integers, got {point}")
        vals.extend([point - 0.5] * int(count))
    return SampleSet(vals)
