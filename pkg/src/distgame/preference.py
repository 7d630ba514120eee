"""Deciding preference between loss distributions.

A distribution is preferred when its moment sequence is eventually
dominated by the other's.  The moment scan in :func:`compare_by_moments` is
the direct (slow) oracle; the other procedures decide common special cases
from the shape of the right tail alone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import ContractError, InputError, UndecidableError
from .kde import EPANECHNIKOV, GAUSSIAN, GAUSS_REACH, KdeModel

ENDPOINT_TOL = 1e-12
MOMENT_RTOL = 1e-9
DOMINANCE_WINDOW = 10
DEFAULT_K_MAX = 200


class Relation(enum.Enum):
    FIRST = "FirstPreferred"
    SECOND = "SecondPreferred"
    EQUIVALENT = "Equivalent"


@dataclass(frozen=True)
class PreferenceOutcome:
    relation: Relation
    strict: bool = False
    onset: int | None = None  # first k of the decisive moment window, if any

    def __post_init__(self):
        if self.relation is Relation.EQUIVALENT and self.strict:
            raise ValueError("an equivalence cannot be strict")

    def swapped(self) -> "PreferenceOutcome":
        flip = {Relation.FIRST: Relation.SECOND, Relation.SECOND: Relation.FIRST}
        return PreferenceOutcome(flip.get(self.relation, self.relation), self.strict, self.onset)

    def __str__(self) -> str:
        if self.relation is Relation.EQUIVALENT:
            return self.relation.value
        return f"{self.relation.value} ({'strict' if self.strict else 'non-strict'})"


FIRST = PreferenceOutcome(Relation.FIRST, True)
SECOND = PreferenceOutcome(Relation.SECOND, True)
EQUIVALENT = PreferenceOutcome(Relation.EQUIVALENT)


@dataclass(frozen=True)
class PointMass:
    """A deterministic loss."""

    value: float

    def support(self) -> tuple[float, float]:
        return self.value, self.value

    compact = True


@dataclass(frozen=True)
class MixtureModel:
    weights: tuple[float, ...]
    components: tuple

    def __init__(self, weights: Sequence[float], components: Sequence):
        weights = tuple(float(w) for w in weights)
        components = tuple(components)
        if not components or len(weights) != len(components):
            raise InputError("a mixture needs one positive weight per component")
        if any(not w > 0 for w in weights):
            raise InputError("mixture weights must be strictly positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise InputError(f"mixture weights must sum to 1, got {math.fsum(weights)!r}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    @property
    def compact(self) -> bool:
        return all(c.compact for c in self.components)

    def support(self) -> tuple[float, float]:
        spans = [c.support() for c in self.components]
        return min(s[0] for s in spans), max(s[1] for s in spans)

    def density(self, x):
        parts = [w * np.asarray(c.density(x)) for w, c in zip(self.weights, self.components)]
        return sum(parts[1:], parts[0])

    def cdf(self, x):
        parts = [w * np.asarray(c.cdf(x)) for w, c in zip(self.weights, self.components)]
        return sum(parts[1:], parts[0])


Model = Union[KdeModel, PointMass, MixtureModel]


@dataclass(frozen=True)
class MomentSequence:
    """Moments ``m(1..K)`` of ``X / scale``."""

    moments: np.ndarray
    scale: float = 1.0

    @property
    def K(self) -> int:
        return len(self.moments)


@lru_cache(maxsize=32)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _powers(x: np.ndarray, k_max: int) -> np.ndarray:
    """Matrix ``x[i]**k`` for k = 1..k_max, built by repeated products."""
    out = np.empty((k_max, x.size))
    acc = np.ones_like(x)
    for k in range(k_max):
        acc = acc * x
        out[k] = acc
    return out


def _epanechnikov_moments(model: KdeModel, k_max: int, scale: float) -> np.ndarray:
    # each kernel piece times x**k is a polynomial of degree k + 2, so
    # Gauss-Legendre with enough nodes is exact up to rounding
    nodes, wts = _legendre(k_max // 2 + 3)
    h = model.bandwidth
    centers = model._x
    lo, hi = centers - h, centers + h
    if model.cutoff is not None:
        keep = lo < model.cutoff
        centers, lo = centers[keep], lo[keep]
        hi = np.minimum(hi[keep], model.cutoff)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    u = (x - centers[:, None]) / h
    fx = 0.75 * (1.0 - u * u) / (model.n * h * model.norm)
    w = (half[:, None] * wts[None, :] * fx).ravel()
    return _powers(x.ravel() / scale, k_max) @ w


def _gaussian_moments(model: KdeModel, k_max: int, scale: float, floor: float | None) -> np.ndarray:
    # composite Gauss-Legendre; panels narrow enough that both x**k and the
    # kernels are resolved to full precision
    h = model.bandwidth
    lo = model.samples.min - 12.0 * h
    if floor is not None:
        lo = max(lo, floor)
    hi = model.cutoff if model.cutoff is not None else model.samples.max + GAUSS_REACH * h
    width = min(h / 2.0, abs(scale) / (2.0 * k_max))
    panels = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, panels + 1)
    nodes, wts = _legendre(24)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * wts[None, :]).ravel() * model.density(x)
    keep = w != 0.0
    x, w = x[keep] / scale, w[keep]
    # node chunks keep the k_max x nodes power table near 32 MB
    step = max(256, (1 << 22) // k_max)
    out = np.zeros(k_max)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(0, x.size, step):
            out += _powers(x[i:i + step], k_max) @ w[i:i + step]
    return out


def moment_sequence(model: Model, k_max: int, scale: float = 1.0, floor: float | None = None) -> MomentSequence:
    """Moments of ``model`` for k = 1..k_max, computed for ``X / scale``.

    ``floor`` cuts the Gaussian left tail off below that point.  The oracle
    passes ``-scale`` so that the far left tail, which carries no mass at
    double precision but is weighted by ``|x / scale|**k > 1``, cannot swamp
    the right tail that decides the preference.
    """
    if k_max < 1:
        raise InputError("moment order must be at least 1")
    if isinstance(model, PointMass):
        m = _powers(np.array([model.value / scale]), k_max)[:, 0]
    elif isinstance(model, MixtureModel):
        parts = [w * moment_sequence(c, k_max, scale, floor).moments for w, c in zip(model.weights, model.components)]
        m = np.sum(parts, axis=0)
    elif model.kernel == EPANECHNIKOV:
        m = _epanechnikov_moments(model, k_max, scale)
    elif model.kernel == GAUSSIAN:
        m = _gaussian_moments(model, k_max, scale, floor)
    else:
        raise ContractError(f"cannot take moments of {model!r}")
    if not np.all(np.isfinite(m)):
        raise ContractError("moments overflow on an infinite-support model; truncate first")
    return MomentSequence(m, scale)


def moment(model: Model, k: int) -> float:
    return float(moment_sequence(model, k).moments[k - 1])


def _upper(model: Model) -> float:
    return model.support()[1]


def _dominance(m1: np.ndarray, m2: np.ndarray) -> PreferenceOutcome:
    scale = np.maximum(np.abs(m1), np.abs(m2))
    diff = m1 - m2
    sign = np.where(np.abs(diff) <= MOMENT_RTOL * scale, 0, np.sign(diff)).astype(int)
    K = len(sign)
    if K >= DOMINANCE_WINDOW and not sign[-DOMINANCE_WINDOW:].any():
        return EQUIVALENT
    nonzero = np.flatnonzero(sign)
    if nonzero.size == 0:
        raise UndecidableError(f"moment sequences tied over fewer than {DOMINANCE_WINDOW} orders; raise K_max")
    s = sign[nonzero[-1]]
    opposite = np.flatnonzero(sign == -s)
    onset = int(opposite[-1]) + 1 if opposite.size else 0
    if K - onset < DOMINANCE_WINDOW:
        raise UndecidableError(f"no eventual dominance of the moment sequences up to K_max={K}")
    strict = bool(np.all(sign[onset:] != 0))
    relation = Relation.FIRST if s < 0 else Relation.SECOND
    return PreferenceOutcome(relation, strict, onset + 1)


def compare_by_moments(model1: Model, model2: Model, k_max: int = DEFAULT_K_MAX) -> PreferenceOutcome:
    """Oracle decision by scanning moments 1..k_max for eventual dominance.

    Dominance is declared once one sequence stays below the other for
    ``DOMINANCE_WINDOW`` consecutive orders after the last sign change.
    Raises :class:`UndecidableError` when no such run exists.
    """
    for m in (model1, model2):
        if not m.compact:
            raise ContractError("moment comparison needs compact support; truncate first")
    scale = max(abs(_upper(model1)), abs(_upper(model2)), 1e-300)
    s1 = moment_sequence(model1, k_max, scale, -scale).moments
    s2 = moment_sequence(model2, k_max, scale, -scale).moments
    return _dominance(s1, s2)


def _require_epanechnikov(model) -> None:
    if not (isinstance(model, KdeModel) and model.kernel == EPANECHNIKOV and not model.truncated):
        raise ContractError("tail comparison needs untruncated Epanechnikov models")


def compare_epanechnikov(model1: KdeModel, model2: KdeModel) -> PreferenceOutcome:
    """Decide preference from the largest samples and bandwidths alone."""
    _require_epanechnikov(model1)
    _require_epanechnikov(model2)
    x, y = model1.samples.values, model2.samples.values
    h1, h2 = model1.bandwidth, model2.bandwidth
    i, j = len(x) - 1, len(y) - 1
    while i >= 0 and j >= 0:
        e1, e2 = x[i] + h1, y[j] + h2
        if abs(e1 - e2) > ENDPOINT_TOL:
            return FIRST if e1 < e2 else SECOND
        if abs(x[i] - y[j]) > ENDPOINT_TOL:
            return FIRST if x[i] < y[j] else SECOND
        i, j = i - 1, j - 1
    if i < 0 and j < 0:
        return EQUIVALENT
    # the list that ran out first has no mass left where the other still has
    return FIRST if i < 0 else SECOND


def compare_det_vs_random(a: float, model: Model) -> PreferenceOutcome:
    """Point mass at ``a`` (first) against a compactly supported model (second)."""
    if a < 0:
        raise InputError("deterministic loss must be nonnegative")
    if not model.compact:
        raise ContractError("deterministic comparison needs a compactly supported model")
    b = _upper(model)
    if math.isclose(a, b, rel_tol=ENDPOINT_TOL, abs_tol=ENDPOINT_TOL):
        return PreferenceOutcome(Relation.SECOND, strict=False)
    return FIRST if a < b else SECOND


def _infinite(model) -> bool:
    return not model.compact


def compare_compact_vs_infinite(model1: Model, model2: Model) -> PreferenceOutcome:
    if _infinite(model1) == _infinite(model2):
        raise ContractError("exactly one model must have infinite support")
    return SECOND if _infinite(model1) else FIRST


def _as_mixture(model: Model) -> MixtureModel:
    return model if isinstance(model, MixtureModel) else MixtureModel([1.0], [model])


def compare_mixtures(mix1: Model, mix2: Model, k_max: int = DEFAULT_K_MAX) -> PreferenceOutcome:
    """Componentwise dominance when possible, else the mixed moment sequences."""
    mix1, mix2 = _as_mixture(mix1), _as_mixture(mix2)
    if not (mix1.compact and mix2.compact):
        raise ContractError("mixture comparison needs compactly supported components")
    if len(mix1.weights) == len(mix2.weights) and np.allclose(mix1.weights, mix2.weights, rtol=0, atol=1e-12):
        try:
            pairs = [compare(f, g, k_max).outcome for f, g in zip(mix1.components, mix2.components)]
        except UndecidableError:
            pairs = []
        if pairs:
            rels = {p.relation for p in pairs}
            strict = any(p.strict for p in pairs)
            if rels == {Relation.EQUIVALENT}:
                return EQUIVALENT
            if rels <= {Relation.FIRST, Relation.EQUIVALENT}:
                return PreferenceOutcome(Relation.FIRST, strict)
            if rels <= {Relation.SECOND, Relation.EQUIVALENT}:
                return PreferenceOutcome(Relation.SECOND, strict)
    return compare_by_moments(mix1, mix2, k_max)


@dataclass(frozen=True)
class Comparison:
    outcome: PreferenceOutcome
    procedure: str


def compare(model1: Model, model2: Model, k_max: int = DEFAULT_K_MAX) -> Comparison:
    """Pick the cheapest applicable procedure and decide the preference."""
    if isinstance(model1, MixtureModel) or isinstance(model2, MixtureModel):
        return Comparison(compare_mixtures(model1, model2, k_max), "mixture")
    p1, p2 = isinstance(model1, PointMass), isinstance(model2, PointMass)
    if p1 and p2:
        return Comparison(compare_by_moments(model1, model2, k_max), "moment-oracle")
    if p1 or p2:
        point, other = (model1, model2) if p1 else (model2, model1)
        if not other.compact:
            out = compare_compact_vs_infinite(model1, model2)
            return Comparison(out, "compact-vs-infinite")
        out = compare_det_vs_random(point.value, other)
        return Comparison(out if p1 else out.swapped(), "det-vs-random")
    if _infinite(model1) and _infinite(model2):
        raise UndecidableError("both models have infinite support; truncate first")
    if _infinite(model1) or _infinite(model2):
        return Comparison(compare_compact_vs_infinite(model1, model2), "compact-vs-infinite")
    if model1.kernel == model2.kernel == EPANECHNIKOV and not (model1.truncated or model2.truncated):
        return Comparison(compare_epanechnikov(model1, model2), "epanechnikov-tail")
    return Comparison(compare_by_moments(model1, model2, k_max), "moment-oracle")


class KernelBag:
    """Weighted sum of Epanechnikov kernels, closed under addition and scaling.

    This is the payoff value plain fictitious play manipulates when cells are
    Epanechnikov estimates: accumulated and averaged densities need not
    integrate to one.  Identical kernels are merged by summing weights.
    """

    __slots__ = ("kernels",)

    def __init__(self, kernels=()):
        merged: dict[tuple[float, float], float] = {}
        for c, h, w in kernels:
            merged[(c, h)] = merged.get((c, h), 0.0) + w
        # ordered from the right end of the support inwards
        self.kernels = tuple(sorted(((c, h, w) for (c, h), w in merged.items()), key=lambda t: (t[0] + t[1], t[0]), reverse=True))

    @classmethod
    def from_model(cls, model: KdeModel) -> "KernelBag":
        _require_epanechnikov(model)
        w = 1.0 / model.n
        return cls((x, model.bandwidth, w) for x in model.samples.values)

    def __add__(self, other: "KernelBag") -> "KernelBag":
        return KernelBag(self.kernels + other.kernels)

    def __mul__(self, c: float) -> "KernelBag":
        if not c > 0:
            raise ContractError("kernel bags scale by positive factors only")
        return KernelBag((x, h, w * c) for x, h, w in self.kernels)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "KernelBag":
        return self * (1.0 / c)

    def density(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for c, h, w in self.kernels:
            u = (xa - c) / h
            out = out + np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0) * w / h
        return out

    def __repr__(self) -> str:
        return f"KernelBag({len(self.kernels)} kernels)"


def compare_kernel_bags(u: KernelBag, v: KernelBag) -> int:
    """Tail order on kernel bags: -1 if ``u`` is preferred, 1 if ``v``, 0 on a tie."""
    for (c1, h1, w1), (c2, h2, w2) in zip(u.kernels, v.kernels):
        e1, e2 = c1 + h1, c2 + h2
        if abs(e1 - e2) > ENDPOINT_TOL:
            return -1 if e1 < e2 else 1
        if abs(c1 - c2) > ENDPOINT_TOL:
            return -1 if c1 < c2 else 1
        if abs(w1 - w2) > 1e-12 * max(w1, w2):
            return -1 if w1 < w2 else 1
    if len(u.kernels) == len(v.kernels):
        return 0
    return -1 if len(u.kernels) < len(v.kernels) else 1
