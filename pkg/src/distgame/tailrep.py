"""Tail representation of truncated Gaussian KDEs by derivative vectors.

A density truncated at ``a`` is represented by ``d_k = (-1)**k f^(k)(a)``
for k = 0..t.  Comparing these vectors lexicographically orders densities
by their behaviour just left of the cutoff, and the representation is
linear, so fictitious play can add and average it like a real payoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError
from .kde import GAUSSIAN, KdeModel
from .preference import PreferenceOutcome, Relation, EQUIVALENT

DEFAULT_ORDER = 8
DEFAULT_LEX_RTOL = 1e-12


def hermite(n: int, x: float) -> float:
    """Physicists' Hermite polynomial H_n(x) by the three-term recursion."""
    if n < 0:
        raise ValueError("Hermite degree must be nonnegative")
    h_prev, h = 1.0, 2.0 * x
    if n == 0:
        return h_prev
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def _hermite_table(t: int, x: np.ndarray) -> np.ndarray:
    out = np.empty((t + 1, x.size))
    out[0] = 1.0
    if t >= 1:
        out[1] = 2.0 * x
    for k in range(1, t):
        out[k + 1] = 2.0 * x * out[k] - 2.0 * k * out[k - 1]
    return out


@dataclass(frozen=True)
class DerivVector:
    """Alternating-sign derivatives ``d_k = (-1)**k f^(k)(cutoff)``, k = 0..order."""

    cutoff: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("a derivative vector needs at least one coefficient")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ValueError("derivative coefficients must be finite")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def zero(cls, cutoff: float, order: int) -> "DerivVector":
        return cls(cutoff, (0.0,) * (order + 1))

    def _check(self, other: "DerivVector") -> None:
        if self.cutoff != other.cutoff or len(self.coeffs) != len(other.coeffs):
            raise ContractError("derivative vectors differ in cutoff or order")

    def __add__(self, other: "DerivVector") -> "DerivVector":
        self._check(other)
        return DerivVector(self.cutoff, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, c: float) -> "DerivVector":
        if not c > 0:
            raise ContractError(f"derivative vectors scale by positive factors only, got {c}")
        return DerivVector(self.cutoff, tuple(a * c for a in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "DerivVector":
        if not c > 0:
            raise ContractError(f"derivative vectors scale by positive factors only, got {c}")
        return DerivVector(self.cutoff, tuple(a / c for a in self.coeffs))

    def to_json(self) -> dict:
        return {"cutoff": self.cutoff, "order": self.order, "coeffs": list(self.coeffs)}

    @classmethod
    def from_json(cls, obj: dict) -> "DerivVector":
        vec = cls(float(obj["cutoff"]), obj["coeffs"])
        if "order" in obj and int(obj["order"]) != vec.order:
            raise ValueError("order field does not match the coefficient count")
        return vec


def add(u: DerivVector, v: DerivVector) -> DerivVector:
    return u + v


def scale(u: DerivVector, c: float) -> DerivVector:
    return u * c


@dataclass(frozen=True)
class LexOrdering:
    """Lexicographic order with a per-component relative tie tolerance.

    Components ``x`` and ``y`` tie when ``|x - y| <= rtol * max(|x|, |y|)``.
    """

    rtol: float = DEFAULT_LEX_RTOL

    def __post_init__(self):
        if self.rtol < 0:
            raise ValueError("lexicographic tolerance must be nonnegative")

    def tol(self, x: float, y: float) -> float:
        return self.rtol * max(abs(x), abs(y))

    def cmp(self, u: DerivVector, v: DerivVector) -> int:
        """-1 if ``u`` is preferred (smaller), 1 if ``v`` is, 0 on a tie."""
        u._check(v)
        for x, y in zip(u.coeffs, v.coeffs):
            d = x - y
            if abs(d) > self.rtol * max(abs(x), abs(y)):
                return -1 if d < 0 else 1
        return 0

    __call__ = cmp


def lex_compare(u: DerivVector, v: DerivVector, ordering: LexOrdering = LexOrdering()) -> PreferenceOutcome:
    c = ordering.cmp(u, v)
    if c == 0:
        return EQUIVALENT
    return PreferenceOutcome(Relation.FIRST if c < 0 else Relation.SECOND, strict=True)


def gaussian_kde_derivs(model: KdeModel, a: float, t: int = DEFAULT_ORDER) -> DerivVector:
    """Closed-form derivative vector of a Gaussian KDE at ``a``.

    Uses ``phi^(k)(z) = (-1)**k 2**(-k/2) H_k(z/sqrt 2) phi(z)`` per sample and
    the chain rule for the bandwidth.  A renormalized truncated model is
    scaled by its retained mass; ``a`` is taken as a left limit at the cutoff.
    """
    if not (isinstance(model, KdeModel) and model.kernel == GAUSSIAN):
        raise ContractError("derivative vectors are defined for Gaussian kernel models only")
    if t < 0:
        raise ValueError("order must be nonnegative")
    if model.cutoff is not None and a > model.cutoff:
        raise ContractError(f"point {a} lies beyond the model cutoff {model.cutoff}")
    h = model.bandwidth
    z = (a - model.samples.array) / h
    phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    table = _hermite_table(t, z / math.sqrt(2.0))
    coeffs = []
    for k in range(t + 1):
        terms = table[k] * phi
        s = math.fsum(terms.tolist())
        coeffs.append(s * 2.0 ** (-k / 2.0) / (model.n * h ** (k + 1) * model.norm))
    return DerivVector(float(a), tuple(coeffs))


def taylor_eval(u: DerivVector, x: float) -> float:
    """Evaluate the Taylor polynomial of order ``u.order`` around the cutoff."""
    dx = x - u.cutoff
    total, term = 0.0, 1.0
    for k, d in enumerate(u.coeffs):
        if k:
            term *= dx / k
        total += (-1) ** k * d * term
    return total


def roundoff_bound(eps_machine: float, a: float) -> float:
    """Uniform Taylor-evaluation error on ``[0, a]`` caused by rounding every coefficient."""
    if eps_machine <= 0 or a < 0:
        raise ValueError("need eps_machine > 0 and a >= 0")
    return eps_machine * math.exp(a)


def common_cutoff(models: Sequence[KdeModel], alpha: float) -> float:
    """Largest ``(1 - alpha)``-quantile over all models."""
    return max(m.quantile(1.0 - alpha) for m in models)
