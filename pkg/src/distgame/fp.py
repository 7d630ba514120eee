"""Fictitious play over an ordered linear payoff space.

The row player minimizes loss and the column player maximizes it.  Payoff
values only need ``+``, division by a positive real and a three-way
comparison, so the same loop runs on floats, on kernel bags (plain
distribution-valued play) and on derivative vectors (the tail surrogate).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .errors import ContractError, InputError
from .preference import KernelBag, MixtureModel, compare_kernel_bags
from .tailrep import DerivVector, LexOrdering, gaussian_kde_derivs

DEFAULT_EPSILON = 1e-3
DEFAULT_MAX_ITERS = 100_000
DEFAULT_WINDOW = 100


class AbsorptionWarning(RuntimeWarning):
    """Fictitious play keeps choosing one row and its upper bound never moves."""


def compare_reals(a: float, b: float) -> int:
    return (a > b) - (a < b)


@dataclass(frozen=True)
class GameMatrix:
    """Rectangular payoff matrix plus the order its values are compared by."""

    cells: tuple[tuple[Any, ...], ...]
    cmp: Callable[[Any, Any], int] = compare_reals
    zero: Any = 0.0

    def __post_init__(self):
        cells = tuple(tuple(row) for row in self.cells)
        if not cells or not cells[0]:
            raise InputError("payoff matrix is empty")
        if any(len(row) != len(cells[0]) for row in cells):
            raise InputError("payoff matrix is not rectangular")
        object.__setattr__(self, "cells", cells)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.cells), len(self.cells[0])

    @classmethod
    def from_reals(cls, a) -> "GameMatrix":
        arr = np.asarray(a, dtype=float)
        if arr.ndim != 2:
            raise InputError("real payoff matrix must be two-dimensional")
        return cls(tuple(tuple(float(x) for x in row) for row in arr))

    @classmethod
    def from_derivs(cls, cells: Sequence[Sequence[DerivVector]], ordering: LexOrdering = LexOrdering()) -> "GameMatrix":
        first = cells[0][0]
        for row in cells:
            for d in row:
                first._check(d)
        return cls(cells, ordering.cmp, DerivVector.zero(first.cutoff, first.order))

    @classmethod
    def from_kernel_bags(cls, models) -> "GameMatrix":
        cells = [[KernelBag.from_model(m) for m in row] for row in models]
        return cls(cells, compare_kernel_bags, KernelBag())

    @property
    def is_real(self) -> bool:
        return self.cmp is compare_reals

    def to_array(self) -> np.ndarray:
        if not self.is_real:
            raise ContractError("only real-valued matrices convert to arrays")
        return np.array(self.cells, dtype=float)

    def map(self, fn) -> "GameMatrix":
        return GameMatrix(tuple(tuple(fn(x) for x in row) for row in self.cells), self.cmp, self.zero)


class TraceRow(NamedTuple):
    iter: int
    row_choice: int
    col_choice: int
    criterion_value: float
    vup_updated: bool
    vlow_updated: bool


@dataclass
class EquilibriumResult:
    p_star: np.ndarray
    q_star: np.ndarray
    v_low: Any
    v_up: Any
    iterations: int
    converged: bool
    equilibrium_payoff: Any
    choices: list[tuple[int, int]] = field(repr=False)
    absorbed_row: int | None = None
    trace: list[TraceRow] | None = field(default=None, repr=False)


def best_response(values: Sequence, direction: str, cmp: Callable[[Any, Any], int] = compare_reals) -> int:
    """Index of the minimal (``"min"``) or maximal (``"max"``) value; ties go to the lowest index."""
    if not values:
        raise ContractError("best response over an empty set")
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    sign = -1 if direction == "min" else 1
    best = 0
    for i in range(1, len(values)):
        if cmp(values[i], values[best]) == sign:
            best = i
    return best


def _norm(vec: np.ndarray, norm) -> float:
    if norm in ("inf", math.inf):
        return float(np.max(np.abs(vec)))
    return float(np.linalg.norm(vec, ord=float(norm)))


def convergence_check(x_prev, x_next, k: int, epsilon: float, norm="inf") -> bool:
    """True iff ``(1/k) * ||x_next - x_prev|| < epsilon``."""
    x_prev, x_next = np.asarray(x_prev, float), np.asarray(x_next, float)
    if x_prev.shape != x_next.shape:
        raise ContractError("count vectors differ in length")
    if k < 1:
        raise ValueError("iteration count must be at least 1")
    return _norm(x_next - x_prev, norm) / k < epsilon


def detect_absorption(history: Sequence[int], window: int, vup_updated: Sequence[bool] | None = None) -> int | None:
    """Row index repeated over the last ``window`` choices with a frozen upper bound, else None."""
    if window < 2:
        raise ValueError("absorption window must be at least 2")
    if len(history) < window:
        return None
    tail = history[-window:]
    if any(r != tail[0] for r in tail):
        return None
    if vup_updated is not None and any(vup_updated[-window:]):
        return None
    return tail[0]


def mix_values(matrix: GameMatrix, p, q) -> Any:
    """Sum of ``F_ij * p_i * q_j`` in the matrix's own payoff space."""
    total = matrix.zero
    for i, row in enumerate(matrix.cells):
        for j, val in enumerate(row):
            w = float(p[i]) * float(q[j])
            if w > 0:
                total = total + val * w
    return total


def _initial_bounds(matrix: GameMatrix):
    cmp, A = matrix.cmp, matrix.cells
    n, m = matrix.shape
    cols = [tuple(A[i][j] for i in range(n)) for j in range(m)]
    col_max = [best_response(col, "max", cmp) for col in cols]
    j_low = best_response([cols[j][col_max[j]] for j in range(m)], "min", cmp)
    v_low = cols[j_low][col_max[j_low]]
    row_min = [best_response(row, "min", cmp) for row in A]
    i_up = best_response([A[i][row_min[i]] for i in range(n)], "max", cmp)
    v_up = A[i_up][row_min[i_up]]
    return v_low, v_up, row_min[i_up], cols


def solve(
    matrix: GameMatrix,
    epsilon: float = DEFAULT_EPSILON,
    max_iters: int = DEFAULT_MAX_ITERS,
    norm="inf",
    trace: bool = False,
    absorption_window: int = DEFAULT_WINDOW,
) -> EquilibriumResult:
    """Fictitious play with min/max swapped for a loss-minimizing row player.

    Stops once ``(1/k) * ||x_{k+1} - x_k|| < epsilon`` on the row player's
    absolute choice counts, or after ``max_iters`` iterations (then
    ``converged`` is False).
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if max_iters < 1:
        raise InputError("max_iters must be at least 1")
    cmp, A = matrix.cmp, matrix.cells
    n, m = matrix.shape
    x = np.zeros(n)
    y = np.zeros(m)

    v_low, v_up, c, cols = _initial_bounds(matrix)
    u = list(cols[c])
    y[c] += 1
    v = [matrix.zero] * m

    rows: list[int] = []
    vup_flags: list[bool] = []
    choices: list[tuple[int, int]] = [(-1, c)]
    rows_trace: list[TraceRow] | None = [] if trace else None
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        r = best_response(u, "min", cmp)
        cand = u[r] / k
        vup_upd = cmp(cand, v_up) >= 0
        if vup_upd:
            v_up = cand
        row = A[r]
        v = [v[j] + row[j] for j in range(m)]
        x_prev = x.copy()
        x[r] += 1

        c = best_response(v, "max", cmp)
        cand = v[c] / k
        vlow_upd = cmp(cand, v_low) <= 0
        if vlow_upd:
            v_low = cand
        col = cols[c]
        u = [u[i] + col[i] for i in range(n)]
        y[c] += 1

        rows.append(r)
        vup_flags.append(vup_upd)
        choices.append((r, c))
        crit = _norm(x - x_prev, norm) / k
        if rows_trace is not None:
            rows_trace.append(TraceRow(k, r, c, crit, vup_upd, vlow_upd))
        if crit < epsilon:
            converged = True
            break

    p = x / x.sum()
    q = y / y.sum()
    absorbed = detect_absorption(rows, absorption_window, vup_flags)
    if absorbed is not None:
        warnings.warn(
            f"fictitious play absorbed in row {absorbed}: chosen for the last {absorption_window} "
            "iterations without any update of the upper bound",
            AbsorptionWarning,
            stacklevel=2,
        )
    return EquilibriumResult(
        p_star=p,
        q_star=q,
        v_low=v_low,
        v_up=v_up,
        iterations=k,
        converged=converged,
        equilibrium_payoff=mix_values(matrix, p, q),
        choices=choices,
        absorbed_row=absorbed,
        trace=rows_trace,
    )


class MixturePayoff(NamedTuple):
    mixture: MixtureModel
    derivs: DerivVector | None


def mixture_payoff(models: Sequence[Sequence], p, q, cutoff: float | None = None, order: int | None = None) -> MixturePayoff:
    """Outcome distribution ``sum_ij F_ij p_i q_j`` of a mixed strategy profile.

    With ``cutoff`` and ``order`` the matching derivative vector is returned
    as well, assembled from the per-cell vectors by linearity.
    """
    p, q = np.asarray(p, float), np.asarray(q, float)
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9 or (p < 0).any() or (q < 0).any():
        raise InputError("mixed strategies must be nonnegative and sum to one")
    weights, comps, cells = [], [], []
    for i, row in enumerate(models):
        for j, model in enumerate(row):
            w = p[i] * q[j]
            if w > 0:
                weights.append(w)
                comps.append(model)
                cells.append((i, j))
    total = math.fsum(weights)
    mixture = MixtureModel([w / total for w in weights], comps)
    derivs = None
    if cutoff is not None:
        t = 8 if order is None else order
        derivs = DerivVector.zero(cutoff, t)
        for w, (i, j) in zip(mixture.weights, cells):
            derivs = derivs + gaussian_kde_derivs(models[i][j], cutoff, t) * w
    return MixturePayoff(mixture, derivs)
