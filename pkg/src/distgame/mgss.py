"""Multi-goal security strategies via a scalarized one-against-all game.

Each of the defender's d goals gets its own hypothetical adversary, who
best-responds on that goal's matrix only.  The defender best-responds to
the weighted sum of all goals.  Weights must be strictly positive, so the
weighted mix stays inside the payoff space (no negation of distributions).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import InputError, NotVerifiable
from .fp import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITERS,
    DEFAULT_WINDOW,
    AbsorptionWarning,
    GameMatrix,
    TraceRow,
    _initial_bounds,
    _norm,
    best_response,
    detect_absorption,
    mix_values,
)

WEIGHT_TOL = 1e-12
ZERO_SUM_TOL = 1e-10


def _same_order(f, g) -> bool:
    # bound methods of equal orderings (e.g. two LexOrdering(1e-12)) count as the same order
    if f == g:
        return True
    return getattr(f, "__func__", None) is getattr(g, "__func__", object()) and f.__self__ == g.__self__


@dataclass(frozen=True)
class MultiGoalGame:
    goals: tuple[GameMatrix, ...]
    weights: tuple[float, ...]

    def __init__(self, goals: Sequence[GameMatrix], weights: Sequence[float] | None = None):
        goals = tuple(goals)
        if not goals:
            raise InputError("need at least one goal")
        if weights is None:
            weights = [1.0 / len(goals)] * len(goals)
        weights = tuple(float(w) for w in weights)
        if len(weights) != len(goals):
            raise InputError(f"got {len(weights)} weights for {len(goals)} goals")
        if any(not w > 0 for w in weights):
            raise InputError("goal weights must be strictly positive")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise InputError(f"weights must sum to 1, got {math.fsum(weights)!r}")
        first = goals[0]
        for g in goals[1:]:
            if g.shape != first.shape:
                raise InputError("goal matrices differ in shape")
            if not _same_order(g.cmp, first.cmp) or type(g.zero) is not type(first.zero):
                raise InputError("goal matrices use different payoff spaces")
            if hasattr(first.zero, "_check"):
                first.zero._check(g.zero)
        object.__setattr__(self, "goals", goals)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return len(self.goals)

    @property
    def shape(self) -> tuple[int, int]:
        return self.goals[0].shape


def _weighted_sum(values: Sequence, weights: Sequence[float], zero):
    total = zero
    for w, val in zip(weights, values):
        total = total + val * w
    return total


@dataclass
class CompoundGame:
    """Defender payoff ``f_0 = sum_i w_i A_i`` and, for real games, ``f_i = -w_i A_i``."""

    game: MultiGoalGame
    defender: GameMatrix
    opponents: list[np.ndarray] | None

    @property
    def reduced_opponent(self) -> np.ndarray | None:
        """Column payoff of the reduced two-player game: the sum of all opponent payoffs."""
        if self.opponents is None:
            return None
        total = np.zeros_like(self.opponents[0])
        for f in self.opponents:
            total = total + f
        return total


def build_compound(game: MultiGoalGame) -> CompoundGame:
    n, m = game.shape
    first = game.goals[0]
    cells = tuple(
        tuple(_weighted_sum([g.cells[i][j] for g in game.goals], game.weights, first.zero) for j in range(m))
        for i in range(n)
    )
    defender = GameMatrix(cells, first.cmp, first.zero)
    opponents = None
    if first.is_real:
        opponents = [-w * g.to_array() for w, g in zip(game.weights, game.goals)]
    return CompoundGame(game, defender, opponents)


def verify_zero_sum(compound: CompoundGame, tol: float = ZERO_SUM_TOL) -> bool:
    """Check ``f_0 + sum_i f_i == 0`` cellwise on the reduced two-player form."""
    if compound.opponents is None:
        raise NotVerifiable("not verifiable in distribution space")
    residual = compound.defender.to_array() + compound.reduced_opponent
    return bool(np.all(np.abs(residual) <= tol))


@dataclass
class MgssResult:
    x_star: np.ndarray
    y_stars: list[np.ndarray]
    assurances: list[Any]
    v_up: Any
    v_lows: list[Any]
    weights: tuple[float, ...]
    iterations: int
    converged: bool
    choices: list[tuple[int, tuple[int, ...]]] = field(repr=False)
    absorbed_row: int | None = None
    trace: list[TraceRow] | None = field(default=None, repr=False)


def solve_mgss(
    game: MultiGoalGame,
    epsilon: float = DEFAULT_EPSILON,
    max_iters: int = DEFAULT_MAX_ITERS,
    norm="inf",
    trace: bool = False,
    absorption_window: int = DEFAULT_WINDOW,
) -> MgssResult:
    """Fictitious play with one defender against d per-goal adversaries.

    The adversary steps of the single-goal loop run once per goal, in
    ascending goal order, each seeing only the defender's history.  The
    stopping rule looks at the defender's counts only.  ``trace`` rows
    record the first adversary's column.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if max_iters < 1:
        raise InputError("max_iters must be at least 1")
    goals, weights = game.goals, game.weights
    cmp, zero = goals[0].cmp, goals[0].zero
    n, m = game.shape
    d = game.d

    inits = [_initial_bounds(g) for g in goals]
    v_lows = [b[0] for b in inits]
    v_up = _weighted_sum([b[1] for b in inits], weights, zero)
    cols = [b[3] for b in inits]
    # each goal's columns pre-scaled by its weight, as the defender sees them
    wcols = [[tuple(val * w for val in col) for col in gcols] for w, gcols in zip(weights, cols)]

    x = np.zeros(n)
    ys = [np.zeros(m) for _ in range(d)]
    cs = [b[2] for b in inits]
    u = [zero] * n
    for g in range(d):
        col = wcols[g][cs[g]]
        u = [u[i] + col[i] for i in range(n)]
        ys[g][cs[g]] += 1
    vs = [[zero] * m for _ in range(d)]

    rows: list[int] = []
    vup_flags: list[bool] = []
    choices: list[tuple[int, tuple[int, ...]]] = [(-1, tuple(cs))]
    rows_trace: list[TraceRow] | None = [] if trace else None
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        r = best_response(u, "min", cmp)
        cand = u[r] / k
        vup_upd = cmp(cand, v_up) >= 0
        if vup_upd:
            v_up = cand
        x_prev = x.copy()
        x[r] += 1

        vlow_flags = []
        for g in range(d):
            row = goals[g].cells[r]
            vs[g] = [vs[g][j] + row[j] for j in range(m)]
            c = best_response(vs[g], "max", cmp)
            cand = vs[g][c] / k
            upd = cmp(cand, v_lows[g]) <= 0
            if upd:
                v_lows[g] = cand
            vlow_flags.append(upd)
            col = wcols[g][c]
            u = [u[i] + col[i] for i in range(n)]
            ys[g][c] += 1
            cs[g] = c

        rows.append(r)
        vup_flags.append(vup_upd)
        choices.append((r, tuple(cs)))
        crit = _norm(x - x_prev, norm) / k
        if rows_trace is not None:
            rows_trace.append(TraceRow(k, r, cs[0], crit, vup_upd, vlow_flags[0]))
        if crit < epsilon:
            converged = True
            break

    x_star = x / x.sum()
    y_stars = [y / y.sum() for y in ys]
    absorbed = detect_absorption(rows, absorption_window, vup_flags)
    if absorbed is not None:
        warnings.warn(
            f"fictitious play absorbed in row {absorbed}: chosen for the last {absorption_window} "
            "iterations without any update of the upper bound",
            AbsorptionWarning,
            stacklevel=2,
        )
    return MgssResult(
        x_star=x_star,
        y_stars=y_stars,
        assurances=[mix_values(g, x_star, y) for g, y in zip(goals, y_stars)],
        v_up=v_up,
        v_lows=v_lows,
        weights=weights,
        iterations=k,
        converged=converged,
        choices=choices,
        absorbed_row=absorbed,
        trace=rows_trace,
    )
