"""Batch front end: samples CSV + JSON config in, JSON and CSV series out.

Exit codes: 0 success, 2 bad input or config, 3 undecidable comparison,
4 fictitious play hit max_iters without meeting its stopping rule.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, ContractError, InputError, UndecidableError
from .fp import GameMatrix, mixture_payoff, solve
from .kde import EPANECHNIKOV, GAUSSIAN, KERNELS, Explicit, KdeModel, PowerLaw, SampleSet, estimate
from .mgss import MultiGoalGame, solve_mgss
from .preference import DEFAULT_K_MAX, KernelBag, MixtureModel, compare
from .tailrep import DerivVector, LexOrdering, gaussian_kde_derivs

EXIT_OK, EXIT_INPUT, EXIT_UNDECIDABLE, EXIT_NOT_CONVERGED = 0, 2, 3, 4

Cell = tuple[int, int, int]


@dataclass
class RunConfig:
    samples: str
    n: int = 1
    m: int = 1
    d: int = 1
    kernel: str = GAUSSIAN
    bandwidth: dict | None = None
    risk_alpha: float = 0.05
    taylor_order: int = 8
    weights: list[float] | None = None
    epsilon: float = 1e-3
    max_iters: int = 100_000
    out_dir: str = "out"
    trace: bool = False
    grid_points: int = 512
    k_max: int = DEFAULT_K_MAX
    lex_rtol: float = 1e-12
    absorption_window: int = 100

    def __post_init__(self):
        for name in ("n", "m", "d"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not 0.0 < self.risk_alpha < 1.0:
            raise ConfigError("risk_alpha must lie in (0, 1)")
        if self.taylor_order < 0:
            raise ConfigError("taylor_order must be nonnegative")
        if not self.epsilon > 0 or self.max_iters < 1:
            raise ConfigError("need epsilon > 0 and max_iters >= 1")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        if self.weights is not None:
            if len(self.weights) != self.d:
                raise ConfigError(f"expected {self.d} weights, got {len(self.weights)}")
            if any(not w > 0 for w in self.weights):
                raise ConfigError("weights must be strictly positive")
            if abs(math.fsum(self.weights) - 1.0) > 1e-12:
                raise ConfigError("weights must sum to 1")
        self.bandwidth_rule(SampleSet([0.0]))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "samples" not in raw:
            raise ConfigError("config needs a 'samples' path")
        # relative paths are taken relative to the config file
        for key in ("samples", "out_dir"):
            if key in raw and not Path(raw[key]).is_absolute():
                raw[key] = str(path.parent / raw[key])
        if "out_dir" not in raw:
            raw["out_dir"] = str(path.parent / "out")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def bandwidth_rule(self, samples: SampleSet):
        bw = self.bandwidth
        if bw is None:
            return None
        mode = bw.get("mode")
        if mode == "explicit":
            if "h" not in bw:
                raise ConfigError("explicit bandwidth needs 'h'")
            return Explicit(float(bw["h"]))
        if mode == "power":
            alpha = float(bw.get("alpha", 0.2))
            if "c" in bw:
                return PowerLaw(float(bw["c"]), alpha)
            sd = float(np.std(samples.array, ddof=1)) if len(samples) > 1 else 0.0
            return PowerLaw(sd if sd > 0 else 1.0, alpha)
        raise ConfigError(f"bandwidth mode must be 'explicit' or 'power', got {mode!r}")


def read_samples(path: str | Path) -> dict[Cell, list[float]]:
    """Group ``row,col,goal,value`` records (1-based indices) by cell."""
    cells: dict[Cell, list[float]] = {}
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["row", "col", "goal", "value"]:
                raise InputError(f"{path}: header must be 'row,col,goal,value'")
            for lineno, rec in enumerate(reader, start=2):
                try:
                    key = (int(rec["row"]), int(rec["col"]), int(rec["goal"]))
                    val = float(rec["value"])
                except (TypeError, ValueError) as exc:
                    raise InputError(f"{path}:{lineno}: malformed record") from exc
                if min(key) < 1 or not math.isfinite(val):
                    raise InputError(f"{path}:{lineno}: indices must be >= 1 and values finite")
                cells.setdefault(key, []).append(val)
    except OSError as exc:
        raise InputError(f"cannot read samples: {exc}") from exc
    negative = sum(v < 0 for vals in cells.values() for v in vals)
    if negative:
        warnings.warn(f"{negative} sample values are negative; payoffs are read as losses")
    return cells


def build_models(cfg: RunConfig, data: dict[Cell, list[float]], goals=None) -> dict[Cell, KdeModel]:
    goals = range(1, cfg.d + 1) if goals is None else goals
    models = {}
    for g in goals:
        for r in range(1, cfg.n + 1):
            for c in range(1, cfg.m + 1):
                if (r, c, g) not in data:
                    raise InputError(f"no samples for cell (row={r}, col={c}, goal={g})")
                s = SampleSet(data[(r, c, g)])
                models[(r, c, g)] = estimate(s, cfg.kernel, cfg.bandwidth_rule(s))
    return models


def label(cell: Cell) -> str:
    return "r{}_c{}_g{}".format(*cell)


# -- output -------------------------------------------------------------------


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _to_json(obj: Any, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """JSON text with every float at 17 significant digits, so reruns are byte-identical."""
    return _to_json(obj) + "\n"


def payoff_json(value: Any) -> Any:
    if isinstance(value, DerivVector):
        return value.to_json()
    if isinstance(value, KernelBag):
        return {"kernels": [list(k) for k in value.kernels]}
    return float(value)


def write_series(out: Path, name: str, grid: np.ndarray, values: np.ndarray) -> str:
    fname = f"density_{name}.csv"
    with open(out / fname, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f"])
        for x, f in zip(grid, values):
            w.writerow([fmt(x), fmt(max(f, 0.0))])
    return fname


def write_trace(out: Path, trace) -> str:
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "row_choice", "col_choice", "criterion_value", "vup_updated", "vlow_updated"])
        for t in trace:
            w.writerow([t.iter, t.row_choice, t.col_choice, fmt(t.criterion_value), int(t.vup_updated), int(t.vlow_updated)])
    return "trace.csv"


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(lo, hi, points)


# -- commands -------------------------------------------------------------------


def cmd_estimate(cfg: RunConfig) -> int:
    data = read_samples(cfg.samples)
    models = build_models(cfg, data)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    for cell, model in models.items():
        lo, hi = model.support()
        # the grid covers the whole effective support so the series integrates to one
        e_lo, e_hi = model.effective_range()
        grid = _grid(e_lo, e_hi, cfg.grid_points)
        fname = write_series(out, label(cell), grid, model.density(grid))
        cells.append({
            "label": label(cell),
            "row": cell[0], "col": cell[1], "goal": cell[2],
            "n": model.n,
            "kernel": model.kernel,
            "bandwidth": model.bandwidth,
            "support": [lo, hi],
            "cutoff_candidate": model.quantile(1.0 - cfg.risk_alpha),
            "density_file": fname,
        })
    (out / "result.json").write_text(dumps({"mode": "estimate", "risk_alpha": cfg.risk_alpha, "cells": cells}))
    return EXIT_OK


def _parse_cell(text: str) -> Cell:
    try:
        r, c, g = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise InputError(f"cell must be given as row,col,goal, got {text!r}") from exc
    return r, c, g


def cmd_compare(cfg: RunConfig, cell_a: Cell, cell_b: Cell, truncate: bool = False, k_max: int | None = None) -> int:
    data = read_samples(cfg.samples)
    k_max = cfg.k_max if k_max is None else k_max
    picked = []
    for cell in (cell_a, cell_b):
        if cell not in data:
            raise InputError("no samples for cell (row={}, col={}, goal={})".format(*cell))
        s = SampleSet(data[cell])
        model = estimate(s, cfg.kernel, cfg.bandwidth_rule(s))
        picked.append(model.truncate(cfg.risk_alpha) if truncate else model)
    try:
        result = compare(picked[0], picked[1], k_max)
    except UndecidableError as exc:
        print(f"undecidable within K_max={k_max}: {exc}", file=sys.stderr)
        return EXIT_UNDECIDABLE
    line = f"{result.outcome}, procedure={result.procedure}"
    if result.outcome.onset is not None:
        line += f", onset k={result.outcome.onset}"
    print(line)
    return EXIT_OK


def _cutoff_models(cfg: RunConfig, models: dict[Cell, KdeModel]):
    """Common cutoff over all cells, then every cell truncated there."""
    a = max(m.quantile(1.0 - cfg.risk_alpha) for m in models.values())
    return a, {cell: m.truncate_at(a) for cell, m in models.items()}


def _goal_matrix(cfg: RunConfig, models: dict[Cell, Any], goal: int, a: float | None) -> GameMatrix:
    grid = [[models[(r, c, goal)] for c in range(1, cfg.m + 1)] for r in range(1, cfg.n + 1)]
    if cfg.kernel == EPANECHNIKOV:
        return GameMatrix.from_kernel_bags(grid)
    derivs = [[gaussian_kde_derivs(m, a, cfg.taylor_order) for m in row] for row in grid]
    return GameMatrix.from_derivs(derivs, LexOrdering(cfg.lex_rtol))


def _prepare(cfg: RunConfig):
    data = read_samples(cfg.samples)
    models = build_models(cfg, data)
    if cfg.kernel == EPANECHNIKOV:
        warnings.warn("Epanechnikov payoffs in fictitious play risk absorption in a single row; use the gaussian kernel")
        return None, models
    return _cutoff_models(cfg, models)


def _mixture_series(cfg: RunConfig, out: Path, name: str, models, goal: int, p, q, a):
    grid_models = [[models[(r, c, goal)] for c in range(1, cfg.m + 1)] for r in range(1, cfg.n + 1)]
    mix: MixtureModel = mixture_payoff(grid_models, p, q).mixture
    lo = min(0.0, min(m.effective_range()[0] for row in grid_models for m in row))
    hi = a if a is not None else max(m.effective_range()[1] for row in grid_models for m in row)
    grid = _grid(lo, hi, cfg.grid_points)
    return write_series(out, name, grid, np.asarray(mix.density(grid), dtype=float))


def _run_meta(cfg: RunConfig, a: float | None) -> dict:
    meta = {"kernel": cfg.kernel, "risk_alpha": cfg.risk_alpha, "epsilon": cfg.epsilon, "max_iters": cfg.max_iters}
    if a is not None:
        meta.update(cutoff=a, taylor_order=cfg.taylor_order, lex_rtol=cfg.lex_rtol)
    return meta


def cmd_solve(cfg: RunConfig) -> int:
    if cfg.d != 1:
        raise ConfigError("solve handles a single goal; use solve-mgss for d > 1")
    a, models = _prepare(cfg)
    res = solve(_goal_matrix(cfg, models, 1, a), cfg.epsilon, cfg.max_iters, trace=cfg.trace,
                absorption_window=cfg.absorption_window)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "mode": "solve",
        **_run_meta(cfg, a),
        "p_star": res.p_star,
        "q_star": res.q_star,
        "v_low": payoff_json(res.v_low),
        "v_up": payoff_json(res.v_up),
        "equilibrium_payoff": payoff_json(res.equilibrium_payoff),
        "iterations": res.iterations,
        "converged": res.converged,
        "absorbed_row": res.absorbed_row,
        "density_file": _mixture_series(cfg, out, "equilibrium", models, 1, res.p_star, res.q_star, a),
    }
    if cfg.trace:
        doc["trace_file"] = write_trace(out, res.trace)
    (out / "result.json").write_text(dumps(doc))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_solve_mgss(cfg: RunConfig) -> int:
    a, models = _prepare(cfg)
    goals = [_goal_matrix(cfg, models, g, a) for g in range(1, cfg.d + 1)]
    res = solve_mgss(MultiGoalGame(goals, cfg.weights), cfg.epsilon, cfg.max_iters, trace=cfg.trace,
                     absorption_window=cfg.absorption_window)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    assurances = []
    for g, (value, y) in enumerate(zip(res.assurances, res.y_stars), start=1):
        assurances.append({
            "goal": g,
            "value": payoff_json(value),
            "density_file": _mixture_series(cfg, out, f"assurance_g{g}", models, g, res.x_star, y, a),
        })
    doc = {
        "mode": "solve-mgss",
        **_run_meta(cfg, a),
        "weights": list(res.weights),
        "x_star": res.x_star,
        "y_stars": [list(y) for y in res.y_stars],
        "y_stars_note": "per-goal worst-case adversary strategies, not one attacker's strategy",
        "assurances": assurances,
        "v_up": payoff_json(res.v_up),
        "v_lows": [payoff_json(v) for v in res.v_lows],
        "iterations": res.iterations,
        "converged": res.converged,
        "absorbed_row": res.absorbed_row,
    }
    if cfg.trace:
        doc["trace_file"] = write_trace(out, res.trace)
    (out / "result.json").write_text(dumps(doc))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="run configuration (JSON)")
    parser = argparse.ArgumentParser(prog="distgame", parents=[common], description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("estimate", parents=[common], help="fit per-cell KDEs and write density series")
    cmp_p = sub.add_parser("compare", parents=[common], help="decide the preference between two cells")
    cmp_p.add_argument("--a", required=True, help="first cell as row,col,goal")
    cmp_p.add_argument("--b", required=True, help="second cell as row,col,goal")
    cmp_p.add_argument("--truncate", action="store_true", help="truncate both at their (1 - risk_alpha)-quantile")
    cmp_p.add_argument("--k-max", type=int, default=None, help="moment budget for the oracle")
    sub.add_parser("solve", parents=[common], help="single-goal equilibrium")
    sub.add_parser("solve-mgss", parents=[common], help="multi-goal security strategy")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "config"):
        print("error: --config is required", file=sys.stderr)
        return EXIT_INPUT
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            cfg = RunConfig.load(args.config)
            if args.verb == "estimate":
                code = cmd_estimate(cfg)
            elif args.verb == "compare":
                code = cmd_compare(cfg, _parse_cell(args.a), _parse_cell(args.b), args.truncate, args.k_max)
            elif args.verb == "solve":
                code = cmd_solve(cfg)
            else:
                code = cmd_solve_mgss(cfg)
        except (ConfigError, InputError, ContractError) as exc:
            code = EXIT_INPUT
            print(f"error: {exc}", file=sys.stderr)
        except UndecidableError as exc:
            code = EXIT_UNDECIDABLE
            print(f"error: {exc}", file=sys.stderr)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
