"""Multi-goal security strategy for two goals across a sweep of weights."""

import argparse
import warnings

import numpy as np

from distgame.fp import AbsorptionWarning, GameMatrix
from distgame.mgss import MultiGoalGame, build_compound, solve_mgss, verify_zero_sum

DAMAGE = [[2.0, 5.0], [3.0, 1.0]]
DOWNTIME = [[1.0, 0.5], [4.0, 2.5]]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epsilon", type=float, default=1e-4)
    ap.add_argument("--steps", type=int, default=5)
    args = ap.parse_args()
    warnings.simplefilter("ignore", AbsorptionWarning)

    goals = [GameMatrix.from_reals(DAMAGE), GameMatrix.from_reals(DOWNTIME)]
    for w in np.linspace(0.1, 0.9, args.steps):
        game = MultiGoalGame(goals, (w, 1.0 - w))
        assert verify_zero_sum(build_compound(game))
        res = solve_mgss(game, args.epsilon, 200_000)
        guarantees = ", ".join(f"{v:.3f}" for v in res.assurances)
        print(f"w_damage={w:.2f}: x*={np.round(res.x_star, 3)} assurances=({guarantees}) iterations={res.iterations}")


if __name__ == "__main__":
    main()
