import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distgame.errors import InputError, NotVerifiable
from distgame.fp import GameMatrix, mixture_payoff, solve
from distgame.kde import GAUSSIAN, KdeModel, SampleSet
from distgame.mgss import CompoundGame, MultiGoalGame, build_compound, solve_mgss, verify_zero_sum
from distgame.preference import moment
from distgame.tailrep import LexOrdering, gaussian_kde_derivs

pytestmark = pytest.mark.filterwarnings("ignore::distgame.fp.AbsorptionWarning")

CRISP = [[2.0, 5.0], [3.0, 1.0]]


def reals(a):
    return GameMatrix.from_reals(a)


class TestValidation:
    def test_default_weights_are_uniform(self):
        assert MultiGoalGame([reals(CRISP)] * 4).weights == (0.25,) * 4

    @pytest.mark.parametrize("w", [(0.9, 0.2), (1.0, 0.0), (1.2, -0.2), (1.0,)])
    def test_bad_weights(self, w):
        with pytest.raises(InputError):
            MultiGoalGame([reals(CRISP), reals(CRISP)], w)

    def test_weight_message(self):
        with pytest.raises(InputError, match="weights must sum to 1"):
            MultiGoalGame([reals(CRISP), reals(CRISP)], (0.9, 0.2))

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            MultiGoalGame([reals(CRISP), reals([[1.0, 2.0, 3.0]])], (0.5, 0.5))


class TestCompound:
    def test_identical_goals_mix_to_themselves(self):
        c = build_compound(MultiGoalGame([reals(CRISP), reals(CRISP)], (0.5, 0.5)))
        assert c.defender.to_array().tolist() == CRISP

    def test_weighted_cells_exact(self):
        a, b = np.array(CRISP), np.array([[1.0, 0.5], [4.0, 2.5]])
        c = build_compound(MultiGoalGame([reals(a), reals(b)], (0.7, 0.3)))
        assert np.array_equal(c.defender.to_array(), 0.7 * a + 0.3 * b)
        assert np.array_equal(c.reduced_opponent, -0.7 * a + -0.3 * b)

    def test_single_goal_zero_sum(self):
        assert verify_zero_sum(build_compound(MultiGoalGame([reals(CRISP)])))

    def test_corruption_detected(self):
        c = build_compound(MultiGoalGame([reals(CRISP), reals(CRISP)], (0.5, 0.5)))
        bad = [f.copy() for f in c.opponents]
        bad[1][0, 1] += 1e-3
        assert not verify_zero_sum(CompoundGame(c.game, c.defender, bad))

    def test_distribution_games_not_verifiable(self):
        m = KdeModel(GAUSSIAN, SampleSet([1.0]), 0.5)
        a = m.quantile(0.95)
        g = GameMatrix.from_derivs([[gaussian_kde_derivs(m.truncate_at(a), a, 3)]], LexOrdering())
        with pytest.raises(NotVerifiable, match="not verifiable in distribution space"):
            verify_zero_sum(build_compound(MultiGoalGame([g])))


class TestSolve:
    def test_single_goal_matches_fp(self):
        single = solve(reals(CRISP), trace=True)
        one = solve_mgss(MultiGoalGame([reals(CRISP)]), trace=True)
        assert one.trace == single.trace
        assert one.x_star.tobytes() == single.p_star.tobytes()
        assert one.y_stars[0].tobytes() == single.q_star.tobytes()
        assert one.assurances[0] == single.equilibrium_payoff

    def test_identical_goals(self):
        res = solve_mgss(MultiGoalGame([reals(CRISP)] * 2, (0.5, 0.5)), epsilon=1e-4, max_iters=200_000)
        assert np.max(np.abs(res.x_star - [0.4, 0.6])) <= 0.05
        for y in res.y_stars:
            assert np.max(np.abs(y - [0.8, 0.2])) <= 0.05

    @pytest.mark.parametrize("w", [0.1, 0.5, 0.9])
    def test_constant_goal_is_ignored(self, w):
        base = solve(reals(CRISP), epsilon=1e-4, max_iters=200_000)
        res = solve_mgss(MultiGoalGame([reals(CRISP), reals([[7.0, 7.0], [7.0, 7.0]])], (w, 1 - w)),
                         epsilon=1e-4, max_iters=200_000)
        assert np.max(np.abs(res.x_star - base.p_star)) <= 0.05

    def test_converges_on_defender_counts(self):
        res = solve_mgss(MultiGoalGame([reals(CRISP), reals([[1.0, 0.0], [0.0, 1.0]])], (0.6, 0.4)), epsilon=1e-2)
        assert res.converged and res.iterations == 101
        assert all(math.isclose(y.sum(), 1.0) for y in res.y_stars)

    def test_assurance_moments(self):
        def cell(v):
            return KdeModel(GAUSSIAN, SampleSet([v - 0.1, v + 0.1]), 0.3)

        dists = [[[cell(v) for v in row] for row in CRISP], [[cell(v) for v in row] for row in ([1.0, 4.0], [2.0, 3.0])]]
        a = max(m.quantile(0.95) for g in dists for row in g for m in row)
        cut = [[[m.truncate_at(a) for m in row] for row in g] for g in dists]
        goals = [GameMatrix.from_derivs([[gaussian_kde_derivs(m, a, 6) for m in row] for row in g]) for g in cut]
        res = solve_mgss(MultiGoalGame(goals, (0.5, 0.5)), epsilon=1e-2)
        for g in range(2):
            out = mixture_payoff(cut[g], res.x_star, res.y_stars[g], cutoff=a, order=6)
            assert out.derivs.coeffs == pytest.approx(res.assurances[g].coeffs, rel=1e-10)
            for k in range(1, 6):
                expected = math.fsum(res.x_star[r] * res.y_stars[g][c] * moment(cut[g][r][c], k)
                                     for r in range(2) for c in range(2))
                assert abs(moment(out.mixture, k) - expected) <= 1e-8 * abs(expected)


goal_st = st.lists(st.lists(st.integers(0, 9).map(float), min_size=3, max_size=3), min_size=2, max_size=2)


@settings(max_examples=30, deadline=None)
@given(st.lists(goal_st, min_size=1, max_size=3), st.sampled_from([2.0**e for e in range(-4, 5)]))
def test_weight_rescaling_keeps_strategy(goals, c):
    # dyadic weights keep the renormalization exact
    raw = [2.0 ** -(i + 1) for i in range(len(goals))]
    raw[-1] *= 2
    scaled = [w * c for w in raw]
    total = math.fsum(scaled)
    r1 = solve_mgss(MultiGoalGame([reals(g) for g in goals], raw), max_iters=400)
    r2 = solve_mgss(MultiGoalGame([reals(g) for g in goals], [w / total for w in scaled]), max_iters=400)
    assert r1.x_star.tobytes() == r2.x_star.tobytes()


@settings(max_examples=30, deadline=None)
@given(st.lists(goal_st, min_size=1, max_size=4))
def test_compound_is_zero_sum(goals):
    d = len(goals)
    game = MultiGoalGame([reals(g) for g in goals])
    c = build_compound(game)
    assert verify_zero_sum(c)
    assert len(c.opponents) == d
