"""Exact Shapley solver: frozen examples, axioms, evaluation accounting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hshap import (
    GameSpec,
    PixelMilOracle,
    PlayerLimitExceeded,
    brute_force_shapley,
    node_shapley,
    shapley_weights,
    singleton_players,
)
from hshap.games import shapley_from_values

from conftest import CountingOracle, TableOracle, mil_table, shapley_by_enumeration


def indicator_game(p, important):
    """p singleton players on a 1 x p grid; score 1 iff an important one is kept."""
    flat = np.zeros(p, dtype=bool)
    flat[list(important)] = True
    oracle = PixelMilOracle(flat.reshape(1, -1))
    return GameSpec(singleton_players(1, p), oracle, np.zeros((1, 1, p)))


class TestBruteForce:
    def test_single_important_player_takes_everything(self):
        result = brute_force_shapley(indicator_game(3, {1}))
        np.testing.assert_array_equal(result.values, [0.0, 1.0, 0.0])
        assert result.evaluations_used == 8

    def test_two_equally_important_players_split_evenly(self):
        # By hand over the 4 coalitions: each player's marginal contribution
        # is 1 only against the empty coalition, which carries weight 1/2.
        result = brute_force_shapley(indicator_game(2, {0, 1}))
        np.testing.assert_array_equal(result.values, [0.5, 0.5])
        enumerated = shapley_by_enumeration(
            2, lambda s: 1.0 if s & {0, 1} else 0.0
        )
        np.testing.assert_allclose(result.values, enumerated, atol=1e-15)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_k_important_players_get_one_over_k(self, k):
        important = set(range(k))
        result = brute_force_shapley(indicator_game(4, important))
        expected = [1.0 / k if i in important else 0.0 for i in range(4)]
        np.testing.assert_allclose(result.values, expected, atol=1e-12)
        enumerated = shapley_by_enumeration(
            4, lambda s: 1.0 if s & important else 0.0
        )
        np.testing.assert_allclose(result.values, enumerated, atol=1e-12)

    def test_player_limit(self):
        oracle = PixelMilOracle(np.zeros((1, 21), dtype=bool))
        game = GameSpec(singleton_players(1, 21), oracle, np.zeros((1, 1, 21)))
        with pytest.raises(PlayerLimitExceeded):
            brute_force_shapley(game)

    def test_each_coalition_evaluated_exactly_once(self):
        inner = TableOracle(mil_table(5, {2}))
        oracle = CountingOracle(inner)
        game = GameSpec(singleton_players(1, 5), oracle, np.zeros((1, 1, 5)))
        result = brute_force_shapley(game)
        assert result.evaluations_used == 32
        assert oracle.inputs_seen == 32
        assert sorted(oracle.coalitions_seen) == list(range(32))


class TestNodeGames:
    def test_single_important_quadrant(self):
        oracle = CountingOracle(TableOracle(mil_table(4, {2})))
        game = GameSpec(singleton_players(2, 2), oracle, np.zeros((1, 2, 2)))
        result = node_shapley(game)
        np.testing.assert_array_equal(result.values, [0.0, 0.0, 1.0, 0.0])
        assert result.evaluations_used == 16
        assert oracle.batches == 1  # one batch covers all 16 coalitions

    def test_two_player_game(self):
        oracle = TableOracle(mil_table(2, {0, 1}))
        game = GameSpec(singleton_players(1, 2), oracle, np.zeros((1, 1, 2)))
        result = node_shapley(game)
        np.testing.assert_array_equal(result.values, [0.5, 0.5])
        assert result.evaluations_used == 4

    def test_constant_game_is_all_zero(self):
        oracle = TableOracle(np.zeros(16))
        game = GameSpec(singleton_players(2, 2), oracle, np.zeros((1, 2, 2)))
        result = node_shapley(game)
        np.testing.assert_array_equal(result.values, np.zeros(4))

    @pytest.mark.parametrize("p", [2, 4])
    def test_matches_brute_force_bit_for_bit(self, p):
        rng = np.random.default_rng(11)
        table = rng.normal(size=1 << p)
        game = GameSpec(
            singleton_players(1, p), TableOracle(table), np.zeros((1, 1, p))
        )
        node = node_shapley(game)
        brute = brute_force_shapley(game)
        assert np.array_equal(node.values, brute.values)


class TestAxioms:
    @given(st.integers(2, 6), st.integers(0, 2**30))
    @settings(max_examples=60, deadline=None)
    def test_efficiency(self, p, seed):
        rng = np.random.default_rng(seed)
        table = rng.normal(size=1 << p)
        phi = shapley_from_values(table, p)
        grand = table[(1 << p) - 1] - table[0]
        assert abs(phi.sum() - grand) <= 1e-9

    @given(st.integers(2, 6), st.sets(st.integers(0, 5), max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_nullity_is_exact(self, p, important):
        important = {i for i in important if i < p}
        phi = shapley_from_values(mil_table(p, important), p)
        for i in range(p):
            if i not in important:
                assert phi[i] == 0.0

    @given(st.integers(3, 6), st.integers(0, 2**30))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_is_exact_for_indicator_games(self, p, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, p + 1))
        important = set(rng.choice(p, size=k, replace=False).tolist())
        phi = shapley_from_values(mil_table(p, important), p)
        values = {phi[i] for i in important}
        assert len(values) == 1  # interchangeable players, identical floats

    @given(st.integers(2, 6), st.integers(0, 2**30))
    @settings(max_examples=40, deadline=None)
    def test_matches_independent_enumeration(self, p, seed):
        rng = np.random.default_rng(seed)
        table = rng.normal(size=1 << p)

        def value_of_set(members):
            bits = sum(1 << i for i in members)
            return float(table[bits])

        phi = shapley_from_values(table, p)
        expected = shapley_by_enumeration(p, value_of_set)
        np.testing.assert_allclose(phi, expected, atol=1e-10)


def test_weights_sum_to_one_over_full_enumeration():
    # Summing w(|C|) over all subsets of the other players gives exactly 1,
    # hence phi is a convex combination of marginal contributions.
    for p in range(1, 10):
        weights = shapley_weights(p)
        from math import comb

        total = sum(comb(p - 1, size) * weights[size] for size in range(p))
        assert total == pytest.approx(1.0, abs=1e-12)
