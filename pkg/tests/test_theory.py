"""Cost recursion, its Monte Carlo validator, and the similarity bound."""

import numpy as np
import pytest

from hshap import (
    ExplainerConfig,
    InvalidParams,
    PixelMilOracle,
    ZeroVector,
    cosine_similarity,
    exact_mil_map,
    expected_visited_nodes,
    explain_depth_first,
    similarity_lower_bound,
    simulate_visited_nodes,
)
from hshap.theory import MilParams

from conftest import random_importance


class TestExpectedVisitedNodes:
    def test_no_important_features_visits_only_the_root(self):
        assert expected_visited_nodes(MilParams(n=64, gamma=2, rho=0.0)) == 1.0

    def test_all_important_visits_the_full_tree(self):
        assert expected_visited_nodes(MilParams(n=64, gamma=2, rho=1.0)) == 127.0
        assert expected_visited_nodes(MilParams(n=64, gamma=4, rho=1.0)) == 85.0

    def test_hand_recursion_small_case(self):
        # n=4, gamma=2, rho=1/2: the root empty-child probability is 1/4 and
        # the conditioned child recursion gives 7/3, so 1 + 2*(3/4)*(7/3).
        value = expected_visited_nodes(MilParams(n=4, gamma=2, rho=0.5))
        assert value == pytest.approx(4.5, abs=1e-12)

    def test_monotone_in_rho(self):
        grid = [0.0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0]
        values = [
            expected_visited_nodes(MilParams(n=64, gamma=2, rho=r)) for r in grid
        ]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_invalid_params(self):
        with pytest.raises(InvalidParams):
            MilParams(n=64, gamma=2, rho=1.5)
        with pytest.raises(InvalidParams):
            MilParams(n=0, gamma=2, rho=0.5)

    def test_non_power_sizes_use_real_exponents(self):
        # awkward sizes fall back to real-valued exponents; the ceiling is
        # the complete tree of the padded depth (2^(ceil(log2 n)+1) - 1)
        low = expected_visited_nodes(MilParams(n=100, gamma=2, rho=0.1))
        high = expected_visited_nodes(MilParams(n=100, gamma=2, rho=0.9))
        full = expected_visited_nodes(MilParams(n=100, gamma=2, rho=1.0))
        assert 1.0 < low < high < full == 255.0


class TestSimulation:
    def test_rho_zero_is_exactly_one(self):
        result = simulate_visited_nodes(MilParams(n=64, gamma=2, rho=0.0), 50, seed=0)
        assert result.mean == 1.0
        assert result.stderr == 0.0

    def test_rho_one_is_exactly_full_tree(self):
        result = simulate_visited_nodes(MilParams(n=64, gamma=2, rho=1.0), 50, seed=0)
        assert result.mean == 127.0
        assert result.stderr == 0.0

    def test_matches_formula_within_three_stderr(self):
        params = MilParams(n=64, gamma=2, rho=0.05)
        result = simulate_visited_nodes(params, 2000, seed=42)
        formula = expected_visited_nodes(params)
        assert abs(result.mean - formula) <= max(3 * result.stderr, 0.02 * formula)

    def test_seeded_and_parallel_runs_agree(self):
        params = MilParams(n=64, gamma=2, rho=0.1)
        serial = simulate_visited_nodes(params, 200, seed=9, jobs=1)
        again = simulate_visited_nodes(params, 200, seed=9, jobs=1)
        parallel = simulate_visited_nodes(params, 200, seed=9, jobs=2)
        assert serial == again == parallel


class TestSimilarityBound:
    def test_unit_feature_size_guarantees_exact_recovery(self):
        assert similarity_lower_bound(1, 3, 64) == 1.0

    def test_everything_important(self):
        assert similarity_lower_bound(16, 64, 64) == 1.0

    def test_direct_formula(self):
        assert similarity_lower_bound(4, 1, 64) == 0.5

    def test_invalid(self):
        with pytest.raises(InvalidParams):
            similarity_lower_bound(0, 1, 64)
        with pytest.raises(InvalidParams):
            similarity_lower_bound(4, 0, 64)

    def test_bound_holds_on_randomized_instances(self):
        rng = np.random.default_rng(10)
        for _ in range(60):
            s = int(rng.choice([1, 4, 16]))
            k = int(rng.integers(1, 9))
            gamma = int(rng.choice([2, 4]))
            shape = (1, 64) if gamma == 2 else (8, 8)
            importance = random_importance(rng, *shape, k)
            saliency, _ = explain_depth_first(
                np.zeros(shape),
                PixelMilOracle(importance),
                ExplainerConfig(gamma=gamma, min_feature_size=s),
            )
            similarity = cosine_similarity(
                exact_mil_map(importance), saliency.phi
            )
            assert similarity >= similarity_lower_bound(s, k, 64) - 1e-12

    def test_exact_recovery_at_unit_size(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            importance = random_importance(rng, 8, 8, int(rng.integers(1, 9)))
            saliency, _ = explain_depth_first(
                np.zeros((8, 8)),
                PixelMilOracle(importance),
                ExplainerConfig(gamma=4),
            )
            assert cosine_similarity(exact_mil_map(importance), saliency.phi) == 1.0


class TestCosine:
    def test_identical(self):
        v = np.array([0.2, 0.3, 0.5])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_indicators(self):
        assert cosine_similarity([1, 0, 0], [0, 1, 0]) == 0.0

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine_similarity([0, 0], [1, 0])


class TestExactMap:
    def test_two_of_four(self):
        np.testing.assert_array_equal(
            exact_mil_map([0, 1, 0, 1]), [0.0, 0.5, 0.0, 0.5]
        )

    def test_all_zero(self):
        np.testing.assert_array_equal(exact_mil_map(np.zeros(6)), np.zeros(6))

    def test_all_ones(self):
        np.testing.assert_array_equal(exact_mil_map(np.ones(5)), np.full(5, 0.2))
