"""F1 scoring and top-k ablation curves."""

import numpy as np
import pytest

from hshap import (
    InvalidParams,
    LengthMismatch,
    PixelMilOracle,
    ablate_topk,
    exact_mil_map,
    f1_score,
)
from hshap.metrics import topk_order


class TestF1:
    def test_exact_map_scores_one(self):
        truth = np.zeros(32, dtype=bool)
        truth[[4, 9, 20]] = True
        report = f1_score(exact_mil_map(truth), truth)
        assert report.f1 == 1.0
        assert report.precision == 1.0
        assert report.recall == 1.0

    def test_zero_map_scores_zero(self):
        truth = np.zeros(16, dtype=bool)
        truth[3] = True
        assert f1_score(np.zeros(16), truth).f1 == 0.0

    def test_equal_area_false_positive_region(self):
        # predicted marks the truth plus an equal-sized false block:
        # precision 1/2, recall 1, f1 = 2/3
        truth = np.zeros(20, dtype=bool)
        truth[:5] = True
        phi = np.zeros(20)
        phi[:10] = 0.1
        report = f1_score(phi, truth)
        assert report.precision == 0.5
        assert report.recall == 1.0
        assert report.f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            f1_score(np.zeros(4), np.zeros(5, dtype=bool))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(16)
        truth = rng.random(30) < 0.3
        phi = np.where(truth, 0.05, 0.0) + rng.uniform(0, 1e-8, size=30)
        perm = rng.permutation(30)
        assert f1_score(phi, truth).f1 == f1_score(phi[perm], truth[perm]).f1

    def test_positive_rescaling_invariance(self):
        truth = np.zeros(16, dtype=bool)
        truth[[1, 2]] = True
        phi = exact_mil_map(truth)
        assert f1_score(phi, truth).f1 == f1_score(7.5 * phi, truth).f1


class TestTopKOrder:
    def test_descending_with_index_ties(self):
        phi = np.array([0.2, 0.5, 0.2, 0.9])
        np.testing.assert_array_equal(topk_order(phi), [3, 1, 0, 2])

    def test_all_ties_resolve_by_index(self):
        np.testing.assert_array_equal(topk_order(np.ones(5)), np.arange(5))


class TestAblation:
    def setup_method(self):
        self.truth = np.zeros(64, dtype=bool)
        self.truth[[5, 17, 40]] = True
        self.oracle = PixelMilOracle(self.truth.reshape(1, 64))
        self.x = np.arange(64.0)
        self.phi = exact_mil_map(self.truth)

    def test_k_zero_is_the_raw_score(self):
        curve = ablate_topk(self.x, self.phi, self.oracle, None, [0])
        assert curve.scores == (1.0,)

    def test_exact_map_steps_at_the_important_count(self):
        curve = ablate_topk(self.x, self.phi, self.oracle, None, range(0, 8))
        assert curve.scores == (1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def test_monotone_nonincreasing_for_indicator_maps(self):
        curve = ablate_topk(self.x, self.phi, self.oracle, None, range(0, 64, 4))
        assert all(b <= a for a, b in zip(curve.scores, curve.scores[1:]))

    def test_ks_must_increase(self):
        with pytest.raises(InvalidParams):
            ablate_topk(self.x, self.phi, self.oracle, None, [0, 2, 2])

    def test_k_beyond_feature_count_rejected(self):
        with pytest.raises(InvalidParams):
            ablate_topk(self.x, self.phi, self.oracle, None, [0, 100])
