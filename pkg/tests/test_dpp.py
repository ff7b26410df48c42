# -*- coding: utf-8 -*-
#
# This file is part of Divsamp.
#
# Divsamp is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# Divsamp is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with Divsamp.  If not, see <http://www.gnu.org/licenses/>.

import math

import numpy as np
import pytest

from conftest import random_psd
from divsamp.dpp import (DppKernel, DuplicateIndices, GroundSet, GroundSetTooLarge, KernelConfig,
                         KernelNotPSD, brute_force_oracle, build_kernel, build_quality,
                         build_similarity, dpp_log_prob, dpp_nll, expected_cardinality,
                         expected_cardinality_trace, greedy_map, greedy_map_steps, log_normalizer,
                         quality_radius)
from divsamp.util import InvalidParameter

DIAG = DppKernel.from_matrix(np.diag([3.0, 1.0]))

class TestSimilarity:

    def test_unit_diagonal(self, rng):
        S = build_similarity(rng.normal(size=(5, 4)), 0.7)
        np.testing.assert_array_equal(S.diagonal(), 1.0)

    def test_ln2(self):
        items = np.array([[0.0], [math.sqrt(math.log(2))]])
        assert build_similarity(items, 1.0)[0, 1] == pytest.approx(0.5)

    def test_scale(self):
        items = np.array([[0.0, 0.0], [0.5, 0.5]])
        assert build_similarity(items, 2.0)[0, 1] == pytest.approx(math.exp(-1))

    def test_non_finite(self):
        with pytest.raises(InvalidParameter):
            build_similarity(np.array([[0.0], [np.nan]]), 1.0)

class TestQuality:

    def test_radius_two_dims(self):
        assert quality_radius(2, 0.9) ** 2 == pytest.approx(-2 * math.log(0.1))

    def test_radius_small_rho(self):
        assert quality_radius(2, 1e-12) < 1e-5

    def test_radius_one_sigma(self):
        assert quality_radius(1, 0.6827) == pytest.approx(1.0, abs=1e-3)

    def test_radius_monotone(self):
        radii = [quality_radius(3, rho) for rho in (0.1, 0.5, 0.9, 0.99)]
        assert radii == sorted(radii)

    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.5])
    def test_radius_bounds(self, rho):
        with pytest.raises(InvalidParameter):
            quality_radius(2, rho)

    def test_origin(self):
        config = KernelConfig(base_quality=2.5)
        assert build_quality(np.zeros((1, 2)), config)[0] == 2.5

    def test_boundary(self):
        config = KernelConfig(base_quality=2.0)
        z = np.array([[config.radius, 0.0]])
        assert build_quality(z, config)[0] == pytest.approx(2.0)

    def test_outside(self):
        config = KernelConfig(base_quality=2.0)
        z = np.array([[math.sqrt(config.radius ** 2 + 1), 0.0]])
        assert build_quality(z, config)[0] == pytest.approx(2.0 * math.exp(-1))

class TestKernel:

    def test_single_item(self):
        ground = GroundSet(np.ones((1, 6)), np.array([[3.0, 0.0]]))
        config = KernelConfig()
        kernel = build_kernel(ground, config)
        r = build_quality(ground.latents, config)[0]
        np.testing.assert_allclose(kernel.L, [[r * r]])

    def test_duplicates(self):
        ground = GroundSet(np.ones((2, 6)), np.zeros((2, 2)))
        kernel = build_kernel(ground, KernelConfig(base_quality=1.5))
        np.testing.assert_allclose(kernel.L, 2.25 * np.ones((2, 2)))
        np.testing.assert_allclose(kernel.eigvals, [0.0, 4.5], atol=1e-12)

    def test_far_items(self):
        ground = GroundSet(np.array([[0.0], [1e3]]), np.zeros((2, 2)))
        kernel = build_kernel(ground, KernelConfig())
        r = np.array([2.0, 1.0])
        L = np.outer(r, r) * kernel.S
        np.testing.assert_allclose(L, np.diag([4.0, 1.0]))

    def test_symmetric(self, rng):
        ground = GroundSet(rng.normal(size=(6, 4)), rng.normal(size=(6, 2)) * 2)
        kernel = build_kernel(ground, KernelConfig(sim_scale=0.3))
        np.testing.assert_array_equal(kernel.L, kernel.L.T)

    def test_not_psd(self):
        with pytest.raises(KernelNotPSD):
            DppKernel.from_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

class TestCardinality:

    def test_identity(self):
        assert expected_cardinality(DppKernel.from_matrix(np.eye(2))) == pytest.approx(1.0)

    def test_zero(self):
        assert expected_cardinality(DppKernel.from_matrix(np.zeros((3, 3)))) == 0.0

    def test_diagonal(self):
        assert expected_cardinality(DIAG) == pytest.approx(1.25)
        assert expected_cardinality_trace(DIAG) == pytest.approx(1.25)

    def test_three_way_agreement(self, rng):
        for _ in range(200):
            size = int(rng.integers(1, 11))
            rank = int(rng.integers(1, size + 1))
            kernel = DppKernel.from_matrix(random_psd(rng, size, rank))

            oracle = brute_force_oracle(kernel)
            normalization = np.linalg.det(kernel.L + np.eye(size))
            assert oracle["normalization"] == pytest.approx(normalization, rel=1e-8)
            assert expected_cardinality(kernel) == pytest.approx(oracle["expected_card"], rel=1e-8)
            assert expected_cardinality_trace(kernel) == pytest.approx(oracle["expected_card"],
                                                                       rel=1e-8)

    def test_quality_scaling(self, rng):
        for _ in range(100):
            L = random_psd(rng, int(rng.integers(1, 8)))
            base = expected_cardinality(DppKernel.from_matrix(L))
            for c in (1.5, 2.0, 4.0):
                assert expected_cardinality(DppKernel.from_matrix(c * c * L)) > base

    def test_log_normalizer(self):
        assert log_normalizer(DIAG) == pytest.approx(math.log(8))

class TestLogProb:

    def test_empty(self):
        assert dpp_log_prob(DIAG, []) == pytest.approx(-math.log(8))

    def test_singleton(self):
        assert dpp_log_prob(DIAG, [0]) == pytest.approx(math.log(3 / 8))

    def test_duplicates_zero_probability(self):
        kernel = build_kernel(GroundSet(np.ones((2, 3)), np.zeros((2, 2))), KernelConfig())
        assert dpp_log_prob(kernel, [0, 1]) == -math.inf
        assert dpp_nll(kernel) == math.inf

    def test_repeated_index(self):
        with pytest.raises(DuplicateIndices):
            dpp_log_prob(DIAG, [1, 1])

    def test_probabilities_sum_to_one(self, rng):
        kernel = DppKernel.from_matrix(random_psd(rng, 4))
        subsets = [[i for i in range(4) if mask >> i & 1] for mask in range(16)]
        total = sum(math.exp(dpp_log_prob(kernel, subset)) for subset in subsets)
        assert total == pytest.approx(1.0, rel=1e-9)

class TestOracle:

    def test_diagonal(self):
        oracle = brute_force_oracle(DIAG)
        assert oracle["normalization"] == pytest.approx(8.0)
        assert oracle["expected_card"] == pytest.approx(1.25)

    def test_zero(self):
        oracle = brute_force_oracle(DppKernel.from_matrix(np.zeros((2, 2))))
        assert oracle == {"normalization": 1.0, "expected_card": 0.0}

    def test_too_large(self):
        with pytest.raises(GroundSetTooLarge):
            brute_force_oracle(DppKernel.from_matrix(np.eye(21)))

class TestGreedyMap:

    def test_diagonal(self):
        assert greedy_map(DppKernel.from_matrix(np.diag([4.0, 1.0, 0.25]))) == [0, 1]

    def test_small_qualities(self):
        assert greedy_map(DppKernel.from_matrix(0.5 * np.eye(3))) == []

    def test_duplicate_never_selected(self):
        items = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
        kernel = build_kernel(GroundSet(items, np.zeros((3, 2))), KernelConfig(base_quality=2.0))
        selected = greedy_map(kernel)
        assert not {0, 1} <= set(selected)
        assert 2 in selected

    def test_random_diagonal_law(self, rng):
        for _ in range(100):
            size = int(rng.integers(1, 9))
            diagonal = rng.choice([0.25, 0.5, 1.0, 2.0, 3.0], size=size)
            expected = sorted((i for i in range(size) if diagonal[i] >= 1.0),
                              key=lambda i: (-diagonal[i], i))
            assert greedy_map(DppKernel.from_matrix(np.diag(diagonal))) == expected

    def test_gains_sum_to_log_det(self, rng):
        for _ in range(30):
            size = int(rng.integers(2, 9))
            kernel = DppKernel.from_matrix(random_psd(rng, size) * rng.uniform(1.0, 6.0))
            normalizer = log_normalizer(kernel)
            selected = []
            total = 0.0
            for item, gain in greedy_map_steps(kernel):
                assert gain >= 0
                selected.append(item)
                total += gain
                assert total == pytest.approx(dpp_log_prob(kernel, selected) + normalizer,
                                              rel=1e-9, abs=1e-9)
            assert selected == greedy_map(kernel)

    def test_permutation(self, rng):
        for _ in range(30):
            size = int(rng.integers(2, 9))
            L = random_psd(rng, size) * rng.uniform(1.0, 6.0)
            permutation = rng.permutation(size)
            selected = greedy_map(DppKernel.from_matrix(L))
            permuted = greedy_map(DppKernel.from_matrix(L[np.ix_(permutation, permutation)]))
            # item i of the permuted kernel is item permutation[i] of the original one
            assert [int(permutation[i]) for i in permuted] == selected

    def test_tiny_diagonal(self):
        kernel = DppKernel.from_matrix(np.diag([1e-13, 1e-13]))
        assert greedy_map(kernel) == []
        assert dpp_log_prob(kernel, [0]) == pytest.approx(math.log(1e-13) - log_normalizer(kernel))
        assert dpp_log_prob(kernel, [0, 1]) == pytest.approx(2 * math.log(1e-13)
                                                             - log_normalizer(kernel))
