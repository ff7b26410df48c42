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

from divsamp.trajectory import (Context, Dataset, DuplicateExampleId, EmptyGroundTruth,
                                EmptySampleSet, Example, SampleSet, TooFewSamples, ade, apd,
                                asd_fsd, build_multimodal_gt, evaluate, fde, mm_metrics,
                                traj_distance)
from divsamp.util import ShapeMismatch

GT = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])

def offset(trajectory, vector):
    return trajectory + np.asarray(vector, dtype=np.float64)

class TestTrajDistance:

    def test_identical(self):
        assert traj_distance(GT, GT) == 0.0

    def test_unit_entries(self):
        assert traj_distance(np.zeros((3, 2)), np.ones((3, 2))) == pytest.approx(math.sqrt(6))

    def test_final_step(self):
        other = GT.copy()
        other[-1] += (3.0, 4.0)
        assert traj_distance(GT, other) == pytest.approx(5.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            traj_distance(GT, GT[:2])

class TestDisplacementErrors:

    def test_ade_exact_sample(self):
        assert ade([GT], GT) == 0.0

    def test_ade_unit_offset(self):
        assert ade([offset(GT, (1.0, 0.0))], GT) == pytest.approx(1.0)

    def test_ade_min_over_samples(self):
        samples = [offset(GT, (0.0, 2.0)), offset(GT, (1.0, 0.0))]
        assert ade(samples, GT) == pytest.approx(1.0)

    def test_fde_exact_sample(self):
        assert fde([GT], GT) == 0.0

    def test_fde_final_offset(self):
        sample = GT.copy()
        sample[-1] += (0.0, 3.0)
        assert fde([sample], GT) == pytest.approx(3.0)

    def test_fde_min_over_samples(self):
        first = GT.copy()
        first[-1] += (2.0, 0.0)
        second = GT.copy()
        second[-1] += (0.0, 0.5)
        assert fde([first, second], GT) == pytest.approx(0.5)

    def test_empty_sample_set(self):
        with pytest.raises(EmptySampleSet):
            ade(np.zeros((0, 3, 2)), GT)

class TestDiversity:

    def test_apd_identical(self):
        assert apd([GT, GT]) == 0.0

    def test_apd_pair(self):
        other = offset(GT, (1.0, 1.0))
        assert apd([GT, other]) == pytest.approx(traj_distance(GT, other))

    def test_apd_collinear(self):
        d = 0.7
        samples = [offset(GT, (i * d / math.sqrt(3), 0.0)) for i in range(3)]
        assert apd(samples) == pytest.approx(4 * d / 3)

    def test_apd_needs_two_samples(self):
        with pytest.raises(TooFewSamples):
            apd([GT])

    def test_asd_identical(self):
        assert asd_fsd([GT, GT, GT]) == (0.0, 0.0)

    def test_asd_constant_offset(self):
        asd, fsd = asd_fsd([GT, offset(GT, (0.0, 1.5))])
        assert asd == pytest.approx(1.5)
        assert fsd == pytest.approx(1.5)

    def test_asd_duplicate(self):
        far = offset(GT, (0.0, 2.0))
        asd, _ = asd_fsd([GT, far, far])
        # only the first sample has a non zero nearest neighbour distance
        assert asd == pytest.approx(2.0 / 3)

    def test_asd_needs_two_samples(self):
        with pytest.raises(TooFewSamples):
            asd_fsd(SampleSet(GT[np.newaxis]))

def dataset_from_pasts(pasts):
    examples = [Example(i, Context(np.array([past])), offset(GT, (0.0, float(i))))
                for i, past in enumerate(pasts)]
    return Dataset(examples)

class TestMultimodalGroundTruth:

    def test_eps_zero(self):
        dataset = dataset_from_pasts([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
        gt_sets = build_multimodal_gt(dataset, 0.0)
        for example in dataset:
            assert len(gt_sets[example.id]) == 1
            np.testing.assert_array_equal(gt_sets[example.id][0], example.future)

    def test_identical_contexts(self):
        dataset = dataset_from_pasts([(0.0, 0.0)] * 3)
        gt_sets = build_multimodal_gt(dataset, 0.1)
        assert all(len(gt_set) == 3 for gt_set in gt_sets.values())

    def test_anchor_rule(self):
        dataset = dataset_from_pasts([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
        gt_sets = build_multimodal_gt(dataset, 1.0)

        def members(example_id):
            return sorted(int(future[0, 1]) for future in gt_sets[example_id])

        assert members(0) == [0, 1]
        assert members(1) == [0, 1, 2]
        assert members(2) == [1, 2]

    def test_mm_singleton(self):
        samples = [offset(GT, (0.3, 0.0)), offset(GT, (0.0, 1.0))]
        assert mm_metrics(samples, [GT]) == pytest.approx((ade(samples, GT), fde(samples, GT)))

    def test_mm_copies(self):
        samples = [offset(GT, (0.3, 0.0))]
        assert mm_metrics(samples, [GT, GT]) == pytest.approx((0.3, 0.3))

    def test_mm_average(self):
        mmade, _ = mm_metrics([GT], [GT, offset(GT, (1.0, 0.0))])
        assert mmade == pytest.approx(0.5)

    def test_mm_empty(self):
        with pytest.raises(EmptyGroundTruth):
            mm_metrics([GT], [])

class TestDataset:

    def test_duplicate_ids(self):
        example = Example(0, Context(np.zeros((2, 2))), GT)
        with pytest.raises(DuplicateExampleId):
            Dataset([example, example])

    def test_shape_mismatch(self):
        first = Example(0, Context(np.zeros((2, 2))), GT)
        second = Example(1, Context(np.zeros((2, 2))), GT[:2])
        with pytest.raises(ShapeMismatch):
            Dataset([first, second])

    def test_meta(self, crossroad_data):
        assert crossroad_data.meta["T"] == 3
        assert crossroad_data.meta["H"] == 2
        assert crossroad_data.meta["D"] == 2

class TestEvaluate:

    def test_repeated_ground_truth(self, crossroad_data):
        sample_sets = {example.id: SampleSet(np.stack([example.future] * 3), example.id)
                       for example in crossroad_data}
        report = evaluate(crossroad_data, sample_sets, 0.0)
        assert report.ade == 0.0
        assert report.fde == 0.0
        assert report.apd == 0.0
        assert len(report.rows) == len(crossroad_data)

    def test_eps_zero_mmade_is_ade(self, crossroad_data, rng):
        sample_sets = {example.id: SampleSet(example.future + rng.normal(size=(4, 3, 2)), example.id)
                       for example in crossroad_data}
        report = evaluate(crossroad_data, sample_sets, 0.0)
        for row in report.rows:
            assert row["mmade"] == row["ade"]
            assert row["mmfde"] == row["fde"]

    def test_single_sample(self, crossroad_data, rng):
        sample_sets = {example.id: SampleSet(example.future[np.newaxis] + rng.normal(size=(1, 3, 2)),
                                             example.id)
                       for example in crossroad_data}
        report = evaluate(crossroad_data, sample_sets, 0.0)
        for row in report.rows:
            assert (row["apd"], row["asd"], row["fsd"]) == (None, None, None)
            assert row["ade"] > 0
        assert report.apd is None
        assert report.as_dict()["fsd"] is None
        assert report.ade == pytest.approx(np.mean([row["ade"] for row in report.rows]))

    def test_mixed_sizes(self, crossroad_data):
        sample_sets = {}
        for example in crossroad_data:
            futures = np.stack([example.future, offset(example.future, (0.0, 1.0 + example.id))])
            sample_sets[example.id] = SampleSet(futures[:1 + example.id % 2], example.id)
        report = evaluate(crossroad_data, sample_sets, 0.0)
        defined = [row["apd"] for row in report.rows if row["apd"] is not None]
        assert len(defined) == sum(len(samples) == 2 for samples in sample_sets.values())
        assert report.apd == pytest.approx(np.mean(defined))

def all_metrics(samples, gt, gt_set):
    return ((apd(samples),) + asd_fsd(samples) + (ade(samples, gt), fde(samples, gt))
            + mm_metrics(samples, gt_set))

class TestMetricProperties:
    """
    Properties holding for random sample sets
    """

    @pytest.fixture
    def instances(self, rng):
        return [(rng.normal(size=(int(rng.integers(2, 8)), 4, 2)), rng.normal(size=(4, 2)),
                 list(rng.normal(size=(int(rng.integers(1, 4)), 4, 2))))
                for _ in range(30)]

    def test_permutation(self, instances, rng):
        for samples, gt, gt_set in instances:
            shuffled = samples[rng.permutation(len(samples))]
            assert all_metrics(shuffled, gt, gt_set) == pytest.approx(
                all_metrics(samples, gt, gt_set), rel=1e-12, abs=1e-12)

    def test_appending_a_sample(self, instances, rng):
        for samples, gt, gt_set in instances:
            extended = np.concatenate([samples, rng.normal(size=(1, 4, 2))])
            assert ade(extended, gt) <= ade(samples, gt)
            assert fde(extended, gt) <= fde(samples, gt)
            for before, after in zip(mm_metrics(samples, gt_set), mm_metrics(extended, gt_set)):
                assert after <= before

    def test_translation(self, instances, rng):
        for samples, gt, gt_set in instances:
            shift = rng.normal(size=2) * 10
            moved = all_metrics(samples + shift, gt + shift, [future + shift for future in gt_set])
            np.testing.assert_allclose(moved, all_metrics(samples, gt, gt_set), rtol=0, atol=1e-10)
