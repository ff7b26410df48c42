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

import csv
import json

import numpy as np
import pytest

from divsamp import files
from divsamp.trajectory import METRICS, SampleSet

class TestDatasetFiles:

    def test_reload(self, tmp_path, crossroad_data):
        path = str(tmp_path / "dataset.jsonl")
        files.write_dataset(path, crossroad_data)
        dataset = files.read_dataset(path)

        assert dataset.ids() == crossroad_data.ids()
        for original, reloaded in zip(crossroad_data, dataset):
            np.testing.assert_array_equal(reloaded.context.past, original.context.past)
            np.testing.assert_array_equal(reloaded.future, original.future)
            assert reloaded.meta == original.meta

    def test_one_line_per_example(self, tmp_path, crossroad_data):
        path = tmp_path / "dataset.jsonl"
        files.write_dataset(str(path), crossroad_data)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(crossroad_data)
        assert json.loads(lines[0])["format_version"] == 1

    def test_wrong_version(self, tmp_path):
        path = tmp_path / "dataset.jsonl"
        path.write_text('{"format_version": 2, "id": 0, "past": [[0, 0]], "future": [[1, 0]]}\n')
        with pytest.raises(files.FormatError):
            files.read_dataset(str(path))

    def test_missing_field(self, tmp_path):
        path = tmp_path / "dataset.jsonl"
        path.write_text('{"format_version": 1, "id": 0, "past": [[0, 0]]}\n')
        with pytest.raises(files.FormatError) as info:
            files.read_dataset(str(path))
        assert info.value.line == 1

    def test_broken_line(self, tmp_path):
        path = tmp_path / "dataset.jsonl"
        path.write_text('{"format_version": 1, "id": 0, "past": [[0, 0]], "future": [[1, 0]]}\n'
                        '{"format_version": 1, "id": 1,\n')
        with pytest.raises(files.FormatError) as info:
            files.read_dataset(str(path))
        assert info.value.line == 2

    def test_empty(self, tmp_path):
        path = tmp_path / "dataset.jsonl"
        path.write_text("")
        with pytest.raises(files.FormatError):
            files.read_dataset(str(path))

class TestSampleFiles:

    def test_reload(self, tmp_path, rng):
        path = str(tmp_path / "samples.jsonl")
        sample_sets = [SampleSet(rng.normal(size=(4, 3, 2)), 7, (0, 2)),
                       SampleSet(rng.normal(size=(4, 3, 2)), 3)]
        files.write_samples(path, sample_sets)
        reloaded = files.read_samples(path)

        assert sorted(reloaded) == [3, 7]
        np.testing.assert_array_equal(reloaded[7].samples, sample_sets[0].samples)
        assert reloaded[7].selected == (0, 2)
        assert reloaded[3].selected is None

    def test_duplicate_id(self, tmp_path):
        path = str(tmp_path / "samples.jsonl")
        sample_set = SampleSet(np.zeros((2, 3, 2)), 1)
        files.write_samples(path, [sample_set, sample_set])
        with pytest.raises(files.FormatError):
            files.read_samples(path)

class TestDocuments:

    def test_json(self, tmp_path):
        path = str(tmp_path / "model.json")
        files.write_json(path, {"mode": "dsf", "K": 3})
        assert files.read_json(path) == {"mode": "dsf", "K": 3, "format_version": 1}

    def test_not_finite(self, tmp_path):
        with pytest.raises(ValueError):
            files.write_json(str(tmp_path / "report.json"), {"loss": float("nan")})

    def test_unversioned(self, tmp_path):
        path = tmp_path / "decoder.json"
        path.write_text('{"z_grid": [[0, 1]], "T": 1, "D": 1, "table": [[[0]], [[1]]]}')
        with pytest.raises(files.FormatError):
            files.read_json(str(path))
        assert files.read_json(str(path), versioned=False)["T"] == 1

    def test_metrics_csv(self, tmp_path):
        path = tmp_path / "metrics.csv"
        row = dict({metric: 0.1 * i for i, metric in enumerate(METRICS)}, id=4, method="dsf")
        files.write_metrics_csv(str(path), [row])
        with open(path, newline="") as fileobj:
            table = list(csv.reader(fileobj))
        assert table[0] == ["id", "method"] + list(METRICS)
        assert table[1][:2] == ["4", "dsf"]
        assert [float(value) for value in table[1][2:]] == [row[metric] for metric in METRICS]
