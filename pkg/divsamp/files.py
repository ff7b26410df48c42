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

"""
Module handling the reading and writing of the data files

    - datasets and samples are JSON lines files, one example per line:
      {"format_version": 1, "id": 0, "past": [[...]], "future": [[...]],
       "features": [...], "meta": {...}}
      {"format_version": 1, "id": 0, "samples": [[[...]]], "selected": [...] or null}
    - models, decoders and reports are JSON documents with a top-level
      "format_version" field
    - per example metrics are CSV tables with the columns id, method and
      the metrics in the order of trajectory.METRICS
"""

import csv
import json

import numpy as np

from divsamp.trajectory import METRICS, Context, Dataset, Example, SampleSet
from divsamp.util import DivsampError

FORMAT_VERSION = 1

class FormatError(DivsampError):
    """
    Exception raised when a file does not follow its format
    """

    def __init__(self, path, reason, line=None):
        """
        Args:
            path (str): The path of the file
            reason (str): What is wrong
            line (int): The line of the error (JSON lines files)
        """
        DivsampError.__init__(self)

        self.path = path
        self.reason = reason
        self.line = line

    def __str__(self):
        where = self.path if self.line is None else "{}, ligne {}".format(self.path, self.line)
        return "Fichier invalide ({}) : {}".format(where, self.reason)

class JsonLinesFile(object):
    """
    Object used to write records in a JSON lines file

    Attrs:
        path (str): The path of the file

    Example:
        >>> with JsonLinesFile("dataset.jsonl") as jsonfile:
        ...     jsonfile.write({"id": 0, "past": [[0.0, 0.0]]})
    """
    def __init__(self, path):
        self.path = path
        self.fileobj = open(path, "w", encoding="utf-8", newline="\n")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.fileobj.close()

    def write(self, record):
        """
        Add a record, tagged with the format version, on its own line
        """
        line = dict(record)
        line["format_version"] = FORMAT_VERSION
        self.fileobj.write(json.dumps(line, sort_keys=True, allow_nan=False))
        self.fileobj.write("\n")

def _check_version(path, record, line=None):
    version = record.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(path, "version de format {!r} non gérée".format(version), line)

def read_json_lines(path):
    """
    Iterate over the (line number, record) pairs of a JSON lines file
    """
    with open(path, "r", encoding="utf-8") as fileobj:
        for number, line in enumerate(fileobj, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(path, e.msg, number)
            if not isinstance(record, dict):
                raise FormatError(path, "une ligne doit contenir un objet", number)
            _check_version(path, record, number)
            yield number, record

def write_dataset(path, dataset):
    with JsonLinesFile(path) as jsonfile:
        for example in dataset:
            jsonfile.write({
                "id": example.id,
                "past": example.context.past.tolist(),
                "future": example.future.tolist(),
                "features": example.context.features.tolist(),
                "meta": example.meta
            })

def read_dataset(path, description=""):
    """
    Returns the Dataset stored in a JSON lines file
    """
    examples = []
    for number, record in read_json_lines(path):
        try:
            context = Context(np.array(record["past"], dtype=np.float64),
                              np.array(record.get("features", []), dtype=np.float64))
            examples.append(Example(record["id"], context,
                                    np.array(record["future"], dtype=np.float64),
                                    record.get("meta", {})))
        except KeyError as e:
            raise FormatError(path, "champ {} manquant".format(e), number)
        except (TypeError, ValueError) as e:
            raise FormatError(path, str(e), number)

    if not examples:
        raise FormatError(path, "aucun exemple")
    return Dataset(examples, description or path)

def write_samples(path, sample_sets):
    """
    Write sample sets (in the given order) to a JSON lines file
    """
    with JsonLinesFile(path) as jsonfile:
        for sample_set in sample_sets:
            jsonfile.write({
                "id": sample_set.context_id,
                "samples": sample_set.samples.tolist(),
                "selected": None if sample_set.selected is None else list(sample_set.selected)
            })

def read_samples(path):
    """
    Returns the sample sets of a JSON lines file, by example id
    """
    sample_sets = {}
    for number, record in read_json_lines(path):
        try:
            example_id = int(record["id"])
            sample_set = SampleSet(np.array(record["samples"], dtype=np.float64),
                                   example_id, record.get("selected"))
        except KeyError as e:
            raise FormatError(path, "champ {} manquant".format(e), number)
        except (TypeError, ValueError) as e:
            raise FormatError(path, str(e), number)

        if example_id in sample_sets:
            raise FormatError(path, "identifiant {} en double".format(example_id), number)
        sample_sets[example_id] = sample_set
    return sample_sets

def write_json(path, document):
    """
    Write a JSON document, tagged with the format version
    """
    document = dict(document)
    document["format_version"] = FORMAT_VERSION
    with open(path, "w", encoding="utf-8", newline="\n") as fileobj:
        json.dump(document, fileobj, sort_keys=True, indent=2, allow_nan=False)
        fileobj.write("\n")

def read_json(path, versioned=True):
    """
    Returns the JSON document stored in path

    Args:
        versioned (bool): Check the format_version field
    """
    with open(path, "r", encoding="utf-8") as fileobj:
        try:
            document = json.load(fileobj)
        except json.JSONDecodeError as e:
            raise FormatError(path, e.msg, e.lineno)
    if not isinstance(document, dict):
        raise FormatError(path, "le document doit être un objet")
    if versioned:
        _check_version(path, document)
    return document

def write_metrics_csv(path, rows):
    """
    Write per example metrics

    Args:
        rows (List[dict]): One row per (method, example), with the keys
            "id", "method" and the metrics; undefined metrics (None) are
            written as empty cells
    """
    with open(path, "w", encoding="utf-8", newline="") as fileobj:
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(("id", "method") + METRICS)
        for row in rows:
            writer.writerow([row["id"], row["method"]]
                            + ["" if row[metric] is None else repr(float(row[metric]))
                               for metric in METRICS])
