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
Module defining the trajectory value types and the evaluation metrics

Trajectories are (T, D) float arrays. The metrics take the samples either
as a SampleSet or as an array of shape (K, T, D).

Conventions:
    - ADE is the per-timestep mean Euclidean pose distance, minimized over
      the samples. FDE uses the final pose only.
    - APD uses the Euclidean distance between flattened (T*D) trajectories.
    - ASD and FSD average, over the samples, the distance to the nearest
      other sample (per-timestep mean pose distance for ASD, final pose
      distance for FSD).
    - MMADE and MMFDE average ADE and FDE over the multi-modal ground truth
      set of an example: the futures of every example whose context lies
      within eps of the anchor's context (pairwise to the anchor, not a
      transitive closure).
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from divsamp.util import DivsampError, InvalidParameter, ShapeMismatch, check_finite

# Column order of the per-example tables
METRICS = ("apd", "asd", "fsd", "ade", "fde", "mmade", "mmfde")
# undefined (None) for sample sets with less than two samples
DIVERSITY_METRICS = ("apd", "asd", "fsd")

class EmptySampleSet(DivsampError):
    """
    Exception raised when a metric needs at least one sample
    """

    def __str__(self):
        return "L'ensemble d'échantillons est vide"

class TooFewSamples(DivsampError):
    """
    Exception raised when a pairwise quantity is asked for less than two samples
    """

    def __init__(self, what, count):
        DivsampError.__init__(self)

        self.what = what
        self.count = count

    def __str__(self):
        return "{what} nécessite au moins deux échantillons ({count} reçu)".format(
            what=self.what, count=self.count)

class EmptyGroundTruth(DivsampError):
    """
    Exception raised when a multi-modal ground truth set is empty
    """

    def __str__(self):
        return "L'ensemble de vérités terrain multimodal est vide"

class DuplicateExampleId(DivsampError):
    """
    Exception raised when two examples of a dataset share their id
    """

    def __init__(self, example_id):
        DivsampError.__init__(self)

        self.example_id = example_id

    def __str__(self):
        return "L'identifiant d'exemple {} apparaît plusieurs fois".format(self.example_id)

def as_trajectory(steps, what="trajectoire"):
    """
    Returns steps as a finite (T, D) float array with T, D >= 1
    """
    steps = check_finite(what, steps)
    if steps.ndim != 2 or steps.shape[0] < 1 or steps.shape[1] < 1:
        raise InvalidParameter(what, steps.shape, "doit être un tableau T×D non vide")
    return steps

@dataclass(frozen=True)
class Context(object):
    """
    Context of an example

    Attrs:
        past (np.ndarray): The past trajectory, of shape (H, D)
        features (np.ndarray): Flat vector of side information (may be empty)
    """
    past: np.ndarray
    features: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "past", as_trajectory(self.past, "past"))
        object.__setattr__(self, "features", check_finite("features", self.features).ravel())

    def vector(self):
        """
        Returns the flattened context (past trajectory followed by the features)
        """
        return np.concatenate([self.past.ravel(), self.features])

@dataclass(frozen=True)
class Example(object):
    """
    Data example: a context and the future that followed it

    Attrs:
        id (int): The id of the example, unique within a dataset
        context (Context): The context
        future (np.ndarray): The ground truth future, of shape (T, D)
        meta (dict): Free form metadata (e.g. the route of a crossroad example)
    """
    id: int
    context: Context
    future: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "future", as_trajectory(self.future, "future"))

class Dataset(object):
    """
    Ordered, shape-homogeneous list of examples

    Attrs:
        examples (List[Example]): The examples
        description (str): A short description of the data
    """
    def __init__(self, examples, description=""):
        self.examples = list(examples)
        self.description = description

        seen = set()
        for example in self.examples:
            if example.id in seen:
                raise DuplicateExampleId(example.id)
            seen.add(example.id)

            first = self.examples[0]
            if example.future.shape != first.future.shape:
                raise ShapeMismatch(first.future.shape, example.future.shape, "future")
            if example.context.past.shape != first.context.past.shape:
                raise ShapeMismatch(first.context.past.shape, example.context.past.shape, "past")
            if example.context.features.shape != first.context.features.shape:
                raise ShapeMismatch(first.context.features.shape,
                                    example.context.features.shape, "features")

        self._index = {example.id: example for example in self.examples}

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, example_id):
        return self._index[example_id]

    def __contains__(self, example_id):
        return example_id in self._index

    def ids(self):
        """
        Returns the ids of the examples, in order
        """
        return [example.id for example in self.examples]

    @property
    def meta(self):
        """
        Dictionnary with the shapes (T, H, D) and the description of the data
        """
        if not self.examples:
            return {"T": 0, "H": 0, "D": 0, "description": self.description}

        T, D = self.examples[0].future.shape
        H = self.examples[0].context.past.shape[0]
        return {"T": T, "H": H, "D": D, "description": self.description}

@dataclass(frozen=True)
class SampleSet(object):
    """
    Set of K sampled futures for one context

    Attrs:
        samples (np.ndarray): The samples, of shape (K, T, D)
        context_id (int): The id of the example the samples were drawn for
        selected (Tuple[int]): Indices kept by DPP MAP inference, or None
    """
    samples: np.ndarray
    context_id: int = 0
    selected: tuple = None

    def __post_init__(self):
        samples = check_finite("samples", self.samples)
        if samples.ndim != 3 or samples.shape[0] < 1:
            raise InvalidParameter("samples", samples.shape, "doit être un tableau K×T×D avec K ≥ 1")
        object.__setattr__(self, "samples", samples)
        if self.selected is not None:
            object.__setattr__(self, "selected", tuple(int(i) for i in self.selected))

    def __len__(self):
        return self.samples.shape[0]

def _stack(samples):
    """
    Returns the samples as a (K, T, D) array
    """
    if isinstance(samples, SampleSet):
        return samples.samples

    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples[np.newaxis]
    if samples.shape[0] == 0:
        raise EmptySampleSet()
    return samples

def _pose_distances(samples, gt):
    """
    Returns the (K, T) table of pose distances between each sample and gt
    """
    samples = _stack(samples)
    gt = np.asarray(gt, dtype=np.float64)
    if samples.shape[1:] != gt.shape:
        raise ShapeMismatch(gt.shape, samples.shape[1:], "échantillons")
    return np.linalg.norm(samples - gt, axis=2)

def traj_distance(a, b):
    """
    Euclidean norm of the flattened difference between two trajectories
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(a.shape, b.shape, "trajectoire")
    return float(np.linalg.norm((a - b).ravel()))

def ade(samples, gt):
    """
    Average displacement error: min over the samples of the mean pose distance
    """
    return float(_pose_distances(samples, gt).mean(axis=1).min())

def fde(samples, gt):
    """
    Final displacement error: min over the samples of the final pose distance
    """
    return float(_pose_distances(samples, gt)[:, -1].min())

def apd(samples):
    """
    Average pairwise distance between the flattened samples
    """
    samples = _stack(samples)
    if samples.shape[0] < 2:
        raise TooFewSamples("APD", samples.shape[0])

    # pdist lists each unordered pair once, the mean over ordered pairs is the same
    return float(pdist(samples.reshape(samples.shape[0], -1)).mean())

def asd_fsd(samples):
    """
    Average and final self distances of a sample set

    Returns:
        (float, float): ASD and FSD
    """
    samples = _stack(samples)
    count = samples.shape[0]
    if count < 2:
        raise TooFewSamples("ASD/FSD", count)

    # pose distances between every pair of samples, shape (K, K, T)
    poses = np.linalg.norm(samples[:, np.newaxis] - samples[np.newaxis], axis=3)
    average = poses.mean(axis=2)
    final = poses[:, :, -1]

    np.fill_diagonal(average, np.inf)
    np.fill_diagonal(final, np.inf)

    return float(average.min(axis=1).mean()), float(final.min(axis=1).mean())

def build_multimodal_gt(dataset, eps):
    """
    Group the futures of examples with similar contexts

    Args:
        dataset (Dataset): The data
        eps (float): Maximal context distance to the anchor example

    Returns:
        Dict[int, List[np.ndarray]]: For each example id, the futures of the
            examples whose flattened context lies within eps of its own
            (the example itself always included)
    """
    if not eps >= 0:
        raise InvalidParameter("eps", eps, "doit être positif ou nul")

    examples = list(dataset)
    if not examples:
        return {}

    contexts = np.stack([example.context.vector() for example in examples])
    close = cdist(contexts, contexts) <= eps

    gt_sets = {}
    for i, example in enumerate(examples):
        gt_sets[example.id] = [examples[j].future for j in np.flatnonzero(close[i])]
    return gt_sets

def mm_metrics(samples, gt_set):
    """
    Multi-modal ADE and FDE: the mean of ade and fde over a ground truth set

    Returns:
        (float, float): MMADE and MMFDE
    """
    if len(gt_set) == 0:
        raise EmptyGroundTruth()

    ades = [ade(samples, gt) for gt in gt_set]
    fdes = [fde(samples, gt) for gt in gt_set]
    return float(np.mean(ades)), float(np.mean(fdes))

@dataclass
class MetricsReport(object):
    """
    Metrics of a sampler over a dataset

    Attrs:
        rows (List[dict]): One dictionnary per example, with its id and the
            values of every metric in METRICS
        means (dict): Mean of each metric over the examples where it is
            defined, None when it is defined for none of them
        extra (dict): Additional aggregates (e.g. mode coverage)
    """
    rows: list
    means: dict
    extra: dict = field(default_factory=dict)

    def __getattr__(self, name):
        if name in METRICS:
            return self.means[name]
        raise AttributeError(
            "'{}' object has no attribute '{}'".format(self.__class__.__name__, name))

    def as_dict(self):
        """
        Returns the aggregates as a JSON serializable dictionnary
        """
        result = {name: self.means[name] for name in METRICS}
        result.update(self.extra)
        result["examples"] = len(self.rows)
        return result

def evaluate(dataset, sample_sets, eps):
    """
    Compute the metrics of a sampler over a dataset

    Args:
        dataset (Dataset): The data, with the ground truth futures
        sample_sets (Dict[int, SampleSet]): The samples of each example
        eps (float): Context distance used to build the multi-modal ground truth

    Returns:
        MetricsReport
    """
    logger = logging.getLogger("divsamp.trajectory.evaluate")

    if len(dataset) == 0:
        raise InvalidParameter("dataset", 0, "l'évaluation nécessite au moins un exemple")

    gt_sets = build_multimodal_gt(dataset, eps)
    logger.debug("Taille moyenne des vérités terrain multimodales : %.2f",
                 np.mean([len(gt_set) for gt_set in gt_sets.values()]))

    rows = []
    single = 0
    for example in dataset:
        samples = sample_sets[example.id]
        row = {"id": example.id}
        if len(_stack(samples)) >= 2:
            row["apd"] = apd(samples)
            row["asd"], row["fsd"] = asd_fsd(samples)
        else:
            row.update(dict.fromkeys(DIVERSITY_METRICS))
            single += 1
        row["ade"] = ade(samples, example.future)
        row["fde"] = fde(samples, example.future)
        row["mmade"], row["mmfde"] = mm_metrics(samples, gt_sets[example.id])
        rows.append(row)

    if single:
        logger.warning("APD, ASD et FSD indéfinis pour %d exemples à un seul échantillon", single)

    means = {}
    for name in METRICS:
        values = [row[name] for row in rows if row[name] is not None]
        means[name] = float(np.mean(values)) if values else None
    return MetricsReport(rows, means)
