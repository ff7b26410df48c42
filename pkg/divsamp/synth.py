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
Module generating the synthetic crossroad data

A vehicle drives straight along +x towards a junction at the origin, then
goes forward, turns left or turns right. Route geometry, in the frame of
the junction (x along the heading, y to its left), for a speed v and T
future steps, t = 1..T:

    forward: (v·t, 0)
    left:    (ρ·sin φ_t, ρ·(1 - cos φ_t)), φ_t = (t/T)·π/2, ρ = 2·v·T/π
    right:   the left route mirrored, y -> -y

so every route is a quarter of a circle or a straight line travelled at
speed v. The past trajectory holds the H positions before and including
the junction, -(H-1)·v, ..., -v, 0 along x. Gaussian noise is added to
every per-step velocity before the positions are integrated.
"""

from collections import Counter
from dataclasses import dataclass
import logging
import math

import numpy as np

from divsamp.trajectory import Context, Dataset, Example, traj_distance
from divsamp.util import InvalidParameter, check_nonnegative, check_positive, make_rng

ROUTES = ("forward", "left", "right")

def check_probabilities(name, probs, tolerance=1e-9):
    """
    Returns probs as a tuple of floats, checking that it is a distribution over ROUTES
    """
    probs = tuple(float(p) for p in probs)
    if len(probs) != len(ROUTES):
        raise InvalidParameter(name, probs, "doit contenir {} probabilités".format(len(ROUTES)))
    if min(probs) < 0 or abs(math.fsum(probs) - 1.0) > tolerance:
        raise InvalidParameter(name, probs, "doit être une distribution de probabilité")
    return probs

@dataclass(frozen=True)
class CrossroadConfig(object):
    """
    Parameters of the crossroad data

    Attrs:
        mode_probs (Tuple[float]): Probabilities of the forward, left and right routes
        n_examples (int): Number of examples
        past_steps (int): Length H of the past trajectories
        future_steps (int): Length T of the future trajectories
        speed (float): Distance travelled per step
        noise_std (float): Standard deviation of the velocity noise
            (default 0.02·speed)
        seed (int): Seed of the generator
    """
    mode_probs: tuple = (1 / 3, 1 / 3, 1 / 3)
    n_examples: int = 300
    past_steps: int = 2
    future_steps: int = 3
    speed: float = 1.0
    noise_std: float = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode_probs", check_probabilities("mode_probs", self.mode_probs))
        for name in ("n_examples", "past_steps", "future_steps"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise InvalidParameter(name, getattr(self, name), "doit être un entier ≥ 1")
        check_positive("speed", self.speed)
        if self.noise_std is None:
            object.__setattr__(self, "noise_std", 0.02 * self.speed)
        check_nonnegative("noise_std", self.noise_std)

def turn_radius(speed, steps):
    """
    Radius of the quarter turns, travelled at speed in steps steps
    """
    return 2.0 * speed * steps / math.pi

def local_template(route, steps, speed):
    """
    Route positions in the junction frame, shape (steps, 2)
    """
    t = np.arange(1, steps + 1, dtype=np.float64)
    if route == "forward":
        return np.stack([speed * t, np.zeros(steps)], axis=1)

    radius = turn_radius(speed, steps)
    angle = t / steps * (math.pi / 2)
    points = np.stack([radius * np.sin(angle), radius * (1.0 - np.cos(angle))], axis=1)
    if route == "right":
        points[:, 1] = -points[:, 1]
    elif route != "left":
        raise InvalidParameter("route", route, "doit être parmi {}".format(ROUTES))
    return points

def frame(context):
    """
    Origin and unit heading of the junction frame of a context

    The origin is the last past position, the heading the direction of the
    last past step (+x when it is undefined).

    Returns:
        (np.ndarray, np.ndarray, np.ndarray): origin, heading and left normal
    """
    past = context.past
    origin = past[-1, :2]
    heading = np.array([1.0, 0.0])
    if past.shape[0] >= 2:
        step = past[-1, :2] - past[-2, :2]
        norm = np.linalg.norm(step)
        if norm > 0:
            heading = step / norm
    normal = np.array([-heading[1], heading[0]])
    return origin, heading, normal

def route_template(route, context, steps, speed):
    """
    Route positions in world coordinates, starting from the context's frame
    """
    origin, heading, normal = frame(context)
    local = local_template(route, steps, speed)
    return origin + local[:, :1] * heading + local[:, 1:] * normal

def generate_crossroad(cfg):
    """
    Generate a crossroad dataset

    Every example draws its route and its noise from its own generator,
    derived from the seed and the example index.

    Returns:
        Dataset: The examples, each with its route in meta["route"]
    """
    logger = logging.getLogger("divsamp.synth.generate_crossroad")
    logger.info("Génération de %d exemples (routes %s)", cfg.n_examples,
                ", ".join("{:.2f}".format(p) for p in cfg.mode_probs))

    H = cfg.past_steps
    T = cfg.future_steps
    start = np.array([-H * cfg.speed, 0.0])
    approach = np.tile([cfg.speed, 0.0], (H, 1))

    templates = {route: np.vstack([np.zeros((1, 2)), local_template(route, T, cfg.speed)])
                 for route in ROUTES}

    examples = []
    for index in range(cfg.n_examples):
        rng = make_rng(cfg.seed, index)
        route = ROUTES[rng.choice(len(ROUTES), p=cfg.mode_probs)]
        noise = rng.normal(0.0, cfg.noise_std, size=(H + T, 2))

        velocities = np.vstack([approach, np.diff(templates[route], axis=0)]) + noise
        positions = start + np.cumsum(velocities, axis=0)

        examples.append(Example(index, Context(positions[:H]), positions[H:], {"route": route}))

    description = "crossroad probs={} seed={}".format(
        ",".join(repr(p) for p in cfg.mode_probs), cfg.seed)
    return Dataset(examples, description)

def classify_route(future, context, speed):
    """
    Returns the route whose template is the closest to a future trajectory
    """
    steps = future.shape[0]
    distances = [traj_distance(future[:, :2], route_template(route, context, steps, speed))
                 for route in ROUTES]
    return ROUTES[int(np.argmin(distances))]

def route_histogram(dataset):
    """
    Number of examples following each route
    """
    counts = Counter(example.meta.get("route") for example in dataset)
    return {route: counts.get(route, 0) for route in ROUTES}

def mode_coverage(dataset, sample_sets, speed):
    """
    Number of distinct routes among the samples of each example

    Returns:
        Dict[int, int]
    """
    coverage = {}
    for example in dataset:
        samples = sample_sets[example.id].samples
        routes = {classify_route(sample, example.context, speed) for sample in samples}
        coverage[example.id] = len(routes)
    return coverage
