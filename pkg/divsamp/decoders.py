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
Module defining the decoders, deterministic maps from a latent code and a
context to a future trajectory
"""

import logging
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from divsamp.synth import ROUTES, check_probabilities, frame, local_template
from divsamp.util import InvalidParameter, ShapeMismatch, check_finite, check_positive

class Decoder(object):
    """
    Base class of the decoders

    Attrs:
        n_z (int): Dimension of the latent codes
        steps (int): Length T of the decoded trajectories
        dims (int): Dimension D of the decoded poses
    """
    KIND = None

    def __init__(self, n_z, steps, dims):
        self.logger = logging.getLogger("{}.{}".format(self.__class__.__module__,
                                                       self.__class__.__name__))
        self.n_z = int(n_z)
        self.steps = int(steps)
        self.dims = int(dims)

    @property
    def shape(self):
        return (self.steps, self.dims)

    def _codes(self, zs):
        zs = check_finite("z", zs)
        if zs.ndim != 2 or zs.shape[1] != self.n_z:
            raise ShapeMismatch((-1, self.n_z), zs.shape, "codes latents")
        return zs

    def decode(self, z, ctx):
        """
        Decode one latent code into a (T, D) trajectory
        """
        return self.decode_batch(np.asarray(z, dtype=np.float64)[np.newaxis], ctx)[0]

    def decode_batch(self, zs, ctx):
        """
        Decode K latent codes (shape (K, n_z)) into a (K, T, D) array
        """
        raise NotImplementedError

    def jacobian(self, ctx):
        """
        Returns the (T·D, n_z) derivative of the decoder when it is affine in z,
        else None
        """
        return None

    def as_dict(self):
        """
        Returns the parameters of the decoder as a JSON serializable dictionnary
        """
        raise NotImplementedError

class LinearDecoder(Decoder):
    """
    Affine decoder reshape(W·z + c0 + M·f(ψ)), f(ψ) the flattened context

    Attrs:
        W (np.ndarray): Shape (T·D, n_z)
        c0 (np.ndarray): Shape (T·D,)
        M (np.ndarray): Shape (T·D, context size), or None
    """
    KIND = "linear"

    def __init__(self, W, c0, steps, dims, M=None):
        W = check_finite("W", W)
        if W.ndim != 2 or W.shape[0] != steps * dims:
            raise ShapeMismatch((steps * dims, -1), W.shape, "W")
        Decoder.__init__(self, W.shape[1], steps, dims)

        self.W = W
        self.c0 = check_finite("c0", c0).ravel()
        if self.c0.shape != (steps * dims,):
            raise ShapeMismatch((steps * dims,), self.c0.shape, "c0")
        self.M = None if M is None else check_finite("M", M)
        if self.M is not None and (self.M.ndim != 2 or self.M.shape[0] != steps * dims):
            raise ShapeMismatch((steps * dims, -1), self.M.shape, "M")

    def offset(self, ctx):
        """
        Returns c0 + M·f(ψ)
        """
        if self.M is None:
            return self.c0
        features = ctx.vector()
        if features.shape != (self.M.shape[1],):
            raise ShapeMismatch((self.M.shape[1],), features.shape, "contexte")
        return self.c0 + self.M @ features

    def decode_batch(self, zs, ctx):
        zs = self._codes(zs)
        return (zs @ self.W.T + self.offset(ctx)).reshape(zs.shape[0], self.steps, self.dims)

    def jacobian(self, ctx):
        return self.W

    def encode(self, x, ctx):
        """
        Least squares latent code of a trajectory
        """
        x = check_finite("x", x).ravel()
        if x.shape != (self.steps * self.dims,):
            raise ShapeMismatch((self.steps * self.dims,), x.shape, "trajectoire")
        solution, _, _, _ = np.linalg.lstsq(self.W, x - self.offset(ctx), rcond=None)
        return solution

    def as_dict(self):
        return {
            "kind": self.KIND,
            "T": self.steps,
            "D": self.dims,
            "W": self.W.tolist(),
            "c0": self.c0.tolist(),
            "M": None if self.M is None else self.M.tolist()
        }

    @classmethod
    def from_dict(cls, spec):
        M = spec.get("M")
        return cls(np.array(spec["W"], dtype=np.float64), np.array(spec["c0"], dtype=np.float64),
                   int(spec["T"]), int(spec["D"]),
                   None if M is None else np.array(M, dtype=np.float64))

class CrossroadDecoder(Decoder):
    """
    Two dimensional latent decoder onto the three crossroad routes

    The latent plane is cut by angle into three sectors whose angular
    fractions are the mode probabilities: forward is centered on θ = 0, left
    follows counterclockwise, right closes the turn. Sectors include their
    lower angle. Since the angle of a standard normal code is uniform, prior
    sampling picks each route with its mode probability.

    Within a sector, the route template (see synth) is displaced at step t by
    within_mode_scale·(t/T)·(RADIAL_SHARE·a·heading + u·normal), where
    a = tanh(|z| - 1) and u in [-1, 1) is the angular offset from the sector
    bisector relative to the half width of the sector. The radial term is
    scaled down by RADIAL_SHARE, so the variation is mostly lateral.
    A code on the bisector with |z| = 1 decodes exactly to the template.

    Attrs:
        mode_probs (Tuple[float]): Probabilities of the forward, left and right routes
        speed (float): Distance travelled per step
        within_mode_scale (float): Amplitude of the within-route variation
    """
    KIND = "crossroad"
    RADIAL_SHARE = 0.1

    def __init__(self, mode_probs=(1 / 3, 1 / 3, 1 / 3), speed=1.0, steps=3,
                 within_mode_scale=0.4):
        Decoder.__init__(self, 2, steps, 2)

        self.mode_probs = check_probabilities("mode_probs", mode_probs, 1e-12)
        if min(self.mode_probs) <= 0:
            raise InvalidParameter("mode_probs", self.mode_probs, "doivent être strictement positives")
        check_positive("speed", speed)
        check_positive("within_mode_scale", within_mode_scale)
        self.speed = float(speed)
        self.within_mode_scale = float(within_mode_scale)

        widths = 2 * math.pi * np.array(self.mode_probs)
        self._start = -widths[0] / 2
        self._bounds = np.cumsum(widths)
        self._centers = self._bounds - widths / 2
        self._half_widths = widths / 2
        self._templates = np.stack([local_template(route, self.steps, self.speed)
                                    for route in ROUTES])

    def _sectors(self, zs):
        """
        Returns the route index and the relative angular offset of each code
        """
        shifted = np.mod(np.arctan2(zs[:, 1], zs[:, 0]) - self._start, 2 * math.pi)
        modes = np.minimum(np.searchsorted(self._bounds, shifted, side="right"), len(ROUTES) - 1)
        offsets = (shifted - self._centers[modes]) / self._half_widths[modes]
        return modes, offsets

    def route_of(self, z):
        """
        Returns the route selected by a latent code
        """
        modes, _ = self._sectors(self._codes(np.asarray(z, dtype=np.float64)[np.newaxis]))
        return ROUTES[int(modes[0])]

    def decode_batch(self, zs, ctx):
        zs = self._codes(zs)
        modes, offsets = self._sectors(zs)
        along = np.tanh(np.linalg.norm(zs, axis=1) - 1.0)

        ramp = np.arange(1, self.steps + 1) / self.steps
        local = self._templates[modes].copy()
        local[:, :, 0] += self.RADIAL_SHARE * self.within_mode_scale * ramp * along[:, np.newaxis]
        local[:, :, 1] += self.within_mode_scale * ramp * offsets[:, np.newaxis]

        origin, heading, normal = frame(ctx)
        return (origin + local[:, :, :1] * heading + local[:, :, 1:] * normal)

    def as_dict(self):
        return {
            "kind": self.KIND,
            "T": self.steps,
            "D": self.dims,
            "mode_probs": list(self.mode_probs),
            "speed": self.speed,
            "within_mode_scale": self.within_mode_scale
        }

    @classmethod
    def from_dict(cls, spec):
        return cls(spec["mode_probs"], spec["speed"], int(spec["T"]), spec["within_mode_scale"])

class TabulatedDecoder(Decoder):
    """
    Decoder interpolating a table of trajectories given on a grid of latent codes

    Values between grid nodes are multilinear interpolations (bilinear for a
    two dimensional latent space); codes outside the grid are extrapolated
    from the border cells. The context is ignored.

    Attrs:
        z_grid (List[np.ndarray]): The increasing grid axis of each latent dimension
        table (np.ndarray): The trajectories, shape (len(axis_1), ..., len(axis_n), T, D)
    """
    KIND = "tabulated"

    def __init__(self, z_grid, table, steps, dims):
        z_grid = [check_finite("z_grid", axis).ravel() for axis in z_grid]
        table = check_finite("table", table)
        sizes = tuple(len(axis) for axis in z_grid)
        if table.shape != sizes + (steps, dims):
            raise ShapeMismatch(sizes + (steps, dims), table.shape, "table")
        Decoder.__init__(self, len(z_grid), steps, dims)

        self.z_grid = z_grid
        self.table = table
        self._interpolator = RegularGridInterpolator(
            z_grid, table.reshape(sizes + (steps * dims,)), method="linear",
            bounds_error=False, fill_value=None)

    def decode_batch(self, zs, ctx):
        zs = self._codes(zs)
        return self._interpolator(zs).reshape(zs.shape[0], self.steps, self.dims)

    def as_dict(self):
        return {
            "kind": self.KIND,
            "T": self.steps,
            "D": self.dims,
            "z_grid": [axis.tolist() for axis in self.z_grid],
            "table": self.table.tolist()
        }

    @classmethod
    def from_dict(cls, spec):
        return cls([np.array(axis, dtype=np.float64) for axis in spec["z_grid"]],
                   np.array(spec["table"], dtype=np.float64), int(spec["T"]), int(spec["D"]))

DECODERS = {cls.KIND: cls for cls in (LinearDecoder, CrossroadDecoder, TabulatedDecoder)}

def load_decoder(spec):
    """
    Build a decoder from its dictionnary (see the as_dict methods); a spec
    without "kind" is a tabulated decoder
    """
    kind = spec.get("kind", TabulatedDecoder.KIND)
    if kind not in DECODERS:
        raise InvalidParameter("kind", kind, "doit être parmi {}".format(sorted(DECODERS)))
    return DECODERS[kind].from_dict(spec)
