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
Module containing some utility functions and the base exception
"""

import numpy as np

class DivsampError(Exception):
    """
    Base class of the exceptions raised by divsamp
    """

class InvalidParameter(DivsampError):
    """
    Exception raised when a parameter is out of its valid range
    """

    def __init__(self, name, value, reason):
        """
        Args:
            name (str): The name of the parameter
            value: The rejected value
            reason (str): What the value should have been
        """
        DivsampError.__init__(self)

        self.name = name
        self.value = value
        self.reason = reason

    def __str__(self):
        return "Paramètre invalide {name}={value!r} : {reason}".format(
            name=self.name, value=self.value, reason=self.reason)

class ShapeMismatch(DivsampError):
    """
    Exception raised when two arrays that should have the same shape do not
    """

    def __init__(self, expected, got, what="tableau"):
        DivsampError.__init__(self)

        self.expected = tuple(expected)
        self.got = tuple(got)
        self.what = what

    def __str__(self):
        return "Dimensions incompatibles pour {what} : {expected} attendu, {got} reçu".format(
            what=self.what, expected=self.expected, got=self.got)

def check_positive(name, value):
    """
    Raise InvalidParameter unless value > 0
    """
    if not value > 0:
        raise InvalidParameter(name, value, "doit être strictement positif")

def check_nonnegative(name, value):
    """
    Raise InvalidParameter unless value >= 0
    """
    if not value >= 0:
        raise InvalidParameter(name, value, "doit être positif ou nul")

def check_finite(name, array):
    """
    Returns array as a float64 numpy array, raising InvalidParameter if
    some of its entries are not finite
    """
    array = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise InvalidParameter(name, "...", "contient des valeurs non finies")
    return array

def check_shape(expected, array, what="tableau"):
    """
    Raise ShapeMismatch if array does not have the expected shape
    """
    if tuple(np.shape(array)) != tuple(expected):
        raise ShapeMismatch(expected, np.shape(array), what)

def make_rng(seed, *keys):
    """
    Returns a numpy generator derived from seed and an optional path of
    integer keys.

    Streams with different keys are independent, which is how per-example
    seeds are split from a run seed.

    Example:
        >>> a = make_rng(5, 0).standard_normal()
        >>> b = make_rng(5, 1).standard_normal()
        >>> a == make_rng(5, 0).standard_normal(), a == b
        (True, False)
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(key) for key in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
