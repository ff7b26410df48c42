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
Module handling the latent samplers

Two samplers turn into K latent codes:
    - DsfCodes holds the K codes directly as parameters.
    - AffineFlowSet holds K invertible affine maps z_k = A_k·ε + b_k applied
      to one shared standard normal draw ε. Each map induces the Gaussian
      N(b_k, A_k·A_kᵀ) over z_k, whose KL divergence to N(0, I) has a closed
      form.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from divsamp.util import DivsampError, InvalidParameter, ShapeMismatch, check_finite, make_rng

# |det A_k| under which a flow is considered singular
MIN_ABS_DET = 1e-12

class FlowNotInvertible(DivsampError):
    """
    Exception raised when an affine flow has a (numerically) singular matrix
    """

    def __init__(self, index, det, iteration=None):
        """
        Args:
            index (int): The index k of the flow
            det (float): The determinant of A_k
            iteration (int): The training iteration, if raised during training
        """
        DivsampError.__init__(self)

        self.index = index
        self.det = det
        self.iteration = iteration

    def __str__(self):
        message = "Le flot {} n'est pas inversible (det A = {:.3e})".format(self.index, self.det)
        if self.iteration is not None:
            message += " à l'itération {}".format(self.iteration)
        return message

@dataclass(frozen=True)
class DsfCodes(object):
    """
    K latent codes held directly as parameters

    Attrs:
        codes (np.ndarray): The codes, shape (K, n_z)
    """
    codes: np.ndarray

    def __post_init__(self):
        codes = check_finite("codes", self.codes)
        if codes.ndim != 2 or codes.shape[0] < 1 or codes.shape[1] < 1:
            raise InvalidParameter("codes", codes.shape, "doit être un tableau K×n_z avec K ≥ 1")
        object.__setattr__(self, "codes", codes)

    @property
    def k(self):
        return self.codes.shape[0]

    @property
    def n_z(self):
        return self.codes.shape[1]

    def vector(self):
        """
        Returns the parameters as a flat vector
        """
        return self.codes.ravel().copy()

    @classmethod
    def from_vector(cls, vector, k, n_z):
        return cls(np.asarray(vector, dtype=np.float64).reshape(k, n_z))

    @staticmethod
    def parameter_count(k, n_z):
        return k * n_z

    def as_dict(self):
        return {"codes": self.codes.tolist()}

    @classmethod
    def from_dict(cls, params):
        return cls(np.array(params["codes"], dtype=np.float64))

@dataclass(frozen=True)
class AffineFlowSet(object):
    """
    K invertible affine maps sharing one noise draw

    Attrs:
        A (np.ndarray): The matrices, shape (K, n_z, n_z)
        b (np.ndarray): The offsets, shape (K, n_z)
    """
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = check_finite("A", self.A)
        b = check_finite("b", self.b)
        if A.ndim != 3 or A.shape[0] < 1 or A.shape[1] != A.shape[2]:
            raise InvalidParameter("A", A.shape, "doit être un tableau K×n_z×n_z avec K ≥ 1")
        if b.shape != A.shape[:2]:
            raise ShapeMismatch(A.shape[:2], b.shape, "b")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

        for index, det in enumerate(np.linalg.det(A)):
            if not abs(det) > MIN_ABS_DET:
                raise FlowNotInvertible(index, det)

    @property
    def k(self):
        return self.A.shape[0]

    @property
    def n_z(self):
        return self.A.shape[1]

    @classmethod
    def identity(cls, k, n_z):
        """
        K identity flows
        """
        return cls(np.tile(np.eye(n_z), (k, 1, 1)), np.zeros((k, n_z)))

    def vector(self):
        """
        Returns the parameters as a flat vector: every A_k then every b_k
        """
        return np.concatenate([self.A.ravel(), self.b.ravel()])

    @classmethod
    def from_vector(cls, vector, k, n_z):
        vector = np.asarray(vector, dtype=np.float64)
        split = k * n_z * n_z
        return cls(vector[:split].reshape(k, n_z, n_z), vector[split:].reshape(k, n_z))

    @staticmethod
    def parameter_count(k, n_z):
        return k * (n_z * n_z + n_z)

    def as_dict(self):
        return {"A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, params):
        return cls(np.array(params["A"], dtype=np.float64),
                   np.array(params["b"], dtype=np.float64))

def apply_flows(flows, eps):
    """
    Map one noise vector to the K latent codes z_k = A_k·ε + b_k

    Returns:
        np.ndarray: The codes, shape (K, n_z)
    """
    eps = check_finite("eps", eps)
    if eps.shape != (flows.n_z,):
        raise ShapeMismatch((flows.n_z,), eps.shape, "bruit")
    return flows.A @ eps + flows.b

def invert_flow(flows, index, z):
    """
    Noise mapped to z by the flow of the given index, A_k⁻¹·(z - b_k)
    """
    z = check_finite("z", z)
    if z.shape != (flows.n_z,):
        raise ShapeMismatch((flows.n_z,), z.shape, "code latent")

    matrix = flows.A[index]
    det = np.linalg.det(matrix)
    if not abs(det) > MIN_ABS_DET:
        raise FlowNotInvertible(index, det)
    return scipy.linalg.solve(matrix, z - flows.b[index])

def reference_noise(flows, z_ref):
    """
    Shared noise for which the first flow reproduces a reference code

    Decoding apply_flows(flows, reference_noise(flows, z_ref)) yields z_ref
    as the first code and K - 1 codes correlated with it.
    """
    return invert_flow(flows, 0, z_ref)

def _kl(A, b):
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0 or not np.isfinite(logdet) or not np.exp(logdet) > MIN_ABS_DET:
        return None
    n_z = A.shape[0]
    return 0.5 * (np.sum(A * A) + b @ b - n_z - 2.0 * logdet)

def kl_to_standard_normal(flows, index):
    """
    KL(N(b_k, A_k·A_kᵀ) || N(0, I)) = ½(tr(A Aᵀ) + bᵀb - n_z - log det(A Aᵀ))
    """
    value = _kl(flows.A[index], flows.b[index])
    if value is None:
        raise FlowNotInvertible(index, np.linalg.det(flows.A[index]))
    return float(value)

def kl_grad(flows, index):
    """
    Gradient of the KL divergence of one flow

    Returns:
        (np.ndarray, np.ndarray): The derivatives with respect to A_k (A - A⁻ᵀ)
            and b_k (b)
    """
    matrix = flows.A[index]
    return matrix - np.linalg.inv(matrix).T, flows.b[index].copy()

def sample_noise(seed, n_z):
    """
    n_z standard normal draws from the generator seeded with seed
    """
    return make_rng(seed).standard_normal(int(n_z))
