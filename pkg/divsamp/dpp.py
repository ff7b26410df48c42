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
Module handling the determinantal point process kernels

A kernel over a ground set of N items is L = Diag(r)·S·Diag(r), where S is
an RBF similarity between the (flattened) items and r a quality computed
from the latent codes the items were decoded from.
"""

from dataclasses import dataclass
from itertools import combinations
import logging

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform
from scipy.special import gammaincinv

from divsamp.util import (DivsampError, InvalidParameter, ShapeMismatch, check_finite,
                          check_positive)

# Relative threshold below which negative eigenvalues are clamped to 0
PSD_RTOL = 1e-8

# Relative threshold below which a Cholesky pivot counts as zero
SINGULAR_RTOL = 1e-12

# Largest ground set the brute force oracle accepts (2^N subsets)
MAX_ORACLE_ITEMS = 20

class KernelNotPSD(DivsampError):
    """
    Exception raised when a kernel has a significantly negative eigenvalue
    """

    def __init__(self, min_eigval, max_eigval):
        DivsampError.__init__(self)

        self.min_eigval = min_eigval
        self.max_eigval = max_eigval

    def __str__(self):
        return ("Noyau non semi-défini positif : valeur propre minimale {:.3e} "
                "(maximale {:.3e})").format(self.min_eigval, self.max_eigval)

class DuplicateIndices(DivsampError):
    """
    Exception raised when a subset contains the same item twice
    """

    def __init__(self, subset):
        DivsampError.__init__(self)

        self.subset = list(subset)

    def __str__(self):
        return "Le sous-ensemble {} contient des indices répétés".format(self.subset)

class GroundSetTooLarge(DivsampError):
    """
    Exception raised when the brute force oracle is asked to enumerate too many subsets
    """

    def __init__(self, size, limit):
        DivsampError.__init__(self)

        self.size = size
        self.limit = limit

    def __str__(self):
        return "Énumération impossible : {} éléments (au plus {})".format(self.size, self.limit)

@dataclass(frozen=True)
class KernelConfig(object):
    """
    Parameters of the kernel construction

    Attrs:
        sim_scale (float): Scale k of the similarity exp(-k·d²)
        base_quality (float): Quality ω of the codes inside the quality sphere
        rho (float): Prior mass inside the quality sphere
        latent_dim (int): Dimension n_z of the latent codes
    """
    sim_scale: float = 1.0
    base_quality: float = 1.0
    rho: float = 0.9
    latent_dim: int = 2

    def __post_init__(self):
        check_positive("sim_scale", self.sim_scale)
        check_positive("base_quality", self.base_quality)
        if not 0 < self.rho < 1:
            raise InvalidParameter("rho", self.rho, "doit être dans ]0, 1[")
        if int(self.latent_dim) != self.latent_dim or self.latent_dim < 1:
            raise InvalidParameter("latent_dim", self.latent_dim, "doit être un entier ≥ 1")

    @property
    def radius(self):
        """
        Radius R of the quality sphere
        """
        return quality_radius(self.latent_dim, self.rho)

@dataclass(frozen=True)
class GroundSet(object):
    """
    Candidate items of a DPP

    Attrs:
        items (np.ndarray): The N flattened trajectories, shape (N, P)
        latents (np.ndarray): The N latent codes they were decoded from, shape (N, n_z)
    """
    items: np.ndarray
    latents: np.ndarray

    def __post_init__(self):
        items = check_finite("items", self.items)
        latents = check_finite("latents", self.latents)
        if items.ndim != 2 or items.shape[0] < 1:
            raise InvalidParameter("items", items.shape, "doit être un tableau N×P avec N ≥ 1")
        if latents.ndim != 2 or latents.shape[0] != items.shape[0]:
            raise ShapeMismatch((items.shape[0], -1), latents.shape, "codes latents")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "latents", latents)

    def __len__(self):
        return self.items.shape[0]

class DppKernel(object):
    """
    L-ensemble kernel L = Diag(r)·S·Diag(r)

    Attrs:
        L (np.ndarray): The N×N kernel
        S (np.ndarray): The N×N similarity matrix
        r (np.ndarray): The N qualities
        eigvals (np.ndarray): Ascending eigenvalues of L, negatives within
            tolerance clamped to 0
    """
    def __init__(self, L, S, r):
        self.L = L
        self.S = S
        self.r = r
        self.eigvals = _checked_eigvals(L)

    def __len__(self):
        return self.L.shape[0]

    @classmethod
    def from_matrix(cls, L):
        """
        Build a kernel directly from a symmetric PSD matrix

        The qualities are sqrt(diag(L)) and S the matching normalized
        matrix; items with zero quality get a unit row in S.
        """
        L = check_finite("L", L)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise InvalidParameter("L", L.shape, "doit être une matrice carrée")
        if not np.allclose(L, L.T, rtol=0, atol=1e-12 * max(1.0, np.abs(L).max(initial=0))):
            raise InvalidParameter("L", "...", "doit être symétrique")
        L = 0.5 * (L + L.T)

        r = np.sqrt(np.clip(L.diagonal(), 0, None))
        scale = np.outer(r, r)
        S = np.divide(L, scale, out=np.zeros_like(L), where=scale > 0)
        np.fill_diagonal(S, 1.0)
        return cls(L, S, r)

def _checked_eigvals(L):
    """
    Returns the ascending eigenvalues of L, clamping tiny negatives to 0
    """
    eigvals = scipy.linalg.eigh(L, eigvals_only=True)
    if eigvals.size == 0:
        return eigvals

    tolerance = PSD_RTOL * max(1.0, eigvals[-1])
    if eigvals[0] < -tolerance:
        raise KernelNotPSD(eigvals[0], eigvals[-1])
    return np.clip(eigvals, 0, None)

def build_similarity(items, k):
    """
    RBF similarity S_ij = exp(-k·d²(x_i, x_j)) between flattened items
    """
    check_positive("k", k)
    items = check_finite("items", items)
    if items.ndim == 1:
        items = items[:, np.newaxis]
    return np.exp(-k * squareform(pdist(items, "sqeuclidean")))

def quality_radius(n_z, rho):
    """
    Radius R of the sphere holding a mass rho of the standard normal in R^n_z

    R² is the rho quantile of the chi-squared distribution with n_z degrees
    of freedom, whose CDF is the regularized lower incomplete gamma function
    P(n_z/2, x/2); scipy's gammaincinv inverts P numerically.

    Example:
        >>> round(quality_radius(2, 0.9) ** 2, 5)
        4.60517
    """
    if not 0 < rho < 1:
        raise InvalidParameter("rho", rho, "doit être dans ]0, 1[")
    check_positive("n_z", n_z)
    return float(np.sqrt(2.0 * gammaincinv(0.5 * n_z, rho)))

def build_quality(latents, config):
    """
    Quality of each latent code: ω inside the quality sphere, ω·exp(-zᵀz + R²) outside
    """
    latents = check_finite("latents", latents)
    if latents.ndim == 1:
        latents = latents[np.newaxis]
    if latents.shape[1] != config.latent_dim:
        raise ShapeMismatch((latents.shape[0], config.latent_dim), latents.shape, "codes latents")

    radius2 = config.radius ** 2
    norms2 = np.sum(latents ** 2, axis=1)
    return np.where(norms2 <= radius2, config.base_quality,
                    config.base_quality * np.exp(np.minimum(0.0, radius2 - norms2)))

def build_kernel(ground, config):
    """
    Build the DPP kernel of a ground set

    Args:
        ground (GroundSet): The candidate items and their latent codes
        config (KernelConfig): The kernel parameters

    Returns:
        DppKernel
    """
    S = build_similarity(ground.items, config.sim_scale)
    r = build_quality(ground.latents, config)

    # np.outer(r, r) is exactly symmetric, and so is L
    L = np.outer(r, r) * S
    return DppKernel(L, S, r)

def expected_cardinality(kernel):
    """
    Expected size of a subset drawn from the DPP, Σ λ/(λ+1)
    """
    eigvals = kernel.eigvals
    return float(np.sum(eigvals / (eigvals + 1.0)))

def expected_cardinality_trace(kernel):
    """
    Expected size of a subset drawn from the DPP, N - tr((L+I)^-1)
    """
    size = len(kernel)
    identity = np.eye(size)
    inverse = scipy.linalg.solve(kernel.L + identity, identity, assume_a="pos")
    return float(size - np.trace(inverse))

def log_normalizer(kernel):
    """
    log det(L+I)
    """
    return float(np.sum(np.log1p(kernel.eigvals)))

def _log_det(matrix):
    """
    log det of a PSD matrix through its Cholesky factor, -inf if singular
    """
    if matrix.shape[0] == 0:
        return 0.0

    try:
        factor = scipy.linalg.cholesky(matrix, lower=True)
    except scipy.linalg.LinAlgError:
        return -np.inf

    pivots = factor.diagonal()
    if np.any(pivots ** 2 <= SINGULAR_RTOL * matrix.diagonal()):
        return -np.inf
    return float(2.0 * np.sum(np.log(pivots)))

def dpp_log_prob(kernel, subset):
    """
    log P(Y) = log det(L_Y) - log det(L+I)

    Returns -inf when L_Y is singular (zero probability).
    """
    subset = [int(i) for i in subset]
    if len(set(subset)) != len(subset):
        raise DuplicateIndices(subset)
    for i in subset:
        if not 0 <= i < len(kernel):
            raise InvalidParameter("subset", i, "indice hors de l'ensemble de base")

    submatrix = kernel.L[np.ix_(subset, subset)]
    return _log_det(submatrix) - log_normalizer(kernel)

def dpp_nll(kernel):
    """
    Negative log likelihood of the whole ground set (diagnostic only, +inf
    when the ground set holds duplicates)
    """
    return -dpp_log_prob(kernel, range(len(kernel)))

def brute_force_oracle(kernel, max_items=MAX_ORACLE_ITEMS):
    """
    Enumerate every subset of the ground set

    Returns:
        dict: "normalization" (Σ_Y det(L_Y), equal to det(L+I)) and
            "expected_card" (Σ_Y |Y|·det(L_Y) / det(L+I))
    """
    size = len(kernel)
    if size > max_items:
        raise GroundSetTooLarge(size, max_items)

    logger = logging.getLogger("divsamp.dpp.brute_force_oracle")
    logger.debug("Énumération des %d sous-ensembles", 2 ** size)

    normalization = 1.0
    weighted = 0.0
    for cardinality in range(1, size + 1):
        for subset in combinations(range(size), cardinality):
            det = np.linalg.det(kernel.L[np.ix_(subset, subset)])
            normalization += det
            weighted += cardinality * det

    return {
        "normalization": float(normalization),
        "expected_card": float(weighted / np.linalg.det(kernel.L + np.eye(size)))
    }

def greedy_map_steps(kernel):
    """
    Steps of the greedy MAP inference

    Starting from the empty set, add at each step the item maximizing
    log det(L_{Y ∪ {x}}), and stop when the best marginal gain is strictly
    negative. Ties go to the lowest index.

    The marginal gain of x is log d_x², where d_x² is the Schur complement
    of L_Y in L_{Y ∪ {x}}; the Cholesky rows of the candidates are extended
    by one column per selected item.

    Yields:
        (int, float): The selected item and its marginal gain, in selection
            order; the gains up to a step sum to log det(L_Y)
    """
    L = kernel.L
    size = len(kernel)

    residuals = L.diagonal().copy()
    tolerance = SINGULAR_RTOL * L.diagonal()
    rows = np.zeros((size, size))
    available = np.ones(size, dtype=bool)

    for step in range(size):
        gains = np.full(size, -np.inf)
        valid = available & (residuals > tolerance)
        gains[valid] = np.log(residuals[valid])

        best = int(np.argmax(gains))
        if not gains[best] >= 0:
            return

        column = (L[best] - rows[:, :step] @ rows[best, :step]) / np.sqrt(residuals[best])
        rows[:, step] = column
        residuals = residuals - column ** 2
        available[best] = False

        yield best, float(gains[best])

def greedy_map(kernel):
    """
    Greedy MAP inference (see greedy_map_steps)

    Returns:
        List[int]: The selected items, in selection order
    """
    return [item for item, _ in greedy_map_steps(kernel)]
