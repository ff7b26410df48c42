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
Module defining the diversity and quality losses

Every distance is the Euclidean distance between flattened trajectories.
In controllable mode the trajectory dimensions are split into J_s (kept
similar across the samples) and J_d (diversified), and each slice is
flattened separately.

The *_grad functions return derivatives with respect to the samples, with
the shape of the samples.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform

from divsamp.dpp import expected_cardinality
from divsamp.flows import kl_to_standard_normal
from divsamp.trajectory import EmptySampleSet, TooFewSamples, _stack
from divsamp.util import (DivsampError, InvalidParameter, ShapeMismatch, check_nonnegative,
                          check_positive)

class InvalidPartition(DivsampError):
    """
    Exception raised when J_s and J_d do not partition the trajectory dimensions
    """

    def __init__(self, split, dims):
        DivsampError.__init__(self)

        self.split = split
        self.dims = dims

    def __str__(self):
        return ("La partition {} ne découpe pas les {} dimensions de la "
                "trajectoire").format(self.split, self.dims)

@dataclass(frozen=True)
class EnergyConfig(object):
    """
    Weights and scales of the DLow losses

    Attrs:
        sigma_d (float): Scale of the RBF diversity energy
        lambda_d (float): Weight of the diversity energy E_d
        lambda_r (float): Weight of the reconstruction energy E_r
        lambda_s (float): Weight of the similarity energy E_s (controllable mode)
        beta (float): Weight of the KL divergences
        joint_split (Tuple[Tuple[int], Tuple[int]]): Dimensions (J_s, J_d) in
            controllable mode, or None
    """
    sigma_d: float = 1.0
    lambda_d: float = 1.0
    lambda_r: float = 1.0
    lambda_s: float = 0.0
    beta: float = 1.0
    joint_split: tuple = None

    def __post_init__(self):
        check_positive("sigma_d", self.sigma_d)
        for name in ("lambda_d", "lambda_r", "lambda_s", "beta"):
            check_nonnegative(name, getattr(self, name))

        if self.joint_split is not None:
            similar, diverse = self.joint_split
            split = (tuple(int(i) for i in similar), tuple(int(i) for i in diverse))
            if set(split[0]) & set(split[1]) or min(split[0] + split[1], default=0) < 0:
                raise InvalidPartition(split, None)
            object.__setattr__(self, "joint_split", split)

@dataclass
class LossTerms(object):
    """
    Value of a loss and its breakdown

    Attrs:
        total (float): The loss
        weighted (dict): The weighted contribution of each term, summing to total
        raw (dict): The unweighted value of each term
    """
    total: float
    weighted: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

def check_partition(split, dims):
    """
    Returns the (J_s, J_d) lists, checking that they partition range(dims)
    """
    similar, diverse = (list(part) for part in split)
    if sorted(similar + diverse) != list(range(dims)):
        raise InvalidPartition(split, dims)
    return similar, diverse

def _flat(samples, dims=None):
    """
    Returns the samples restricted to some dimensions and flattened, shape (K, P)
    """
    samples = _stack(samples)
    if dims is not None:
        samples = samples[:, :, list(dims)]
    return samples.reshape(samples.shape[0], -1)

def _scatter(grad, shape, dims):
    """
    Put the gradient of a dimension slice back in a full (K, T, D) array
    """
    full = np.zeros(shape)
    if dims is None:
        return grad.reshape(shape)
    full[:, :, list(dims)] = grad.reshape(shape[0], shape[1], len(dims))
    return full

def diversity_energy(samples, sigma_d, dims=None):
    """
    E_d = 1/(K(K-1)) Σ_{i≠j} exp(-D²(x_i, x_j) / σ_d)
    """
    check_positive("sigma_d", sigma_d)
    flat = _flat(samples, dims)
    if flat.shape[0] < 2:
        raise TooFewSamples("E_d", flat.shape[0])

    # each unordered pair stands for both ordered pairs
    return float(np.mean(np.exp(-pdist(flat, "sqeuclidean") / sigma_d)))

def diversity_energy_grad(samples, sigma_d, dims=None):
    """
    Derivative of E_d with respect to the samples
    """
    stacked = _stack(samples)
    flat = _flat(stacked, dims)
    count = flat.shape[0]
    if count < 2:
        raise TooFewSamples("E_d", count)

    weights = np.exp(-squareform(pdist(flat, "sqeuclidean")) / sigma_d)
    np.fill_diagonal(weights, 0.0)
    coefficient = -4.0 / (sigma_d * count * (count - 1))
    grad = coefficient * (weights.sum(axis=1)[:, np.newaxis] * flat - weights @ flat)
    return _scatter(grad, stacked.shape, dims)

def reconstruction_energy(samples, gt):
    """
    E_r = min_k D²(x_k, x̂)
    """
    flat = _flat(samples)
    gt = np.asarray(gt, dtype=np.float64).ravel()
    if flat.shape[1] != gt.size:
        raise ShapeMismatch((gt.size,), (flat.shape[1],), "vérité terrain")
    return float(np.min(np.sum((flat - gt) ** 2, axis=1)))

def reconstruction_energy_grad(samples, gt):
    """
    Derivative of E_r: 2(x_k - x̂) for the closest sample (lowest index on
    ties), zero elsewhere
    """
    stacked = _stack(samples)
    flat = _flat(stacked)
    gt = np.asarray(gt, dtype=np.float64).ravel()
    closest = int(np.argmin(np.sum((flat - gt) ** 2, axis=1)))
    grad = np.zeros_like(flat)
    grad[closest] = 2.0 * (flat[closest] - gt)
    return grad.reshape(stacked.shape)

def similarity_energy(samples, split):
    """
    E_s = 1/(K(K-1)) Σ_{i≠j} D²(x_i^s, x_j^s) over the J_s dimensions
    """
    stacked = _stack(samples)
    similar, _ = check_partition(split, stacked.shape[2])
    if stacked.shape[0] < 2:
        raise TooFewSamples("E_s", stacked.shape[0])
    if not similar:
        return 0.0
    return float(np.mean(pdist(_flat(stacked, similar), "sqeuclidean")))

def similarity_energy_grad(samples, split):
    """
    Derivative of E_s with respect to the samples
    """
    stacked = _stack(samples)
    similar, _ = check_partition(split, stacked.shape[2])
    count = stacked.shape[0]
    if count < 2:
        raise TooFewSamples("E_s", count)
    if not similar:
        return np.zeros_like(stacked)

    flat = _flat(stacked, similar)
    grad = 4.0 / (count * (count - 1)) * (count * flat - flat.sum(axis=0))
    return _scatter(grad, stacked.shape, similar)

def dsf_loss(kernel):
    """
    Diversity loss -tr(I - (L+I)⁻¹), the opposite of the expected cardinality
    """
    return -expected_cardinality(kernel)

def dsf_loss_grad(kernel, ground, config):
    """
    Derivative of dsf_loss with respect to the items and to their latent codes
    (through the quality only)

    With M = L + I, d tr(M⁻¹) = -tr(M⁻² dL), and L_ij = r_i·r_j·S_ij.

    Returns:
        (np.ndarray, np.ndarray): Derivatives with respect to the items (N, P)
            and to the latent codes (N, n_z)
    """
    size = len(kernel)
    inverse = scipy.linalg.solve(kernel.L + np.eye(size), np.eye(size), assume_a="pos")
    G = -inverse @ inverse

    weights = G * kernel.L
    items = ground.items
    grad_items = -4.0 * config.sim_scale * (weights.sum(axis=1)[:, np.newaxis] * items
                                            - weights @ items)

    grad_r = 2.0 * (G * kernel.S) @ kernel.r

    # dr/dz is zero inside the quality sphere and -2·z·r outside
    latents = ground.latents
    outside = np.sum(latents ** 2, axis=1) > config.radius ** 2
    grad_latents = np.where(outside[:, np.newaxis],
                            -2.0 * latents * (grad_r * kernel.r)[:, np.newaxis], 0.0)
    return grad_items, grad_latents

def resolve_split(cfg, dims):
    """
    Returns the (J_s, J_d) dimension lists of a configuration, or (None, None)
    """
    if cfg.joint_split is None:
        return None, None
    return check_partition(cfg.joint_split, dims)

def dlow_loss(flows, samples, gt, cfg):
    """
    DLow objective β·Σ_k KL_k + λ_d·E_d + λ_r·E_r (+ λ_s·E_s in controllable mode)

    With a single sample the pairwise terms are 0.

    Args:
        flows (AffineFlowSet): The flows the samples were decoded from
        samples (SampleSet): The K decoded samples
        gt (np.ndarray): The ground truth future
        cfg (EnergyConfig): The weights

    Returns:
        LossTerms
    """
    stacked = _stack(samples)
    count = stacked.shape[0]
    if count != flows.k:
        raise ShapeMismatch((flows.k,), (count,), "nombre d'échantillons")

    similar, diverse = resolve_split(cfg, stacked.shape[2])

    raw = {"kl": float(sum(kl_to_standard_normal(flows, k) for k in range(flows.k)))}
    raw["diversity"] = diversity_energy(stacked, cfg.sigma_d, diverse) if count > 1 else 0.0
    raw["reconstruction"] = reconstruction_energy(stacked, gt)
    if similar is not None and count > 1:
        raw["similarity"] = similarity_energy(stacked, cfg.joint_split)
    else:
        raw["similarity"] = 0.0

    weighted = {
        "kl": cfg.beta * raw["kl"],
        "diversity": cfg.lambda_d * raw["diversity"],
        "reconstruction": cfg.lambda_r * raw["reconstruction"],
        "similarity": cfg.lambda_s * raw["similarity"]
    }
    total = weighted["kl"] + weighted["diversity"] + weighted["reconstruction"] + weighted["similarity"]
    return LossTerms(total, weighted, raw)

def dlow_energy_grad(samples, gt, cfg):
    """
    Derivative of the energy part of dlow_loss (everything but the KL) with
    respect to the samples
    """
    stacked = _stack(samples)
    similar, diverse = resolve_split(cfg, stacked.shape[2])

    grad = cfg.lambda_r * reconstruction_energy_grad(stacked, gt)
    if stacked.shape[0] > 1:
        if cfg.lambda_d:
            grad += cfg.lambda_d * diversity_energy_grad(stacked, cfg.sigma_d, diverse)
        if similar is not None and cfg.lambda_s:
            grad += cfg.lambda_s * similarity_energy_grad(stacked, cfg.joint_split)
    return grad

def joint_sampler_loss(sample_sets, gt, kls, sigma_d):
    """
    Joint multi-agent sampler loss

    min_k ||Ŷ^(k) - Y||² + Σ KL + 1/(K(K-1)) Σ_{k1≠k2} exp(-||Ŷ^(k1) - Ŷ^(k2)||² / σ_d)

    Args:
        sample_sets: The K joint samples, array of shape (K,) + gt.shape
        gt: The joint ground truth
        kls (List[float]): The KL divergence of each latent code
        sigma_d (float): Scale of the diversity term

    Returns:
        float: The loss; the diversity term is 0 when K = 1
    """
    check_positive("sigma_d", sigma_d)
    sample_sets = np.asarray(sample_sets, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if sample_sets.shape[0] == 0:
        raise EmptySampleSet()
    if sample_sets.shape[1:] != gt.shape:
        raise ShapeMismatch(gt.shape, sample_sets.shape[1:], "échantillon joint")
    if len(kls) != sample_sets.shape[0]:
        raise InvalidParameter("kls", len(kls), "doit avoir une valeur par échantillon")

    flat = sample_sets.reshape(sample_sets.shape[0], -1)
    loss = float(np.min(np.sum((flat - gt.ravel()) ** 2, axis=1)))
    loss += float(np.sum(kls))
    if flat.shape[0] > 1:
        loss += float(np.mean(np.exp(-pdist(flat, "sqeuclidean") / sigma_d)))
    return loss
