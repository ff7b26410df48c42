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
Module training the latent samplers

A trainer optimizes a flat parameter vector with Adam. Without
featurization the vector holds the sampler parameters (the K codes, or
every A_k then every b_k). With featurization it holds a base vector p
followed by a matrix M, and the sampler of a context ψ has the parameters
p + M·f(ψ), f(ψ) being the flattened context.
"""

from dataclasses import asdict, dataclass, field
import logging
import math
import time

import numpy as np

from divsamp.dpp import GroundSet, KernelConfig, build_kernel, dpp_nll, expected_cardinality
from divsamp.energy import EnergyConfig, LossTerms, dlow_energy_grad, dlow_loss, dsf_loss, dsf_loss_grad
from divsamp.flows import AffineFlowSet, DsfCodes, FlowNotInvertible, apply_flows, kl_grad
from divsamp.trajectory import SampleSet
from divsamp.ui import DummyUI
from divsamp.util import (DivsampError, InvalidParameter, ShapeMismatch, check_nonnegative,
                          check_positive, make_rng)

MODES = ("dsf", "dlow")
GRADIENTS = ("auto", "analytic", "numeric")

# Keys of the generators derived from the training seed
INIT_STREAM = 1
NOISE_STREAM = 2

class NonFiniteLoss(DivsampError):
    """
    Exception raised when a loss evaluates to nan or infinity
    """

    def __init__(self, value, iteration=None):
        DivsampError.__init__(self)

        self.value = value
        self.iteration = iteration

    def __str__(self):
        message = "La perte n'est pas finie ({})".format(self.value)
        if self.iteration is not None:
            message += " à l'itération {}".format(self.iteration)
        return message

class TrainingError(DivsampError):
    """
    Exception raised when an iteration of the training fails
    """

    def __init__(self, iteration, error):
        """
        Args:
            iteration (int): The iteration
            error (Exception): The original error
        """
        DivsampError.__init__(self)

        self.iteration = iteration
        self.error = error

    def __str__(self):
        return "L'entraînement a échoué à l'itération {} : {}".format(self.iteration, self.error)

@dataclass(frozen=True)
class AdamState(object):
    """
    Moments of the Adam optimizer

    Attrs:
        m (np.ndarray): First moment
        v (np.ndarray): Second moment
        t (int): Number of steps taken
    """
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size), np.zeros(size), 0)

def adam_step(params, grad, state, lr, betas=(0.9, 0.999), eps=1e-8):
    """
    One Adam update with bias-corrected moments

    Args:
        params (np.ndarray): The parameters
        grad (np.ndarray): The gradient of the loss at params
        state (AdamState): The moments, or None before the first step
        lr (float): The learning rate

    Returns:
        (np.ndarray, AdamState): The new parameters and moments, the inputs
            are left untouched
    """
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape:
        raise ShapeMismatch(params.shape, grad.shape, "gradient")
    if state is None:
        state = AdamState.zeros(params.shape)

    beta1, beta2 = betas
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad

    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m, v, t)

def numeric_gradient(f, at, step=1e-4):
    """
    Central finite differences (f(x + h·e_i) - f(x - h·e_i)) / 2h, with
    h = step·max(1, |x_i|)
    """
    at = np.asarray(at, dtype=np.float64)
    center = f(at)
    if not np.isfinite(center):
        raise NonFiniteLoss(center)

    grad = np.zeros_like(at)
    flat = grad.reshape(-1)
    for i in range(at.size):
        h = step * max(1.0, abs(at.flat[i]))
        forward = at.copy()
        forward.flat[i] += h
        backward = at.copy()
        backward.flat[i] -= h

        upper, lower = f(forward), f(backward)
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NonFiniteLoss(upper if not np.isfinite(upper) else lower)
        flat[i] = (upper - lower) / (2.0 * h)
    return grad

@dataclass(frozen=True)
class TrainConfig(object):
    """
    Parameters of the training

    Attrs:
        mode (str): "dsf" or "dlow"
        k (int): Number K of samples
        iters (int): Number of Adam iterations
        lr (float): Learning rate
        betas (Tuple[float, float]): Adam moment decays
        adam_eps (float): Adam denominator offset
        seed (int): Seed of the initialization and of the noise draws
        init_scale (float): Standard deviation of the initial DSF codes
        fd_step (float): Relative step of the finite differences
        noise_draws (int): Number of shared noise draws ε averaged per
            iteration (dlow)
        train_contexts (int): Number of examples, taken from the start of the
            dataset, the loss is averaged over
        log_every (int): Log one line every log_every iterations
        featurize (bool): Make the sampler parameters affine in the context
        identity_first (bool): Hold the first flow at (I, 0) (dlow)
        gradient (str): "analytic", "numeric", or "auto" (analytic when the
            decoder is affine)
        kernel (KernelConfig): Kernel of the DSF loss
        energy (EnergyConfig): Weights of the DLow loss
    """
    mode: str = "dsf"
    k: int = 10
    iters: int = 300
    lr: float = 5e-3
    betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    seed: int = 0
    init_scale: float = 0.1
    fd_step: float = 1e-4
    noise_draws: int = 8
    train_contexts: int = 16
    log_every: int = 50
    featurize: bool = False
    identity_first: bool = False
    gradient: str = "auto"
    kernel: KernelConfig = field(default_factory=KernelConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameter("mode", self.mode, "doit être parmi {}".format(MODES))
        if self.gradient not in GRADIENTS:
            raise InvalidParameter("gradient", self.gradient, "doit être parmi {}".format(GRADIENTS))
        for name in ("k", "iters", "noise_draws", "train_contexts", "log_every"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidParameter(name, value, "doit être un entier ≥ 1")
        check_nonnegative("lr", self.lr)
        check_positive("adam_eps", self.adam_eps)
        check_positive("fd_step", self.fd_step)
        check_positive("init_scale", self.init_scale)
        betas = tuple(float(beta) for beta in self.betas)
        if len(betas) != 2 or not all(0 <= beta < 1 for beta in betas):
            raise InvalidParameter("betas", self.betas, "doivent être deux réels de [0, 1[")
        object.__setattr__(self, "betas", betas)

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        values["kernel"] = KernelConfig(**values.get("kernel", {}))
        energy = dict(values.get("energy", {}))
        if energy.get("joint_split") is not None:
            energy["joint_split"] = tuple(tuple(part) for part in energy["joint_split"])
        values["energy"] = EnergyConfig(**energy)
        values["betas"] = tuple(values.get("betas", (0.9, 0.999)))
        return cls(**values)

def _finite_or_none(value):
    return value if math.isfinite(value) else None

@dataclass
class TrainReport(object):
    """
    Trace of a training run

    Attrs:
        mode (str): "dsf" or "dlow"
        seed (int): The seed of the run
        trace (List[dict]): One entry per iteration: loss, best loss so far
            and the term breakdown, evaluated before the update
        parameter_count (int): Number of trained scalars
        wall_time (float): Duration of the run, in seconds
    """
    mode: str
    seed: int
    trace: list = field(default_factory=list)
    parameter_count: int = 0
    wall_time: float = 0.0

    @property
    def initial_loss(self):
        return self.trace[0]["loss"]

    @property
    def final_loss(self):
        return self.trace[-1]["best"]

    def final_terms(self):
        """
        Term breakdown of the best iteration
        """
        best = min(range(len(self.trace)), key=lambda i: (self.trace[i]["loss"], i))
        return self.trace[best]["terms"]

    def as_dict(self, with_time=False):
        """
        Returns the report as a JSON serializable dictionnary; the wall time
        is left out unless with_time is True
        """
        trace = [{
            "iteration": entry["iteration"],
            "loss": entry["loss"],
            "best": entry["best"],
            "terms": {name: _finite_or_none(value) for name, value in entry["terms"].items()}
        } for entry in self.trace]

        report = {
            "mode": self.mode,
            "seed": self.seed,
            "parameter_count": self.parameter_count,
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "final_terms": {name: _finite_or_none(value)
                            for name, value in self.final_terms().items()},
            "trace": trace
        }
        if with_time:
            report["wall_time"] = self.wall_time
        return report

@dataclass(frozen=True)
class TrainedSampler(object):
    """
    A trained sampler, with its context featurization if any

    Attrs:
        base (DsfCodes or AffineFlowSet): The sampler (of a zero context when
            featurized)
        featurization (np.ndarray): The matrix M, shape (parameter count,
            context size), or None
    """
    base: object
    featurization: np.ndarray = None

    @property
    def mode(self):
        return "dsf" if isinstance(self.base, DsfCodes) else "dlow"

    @property
    def k(self):
        return self.base.k

    @property
    def n_z(self):
        return self.base.n_z

    def at(self, context):
        """
        Returns the sampler of a context
        """
        if self.featurization is None:
            return self.base
        features = context.vector()
        if features.shape != (self.featurization.shape[1],):
            raise ShapeMismatch((self.featurization.shape[1],), features.shape, "contexte")
        vector = self.base.vector() + self.featurization @ features
        return type(self.base).from_vector(vector, self.k, self.n_z)

    def as_dict(self):
        params = self.base.as_dict()
        params["featurization"] = (None if self.featurization is None
                                   else self.featurization.tolist())
        return params

    @classmethod
    def from_dict(cls, mode, params):
        base = (DsfCodes if mode == "dsf" else AffineFlowSet).from_dict(params)
        featurization = params.get("featurization")
        if featurization is not None:
            featurization = np.array(featurization, dtype=np.float64)
        return cls(base, featurization)

def draw_samples(sampler, decoder, context, eps=None):
    """
    Decode the K samples of a context

    Args:
        sampler (TrainedSampler): The sampler
        decoder (Decoder): The decoder
        context (Context): The context
        eps (np.ndarray): The shared noise (dlow only)

    Returns:
        (np.ndarray, np.ndarray): The latent codes (K, n_z) and the samples (K, T, D)
    """
    local = sampler.at(context)
    if isinstance(local, DsfCodes):
        codes = local.codes
    else:
        if eps is None:
            raise InvalidParameter("eps", eps, "un bruit est nécessaire pour les flots")
        codes = apply_flows(local, eps)
    return codes, decoder.decode_batch(codes, context)

def prior_samples(decoder, context, k, rng):
    """
    Decode K i.i.d. draws of the standard normal prior
    """
    codes = rng.standard_normal((k, decoder.n_z))
    return codes, decoder.decode_batch(codes, context)

class Trainer(object):
    """
    Base class of the trainers

    Attrs:
        current (int): The number of completed iterations
        total (int): The number of iterations
        status (str): The best loss so far, shown by the progress bar
    """
    MODE = None
    SAMPLER = None

    def __init__(self, dataset, decoder, cfg, ui=None):
        self.logger = logging.getLogger("{}.{}".format(self.__class__.__module__,
                                                       self.__class__.__name__))

        if cfg.mode != self.MODE:
            raise InvalidParameter("mode", cfg.mode, "doit valoir {}".format(self.MODE))
        if decoder.shape != (dataset.meta["T"], dataset.meta["D"]):
            raise ShapeMismatch((dataset.meta["T"], dataset.meta["D"]), decoder.shape, "décodeur")

        self.decoder = decoder
        self.cfg = cfg
        self.ui = ui or DummyUI()
        self.examples = list(dataset)[:cfg.train_contexts]
        if not self.examples:
            raise InvalidParameter("dataset", len(dataset), "doit contenir au moins un exemple")

        self.size = self.SAMPLER.parameter_count(cfg.k, decoder.n_z)
        if cfg.featurize:
            self.features = np.stack([example.context.vector() for example in self.examples])
        else:
            self.features = np.zeros((len(self.examples), 0))

        self.current = 0
        self.total = cfg.iters
        self.status = ""

        if cfg.gradient == "numeric":
            self.analytic = False
        else:
            affine = decoder.jacobian(self.examples[0].context) is not None
            if cfg.gradient == "analytic" and not affine:
                raise InvalidParameter("gradient", cfg.gradient,
                                       "le décodeur {} n'est pas affine".format(decoder.KIND))
            self.analytic = affine

    @property
    def parameter_count(self):
        return self.size * (1 + self.features.shape[1])

    def trainable(self):
        """
        Returns the mask of the trained entries of the parameter vector
        """
        return np.ones(self.parameter_count, dtype=bool)

    def sampler_vector(self, vector, index):
        """
        Returns the sampler parameters of a training example
        """
        base = vector[:self.size]
        if not self.features.shape[1]:
            return base
        M = vector[self.size:].reshape(self.size, self.features.shape[1])
        return base + M @ self.features[index]

    def chain(self, grads):
        """
        Gradient of the parameter vector from the gradients of the sampler
        parameters of each training example
        """
        grads = np.asarray(grads)
        base = grads.sum(axis=0)
        if not self.features.shape[1]:
            return base
        return np.concatenate([base, (grads.T @ self.features).ravel()])

    def objective(self, vector):
        """
        Returns the LossTerms of a parameter vector, averaged over the training examples
        """
        raise NotImplementedError

    def analytic_gradient(self, vector):
        raise NotImplementedError

    def loss(self, vector):
        return self.objective(vector).total

    def gradient(self, vector):
        if self.analytic:
            grad = self.analytic_gradient(vector)
        else:
            grad = numeric_gradient(self.loss, vector, self.cfg.fd_step)
        return np.where(self.trainable(), grad, 0.0)

    def initial_vector(self, rng):
        raise NotImplementedError

    def run(self, init=None):
        """
        Run the training

        Args:
            init: The initial sampler (DsfCodes or AffineFlowSet), drawn from
                the seed when None

        Returns:
            (TrainedSampler, TrainReport): The sampler with the lowest loss
                and the report
        """
        cfg = self.cfg
        self.logger.info("Entraînement %s : K = %d, %d paramètres, %d itérations",
                         self.MODE, cfg.k, self.parameter_count, cfg.iters)

        if init is None:
            vector = self.initial_vector(make_rng(cfg.seed, INIT_STREAM))
        else:
            vector = np.concatenate([init.vector(), np.zeros(self.parameter_count - self.size)])

        report = TrainReport(self.MODE, cfg.seed, parameter_count=self.parameter_count)
        start = time.perf_counter()

        state = None
        best_loss = math.inf
        best_vector = vector
        for iteration in range(cfg.iters):
            try:
                terms = self.objective(vector)
                if not math.isfinite(terms.total):
                    raise NonFiniteLoss(terms.total, iteration)

                if terms.total < best_loss:
                    best_loss = terms.total
                    best_vector = vector

                report.trace.append({
                    "iteration": iteration,
                    "loss": terms.total,
                    "best": best_loss,
                    "terms": dict(terms.weighted, **terms.raw)
                })

                grad = self.gradient(vector)
                vector, state = adam_step(vector, grad, state, cfg.lr, cfg.betas, cfg.adam_eps)
            except FlowNotInvertible as e:
                raise FlowNotInvertible(e.index, e.det, iteration)
            except NonFiniteLoss as e:
                raise NonFiniteLoss(e.value, iteration)
            except (DivsampError, np.linalg.LinAlgError, ValueError) as e:
                raise TrainingError(iteration, e)

            if iteration % cfg.log_every == 0 or iteration == cfg.iters - 1:
                self.logger.info("Itération %d/%d : perte %.6f (meilleure %.6f)",
                                 iteration + 1, cfg.iters, terms.total, best_loss)
            self.current = iteration + 1
            self.status = "perte {:.4f}".format(best_loss)
            self.ui.update()

        report.wall_time = time.perf_counter() - start

        base = self.SAMPLER.from_vector(best_vector[:self.size], cfg.k, self.decoder.n_z)
        featurization = None
        if self.features.shape[1]:
            featurization = best_vector[self.size:].reshape(self.size, self.features.shape[1])
        return TrainedSampler(base, featurization), report

class DsfTrainer(Trainer):
    """
    Trainer of the K codes against the DPP diversity loss
    """
    MODE = "dsf"
    SAMPLER = DsfCodes

    def _kernel(self, vector, index):
        codes = self.sampler_vector(vector, index).reshape(self.cfg.k, self.decoder.n_z)
        samples = self.decoder.decode_batch(codes, self.examples[index].context)
        ground = GroundSet(samples.reshape(self.cfg.k, -1), codes)
        return ground, build_kernel(ground, self.cfg.kernel)

    def objective(self, vector):
        count = len(self.examples)
        loss = 0.0
        cardinality = 0.0
        nll = 0.0
        for index in range(count):
            _, kernel = self._kernel(vector, index)
            loss += dsf_loss(kernel)
            cardinality += expected_cardinality(kernel)
            nll += dpp_nll(kernel)

        total = loss / count
        return LossTerms(total, {"diversity": total},
                         {"expected_card": cardinality / count, "nll": nll / count})

    def analytic_gradient(self, vector):
        count = len(self.examples)
        grads = []
        for index in range(count):
            ground, kernel = self._kernel(vector, index)
            grad_items, grad_latents = dsf_loss_grad(kernel, ground, self.cfg.kernel)
            W = self.decoder.jacobian(self.examples[index].context)
            grads.append((grad_items @ W + grad_latents).ravel() / count)
        return self.chain(grads)

    def initial_vector(self, rng):
        base = rng.normal(0.0, self.cfg.init_scale, size=self.size)
        return np.concatenate([base, np.zeros(self.parameter_count - self.size)])

class DlowTrainer(Trainer):
    """
    Trainer of the K affine flows against the DLow objective, averaged over
    noise draws fixed for the whole run
    """
    MODE = "dlow"
    SAMPLER = AffineFlowSet

    def __init__(self, dataset, decoder, cfg, ui=None):
        Trainer.__init__(self, dataset, decoder, cfg, ui)
        self.noise = make_rng(cfg.seed, NOISE_STREAM).standard_normal((cfg.noise_draws, decoder.n_z))

    def trainable(self):
        mask = np.ones(self.parameter_count, dtype=bool)
        if not self.cfg.identity_first:
            return mask

        n_z = self.decoder.n_z
        first = np.zeros(self.size, dtype=bool)
        first[:n_z * n_z] = True
        first[self.cfg.k * n_z * n_z:self.cfg.k * n_z * n_z + n_z] = True

        mask[:self.size] = ~first
        if self.features.shape[1]:
            rows = mask[self.size:].reshape(self.size, self.features.shape[1])
            rows[first] = False
        return mask

    def _flows(self, vector, index):
        return AffineFlowSet.from_vector(self.sampler_vector(vector, index),
                                         self.cfg.k, self.decoder.n_z)

    def objective(self, vector):
        weighted = {}
        raw = {}
        total = 0.0
        count = len(self.examples) * len(self.noise)
        for index, example in enumerate(self.examples):
            flows = self._flows(vector, index)
            for eps in self.noise:
                samples = self.decoder.decode_batch(apply_flows(flows, eps), example.context)
                terms = dlow_loss(flows, SampleSet(samples), example.future, self.cfg.energy)
                total += terms.total
                for name in terms.weighted:
                    weighted[name] = weighted.get(name, 0.0) + terms.weighted[name]
                    raw["raw_" + name] = raw.get("raw_" + name, 0.0) + terms.raw[name]

        return LossTerms(total / count,
                         {name: value / count for name, value in weighted.items()},
                         {name: value / count for name, value in raw.items()})

    def analytic_gradient(self, vector):
        k = self.cfg.k
        n_z = self.decoder.n_z
        draws = len(self.noise)
        count = len(self.examples)

        grads = []
        for index, example in enumerate(self.examples):
            flows = self._flows(vector, index)
            W = self.decoder.jacobian(example.context)

            grad_A = np.zeros((k, n_z, n_z))
            grad_b = np.zeros((k, n_z))
            for j in range(k):
                kl_A, kl_b = kl_grad(flows, j)
                grad_A[j] += self.cfg.energy.beta * kl_A
                grad_b[j] += self.cfg.energy.beta * kl_b

            for eps in self.noise:
                samples = self.decoder.decode_batch(apply_flows(flows, eps), example.context)
                grad_x = dlow_energy_grad(samples, example.future, self.cfg.energy)
                grad_z = grad_x.reshape(k, -1) @ W / draws
                grad_A += grad_z[:, :, np.newaxis] * eps[np.newaxis, np.newaxis, :]
                grad_b += grad_z

            grads.append(np.concatenate([grad_A.ravel(), grad_b.ravel()]) / count)
        return self.chain(grads)

    def initial_vector(self, rng):
        k = self.cfg.k
        n_z = self.decoder.n_z
        A = np.eye(n_z) + rng.normal(0.0, 0.01, size=(k, n_z, n_z))
        b = rng.normal(0.0, 0.1, size=(k, n_z))
        if self.cfg.identity_first:
            A[0] = np.eye(n_z)
            b[0] = 0.0
        base = np.concatenate([A.ravel(), b.ravel()])
        return np.concatenate([base, np.zeros(self.parameter_count - self.size)])

TRAINERS = {trainer.MODE: trainer for trainer in (DsfTrainer, DlowTrainer)}

def train_dsf(dataset, decoder, cfg, ui=None, init=None):
    """
    Train K codes minimizing the DPP diversity loss of their decoded samples

    Returns:
        (TrainedSampler, TrainReport)
    """
    return DsfTrainer(dataset, decoder, cfg, ui).run(init)

def train_dlow(dataset, decoder, cfg, ui=None, init=None):
    """
    Train K affine flows minimizing the DLow objective

    Returns:
        (TrainedSampler, TrainReport)
    """
    return DlowTrainer(dataset, decoder, cfg, ui).run(init)
