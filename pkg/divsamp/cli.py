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
Module implementing the commands of the command line interface

Each command takes the parsed arguments, the configuration (see
divsamp.config) and the interface, and writes its output files.
"""

from dataclasses import replace
import logging

import numpy as np

from divsamp.config import crossroad_config, train_config
from divsamp.decoders import CrossroadDecoder, load_decoder
from divsamp.dpp import GroundSet, build_kernel, greedy_map
from divsamp.files import (FormatError, read_dataset, read_json, read_samples, write_dataset,
                           write_json, write_metrics_csv, write_samples)
from divsamp.flows import reference_noise
from divsamp.synth import generate_crossroad, mode_coverage, route_histogram, ROUTES
from divsamp.training import TRAINERS, TrainConfig, TrainedSampler, draw_samples, prior_samples
from divsamp.trajectory import SampleSet, evaluate
from divsamp.util import DivsampError, InvalidParameter, ShapeMismatch, make_rng

# Context distance of the multi-modal ground truth when neither the flags
# nor the configuration set it
DEFAULT_EPS = 0.5

class MisalignedIds(DivsampError):
    """
    Exception raised when a samples file and a dataset do not hold the same examples
    """

    def __init__(self, missing, extra):
        """
        Args:
            missing (List[int]): Ids of the dataset without samples
            extra (List[int]): Ids of samples absent from the dataset
        """
        DivsampError.__init__(self)

        self.missing = sorted(missing)
        self.extra = sorted(extra)

    def __str__(self):
        return ("Les échantillons ne correspondent pas aux données (sans échantillons : {}, "
                "inconnus : {})").format(self.missing, self.extra)

def build_decoder(config, data_cfg):
    """
    Build the decoder described in the [decoder] section

    The crossroad decoder takes its defaults from the data parameters; the
    linear and tabulated decoders are read from the JSON file given by path.
    """
    options = config["decoder"]
    kind = options.get("kind", CrossroadDecoder.KIND)

    if kind == CrossroadDecoder.KIND:
        return CrossroadDecoder(options.get("mode_probs", data_cfg.mode_probs), data_cfg.speed,
                                data_cfg.future_steps,
                                options.get("within_mode_scale", 0.4 * data_cfg.speed))

    if "path" not in options:
        raise InvalidParameter("decoder.path", None,
                               "le décodeur {} doit être lu depuis un fichier".format(kind))
    spec = read_json(options["path"], versioned=False)
    spec.setdefault("kind", kind)
    return load_decoder(spec)

def check_decoder(decoder, dataset):
    shape = (dataset.meta["T"], dataset.meta["D"])
    if decoder.shape != shape:
        raise ShapeMismatch(shape, decoder.shape, "décodeur")

def cmd_gen_data(args, config, ui):
    """
    Generate a crossroad dataset
    """
    logger = logging.getLogger("divsamp.cli.cmd_gen_data")

    cfg = crossroad_config(config, seed=args.seed)
    dataset = generate_crossroad(cfg)

    logger.info("Écriture des données dans %s", args.out)
    write_dataset(args.out, dataset)

    meta = dataset.meta
    histogram = route_histogram(dataset)
    logger.info("%d exemples : passé %d×%d, futur %d×%d", len(dataset), meta["H"], meta["D"],
                meta["T"], meta["D"])
    logger.info("Routes : %s", ", ".join("{} {}".format(route, histogram[route])
                                         for route in ROUTES))

def cmd_train(args, config, ui):
    """
    Train a sampler and write the model and the training report
    """
    logger = logging.getLogger("divsamp.cli.cmd_train")

    dataset = read_dataset(args.dataset)
    decoder = build_decoder(config, crossroad_config(config))
    check_decoder(decoder, dataset)

    cfg = train_config(config, decoder.n_z, seed=args.seed, k=args.k, mode=args.mode)
    trainer = TRAINERS[cfg.mode](dataset, decoder, cfg, ui)
    ui.task = trainer
    try:
        sampler, report = trainer.run()
    finally:
        ui.task = None

    logger.info("Perte initiale %.6f, perte finale %.6f", report.initial_loss, report.final_loss)

    write_json(args.model, {
        "mode": cfg.mode,
        "n_z": decoder.n_z,
        "K": cfg.k,
        "seed": cfg.seed,
        "params": sampler.as_dict(),
        "decoder": decoder.as_dict(),
        "train_config": cfg.as_dict()
    })
    write_json(args.report, report.as_dict())
    logger.info("Modèle écrit dans %s, rapport dans %s", args.model, args.report)

def load_model(path):
    """
    Returns the sampler, the decoder and the training configuration of a model file

    Raises:
        FormatError: if a field is missing or has the wrong type
    """
    model = read_json(path)
    try:
        cfg = TrainConfig.from_dict(model["train_config"])
        sampler = TrainedSampler.from_dict(model["mode"], model["params"])
        decoder = load_decoder(model["decoder"])
    except KeyError as e:
        raise FormatError(path, "champ {} manquant".format(e))
    except (TypeError, ValueError, AttributeError) as e:
        raise FormatError(path, str(e))
    if sampler.n_z != decoder.n_z:
        raise ShapeMismatch((decoder.n_z,), (sampler.n_z,), "codes latents du modèle")
    return sampler, decoder, cfg

def cmd_sample(args, config, ui):
    """
    Decode the K samples of every example, and select a diverse subset with
    DPP MAP inference when asked to
    """
    logger = logging.getLogger("divsamp.cli.cmd_sample")

    dataset = read_dataset(args.dataset)
    sampler, decoder, cfg = load_model(args.model)
    check_decoder(decoder, dataset)
    if args.k is not None and args.k != sampler.k:
        raise ShapeMismatch((sampler.k,), (args.k,), "nombre d'échantillons du modèle")

    kernel_cfg = cfg.kernel
    if args.omega is not None:
        kernel_cfg = replace(kernel_cfg, base_quality=args.omega)
    seed = cfg.seed if args.seed is None else args.seed

    if args.reference and (sampler.mode != "dlow" or not hasattr(decoder, "encode")):
        raise InvalidParameter("--reference", True,
                               "nécessite un modèle dlow et un décodeur linéaire")

    logger.info("Échantillonnage de %d exemples (K = %d)", len(dataset), sampler.k)
    sample_sets = []
    for example in dataset:
        eps = None
        if sampler.mode == "dlow":
            if args.reference:
                z_ref = decoder.encode(example.future, example.context)
                eps = reference_noise(sampler.at(example.context), z_ref)
            else:
                eps = make_rng(seed, example.id).standard_normal(sampler.n_z)

        codes, samples = draw_samples(sampler, decoder, example.context, eps)

        selected = None
        if args.dpp_map:
            ground = GroundSet(samples.reshape(samples.shape[0], -1), codes)
            selected = greedy_map(build_kernel(ground, kernel_cfg))
        sample_sets.append(SampleSet(samples, example.id, selected))

    if args.dpp_map:
        logger.info("Taille moyenne des sous-ensembles sélectionnés : %.2f",
                    np.mean([len(sample_set.selected) for sample_set in sample_sets]))

    write_samples(args.samples, sample_sets)
    logger.info("Échantillons écrits dans %s", args.samples)

def _method_rows(method, report):
    return [dict(row, method=method) for row in report.rows]

def _format_metric(name, value):
    if value is None:
        return "{} -".format(name)
    return "{} {:.4f}".format(name, value)

def _coverage(dataset, sample_sets, speed):
    coverage = mode_coverage(dataset, sample_sets, speed)
    counts = list(coverage.values())
    return {
        "mode_coverage": float(np.mean(counts)),
        "full_coverage": float(np.mean([count == len(ROUTES) for count in counts]))
    }

def cmd_eval(args, config, ui):
    """
    Compute the metrics of a samples file, and of the i.i.d. prior samples
    when a baseline seed is given
    """
    logger = logging.getLogger("divsamp.cli.cmd_eval")

    dataset = read_dataset(args.dataset)
    sample_sets = read_samples(args.samples)

    ids = set(dataset.ids())
    if ids != set(sample_sets):
        raise MisalignedIds(ids - set(sample_sets), set(sample_sets) - ids)

    eps = args.eps
    if eps is None:
        eps = config["run"].get("eps", DEFAULT_EPS)
    labelled = all("route" in example.meta for example in dataset)
    speed = crossroad_config(config).speed

    methods = {"sampler": sample_sets}
    if args.baseline_seed is not None:
        if args.model is None:
            raise InvalidParameter("--baseline-seed", args.baseline_seed,
                                   "nécessite un modèle (--model) pour son décodeur")
        _, decoder, _ = load_model(args.model)
        check_decoder(decoder, dataset)

        baseline = {}
        for example in dataset:
            k = len(sample_sets[example.id])
            rng = make_rng(args.baseline_seed, example.id)
            _, samples = prior_samples(decoder, example.context, k, rng)
            baseline[example.id] = SampleSet(samples, example.id)
        methods["iid"] = baseline

    rows = []
    aggregates = {}
    for method, sets in methods.items():
        report = evaluate(dataset, sets, eps)
        if labelled:
            report.extra.update(_coverage(dataset, sets, speed))
        rows.extend(_method_rows(method, report))
        aggregates[method] = report.as_dict()
        logger.info("%-8s %s", method, "  ".join(_format_metric(name, value)
                                                  for name, value in report.as_dict().items()
                                                  if name != "examples"))

    write_metrics_csv(args.out, rows)
    write_json(args.report, {"eps": eps, "methods": aggregates})
    logger.info("Rapport écrit dans %s et %s", args.out, args.report)

COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sample": cmd_sample,
    "eval": cmd_eval
}
