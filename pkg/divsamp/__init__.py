#!/usr/bin/env python3
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

import argparse
import logging
import sys

from divsamp.cli import COMMANDS
from divsamp.config import read as read_config
from divsamp.ui import UI
from divsamp.util import DivsampError
from divsamp.__version__ import __version__

DEFAULT_CONFIG = "config.cfg"

def build_parser():
    parser = argparse.ArgumentParser(
        prog="divsamp",
        description="Échantillonnage diversifié de trajectoires futures")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument("--config", default=None,
                        help="fichier de configuration (par défaut {} s'il existe)".format(
                            DEFAULT_CONFIG))
    parser.add_argument("--log-file", default="debug.log", help="journal de débogage")
    parser.add_argument("--seed", type=int, default=None, help="graine (prioritaire sur la configuration)")

    commands = parser.add_subparsers(dest="command", metavar="COMMANDE")
    commands.required = True

    gen_data = commands.add_parser("gen-data", help="générer les données du carrefour")
    gen_data.add_argument("--out", default="dataset.jsonl", help="fichier de données à écrire")

    train = commands.add_parser("train", help="entraîner un échantillonneur")
    train.add_argument("--dataset", required=True, help="fichier de données")
    train.add_argument("--model", default="model.json", help="fichier du modèle à écrire")
    train.add_argument("--report", default="train_report.json", help="rapport d'entraînement")
    train.add_argument("--mode", choices=("dsf", "dlow"), default=None)
    train.add_argument("--k", type=int, default=None, help="nombre d'échantillons K")

    sample = commands.add_parser("sample", help="échantillonner avec un modèle entraîné")
    sample.add_argument("--dataset", required=True, help="fichier de données")
    sample.add_argument("--model", required=True, help="fichier du modèle")
    sample.add_argument("--samples", default="samples.jsonl", help="fichier d'échantillons à écrire")
    sample.add_argument("--k", type=int, default=None, help="nombre d'échantillons K")
    sample.add_argument("--omega", type=float, default=None, help="qualité de base ω")
    sample.add_argument("--dpp-map", action="store_true",
                        help="sélectionner un sous-ensemble diversifié (MAP glouton)")
    sample.add_argument("--reference", action="store_true",
                        help="utiliser le futur de chaque exemple comme échantillon de référence")

    evaluate = commands.add_parser("eval", help="évaluer des échantillons")
    evaluate.add_argument("--dataset", required=True, help="fichier de données")
    evaluate.add_argument("--samples", required=True, help="fichier d'échantillons")
    evaluate.add_argument("--eps", type=float, default=None,
                          help="distance des contextes de la vérité terrain multimodale")
    evaluate.add_argument("--model", default=None, help="modèle dont le décodeur sert de référence")
    evaluate.add_argument("--baseline-seed", type=int, default=None,
                          help="graine des échantillons i.i.d. de référence")
    evaluate.add_argument("--out", default="report.csv", help="tableau des métriques par exemple")
    evaluate.add_argument("--report", default="report.json", help="métriques moyennes")

    return parser

def main(argv=None):
    args = build_parser().parse_args(argv)

    logger = logging.getLogger("divsamp")
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    # File output
    filehandler = logging.FileHandler(args.log_file)
    filehandler.setLevel(logging.DEBUG)

    formatter = logging.Formatter('%(levelname)-8s : %(message)s')
    filehandler.setFormatter(formatter)

    logger.addHandler(filehandler)

    ui = UI()

    logger.info("Divsamp %s", __version__)
    logger.debug("OS : %s", sys.platform)
    logger.debug("Arguments : %s", vars(args))

    status = 0
    try:
        if args.config is None:
            config = read_config(DEFAULT_CONFIG, required=False)
        else:
            config = read_config(args.config)

        COMMANDS[args.command](args, config, ui)
    except DivsampError as e:
        logger.debug("Trace de l'erreur :", exc_info=True)
        logger.error("%s", e)
        status = 1
    except OSError as e:
        logger.debug("Trace de l'erreur :", exc_info=True)
        logger.error("Impossible de lire ou d'écrire %s : %s", e.filename, e.strerror)
        status = 1
    finally:
        ui.close()
        logger.removeHandler(filehandler)
        filehandler.close()

    return status

if __name__ == "__main__":
    sys.exit(main())
