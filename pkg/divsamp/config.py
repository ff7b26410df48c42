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
Module handling the configuration

The configuration file is an INI file whose sections hold the parameters
of each stage (see config.cfg). Every option is optional; absent options
take the defaults of the corresponding parameter classes. Unknown sections
and options are rejected.
"""

import configparser
import os.path

from divsamp.dpp import KernelConfig
from divsamp.energy import EnergyConfig
from divsamp.synth import CrossroadConfig
from divsamp.training import TrainConfig
from divsamp.util import DivsampError

STRING = "string"
BOOLEAN = "boolean"
INTEGER = "integer"
REAL = "real"
INTEGERS = "integers"
REALS = "reals"

# Options defined in the config file, by section
OPTIONS = {
    "data": {
        "mode_probs": REALS,
        "n_examples": INTEGER,
        "past_steps": INTEGER,
        "future_steps": INTEGER,
        "speed": REAL,
        "noise_std": REAL
    },
    "decoder": {
        "kind": STRING,
        "path": STRING,
        "mode_probs": REALS,
        "within_mode_scale": REAL
    },
    "kernel": {
        "sim_scale": REAL,
        "base_quality": REAL,
        "rho": REAL
    },
    "energy": {
        "sigma_d": REAL,
        "lambda_d": REAL,
        "lambda_r": REAL,
        "lambda_s": REAL,
        "beta": REAL,
        "similar_dims": INTEGERS,
        "diverse_dims": INTEGERS
    },
    "train": {
        "mode": STRING,
        "k": INTEGER,
        "iters": INTEGER,
        "lr": REAL,
        "beta1": REAL,
        "beta2": REAL,
        "adam_eps": REAL,
        "fd_step": REAL,
        "init_scale": REAL,
        "noise_draws": INTEGER,
        "train_contexts": INTEGER,
        "featurize": BOOLEAN,
        "identity_first": BOOLEAN,
        "gradient": STRING
    },
    "run": {
        "seed": INTEGER,
        "log_every": INTEGER,
        "eps": REAL
    }
}

class NoConfigurationFile(DivsampError):
    """
    Exception raised when the configuration file does not exist
    """

    def __init__(self, filename):
        """
        Args:
            filename (str): The path of the configuration file that could not be found
        """
        DivsampError.__init__(self)

        self.filename = filename

    def __str__(self):
        return (
            "Le fichier de configuration ({filename}) n'existe pas.\n"
            "Créez-le en vous inspirant du fichier config.cfg fourni avec divsamp."
        ).format(filename=self.filename)

class InvalidConfigurationFile(DivsampError):
    """
    Exception raised when the configuration file is invalid
    """

    def __init__(self, filename, reason):
        """
        Args:
            filename (str): The path of the configuration file
            reason (str): What is wrong with the file
        """
        DivsampError.__init__(self)

        self.filename = filename
        self.reason = reason

    def __str__(self):
        return (
            "Le fichier de configuration ({filename}) est invalide : {reason}\n"
            "Modifiez-le en vous inspirant du fichier config.cfg fourni avec divsamp."
        ).format(filename=self.filename, reason=self.reason)

def _split(value):
    return [item.strip() for item in value.split(",") if item.strip()]

def _get(cfg, section, option, kind):
    if kind == STRING:
        return cfg.get(section, option).strip()
    if kind == BOOLEAN:
        return cfg.getboolean(section, option)
    if kind == INTEGER:
        return cfg.getint(section, option)
    if kind == REAL:
        return cfg.getfloat(section, option)
    if kind == INTEGERS:
        return tuple(int(item) for item in _split(cfg.get(section, option)))
    return tuple(float(item) for item in _split(cfg.get(section, option)))

def parse(cfg, filename="<config>"):
    """
    Returns the options of a ConfigParser as a dictionnary of sections,
    each a dictionnary of the options it sets
    """
    config = {section: {} for section in OPTIONS}

    for section in cfg.sections():
        if section not in OPTIONS:
            raise InvalidConfigurationFile(filename, "section inconnue [{}]".format(section))

        for option in cfg.options(section):
            if option not in OPTIONS[section]:
                raise InvalidConfigurationFile(
                    filename, "option inconnue {} dans [{}]".format(option, section))

            kind = OPTIONS[section][option]
            try:
                config[section][option] = _get(cfg, section, option, kind)
            except ValueError:
                raise InvalidConfigurationFile(
                    filename, "{}.{} n'est pas de type {}".format(section, option, kind))

    return config

def read(filename, required=True):
    """
    Read the configuration from filename

    Args:
        filename (str): The path of the file
        required (bool): If False, a missing file gives the default configuration

    Returns:
        Dict[str, dict]: The options set in each section
    """
    if not os.path.isfile(filename):
        if required:
            raise NoConfigurationFile(filename)
        return {section: {} for section in OPTIONS}

    cfg = configparser.ConfigParser()
    try:
        with open(filename, "r", encoding="utf-8") as fileobj:
            cfg.read_file(fileobj)
    except configparser.Error as e:
        raise InvalidConfigurationFile(filename, e.message)

    return parse(cfg, filename)

def _merge(values, overrides):
    """
    Options overridden by the command line flags that were given
    """
    merged = dict(values)
    merged.update({name: value for name, value in overrides.items() if value is not None})
    return merged

def crossroad_config(config, **overrides):
    values = _merge(config["data"], overrides)
    values.setdefault("seed", config["run"].get("seed", 0))
    return CrossroadConfig(**values)

def kernel_config(config, latent_dim, **overrides):
    return KernelConfig(latent_dim=latent_dim, **_merge(config["kernel"], overrides))

def energy_config(config):
    values = dict(config["energy"])
    similar = values.pop("similar_dims", None)
    diverse = values.pop("diverse_dims", None)
    if similar is not None or diverse is not None:
        values["joint_split"] = (similar or (), diverse or ())
    return EnergyConfig(**values)

def train_config(config, latent_dim, **overrides):
    """
    Build the TrainConfig of a configuration, the flags given in overrides winning
    """
    values = _merge(config["train"], overrides)
    betas = (values.pop("beta1", 0.9), values.pop("beta2", 0.999))
    values.setdefault("seed", config["run"].get("seed", 0))
    if "log_every" in config["run"]:
        values.setdefault("log_every", config["run"]["log_every"])

    return TrainConfig(betas=betas, kernel=kernel_config(config, latent_dim),
                       energy=energy_config(config), **values)
