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

import numpy as np
import pytest

from divsamp.decoders import CrossroadDecoder, LinearDecoder
from divsamp.synth import CrossroadConfig, generate_crossroad
from divsamp.trajectory import Context, Dataset, Example

def random_psd(rng, size, rank=None):
    """
    Random symmetric PSD matrix, of full rank unless rank is given
    """
    factor = rng.normal(size=(size, rank or size))
    return factor @ factor.T / (rank or size)

def linear_dataset(rng, count=3, steps=3, dims=2, past=2):
    """
    Small dataset with random contexts and futures
    """
    examples = [Example(i, Context(rng.normal(size=(past, dims))), rng.normal(size=(steps, dims)))
                for i in range(count)]
    return Dataset(examples, "random")

@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture
def crossroad_cfg():
    return CrossroadConfig(mode_probs=(0.8, 0.1, 0.1), n_examples=40, seed=7)

@pytest.fixture
def crossroad_data(crossroad_cfg):
    return generate_crossroad(crossroad_cfg)

@pytest.fixture
def crossroad_decoder(crossroad_cfg):
    return CrossroadDecoder(crossroad_cfg.mode_probs, crossroad_cfg.speed,
                            crossroad_cfg.future_steps, 0.4 * crossroad_cfg.speed)

@pytest.fixture
def linear_decoder(rng):
    return LinearDecoder(rng.normal(size=(6, 2)), rng.normal(size=6), 3, 2)

@pytest.fixture
def junction():
    """
    Context of a vehicle arriving at the origin along +x
    """
    return Context(np.array([[-1.0, 0.0], [0.0, 0.0]]))
