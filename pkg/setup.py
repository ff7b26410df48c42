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

from setuptools import setup

with open('README.md', encoding='utf-8') as f:
    long_description = f.read()

with open("divsamp/__version__.py") as f:
    exec(f.read())

setup(
    name='divsamp',
    version=__version__,
    description='Diverse sampling of future trajectories with DPP and latent flows',
    long_description=long_description,
    long_description_content_type='text/markdown',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)',
        'Natural Language :: French',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering'
    ],
    license="GNU/GPL v3",

    packages=['divsamp'],
    python_requires='>=3.7',
    install_requires=[
        'numpy',
        'scipy'
    ],
    extras_require={
        'test': ['pytest']
    },
    entry_points={
        'console_scripts': [
            'divsamp = divsamp:main',
        ],
    },
    data_files=[('share/doc/divsamp', [
        'config.cfg',
        'README.md'
    ])]
)
