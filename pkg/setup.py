#!/usr/bin/env python

import os.path
import sys

from setuptools import setup


def read(*filenames):
    """Read files relative to the executable."""
    files = []
    for filename in filenames:
        full_path = os.path.join(os.path.dirname(sys.argv[0]), filename)
        with open(full_path, 'r') as fh:
            files.append(fh.read())
    return "\n\n".join(files)


setup(
    name='comrades',
    version='0.1.0',
    description='Coordinated opt-out campaigns against spam-advertised sites.',
    long_description=read('README', 'ChangeLog'),
    license='MIT',
    packages=['comrades'],
    package_data={'comrades': ['scenarios/*.yaml']},
    python_requires='>=3.9',

    install_requires=[
        'cryptography>=3.4',
        'PyYAML>=5.1',
        'simpy>=4.0',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'comrades = comrades.cli:main',
        ],
    },

    classifiers=(
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Communications :: Email :: Filters',
    ),
)
