#!/usr/bin/env python3
"""
Setup script for mlrank

Maximum likelihood critical points of rank-constrained probability matrices,
computed by monodromy preprocessing and parameter homotopies.
"""

from setuptools import setup, find_packages
from pathlib import Path

# Read the README file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

# Read requirements
def read_requirements(filename):
    """Read requirements from file"""
    requirements = []
    with open(filename, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.split('#', 1)[0].strip()
            if line:
                requirements.append(line)
    return requirements

# Core dependencies
install_requires = read_requirements('requirements.txt')

# Optional dependencies
extras_require = {
    'dev': [
        'pytest>=7.0.0',
        'pytest-cov>=4.0.0',
        'black>=23.0.0',
        'flake8>=6.0.0',
        'mypy>=1.0.0',
    ],
    'all': [
        'pytest>=7.0.0',
        'pytest-cov>=4.0.0',
    ]
}

setup(
    name="mlrank",
    version="0.1.0",
    author="mlrank contributors",
    description="All maximum likelihood critical points of low-rank probability matrices",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=install_requires,
    extras_require=extras_require,
    entry_points={
        "console_scripts": [
            "mlrank=mlrank_sdk.cli.main:main",
        ],
    },
    keywords=[
        "maximum-likelihood",
        "homotopy-continuation",
        "monodromy",
        "low-rank",
        "contingency-tables",
        "em-algorithm",
    ],
    platforms=["any"],
    zip_safe=False,
)
