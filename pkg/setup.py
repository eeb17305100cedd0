#!/usr/bin/env python3

from setuptools import find_packages, setup

requires = [
    "joblib",
    "numpy",
    "pandas",
    "scikit-learn",
    "scipy",
    "simpy",
    "typing_extensions",
]

extras_require = {
    "test": [
        "hypothesis",
        "pytest<8",
        "mypy",
    ]
}

setup(
    name="amrfleet",
    version="0.1",
    description="Energy-aware task allocation and rescheduling for AMR fleets",
    license="Apache 2.0",
    classifiers=[
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
    ],
    install_requires=requires,
    extras_require=extras_require,
    packages=find_packages(
        where=".",
        include=["amrfleet", "amrfleet.*"],
    ),
    entry_points={"console_scripts": ["amrfleet=amrfleet.cli:main"]},
    include_package_data=True,
    zip_safe=False,
)
