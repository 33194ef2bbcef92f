# Copyright 2026 The asyncbcu developers, MIT license

from setuptools import setup, find_packages

setup(
    name="asyncbcu",
    version="0.3.0",
    author="The asyncbcu developers",
    description="Randomized primal-dual block coordinate updates for "
                "linearly constrained convex programs, serial and "
                "asynchronous parallel",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3.8",
        "Operating System :: OS Independent",
    ],
    packages=find_packages(exclude=["tests"]),
    package_data={
        "asyncbcu": [
            "examples/*.py",
            "examples/*.ini",
        ]
    },
    install_requires=["numpy>=1.19", "scipy", "numba", "pandas", "xarray"],
    extras_require={
        "plot": ["matplotlib"],
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": ["asyncbcu=asyncbcu.bench:main"],
    },
    python_requires=">=3.8",
)
