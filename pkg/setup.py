"""Stochastic BGK package configuration."""

from setuptools import setup

setup(
    name="stochastic-bgk",
    version=open("VERSION").readline().strip(),
    description="BGK kinetic solver and verification suite for scalar balance laws with transport noise",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    packages=["bgk", "app"],
    python_requires=">=3.9",
    include_package_data=True,
    install_requires=[
        "click>=8.1.0,<8.2",
        "marshmallow>=3.14.1,<4",
        "numpy>=1.24.0",
        "pandas>=2.0.0",
        "scipy>=1.10.0",
        "stringcase>=1.2.0",
        "toml>=0.10.2",
    ],
    entry_points={
        "console_scripts": ["bgk=app.main:main"],
    },
)
