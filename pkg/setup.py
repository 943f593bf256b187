"""
Setup script for POSIKIT
"""
import re
from setuptools import setup, find_packages

from posikit.version import get_version

with open('requirements.txt') as inp:
    requirements = '\n'.join(
        re.findall(r'^([^\s^+]+).*$', inp.read(), flags=re.MULTILINE))

setup(
    name="POSIKIT",
    version=get_version(),
    author="bahleg",
    author_email="bakhteev.o at gmail.com",
    description=
    "post-selection inference constants and universally valid intervals for linear designs",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "posikit=posikit.main:main",
        ]
    },
)
