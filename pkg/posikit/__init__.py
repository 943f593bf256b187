"""
POSIKIT: post-selection inference constants for linear designs
"""
from posikit.version import get_version

__version__ = get_version()
