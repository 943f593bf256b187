"""
Exception hierarchy. Each class maps to one exit code of the command line tool
"""


class PosiError(Exception):
    """
    Base class for all errors raised by posikit
    """
    exit_code = 1


class UsageError(PosiError, ValueError):
    """
    Bad arguments or a config that misses fields required by the command
    """
    exit_code = 1


class DataError(PosiError, ValueError):
    """
    Input data can't be used: parse errors, rank problems, degenerate predictors
    """
    exit_code = 2


class InfeasibleError(PosiError, ValueError):
    """
    The request is well-formed but can't be satisfied,
    e.g. symmetric canonical form for a rank-deficient design
    """
    exit_code = 3
