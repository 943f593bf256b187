"""
Conservative empirical quantiles with Monte-Carlo standard errors
"""
import math

import numpy as np
from scipy.stats import gaussian_kde

from posikit.errors import InfeasibleError


def quantile_index(alpha: float, n: int) -> int:
    """
    1-based index of the conservative order statistic, ceil((1 - alpha)(N + 1))

    Args:
        alpha (float): error level
        n (int): number of draws

    Returns:
        int: index k, at most n
    """
    # rounding guard: (1 - 0.05) * 20 is not exactly 19
    k = math.ceil((1 - alpha) * (n + 1) - 1e-9)
    if k > n:
        raise InfeasibleError(
            f'{n} draws are too few for alpha={alpha}: need ceil((1-alpha)(N+1)) <= N'
        )
    return max(k, 1)


def conservative_quantile(draws: np.ndarray, alpha: float) -> float:
    """
    Args:
        draws (np.ndarray): i.i.d. draws
        alpha (float): error level

    Returns:
        float: k-th smallest draw with k = quantile_index(alpha, N)
    """
    draws = np.asarray(draws, dtype=float)
    k = quantile_index(alpha, draws.size)
    return float(np.partition(draws, k - 1)[k - 1])


def quantile_standard_error(draws: np.ndarray, alpha: float,
                            quantile: float) -> float:
    """
    Asymptotic standard error of an empirical quantile: sqrt(alpha (1 - alpha) / N) / f(K),
    the density f is a Gaussian kernel estimate with Silverman bandwidth

    Args:
        draws (np.ndarray): draws
        alpha (float): error level
        quantile (float): the estimated quantile K

    Returns:
        float: standard error, 0 if the draws are degenerate
    """
    draws = np.asarray(draws, dtype=float)
    n = draws.size
    if n < 2 or np.ptp(draws) == 0:
        return 0.0
    density = float(gaussian_kde(draws, bw_method='silverman')(quantile)[0])
    if density <= 0:
        return math.inf
    return math.sqrt(alpha * (1 - alpha) / n) / density
