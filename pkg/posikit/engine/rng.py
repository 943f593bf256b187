"""
Counter-based random draws.

Draws are generated in fixed blocks of DRAW_BLOCK_SIZE. Block b uses a Philox generator
keyed by the seed with the counter set to b, so any split of the blocks between workers
gives the same numbers
"""
import math

import numpy as np

from posikit.consts import DRAW_BLOCK_SIZE

KEY_MASK = (1 << 128) - 1
COUNTER_SHIFT = 192
"""
The block index goes into the highest counter word.
Philox advances the lowest words, so blocks never overlap
"""


def block_generator(seed: int, block: int) -> np.random.Generator:
    """
    Args:
        seed (int): user seed
        block (int): block index

    Returns:
        np.random.Generator: generator of the block
    """
    bit_generator = np.random.Philox(key=int(seed) & KEY_MASK,
                                     counter=int(block) << COUNTER_SHIFT)
    return np.random.Generator(bit_generator)


def block_count(n: int, block_size: int = DRAW_BLOCK_SIZE) -> int:
    return (n + block_size - 1) // block_size


def block_range(block: int, n: int,
                block_size: int = DRAW_BLOCK_SIZE) -> tuple[int, int]:
    """
    Returns:
        tuple[int, int]: first and past-the-end draw index of the block
    """
    start = block * block_size
    return start, min(n, start + block_size)


def draw_block(seed: int,
               block: int,
               n: int,
               d: int,
               df: float,
               block_size: int = DRAW_BLOCK_SIZE
               ) -> tuple[np.ndarray, np.ndarray]:
    """
    Gaussian vectors and error estimates of one block.
    The size of the last block is truncated, its leading draws equal the full block ones

    Args:
        seed (int): user seed
        block (int): block index
        n (int): total number of draws
        d (int): dimension
        df (float): degrees of freedom r, math.inf for known sigma

    Returns:
        tuple[np.ndarray, np.ndarray]: Z (k x d) and sigma_hat (k), sigma_hat^2 ~ chi2_r / r
    """
    start, stop = block_range(block, n, block_size)
    k = stop - start
    rng = block_generator(seed, block)
    z = rng.standard_normal((block_size, d))[:k]
    if math.isinf(df):
        sigma = np.ones(k)
    else:
        sigma = np.sqrt(rng.chisquare(df, block_size)[:k] / df)
    return z, sigma
