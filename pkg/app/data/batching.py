# app/data/batching.py
from typing import List, Tuple

import numpy as np

from common.api_error import DomainError


def minibatch_indices(n: int, batch_size: int, seed: int) -> Tuple[List[np.ndarray], int]:
    """
    Seeded shuffle of range(n) cut into contiguous blocks of ``batch_size``.

    Returns the blocks and the number of rows dropped from the final partial
    block.
    """
    if batch_size < 1:
        raise DomainError("batch_size must be >= 1", argument="batch_size", value=batch_size)
    order = np.random.default_rng(seed).permutation(n)
    full = n // batch_size
    blocks = [order[i * batch_size : (i + 1) * batch_size] for i in range(full)]
    return blocks, n - full * batch_size


__all__ = ["minibatch_indices"]
