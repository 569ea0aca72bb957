"""Hot inner loops for move generation.

The containment scan over the action catalogue dominates playout time, so
it is JIT-compiled with numba when available. Set DDZLAB_NUMBA=0 to force
the pure-numpy fallback (the `movegen-bench` CLI subcommand compares both).
"""

import os

import numpy as np

_USE_NUMBA = os.environ.get("DDZLAB_NUMBA", "1") != "0"


def playable_mask_numpy(matrix: np.ndarray, hand: np.ndarray) -> np.ndarray:
    """Row mask of catalogue entries contained in `hand` (pure numpy)."""
    return (matrix <= hand[np.newaxis, :]).all(axis=1)


if _USE_NUMBA:
    try:
        from numba import njit

        @njit(cache=True)
        def _playable_mask_jit(matrix, hand):
            n, k = matrix.shape
            out = np.empty(n, dtype=np.bool_)
            for i in range(n):
                ok = True
                for j in range(k):
                    if matrix[i, j] > hand[j]:
                        ok = False
                        break
                out[i] = ok
            return out

        def playable_mask(matrix, hand):
            return _playable_mask_jit(matrix, hand)

        JIT_ENABLED = True
    except ImportError:
        playable_mask = playable_mask_numpy
        JIT_ENABLED = False
else:
    playable_mask = playable_mask_numpy
    JIT_ENABLED = False
