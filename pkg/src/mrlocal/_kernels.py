"""Compiled inner loops for candidate-grid evaluation.

Both kernels use the identical arithmetic expression for the squared
standardized residual so that membership decisions agree bit-for-bit
between the grid sweep and the single-candidate extraction.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def grid_stats(gy, gd, sy2, sd2, bgrid, tau0_sq, want_third):
    """Cluster size, sum of z^2 and (optionally) sum of z^3 per grid value.

    Membership at candidate b is z_j(b)^2 <= tau0_sq with
    z_j(b)^2 = (gy_j - b*gd_j)^2 / (sy2_j + b^2*sd2_j).
    """
    m = bgrid.shape[0]
    p = gy.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    sq_sums = np.zeros(m, dtype=np.float64)
    cube_sums = np.zeros(m, dtype=np.float64)
    for i in range(m):
        b = bgrid[i]
        b2 = b * b
        cnt = 0
        sq = 0.0
        cube = 0.0
        for j in range(p):
            num = gy[j] - b * gd[j]
            den = sy2[j] + b2 * sd2[j]
            z2 = num * num / den
            if z2 <= tau0_sq:
                cnt += 1
                sq += z2
                if want_third:
                    cube += z2 * (num / np.sqrt(den))
        counts[i] = cnt
        sq_sums[i] = sq
        cube_sums[i] = cube
    return counts, sq_sums, cube_sums


@njit(cache=True)
def z_squared(gy, gd, sy2, sd2, b):
    """Vector of squared standardized residuals at a single candidate b."""
    p = gy.shape[0]
    out = np.empty(p, dtype=np.float64)
    b2 = b * b
    for j in range(p):
        num = gy[j] - b * gd[j]
        den = sy2[j] + b2 * sd2[j]
        out[j] = num * num / den
    return out
