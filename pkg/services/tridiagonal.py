"""
Symmetric tridiagonal eigensolver (implicit QL, Wilkinson-type shift)

Only the first row of the eigenvector matrix is accumulated, which is all
Golub-Welsch quadrature needs.
"""
import logging
import math
from typing import Sequence, Tuple

import numpy as np

from utils.errors import NumericFailure

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)


def tridiagonal_eigen(
    diagonal: Sequence[float],
    off_diagonal: Sequence[float],
    max_iterations: int = 30,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues and first eigenvector components of a symmetric tridiagonal matrix

    Args:
        diagonal: Diagonal entries d_0..d_{n-1}
        off_diagonal: Sub-diagonal entries e_0..e_{n-2}, e_i couples rows i and i+1
        max_iterations: QL sweeps allowed per eigenvalue

    Returns:
        (eigenvalues ascending, signed first components of the matching unit eigenvectors)

    Raises:
        NumericFailure: an eigenvalue did not converge within max_iterations
    """
    d = [float(v) for v in diagonal]
    n = len(d)
    if len(off_diagonal) != max(n - 1, 0):
        raise ValueError(f"off-diagonal must have {n - 1} entries, got {len(off_diagonal)}")
    if n == 0:
        return np.empty(0), np.empty(0)

    e = [float(v) for v in off_diagonal] + [0.0]
    z = [0.0] * n
    z[0] = 1.0

    norm = max(abs(d[i]) + abs(e[i]) + (abs(e[i - 1]) if i > 0 else 0.0) for i in range(n))
    floor = _EPS * _EPS * max(norm, 1.0)
    total_sweeps = 0

    for l in range(n):
        iterations = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd + floor:
                    break
                m += 1
            if m == l:
                break
            if iterations >= max_iterations:
                raise NumericFailure(
                    f"QL iteration did not converge for eigenvalue {l}",
                    diagnostics={"index": l, "iterations": iterations, "off_diagonal": e[l]},
                )
            iterations += 1

            # Wilkinson-type shift from the leading 2x2 block
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                f = z[i + 1]
                z[i + 1] = s * z[i] + c * f
                z[i] = c * z[i] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
        total_sweeps += iterations

    logger.debug(f"Tridiagonal QL converged: n={n}, sweeps={total_sweeps}")

    eigenvalues = np.array(d)
    first = np.array(z)
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], first[order]
