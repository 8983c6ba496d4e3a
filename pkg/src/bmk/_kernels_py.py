"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``bmk._kernels`` (Cython) must agree with
them to round-off. Both expose the same three functions.
"""

import numpy as np


def legendre_table(lmax, x):
    """Orthonormal associated Legendre functions and their theta-derivatives.

    Returns ``(P, dP)`` with shape ``(lmax + 1, lmax + 1, len(x))`` indexed
    ``[l, m, node]`` (zero for ``m > l``). ``P[l, m]`` is normalized so that
    ``2 * pi * int_{-1}^{1} P**2 dx == 1`` and ``dP`` is ``dP/dtheta`` with
    ``x = cos(theta)``. No Condon-Shortley phase. Nodes must avoid the poles.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(1.0 - x * x)
    P = np.zeros((lmax + 1, lmax + 1, x.size))
    dP = np.zeros_like(P)
    P[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, lmax + 1):
        P[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(lmax):
        P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * P[m, m]
    for m in range(lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[l, m] = a * (x * P[l - 1, m] - b * P[l - 2, m])
    for m in range(lmax + 1):
        dP[m, m] = m * x * P[m, m] / s
        for l in range(m + 1, lmax + 1):
            c = np.sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * (l * l - m * m))
            dP[l, m] = (l * x * P[l, m] - c * P[l - 1, m]) / s
    return P, dP


def jet_algebra(value, hess):
    """Per-node W = hess + value*I, det W, cofactor U = adj(W), min eig(W).

    ``hess`` has shape (N, n, n) with n in {1, 2}.
    """
    value = np.asarray(value, dtype=float)
    hess = np.asarray(hess, dtype=float)
    n = hess.shape[1]
    W = hess + value[:, None, None] * np.eye(n)
    if n == 1:
        det = W[:, 0, 0].copy()
        U = np.ones_like(W)
        return W, det, U, det.copy()
    a = W[:, 0, 0]
    b = 0.5 * (W[:, 0, 1] + W[:, 1, 0])
    c = W[:, 1, 1]
    det = a * c - b * b
    U = np.empty_like(W)
    U[:, 0, 0] = c
    U[:, 1, 1] = a
    U[:, 0, 1] = -b
    U[:, 1, 0] = -b
    half_tr = 0.5 * (a + c)
    disc = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    return W, det, U, half_tr - disc


def support_max(directions, vertices):
    """max_j directions[i] . vertices[j] for every direction, chunked."""
    directions = np.asarray(directions, dtype=float)
    vertices = np.asarray(vertices, dtype=float)
    out = np.empty(directions.shape[0])
    step = max(1, 4_000_000 // max(1, vertices.shape[0]))
    for start in range(0, directions.shape[0], step):
        block = directions[start:start + step] @ vertices.T
        out[start:start + step] = block.max(axis=1)
    return out
