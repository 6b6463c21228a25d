"""Dense linear algebra over GF(2) on uint8 matrices."""
from __future__ import annotations

import numpy as np


def _as_matrix(M) -> np.ndarray:
    A = np.array(M, dtype=np.uint8)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    return A & 1


def rref(M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = _as_matrix(M).copy()
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            A[[r, p]] = A[[p, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        A[others] ^= A[r]
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M) -> int:
    return len(rref(M)[1])


def nullspace(M) -> np.ndarray:
    """Basis (as rows) of ``{x : M x = 0}``."""
    A, pivots = rref(M)
    cols = A.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for r, pc in enumerate(pivots):
            basis[t, pc] = A[r, f]
    return basis
