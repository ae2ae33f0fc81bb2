"""Small dense LU factorisation on top of the kernel backend."""

from __future__ import annotations

import numpy as np

from . import kernels


class LU:
    """LU factors of a square matrix with partial pivoting."""

    __slots__ = ("lu", "piv", "sign", "n")

    def __init__(self, a):
        self.lu = np.array(a, dtype=np.float64, order="C", copy=True)
        self.n = self.lu.shape[0]
        if self.lu.shape != (self.n, self.n):
            raise ValueError("LU needs a square matrix")
        self.piv = np.zeros(self.n, dtype=np.int32)
        self.sign = kernels.lu_factor(self.lu, self.piv)

    @property
    def det(self) -> float:
        d = float(self.sign)
        for i in range(self.n):
            d *= self.lu[i, i]
        return d

    def solve(self, b) -> np.ndarray:
        x = np.array(b, dtype=np.float64, copy=True)
        kernels.lu_solve(self.lu, self.piv, x)
        return x

    def inverse(self) -> np.ndarray:
        inv = np.empty((self.n, self.n))
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = 1.0
            inv[:, j] = self.solve(e)
        return inv


def det(a) -> float:
    return LU(a).det
