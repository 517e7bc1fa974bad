"""Smoothed-periodogram estimates of the spectral density matrix."""

from dataclasses import dataclass

import numpy as np

from . import numerics

__all__ = [
    "SmoothingKernel",
    "SpectralStack",
    "demean",
    "daniell_kernel",
    "estimate_spectral_density",
    "cross_quadform",
]


@dataclass(frozen=True)
class SmoothingKernel:
    """Symmetric frequency-smoothing weights ``h_{-q} .. h_q``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size % 2 != 1:
            raise ValueError("kernel needs an odd number of weights")
        if np.any(w <= 0):
            raise ValueError("kernel weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("kernel weights must sum to one")
        if not np.allclose(w, w[::-1], rtol=0, atol=1e-15):
            raise ValueError("kernel must be symmetric")
        object.__setattr__(self, "weights", w)

    @property
    def half_width(self):
        return (self.weights.size - 1) // 2

    @property
    def bandwidth(self):
        return self.weights.size


def daniell_kernel(q):
    """Uniform (Daniell) kernel of bandwidth ``2q + 1``."""
    q = int(q)
    if q < 0:
        raise ValueError("q must be non-negative")
    return SmoothingKernel(np.full(2 * q + 1, 1.0 / (2 * q + 1)))


def demean(data):
    """Remove the temporal mean at every location (time is the last axis)."""
    data = np.asarray(data, dtype=float)
    if data.shape[-1] < 2:
        raise ValueError("need at least two time points")
    return data - data.mean(axis=-1, keepdims=True)


class SpectralStack:
    """Spectral density matrices at the Fourier frequencies ``j/n``.

    Stored either in factored form, ``f(w_j) = F_j F_j*`` with ``F_j`` built
    from the data DFT and the kernel, or as explicit ``n x m x m`` matrices.
    The factored form never materialises the ``m x m`` matrices unless asked.
    """

    def __init__(self, n, m, *, dft=None, kernel=None, matrices=None):
        self.n = int(n)
        self.m = int(m)
        self.dft = dft
        self.kernel = kernel
        self._matrices = None
        if matrices is not None:
            mats = np.asarray(matrices, dtype=complex)
            if mats.shape != (self.n, self.m, self.m):
                raise ValueError(f"matrices must have shape {(self.n, self.m, self.m)}")
            self._matrices = mats
        elif dft is None or kernel is None:
            raise ValueError("need either matrices or (dft, kernel)")

    @classmethod
    def from_matrices(cls, matrices):
        mats = np.asarray(matrices, dtype=complex)
        return cls(mats.shape[0], mats.shape[1], matrices=mats)

    @property
    def factored(self):
        return self._matrices is None

    def _check(self, j):
        if not 0 <= j < self.n:
            raise IndexError(f"frequency index {j} out of range [0, {self.n})")

    def factor(self, j):
        """``m x (2q+1)`` factor ``F`` with ``f(w_j) = F F*``."""
        self._check(j)
        if not self.factored:
            raise ValueError("stack was given as explicit matrices")
        q = self.kernel.half_width
        cols = (j + np.arange(-q, q + 1)) % self.n
        return self.dft[:, cols] * np.sqrt(self.kernel.weights / self.n)

    def matrix(self, j):
        self._check(j)
        if not self.factored:
            return self._matrices[j]
        F = self.factor(j)
        return F @ F.conj().T

    def matrices(self):
        """All ``n`` matrices as one array; memory is ``n m^2`` complex."""
        if not self.factored:
            return self._matrices
        return np.stack([self.matrix(j) for j in range(self.n)])

    def trace(self, j):
        self._check(j)
        if not self.factored:
            return float(np.trace(self._matrices[j]).real)
        return float(np.sum(np.abs(self.factor(j)) ** 2))

    def eigenpairs(self, j, r=None):
        """Eigenvalues (descending) and gauge-fixed eigenvectors at bin ``j``."""
        if self.factored:
            w, V = numerics.eigh_factored(self.factor(j), r)
        else:
            w, V = numerics.eigh(self.matrix(j))
            if r is not None:
                w, V = w[:r], V[:, :r]
        return np.maximum(w, 0.0), V

    def quadform(self, j, u, v):
        """``u* f(w_j) v``."""
        if self.factored:
            F = self.factor(j)
            return complex(np.vdot(F.conj().T @ u, F.conj().T @ v))
        return complex(np.conj(u) @ self.matrix(j) @ v)


def periodogram(data):
    """Raw periodogram ``P(w_j) = d_j d_j* / n`` for all ``j`` (small inputs)."""
    data = np.asarray(data, dtype=float)
    m, n = data.shape
    d = numerics.dft(data, axis=1)
    return np.einsum("aj,bj->jab", d, d.conj()) / n


def estimate_spectral_density(data, kernel):
    """Smoothed periodogram with circular smoothing across frequency.

    Parameters
    ----------
    data : array, shape (m, n)
        Demeaned observations, one row per location.
    kernel : SmoothingKernel
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be (locations, time)")
    m, n = data.shape
    if kernel.bandwidth > n:
        raise ValueError(f"kernel bandwidth {kernel.bandwidth} exceeds series length {n}")
    d = numerics.dft(data, axis=1)
    return SpectralStack(n, m, dft=d, kernel=kernel)


def cross_quadform(stack, j, u, v):
    """``conj(u)^T f(w_j) v`` for complex vectors of length ``m``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != (stack.m,) or v.shape != (stack.m,):
        raise ValueError("vectors must have length m")
    return stack.quadform(j, u, v)
