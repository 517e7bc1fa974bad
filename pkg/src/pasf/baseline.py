"""Plain PCA of the vectorised field, treating time points as independent."""

from dataclasses import dataclass

import numpy as np

from . import numerics

__all__ = ["PcaModel", "pca_decompose"]


@dataclass
class PcaModel:
    loadings: np.ndarray  # (m, k), orthonormal columns
    scores: np.ndarray  # (k, n)
    eigenvalues: np.ndarray
    shares: np.ndarray

    def component(self, i):
        return np.outer(self.loadings[:, i], self.scores[i])


def pca_decompose(data, k):
    """Leading ``k`` principal components of demeaned ``(m, n)`` data.

    Returns the model and the list of rank-one component fields.
    """
    data = np.asarray(data, dtype=float)
    m, n = data.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k must be in [1, {min(m, n)}]")
    cov = data @ data.T / n
    w, V = numerics.eigh(cov)
    L = V[:, :k].real
    scores = L.T @ data
    total = float(np.sum(data**2))
    shares = np.sum(scores**2, axis=1) / total if total > 0 else np.zeros(k)
    model = PcaModel(L, scores, w[:k], shares)
    return model, [model.component(i) for i in range(k)]
