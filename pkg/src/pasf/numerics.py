"""Complex-arithmetic kernels: DFT, Hermitian eigendecomposition, erf.

Thin, validated wrappers around numpy/scipy so the rest of the package has a
single place that fixes conventions (sign of the exponent, eigenvalue order,
eigenvector phase).
"""

import numpy as np
from scipy import special

__all__ = ["dft", "eigh", "eigh_factored", "erf", "fix_gauge"]


def dft(x, direction="forward", axis=-1):
    """Discrete Fourier transform of arbitrary length.

    ``forward`` computes ``X_j = sum_t x_t exp(-2 pi i j t / n)``; ``inverse``
    uses the conjugate kernel and divides by ``n``.
    """
    x = np.asarray(x)
    if x.size == 0 or x.shape[axis] == 0:
        raise ValueError("dft of an empty sequence")
    if direction == "forward":
        return np.fft.fft(x, axis=axis)
    if direction == "inverse":
        return np.fft.ifft(x, axis=axis)
    raise ValueError(f"unknown direction {direction!r}")


def fix_gauge(v):
    """Rotate ``v`` so its largest-modulus component is real and positive.

    Works on a single vector or on the columns of a matrix. Ties in modulus go
    to the lowest index. Zero vectors are returned unchanged.
    """
    v = np.asarray(v)
    squeeze = v.ndim == 1
    V = v.reshape(v.shape[0], -1) if not squeeze else v[:, None]
    mod = np.abs(V)
    # round away last-ulp differences so c*v and v pick the same pivot
    key = np.round(mod / np.maximum(mod.max(axis=0, keepdims=True), 1e-300), 12)
    idx = np.argmax(key, axis=0)
    pivot = V[idx, np.arange(V.shape[1])]
    scale = np.abs(pivot)
    phase = np.ones_like(pivot, dtype=complex)
    nz = scale > 0
    phase[nz] = np.conj(pivot[nz]) / scale[nz]
    out = V * phase[None, :]
    out[idx, np.arange(V.shape[1])] = scale.astype(out.dtype)
    return out[:, 0] if squeeze else out


def _canonical_degenerate(w, V, rtol=1e-10):
    """Replace the basis of each repeated eigenvalue by a canonical one.

    Within a group of equal eigenvalues the basis returned by LAPACK is
    arbitrary. The projector's columns are orthogonalised in index order
    instead, so the result depends only on the eigenspace (the identity
    gives ``e_1, e_2, ...``).
    """
    if w.size < 2:
        return V
    tol = rtol * max(float(np.abs(w).max()), 1e-300)
    V = V.copy()
    start = 0
    for stop in range(1, w.size + 1):
        if stop < w.size and abs(w[stop] - w[stop - 1]) <= tol:
            continue
        g = stop - start
        if g > 1:
            Q = V[:, start:stop]
            P = Q @ Q.conj().T
            basis = []
            for col in P.T:
                r = col - sum(b * np.vdot(b, col) for b in basis) if basis else col
                nr = np.linalg.norm(r)
                if nr > 1e-6:
                    basis.append(r / nr)
                if len(basis) == g:
                    break
            if len(basis) == g:
                V[:, start:stop] = np.array(basis).T
        start = stop
    return V


def eigh(H):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input is symmetrized as ``(H + H*)/2`` first. Eigenvectors are
    gauge-fixed with :func:`fix_gauge`; repeated eigenvalues get a basis
    that depends only on their eigenspace.

    Returns
    -------
    w : ndarray, shape (m,)
    V : ndarray, shape (m, m); column ``k`` pairs with ``w[k]``.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"eigh needs a square matrix, got shape {H.shape}")
    H = 0.5 * (H + H.conj().T)
    w, V = np.linalg.eigh(H)
    w = w[::-1]
    V = _canonical_degenerate(w, V[:, ::-1])
    return w, fix_gauge(V)


def eigh_factored(D, r=None):
    """Top eigenpairs of ``D D*`` computed from a thin SVD of ``D``.

    ``D`` is ``m x k`` with usually ``k << m``; only ``min(m, k)`` eigenpairs
    can be nonzero. Returns at most ``r`` pairs (all of them if ``r`` is None),
    eigenvalues descending, eigenvectors gauge-fixed.
    """
    D = np.asarray(D)
    if D.ndim != 2:
        raise ValueError("factor must be a 2-d array")
    U, s, _ = np.linalg.svd(D, full_matrices=False)
    w = s**2
    U = _canonical_degenerate(w, U)
    if r is not None:
        w, U = w[:r], U[:, :r]
    return w, fix_gauge(U)


def erf(x):
    """Error function, vectorised; odd symmetry is enforced exactly."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * special.erf(np.abs(x))
