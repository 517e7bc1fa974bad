"""Cluster-wise paired filters and the resulting decomposition."""

from dataclasses import dataclass, field

import numpy as np

from . import numerics

__all__ = [
    "FilterPair",
    "Decomposition",
    "build_filters",
    "apply_decomposition",
    "convolve_filters",
    "variance_explained",
    "pcs_coherence_check",
]


@dataclass
class FilterPair:
    """Time-domain filters of one cluster.

    ``C[tau]`` is ``channels x m`` (data -> principal component series) and
    ``B[tau]`` is ``m x channels`` (series -> dynamic component),
    ``tau = 0 .. n-1``, both real.
    """

    label: int
    C: np.ndarray
    B: np.ndarray
    freq_indices: list

    @property
    def channels(self):
        return self.C.shape[1]


@dataclass
class Decomposition:
    labels: list
    components: np.ndarray  # (K, m, n)
    pcs: list  # per cluster, (channels, n)
    residual: np.ndarray  # (m, n)
    shares: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def residual_share(self):
        total = float(np.sum((self.components.sum(axis=0) + self.residual) ** 2))
        return float(np.sum(self.residual**2)) / total if total > 0 else 0.0


def _group(support):
    by_label = {}
    for s in support:
        by_label.setdefault(s.label, []).append(s)
    return by_label


def _frequency_response(entries, n, m):
    """``Chat(w_j)`` as an ``n x channels x m`` array (rows are conj(v)^T)."""
    channels = 1 + max(s.channel for s in entries)
    resp = np.zeros((n, channels, m), dtype=complex)
    for s in entries:
        resp[s.freq_index, s.channel] = np.conj(s.vector)
    return resp


def build_filters(support, n):
    """Paired filters ``C_k, B_k`` for every cluster label in ``support``.

    ``C_{k,tau} = (1/n) sum_j conj(v_k(w_j))^T exp(2 pi i tau w_j)`` over the
    supported bins, and ``B`` likewise with ``v_k``.
    """
    if not support:
        return []
    m = support[0].vector.size
    pairs = []
    for label, entries in sorted(_group(support).items()):
        if not entries:
            raise ValueError(f"cluster {label} has no support")
        resp = _frequency_response(entries, n, m)
        C = numerics.dft(resp, "inverse", axis=0)
        B = numerics.dft(np.conj(resp).transpose(0, 2, 1), "inverse", axis=0)
        if max(np.abs(C.imag).max(), np.abs(B.imag).max()) > 1e-10:
            raise ValueError(f"cluster {label}: support not closed under conjugate mirroring")
        pairs.append(FilterPair(label, C.real.copy(), B.real.copy(), sorted({s.freq_index for s in entries})))
    return pairs


def apply_decomposition(data, support):
    """Project the data onto each cluster's eigenvectors, bin by bin.

    Equivalent to circular convolution with the filters of
    :func:`build_filters`: the principal component series are ``C * z`` and
    the components ``B * (C * z)``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be (locations, time)")
    m, n = data.shape
    zhat = numerics.dft(data, axis=1)
    labels, comps, pcs = [], [], []
    for label, entries in sorted(_group(support).items()):
        if any(s.vector.size != m or not 0 <= s.freq_index < n for s in entries):
            raise ValueError("support does not match data dimensions")
        resp = _frequency_response(entries, n, m)
        xhat = np.einsum("jcm,mj->cj", resp, zhat)
        chat = np.einsum("jcm,cj->mj", np.conj(resp), xhat)
        labels.append(label)
        pcs.append(numerics.dft(xhat, "inverse", axis=1).real)
        comps.append(numerics.dft(chat, "inverse", axis=1).real)
    components = np.array(comps) if comps else np.zeros((0, m, n))
    residual = data - components.sum(axis=0)
    total = float(np.sum(data**2))
    shares = np.array([np.sum(c**2) / total for c in components]) if total > 0 else np.zeros(len(comps))
    return Decomposition(labels, components, pcs, residual, shares)


def _circular(filters, x):
    """``y_t = sum_tau F_{(t - tau) mod n} x_tau`` computed by brute force."""
    n = x.shape[1]
    out = np.zeros((filters.shape[1], n))
    for t in range(n):
        for tau in range(n):
            out[:, t] += filters[(t - tau) % n] @ x[:, tau]
    return out


def convolve_filters(data, pair):
    """Time-domain application of one filter pair (O(n^2), for checking)."""
    x = _circular(pair.C, np.asarray(data, dtype=float))
    return x, _circular(pair.B, x)


def variance_explained(component, observed):
    """Share of the observed sum of squares carried by ``component``."""
    component = np.asarray(component, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if component.shape != observed.shape:
        raise ValueError("shape mismatch")
    total = float(np.sum(observed**2))
    if total <= 0:
        raise ValueError("observed field has zero energy")
    return float(np.sum(component**2)) / total


def pcs_coherence_check(support, stack):
    """Largest squared coherence between series of different clusters.

    For each bin shared by two clusters, ``|v_a* f v_b|^2 / (lambda_a
    lambda_b)`` with ``lambda = v* f v``. Returns 0 when no bin is shared.
    """
    by_bin = {}
    for s in support:
        if not s.mirrored:
            by_bin.setdefault(s.freq_index, []).append(s)
    worst = 0.0
    for j, entries in by_bin.items():
        if len({s.label for s in entries}) < 2:
            continue
        lam = [stack.quadform(j, s.vector, s.vector).real for s in entries]
        for a in range(len(entries)):
            for b in range(a + 1, len(entries)):
                if entries[a].label == entries[b].label:
                    continue
                den = lam[a] * lam[b]
                if den <= 0:
                    continue
                num = abs(stack.quadform(j, entries[a].vector, entries[b].vector)) ** 2
                worst = max(worst, num / den)
    return worst
