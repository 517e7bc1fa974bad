"""Eigenvector phase grids: extraction, 2-D unwrapping, dissimilarity, Ward
clustering."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

__all__ = [
    "wrap",
    "extract_phase",
    "second_difference_energy",
    "reliability",
    "pooled_reliability",
    "unwrap_tree",
    "integrate_tree",
    "unwrap2d",
    "phase_linearity",
    "phase_dissimilarity",
    "ClusterModel",
    "ward_linkage",
    "auto_cluster_count",
    "ward_cluster",
    "write_dendrogram_csv",
]


def wrap(phase):
    """Map to the principal interval ``(-pi, pi]``."""
    w = np.mod(np.asarray(phase, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(w <= -np.pi, w + TWO_PI, w)


def extract_phase(v, shape):
    """Principal argument of each component of ``v`` on a ``shape`` grid.

    Zero components get phase 0.
    """
    v = np.asarray(v, dtype=complex)
    if v.size != shape[0] * shape[1]:
        raise ValueError(f"vector of length {v.size} does not fit grid {shape}")
    ph = np.where(v == 0, 0.0, np.angle(v))
    return wrap(ph).reshape(shape)


def second_difference_energy(wrapped):
    """Sum of squared wrapped second differences (horizontal, vertical, both
    diagonals) at interior pixels; ``inf`` on the border.

    Accepts a single ``(h, w)`` grid or a stack ``(p, h, w)``.
    """
    g = np.asarray(wrapped, dtype=float)
    out = np.full(g.shape, np.inf)
    if g.shape[-2] >= 3 and g.shape[-1] >= 3:
        c = g[..., 1:-1, 1:-1]
        H = wrap(g[..., 1:-1, :-2] - c) - wrap(c - g[..., 1:-1, 2:])
        V = wrap(g[..., :-2, 1:-1] - c) - wrap(c - g[..., 2:, 1:-1])
        D1 = wrap(g[..., :-2, :-2] - c) - wrap(c - g[..., 2:, 2:])
        D2 = wrap(g[..., :-2, 2:] - c) - wrap(c - g[..., 2:, :-2])
        out[..., 1:-1, 1:-1] = H**2 + V**2 + D1**2 + D2**2
    return out


def reliability(wrapped, modulus=None, modulus_floor=1e-3):
    """Pixel reliability ``1 / (H^2 + V^2 + D1^2 + D2^2)`` from wrapped second
    differences.

    Border pixels and pixels whose modulus is below ``modulus_floor *
    max(modulus)`` get reliability 0.
    """
    energy = second_difference_energy(wrapped)
    rel = np.where(np.isfinite(energy), 1.0 / (energy + 1e-12), 0.0)
    if modulus is not None:
        mod = np.asarray(modulus, dtype=float).reshape(rel.shape)
        peak = mod.max()
        if peak > 0:
            rel[mod < modulus_floor * peak] = 0.0
    return rel


def pooled_reliability(wrapped, weights=None, modulus=None, modulus_floor=1e-3):
    """One reliability map for a stack of phase grids ``(p, h, w)``.

    Second-difference energies are averaged with ``weights`` (e.g.
    eigenvalues) before inversion; ``modulus`` ``(p, h, w)`` is averaged the
    same way for the low-modulus floor.
    """
    g = np.asarray(wrapped, dtype=float)
    w = np.ones(g.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    energy = np.tensordot(w, second_difference_energy(g), axes=1)
    rel = np.where(np.isfinite(energy), 1.0 / (energy + 1e-12), 0.0)
    if modulus is not None:
        mod = np.tensordot(w, np.asarray(modulus, dtype=float).reshape(g.shape), axes=1)
        peak = mod.max()
        if peak > 0:
            rel[mod < modulus_floor * peak] = 0.0
    return rel


def unwrap_tree(rel):
    """Spanning tree of the 4-neighbour grid graph built by reliability order.

    Edges are visited in decreasing order of summed endpoint reliability
    (ties by position) and kept when they join two different groups. Returns
    ``(anchor, parent_order)`` where ``anchor`` is the most reliable pixel
    and ``parent_order`` lists ``(child, parent)`` flat indices in an order
    in which every parent precedes its children.
    """
    rel = np.asarray(rel, dtype=float)
    h, w = rel.shape
    npx = h * w
    r = rel.ravel()
    idx = np.arange(npx).reshape(h, w)
    ea = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    eb = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    order = np.argsort(-(r[ea] + r[eb]), kind="stable")

    root = list(range(npx))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    adj = [[] for _ in range(npx)]
    for e in order:
        a, b = int(ea[e]), int(eb[e])
        ra, rb = find(a), find(b)
        if ra != rb:
            root[ra] = rb
            adj[a].append(b)
            adj[b].append(a)

    anchor = int(np.argmax(r))
    seen = np.zeros(npx, dtype=bool)
    seen[anchor] = True
    walk = []
    queue = [anchor]
    for node in queue:
        for nb in adj[node]:
            if not seen[nb]:
                seen[nb] = True
                walk.append((nb, node))
                queue.append(nb)
    return anchor, walk


def integrate_tree(wrapped, tree):
    """Unwrap grids along a tree from :func:`unwrap_tree`.

    Each pixel gets its parent's unwrapped value plus the wrapped difference
    across their edge, so the result is ``wrapped + 2 pi k`` with integer
    ``k`` and the anchor keeps its wrapped value. ``wrapped`` is ``(h, w)``
    or ``(p, h, w)``.
    """
    g = np.asarray(wrapped, dtype=float)
    shape = g.shape
    flat = g.reshape(-1, shape[-2] * shape[-1])
    anchor, walk = tree
    k = np.zeros(flat.shape, dtype=np.int64)
    if walk:
        child = np.array([c for c, _ in walk])
        parent = np.array([p for _, p in walk])
        step = np.rint((flat[:, parent] - flat[:, child]) / TWO_PI).astype(np.int64)
        # walk is parent-before-child, so a running pass settles every k
        for i in range(len(walk)):
            k[:, child[i]] = k[:, parent[i]] + step[:, i]
    return (flat + TWO_PI * k).reshape(shape)


def unwrap2d(wrapped, modulus=None, rel=None):
    """Reliability-guided 2-D phase unwrapping.

    Pixels are joined along 4-neighbour edges in decreasing order of summed
    endpoint reliability; each join shifts one side by the multiple of
    ``2 pi`` that minimises the jump across the edge. The most reliable pixel
    keeps its wrapped value.

    ``rel`` overrides the reliability map computed from ``wrapped`` and
    ``modulus``; passing the same map for several grids unwraps them along
    the same paths. ``wrapped`` may be a stack ``(p, h, w)`` when ``rel`` is
    given.
    """
    g = np.asarray(wrapped, dtype=float)
    if rel is None:
        if g.ndim != 2:
            raise ValueError("phase grid must be 2-d unless a reliability map is given")
        rel = reliability(g, modulus)
    rel = np.asarray(rel, dtype=float)
    if g.shape[-2:] != rel.shape:
        raise ValueError("reliability map does not match grid")
    return integrate_tree(g, unwrap_tree(rel))


def phase_linearity(phases, omega, weights=None, ref=None):
    """Weighted R^2 of per-pixel straight-line fits of phase against
    frequency.

    ``phases`` is ``(p, h, w)`` (or ``(p, m)``) of unwrapped phases for
    ``p`` entries at angular frequencies ``omega``. Each entry is first
    referenced to pixel ``ref`` (default: largest total weight) so that
    per-entry phase offsets cancel. ``weights`` ``(p, m)``, typically
    ``eigenvalue * |v|^2``, weight the fit; pixels with zero total weight
    are ignored. Returns ``1 - SS_res / SS_tot`` pooled over pixels.
    """
    ph = np.asarray(phases, dtype=float)
    ph = ph.reshape(ph.shape[0], -1)
    omega = np.asarray(omega, dtype=float)
    W = np.ones_like(ph) if weights is None else np.asarray(weights, dtype=float).reshape(ph.shape)
    if ref is None:
        ref = int(np.argmax(W.sum(axis=0)))
    y = ph - ph[:, [ref]]
    sw = W.sum(axis=0)
    live = sw > 0
    y, W, sw = y[:, live], W[:, live], sw[live]
    # closed-form weighted simple regression, one fit per pixel
    wx = (W * omega[:, None]).sum(axis=0) / sw
    wy = (W * y).sum(axis=0) / sw
    dx = omega[:, None] - wx
    dy = y - wy
    sxx = (W * dx * dx).sum(axis=0)
    sxy = (W * dx * dy).sum(axis=0)
    slope = np.divide(sxy, sxx, out=np.zeros_like(sxy), where=sxx > 0)
    ss_res = (W * (dy - slope * dx) ** 2).sum()
    ss_tot = (W * dy * dy).sum()
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def phase_dissimilarity(grids):
    """``1 - Pearson correlation`` between phase grids viewed as vectors.

    Grids with zero variance are uninformative: their off-diagonal entries
    are set to 1.
    """
    G = np.asarray([np.asarray(g, dtype=float).ravel() for g in grids])
    p = G.shape[0]
    if p < 2:
        raise ValueError("need at least two grids")
    Gc = G - G.mean(axis=1, keepdims=True)
    norm = np.sqrt(np.einsum("ij,ij->i", Gc, Gc))
    flat = norm <= 1e-12 * max(1.0, np.abs(G).max())
    if np.any(flat):
        log.warning("%d phase grids have zero variance", int(flat.sum()))
    Gn = np.where(flat[:, None], 0.0, Gc / np.where(flat, 1.0, norm)[:, None])
    D = 1.0 - Gn @ Gn.T
    D[flat, :] = 1.0
    D[:, flat] = 1.0
    D = np.clip(0.5 * (D + D.T), 0.0, 2.0)
    np.fill_diagonal(D, 0.0)
    return D


@dataclass
class ClusterModel:
    """Agglomeration record and the flat clustering cut from it.

    ``merges`` has one row per merge: ``(left id, right id, height, size)``
    where ids below ``p`` are entries and ``p + s`` is the cluster formed at
    step ``s``.
    """

    labels: np.ndarray
    merges: np.ndarray
    k: int
    flags: list = field(default_factory=list)

    @property
    def heights(self):
        return self.merges[:, 2] if len(self.merges) else np.zeros(0)


def ward_linkage(D):
    """Ward agglomeration (Ward.D2) on a dissimilarity matrix.

    Lance-Williams updates are applied to squared dissimilarities and merge
    heights are reported on the original scale. Among equal candidate
    distances the pair with the lowest slot indices merges first; a merged
    cluster takes the lower slot.
    """
    D = np.asarray(D, dtype=float)
    p = D.shape[0]
    if D.shape != (p, p):
        raise ValueError("dissimilarity matrix must be square")
    S = D**2
    np.fill_diagonal(S, np.inf)
    size = np.ones(p)
    ident = np.arange(p)
    active = np.ones(p, dtype=bool)
    nn = np.argmin(S, axis=1)
    nnd = S[np.arange(p), nn]
    merges = np.zeros((p - 1, 4))

    for step in range(p - 1):
        a = int(np.argmin(np.where(active, nnd, np.inf)))
        b = int(nn[a])
        i, j = min(a, b), max(a, b)
        dij = S[i, j]
        merges[step] = (min(ident[i], ident[j]), max(ident[i], ident[j]), math.sqrt(max(dij, 0.0)), size[i] + size[j])

        ni, nj = size[i], size[j]
        nk = size
        row = ((ni + nk) * S[i] + (nj + nk) * S[j] - nk * dij) / (ni + nj + nk)
        active[j] = False
        row[~active] = np.inf
        row[i] = np.inf
        S[i, :] = row
        S[:, i] = row
        S[j, :] = np.inf
        S[:, j] = np.inf
        size[i] = ni + nj
        ident[i] = p + step
        nnd[j] = np.inf

        # rows whose nearest neighbour vanished or whose new distance to i wins
        stale = active & ((nn == i) | (nn == j))
        stale[i] = True
        closer = active & ((row < nnd) | ((row == nnd) & (i < nn)))
        for c in np.flatnonzero(closer & ~stale):
            nn[c], nnd[c] = i, row[c]
        for c in np.flatnonzero(stale):
            nn[c] = int(np.argmin(S[c]))
            nnd[c] = S[c, nn[c]]
    return merges


def _cut(merges, p, k):
    """Flat labels 1..k from applying the first ``p - k`` merges."""
    parent = np.arange(2 * p - 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in range(p - k):
        lft, rgt = int(merges[step, 0]), int(merges[step, 1])
        parent[find(lft)] = p + step
        parent[find(rgt)] = p + step
    roots = [find(i) for i in range(p)]
    relabel = {}
    labels = np.empty(p, dtype=int)
    for i, rt in enumerate(roots):
        labels[i] = relabel.setdefault(rt, len(relabel) + 1)
    return labels


def auto_cluster_count(heights, window=10, floor=1e-2):
    """Cluster count at the largest ratio between consecutive merge heights
    among the last ``window`` merges.

    Heights are clamped below at ``floor`` times the final merge height so
    that merges of (numerically) identical entries do not produce unbounded
    ratios.
    """
    h = np.asarray(heights, dtype=float)
    p = h.size + 1
    last = h[-min(window, h.size):]
    if last.size < 2 or last[-1] <= 0:
        return 1
    last = np.maximum(last, floor * last[-1])
    ratio = last[1:] / last[:-1]
    i = int(np.argmax(ratio))
    # cutting above merge (p - last.size + i) leaves this many clusters
    return p - (h.size - last.size + i + 1)


def ward_cluster(D, k="auto"):
    """Ward clustering of a dissimilarity matrix, cut at ``k`` clusters."""
    D = np.asarray(D, dtype=float)
    p = D.shape[0]
    if p < 2:
        return ClusterModel(np.ones(p, dtype=int), np.zeros((0, 4)), 1, ["fewer than two entries: single cluster"])
    merges = ward_linkage(D)
    if k == "auto" or k is None:
        k = auto_cluster_count(merges[:, 2])
    k = int(k)
    if not 1 <= k <= p:
        raise ValueError(f"cluster count {k} out of range [1, {p}]")
    return ClusterModel(_cut(merges, p, k), merges, k)


def write_dendrogram_csv(model, path):
    with open(path, "w") as fh:
        fh.write("step,left,right,height\n")
        for s, (lft, rgt, hgt, _) in enumerate(model.merges, start=1):
            fh.write(f"{s},{int(lft)},{int(rgt)},{hgt!r}\n")
