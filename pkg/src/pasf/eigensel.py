"""Per-frequency eigen-analysis, pooled-eigenvalue shrinkage and mirroring."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "EigenEntry",
    "EigenAtlas",
    "GapResult",
    "half_band",
    "decompose_stack",
    "gap_threshold",
    "threshold_for_count",
    "shrink",
    "mirror",
]


def half_band(n):
    """Frequency indices ``1 .. ceil(n/2) - 1``; DC and Nyquist excluded."""
    return range(1, math.ceil(n / 2))


@dataclass(frozen=True)
class EigenEntry:
    freq_index: int
    rank: int  # 1-based within the frequency
    eigenvalue: float
    vector: np.ndarray = field(repr=False)


@dataclass
class EigenAtlas:
    entries: list
    r: int
    delta: float
    n: int
    m: int
    flags: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def empty(self):
        return not self.entries

    def vectors(self):
        return np.array([e.vector for e in self.entries])

    def keys(self):
        return [(e.freq_index, e.rank) for e in self.entries]


@dataclass(frozen=True)
class GapResult:
    delta: float
    count: int  # pooled values at or above delta
    ratio: float  # ratio across the chosen gap (nan if none)
    flag: str = ""


def decompose_stack(stack, r):
    """Top-``r`` eigenpairs at every half-band frequency.

    Returns a dict ``j -> (eigenvalues, eigenvectors)``; eigenvalues are
    descending and eigenvector columns gauge-fixed.
    """
    r = int(r)
    if r < 1:
        raise ValueError("r must be positive")
    if r > stack.m:
        raise ValueError(f"r={r} exceeds dimension m={stack.m}")
    return {j: stack.eigenpairs(j, r) for j in half_band(stack.n)}


def _pooled(pairs):
    if not pairs:
        return np.zeros(0)
    return np.sort(np.concatenate([w for w, _ in pairs.values()]))[::-1]


def gap_threshold(pooled, min_ratio=2.0):
    """Threshold at the largest ratio gap in the upper half of ``pooled``.

    The pooled values are sorted descending and the index ``i`` maximising
    ``lam[i] / lam[i+1]`` is searched over the first ``ceil(N/2)`` values
    (gaps onto an exact zero are skipped). The threshold is the geometric
    midpoint of the two values across the gap.

    If the best ratio is below ``min_ratio`` there is no usable gap and the
    threshold is 0, i.e. every pooled value is kept.
    """
    lam = np.sort(np.asarray(pooled, dtype=float).ravel())[::-1]
    if lam.size == 0:
        raise ValueError("no pooled eigenvalues")
    if lam[0] <= 0:
        return GapResult(0.0, lam.size, math.nan, "all pooled eigenvalues are zero")
    if lam.size == 1:
        return GapResult(float(lam[0]), 1, math.nan, "single pooled value")
    window = min(math.ceil(lam.size / 2), lam.size - 1)
    hi, lo = lam[:window], lam[1 : window + 1]
    ratios = np.full(window, -np.inf)
    ok = lo > 0
    ratios[ok] = hi[ok] / lo[ok]
    if not np.any(ok):
        # positive values followed only by zeros: the gap is onto zero
        i = int(np.argmin(lam > 0)) - 1
        return GapResult(float(lam[i]), i + 1, math.inf, "gap onto zero")
    i = int(np.argmax(ratios))
    if ratios[i] < min_ratio:
        return GapResult(0.0, lam.size, float(ratios[i]), "no spectral gap; threshold set to 0")
    delta = math.sqrt(lam[i] * lam[i + 1])
    return GapResult(delta, i + 1, float(ratios[i]))


def threshold_for_count(pooled, count):
    """Threshold that retains exactly the ``count`` largest pooled values
    (barring ties)."""
    lam = np.sort(np.asarray(pooled, dtype=float).ravel())[::-1]
    count = int(count)
    if not 1 <= count <= lam.size:
        raise ValueError(f"count must be in [1, {lam.size}]")
    if count == lam.size:
        return max(float(lam[-1]), 0.0)
    above, below = max(lam[count - 1], 0.0), max(lam[count], 0.0)
    return math.sqrt(above * below) if below > 0 else 0.5 * above


def shrink(pairs, delta, n, m):
    """Keep the eigenpairs with eigenvalue >= ``delta``.

    Zero eigenvalues are never kept: their eigenvectors are arbitrary.
    ``pairs`` is the output of :func:`decompose_stack`.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    r = max((w.size for w, _ in pairs.values()), default=0)
    entries = []
    for j in sorted(pairs):
        w, V = pairs[j]
        for k in range(w.size):
            if w[k] >= delta and w[k] > 0:
                entries.append(EigenEntry(j, k + 1, float(w[k]), V[:, k].copy()))
            else:
                break
    atlas = EigenAtlas(entries, r, float(delta), n, m)
    if atlas.empty:
        atlas.flags.append("empty atlas: no eigenvalue reaches the threshold")
        log.warning("shrinkage with delta=%g retained nothing", delta)
    return atlas


@dataclass(frozen=True)
class SupportEntry:
    freq_index: int
    vector: np.ndarray = field(repr=False)
    label: int
    channel: int
    mirrored: bool


def mirror(atlas, labels):
    """Close the labelled atlas under ``j -> n - j`` with conjugated vectors.

    Channel numbers order the eigenvectors a cluster owns at one frequency
    by rank. Returns a list of :class:`SupportEntry`.
    """
    labels = list(labels)
    if len(labels) != len(atlas.entries):
        raise ValueError("need one label per atlas entry")
    seen = {}
    support = []
    for e, lab in sorted(zip(atlas.entries, labels), key=lambda t: (t[0].freq_index, t[0].rank)):
        ch = seen.get((e.freq_index, lab), 0)
        seen[(e.freq_index, lab)] = ch + 1
        support.append(SupportEntry(e.freq_index, e.vector, lab, ch, False))
        jm = atlas.n - e.freq_index
        if jm != e.freq_index:
            support.append(SupportEntry(jm, np.conj(e.vector), lab, ch, True))
    return support
