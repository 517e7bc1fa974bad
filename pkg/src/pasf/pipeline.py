"""End-to-end phase-aligned spectral filtering run."""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import eigensel, filterbank, phasegeom, spectral
from .fieldio import Field, write_field, write_pcs_csv

log = logging.getLogger(__name__)

__all__ = ["RunConfig", "RunResult", "EmptyAtlasError", "select_threshold", "run_decompose", "cluster_phase_linearity", "write_outputs"]


class EmptyAtlasError(RuntimeError):
    """No eigenvalue survived shrinkage; there is nothing to decompose."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class RunConfig:
    q: int = 10  # Daniell half-width; bandwidth 2q+1 = 21
    r: int = 5
    delta: float = None
    n_select: int = None
    K: object = "auto"
    seed: int = None
    output_dir: str = None
    min_gap_ratio: float = 2.0

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.K != "auto" and self.K is not None:
            self.K = int(self.K)
            if self.K < 1:
                raise ValueError("K must be >= 1 or 'auto'")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunResult:
    config: RunConfig
    data: np.ndarray  # demeaned input, (m, n)
    grid: tuple
    stack: spectral.SpectralStack
    pairs: dict
    atlas: eigensel.EigenAtlas
    phases: np.ndarray
    clusters: phasegeom.ClusterModel
    support: list
    filters: list
    decomposition: filterbank.Decomposition
    report: dict = field(default_factory=dict)


def select_threshold(pairs, config):
    """Threshold from an explicit delta, a target count, or the gap rule."""
    pooled = np.concatenate([w for w, _ in pairs.values()]) if pairs else np.zeros(0)
    if config.delta is not None:
        return float(config.delta), "explicit"
    if pooled.size == 0:
        return 0.0, "no frequencies"
    if config.n_select is not None:
        return eigensel.threshold_for_count(pooled, config.n_select), "n_select"
    gap = eigensel.gap_threshold(pooled, config.min_gap_ratio)
    return gap.delta, gap.flag or f"gap ratio {gap.ratio:.3g}"


def _entry_phases(atlas, grid):
    """Unwrap every entry's phase along one shared reliability tree, so that
    branch cuts around phase singularities fall in the same place for all
    entries."""
    wrapped = np.array([phasegeom.extract_phase(e.vector, grid) for e in atlas.entries])
    modulus = np.abs(atlas.vectors()).reshape(wrapped.shape)
    weights = np.array([e.eigenvalue for e in atlas.entries])
    if weights.sum() <= 0:
        weights = None
    rel = phasegeom.pooled_reliability(wrapped, weights, modulus)
    return phasegeom.unwrap2d(wrapped, rel=rel)


def run_decompose(field_or_data, config=None, grid=None):
    """Decompose a field into phase-aligned dynamic components.

    Steps: demean, smoothed-periodogram spectral estimate, top-r eigenpairs
    per frequency, shrinkage, phase unwrapping, Ward clustering of
    ``1 - corr`` between unwrapped phases, paired filters, projection.
    Components are ordered by decreasing variance share.

    Raises :class:`EmptyAtlasError` (carrying a report) when nothing
    survives shrinkage.
    """
    config = config or RunConfig()
    if isinstance(field_or_data, Field):
        data, grid = field_or_data.data, field_or_data.shape
    else:
        data = np.asarray(field_or_data, dtype=float)
        if grid is None:
            raise ValueError("grid shape required with raw arrays")
    m, n = data.shape
    if grid[0] * grid[1] != m:
        raise ValueError("grid does not match data")
    if config.r > m:
        raise ValueError(f"r={config.r} exceeds the number of locations {m}")
    timing = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timing[name] = now - clock
        clock = now

    z = spectral.demean(data)
    stack = spectral.estimate_spectral_density(z, spectral.daniell_kernel(config.q))
    lap("spectral")
    pairs = eigensel.decompose_stack(stack, config.r)
    lap("eigen")
    delta, how = select_threshold(pairs, config)
    atlas = eigensel.shrink(pairs, delta, n, m)
    lap("shrink")
    report = {
        "n": n,
        "m": m,
        "grid": list(grid),
        "config": asdict(config),
        "delta": delta,
        "threshold_rule": how,
        "selected_entries": len(atlas),
        "timing_s": timing,
    }
    if atlas.empty:
        total = float(np.sum(z**2))
        report.update(K=0, shares=[], residual_share=1.0 if total > 0 else 0.0, coherence_max=0.0, flags=list(atlas.flags))
        raise EmptyAtlasError("no eigenpairs above the threshold", report)

    phases = _entry_phases(atlas, grid)
    lap("unwrap")
    if len(atlas) >= 2:
        D = phasegeom.phase_dissimilarity(phases)
        clusters = phasegeom.ward_cluster(D, config.K if config.K is not None else "auto")
    else:
        clusters = phasegeom.ward_cluster(np.zeros((1, 1)))
    lap("cluster")

    support = eigensel.mirror(atlas, clusters.labels)
    decomp = filterbank.apply_decomposition(z, support)
    # relabel clusters 1..K by decreasing share
    order = np.argsort(-decomp.shares, kind="stable")
    relabel = {decomp.labels[i]: rank + 1 for rank, i in enumerate(order)}
    clusters.labels = np.array([relabel[lab] for lab in clusters.labels])
    support = eigensel.mirror(atlas, clusters.labels)
    decomp = filterbank.apply_decomposition(z, support)
    filters = filterbank.build_filters(support, n)
    lap("filter")
    coherence = filterbank.pcs_coherence_check(support, stack)
    lap("coherence")

    sizes = np.bincount(clusters.labels, minlength=clusters.k + 1)[1:]
    report.update(
        K=int(clusters.k),
        cluster_sizes=[int(s) for s in sizes],
        cluster_channels=[f.channels for f in filters],
        shares=[float(s) for s in decomp.shares],
        residual_share=decomp.residual_share,
        coherence_max=float(coherence),
        flags=atlas.flags + clusters.flags,
    )
    result = RunResult(config, z, tuple(grid), stack, pairs, atlas, phases, clusters, support, filters, decomp, report)
    if config.output_dir:
        write_outputs(result, config.output_dir)
    return result


def cluster_phase_linearity(result, entries=None):
    """Phase-vs-frequency R^2 for each cluster of a run (label order 1..K).

    Each (entry, pixel) phase is weighted by ``eigenvalue * |v|^2``.
    ``entries`` optionally restricts the entries considered (indices into
    the atlas).
    """
    atlas = result.atlas
    lam = np.array([e.eigenvalue for e in atlas.entries])
    omega = np.array([2 * np.pi * e.freq_index / atlas.n for e in atlas.entries])
    weights = lam[:, None] * np.abs(atlas.vectors()) ** 2
    allowed = np.ones(len(atlas), dtype=bool)
    if entries is not None:
        allowed[:] = False
        allowed[list(entries)] = True
    out = []
    for k in range(1, result.clusters.k + 1):
        idx = np.flatnonzero((result.clusters.labels == k) & allowed)
        if idx.size < 2:
            out.append(float("nan"))
            continue
        out.append(float(phasegeom.phase_linearity(result.phases[idx], omega[idx], weights[idx])))
    return out


def write_outputs(result, outdir):
    """Component/residual field files, PCS CSVs, dendrogram CSV, report and
    manifest under ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    h, w = result.grid
    files = []
    for k, comp in enumerate(result.decomposition.components, start=1):
        write_field(Field(comp, h, w), out / f"component_{k}.field")
        write_pcs_csv(result.decomposition.pcs[k - 1], out / f"pcs_{k}.csv")
        files += [f"component_{k}.field", f"pcs_{k}.csv"]
    write_field(Field(result.decomposition.residual, h, w), out / "residual.field")
    phasegeom.write_dendrogram_csv(result.clusters, out / "dendrogram.csv")
    with (out / "report.json").open("w") as fh:
        json.dump(result.report, fh, indent=2)
    files += ["residual.field", "dendrogram.csv", "report.json"]
    with (out / "manifest.json").open("w") as fh:
        json.dump({"command": "decompose", "files": files}, fh, indent=2)
