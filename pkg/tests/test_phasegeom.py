import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist, squareform

from pasf import phasegeom, simkit

TWO_PI = 2 * np.pi


def plane_residual(a, b):
    """Max deviation of ``a - b`` from its best-fit plane."""
    h, w = a.shape
    yy, xx = np.mgrid[0:h, 0:w]
    X = np.c_[np.ones(h * w), yy.ravel(), xx.ravel()]
    d = (a - b).ravel()
    beta, *_ = np.linalg.lstsq(X, d, rcond=None)
    return np.abs(d - X @ beta).max()


class TestPhase:
    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_wrap_range(self, x):
        w = float(phasegeom.wrap(x))
        assert -np.pi < w <= np.pi
        assert abs(np.cos(w) - np.cos(x)) < 1e-9 and abs(np.sin(w) - np.sin(x)) < 1e-9

    def test_wrap_pi_boundaries(self):
        assert phasegeom.wrap(np.pi) == np.pi
        assert phasegeom.wrap(-np.pi) == np.pi

    def test_real_positive_vector(self):
        assert np.all(phasegeom.extract_phase(np.ones(6), (2, 3)) == 0)

    def test_imaginary_component(self):
        v = np.array([1.0, 2j, 0.0, 1.0])
        g = phasegeom.extract_phase(v, (2, 2))
        assert g[0, 1] == pytest.approx(np.pi / 2)
        assert g[1, 0] == 0.0

    def test_propagation_closed_form(self):
        sig = simkit.default_propagating_signals((10, 10))[0]
        a, lags, _ = simkit.propagation_weights(sig, (10, 10))
        omega = 0.07
        v = a * np.exp(-2j * np.pi * omega * lags)
        g = phasegeom.extract_phase(v, (10, 10))
        expected = phasegeom.wrap(-2 * np.pi * omega * lags).reshape(10, 10)
        np.testing.assert_allclose(g, expected, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            phasegeom.extract_phase(np.ones(5), (2, 2))


class TestUnwrap:
    def test_continuous_grid_unchanged(self, rng):
        g = 0.3 * rng.standard_normal((8, 8))
        np.testing.assert_allclose(phasegeom.unwrap2d(g), g, atol=1e-12)

    def test_gentle_ramp(self):
        ramp = 0.5 * np.arange(10)[:, None] * np.ones((1, 10))
        out = phasegeom.unwrap2d(phasegeom.wrap(ramp))
        shift = out - ramp
        k = np.round(shift[0, 0] / TWO_PI)
        assert np.abs(shift - TWO_PI * k).max() < 1e-9

    def test_steep_ramp(self):
        ramp = 2.8 * np.arange(20)[:, None] * np.ones((1, 20))
        out = phasegeom.unwrap2d(phasegeom.wrap(ramp))
        assert plane_residual(out, ramp) < 1e-6

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_wrap_unwrap_identity(self, h, w, seed):
        rng = np.random.default_rng(seed)
        g = phasegeom.wrap(rng.uniform(-10, 10, (h, w)))
        out = phasegeom.unwrap2d(g)
        np.testing.assert_allclose(phasegeom.wrap(out), g, atol=1e-9)
        k = (out - g) / TWO_PI
        np.testing.assert_allclose(k, np.round(k), atol=1e-9)

    def test_anchor_keeps_wrapped_value(self, rng):
        g = phasegeom.wrap(3 * rng.standard_normal((7, 9)))
        out = phasegeom.unwrap2d(g)
        rel = phasegeom.reliability(g)
        a = np.unravel_index(np.argmax(rel), g.shape)
        assert out[a] == g[a]

    def test_single_pixel_and_line(self):
        assert phasegeom.unwrap2d(np.array([[1.0]]))[0, 0] == 1.0
        line = phasegeom.wrap(1.5 * np.arange(12))[None, :]
        out = phasegeom.unwrap2d(line)
        assert plane_residual(out, 1.5 * np.arange(12)[None, :]) < 1e-9

    def test_reliability_border_and_modulus_floor(self, rng):
        g = 0.1 * rng.standard_normal((6, 6))
        mod = np.ones((6, 6))
        mod[2, 3] = 1e-5
        rel = phasegeom.reliability(g, mod)
        assert np.all(rel[0] == 0) and np.all(rel[:, -1] == 0)
        assert rel[2, 3] == 0
        assert rel[2, 2] > 0

    def test_shared_tree_keeps_harmonics_proportional(self):
        # a phase vortex: any unwrapping leaves a cut, and a shared path
        # order puts it in the same place for every harmonic
        yy, xx = np.mgrid[0:15, 0:15]
        theta = np.arctan2(yy - 7.3, xx - 9.6)
        wrapped = np.array([phasegeom.wrap(k * theta) for k in (1, 2, 3)])
        rel = phasegeom.pooled_reliability(wrapped)
        out = phasegeom.unwrap2d(wrapped, rel=rel)
        for k in (2, 3):
            d = out[k - 1] - k * out[0]
            assert np.ptp(d) < 1e-9
        np.testing.assert_allclose(phasegeom.wrap(out), wrapped, atol=1e-9)

    def test_stack_matches_one_by_one(self, rng):
        wrapped = phasegeom.wrap(rng.uniform(-4, 4, (3, 6, 5)))
        rel = phasegeom.pooled_reliability(wrapped)
        together = phasegeom.unwrap2d(wrapped, rel=rel)
        for i in range(3):
            np.testing.assert_array_equal(together[i], phasegeom.unwrap2d(wrapped[i], rel=rel))

    def test_stack_needs_reliability(self):
        with pytest.raises(ValueError):
            phasegeom.unwrap2d(np.zeros((2, 3, 3)))


class TestLinearity:
    def test_exact_lag_structure(self, rng):
        lags = rng.uniform(0, 20, 30)
        omega = np.linspace(0.1, 1.5, 12)
        phases = -omega[:, None] * lags[None, :] + rng.uniform(-1, 1, (12, 1))
        assert phasegeom.phase_linearity(phases, omega) == pytest.approx(1.0, abs=1e-12)

    def test_noise_lowers_r2(self, rng):
        omega = np.linspace(0.1, 1.5, 12)
        phases = rng.standard_normal((12, 30))
        assert phasegeom.phase_linearity(phases, omega) < 0.5


class TestDissimilarity:
    def test_examples(self, rng):
        g = rng.standard_normal((4, 5))
        D = phasegeom.phase_dissimilarity([g, g, 2.5 * g + 1.0, -g])
        assert abs(D[0, 1]) < 1e-12 and abs(D[0, 2]) < 1e-12
        assert D[0, 3] == pytest.approx(2.0)
        assert np.all(np.diag(D) == 0)
        np.testing.assert_array_equal(D, D.T)

    def test_flat_grid_is_uninformative(self, rng, caplog):
        with caplog.at_level(logging.WARNING):
            D = phasegeom.phase_dissimilarity([np.zeros((3, 3)), rng.standard_normal((3, 3)), rng.standard_normal((3, 3))])
        assert D[0, 1] == 1 and D[2, 0] == 1 and D[0, 0] == 0
        assert "zero variance" in caplog.text

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_range(self, p, seed):
        D = phasegeom.phase_dissimilarity(np.random.default_rng(seed).standard_normal((p, 12)))
        assert D.min() >= 0 and D.max() <= 2


def _scipy_partition(X, k):
    Z = linkage(X, "ward")
    return Z, fcluster(Z, k, "maxclust")


def _same_partition(a, b):
    pairs = set(zip(a, b))
    return len(pairs) == len(set(a)) == len(set(b))


class TestWard:
    def test_two_pairs(self):
        D = np.full((4, 4), 1.9)
        D[0, 1] = D[1, 0] = D[2, 3] = D[3, 2] = 0.01
        np.fill_diagonal(D, 0)
        model = phasegeom.ward_cluster(D, 2)
        assert model.labels[0] == model.labels[1] != model.labels[2] == model.labels[3]

    def test_equal_distances(self):
        D = np.ones((4, 4)) - np.eye(4)
        model = phasegeom.ward_cluster(D, 2)
        assert model.merges[0, 0] == 0 and model.merges[0, 1] == 1
        assert model.merges[0, 2] == pytest.approx(1.0)
        assert len(set(model.labels)) == 2

    @settings(max_examples=25, deadline=None)
    @given(st.integers(3, 25), st.integers(0, 2**32 - 1))
    def test_matches_scipy_on_euclidean_points(self, p, seed):
        X = np.random.default_rng(seed).standard_normal((p, 3))
        D = squareform(pdist(X))
        ours = phasegeom.ward_linkage(D)
        Z, _ = _scipy_partition(X, 2)
        np.testing.assert_allclose(ours[:, 2], Z[:, 2], rtol=1e-9)
        for k in (2, 3):
            if k < p:
                assert _same_partition(phasegeom.ward_cluster(D, k).labels, fcluster(Z, k, "maxclust"))

    def test_heights_non_decreasing(self, rng):
        X = rng.standard_normal((30, 2))
        h = phasegeom.ward_linkage(squareform(pdist(X)))[:, 2]
        assert np.all(np.diff(h) >= -1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(3, 15), st.integers(0, 2**32 - 1))
    def test_order_invariance(self, p, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((p, 2))
        D = squareform(pdist(X))
        perm = rng.permutation(p)
        a = phasegeom.ward_cluster(D, 2).labels
        b = phasegeom.ward_cluster(D[np.ix_(perm, perm)], 2).labels
        assert _same_partition(a[perm], b)

    def test_too_few_entries(self):
        model = phasegeom.ward_cluster(np.zeros((1, 1)))
        assert model.k == 1 and model.flags

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            phasegeom.ward_cluster(np.ones((3, 3)) - np.eye(3), 4)

    def test_auto_finds_separated_groups(self, rng):
        centres = np.array([[0, 0], [10, 0], [0, 10]])
        X = np.concatenate([c + 0.1 * rng.standard_normal((8, 2)) for c in centres])
        model = phasegeom.ward_cluster(squareform(pdist(X)), "auto")
        assert model.k == 3

    def test_auto_ignores_zero_heights(self):
        # duplicates merge at height 0 and must not look like an infinite gap
        heights = [0, 0, 0, 0.05, 0.08, 9.0]
        assert phasegeom.auto_cluster_count(heights) == 2

    def test_auto_window(self):
        heights = list(np.linspace(1, 2, 30)) + [50.0]
        assert phasegeom.auto_cluster_count(heights) == 2
        assert phasegeom.auto_cluster_count([1.0]) == 1

    def test_cut_labels_first_appearance(self, rng):
        X = rng.standard_normal((10, 2))
        model = phasegeom.ward_cluster(squareform(pdist(X)), 4)
        first = []
        for lab in model.labels:
            if lab not in first:
                first.append(lab)
        assert first == [1, 2, 3, 4]

    def test_dendrogram_csv(self, tmp_path):
        D = np.ones((3, 3)) - np.eye(3)
        model = phasegeom.ward_cluster(D, 1)
        phasegeom.write_dendrogram_csv(model, tmp_path / "d.csv")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines[0] == "step,left,right,height"
        assert len(lines) == 3
        assert lines[2].split(",")[1:3] == ["2", "3"]
