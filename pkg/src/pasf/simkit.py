"""Benchmark spatiotemporal systems with known ground truth.

Two generators on a unit-block grid whose block ``(j, k)`` covers
``[j-1, j] x [k-1, k]`` (1-based, centre ``(j - 0.5, k - 0.5)``):

* rotating energy sources whose absorbed energy is integrated exactly over
  each block;
* AR(2) signals sitting at the grid corners and propagating with an L1 lag
  and an exponential L2 decay.

Random numbers come from ``numpy.random.default_rng(seed)`` (PCG64).
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from .numerics import erf

log = logging.getLogger(__name__)

__all__ = [
    "RotatingSource",
    "PropagatingSignal",
    "SimOutput",
    "block_energy",
    "source_position",
    "default_rotating_sources",
    "default_propagating_signals",
    "simulate_rotating",
    "ar2_variance",
    "ar2_spectrum",
    "ar2_simulate",
    "propagation_weights",
    "simulate_propagation",
]


@dataclass
class RotatingSource:
    center: tuple
    radius: float
    angular_velocity: float
    theta0: float = None  # drawn uniformly on [0, 2 pi) when None
    energy: float = 1000.0
    bandwidth: float = 5.0

    def __post_init__(self):
        if self.radius <= 0 or self.energy <= 0 or self.bandwidth <= 0:
            raise ValueError("radius, energy and bandwidth must be positive")


@dataclass
class PropagatingSignal:
    location: tuple
    beta1: float
    beta2: float
    decay: float = 50.0
    innovation_var: float = 1.0

    def __post_init__(self):
        _check_ar2(self.beta1, self.beta2)
        if self.decay <= 0 or self.innovation_var <= 0:
            raise ValueError("decay and innovation variance must be positive")


@dataclass
class SimOutput:
    """``observed = sum(components) + noise`` exactly; arrays are (m, n)."""

    components: np.ndarray  # (sources, m, n)
    observed: np.ndarray
    grid: tuple
    seed: int
    params: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def noise(self):
        return self.observed - self.components.sum(axis=0)


def block_energy(position, bandwidth, block, energy=1.0):
    """Integral of ``energy * exp(-|s - c|^2 / bandwidth)`` over a block.

    ``block`` is ``(j, k)`` for ``[j-1, j] x [k-1, k]``; ``j``/``k`` may be
    arrays, and ``position`` may carry extra leading axes (e.g. time).
    """
    cx, cy = np.asarray(position, dtype=float)[..., 0], np.asarray(position, dtype=float)[..., 1]
    j, k = (np.asarray(b, dtype=float) for b in block)
    rt = math.sqrt(bandwidth)
    ex = erf((j - cx) / rt) - erf((j - 1 - cx) / rt)
    ey = erf((k - cy) / rt) - erf((k - 1 - cy) / rt)
    return energy * (math.pi * bandwidth / 4.0) * ex * ey


def source_position(src, t):
    ang = src.theta0 + src.angular_velocity * np.asarray(t, dtype=float)
    return np.stack([src.center[0] + src.radius * np.cos(ang), src.center[1] + src.radius * np.sin(ang)], axis=-1)


def default_rotating_sources():
    return [
        RotatingSource((15.0, 15.0), 5.0, 2 * math.pi / 20),
        RotatingSource((5.0, 5.0), 5.0, 2 * math.pi / 5),
    ]


def _source_field(src, t, grid, kernel):
    h, w = grid
    jj, kk = np.meshgrid(np.arange(1, h + 1), np.arange(1, w + 1), indexing="ij")
    pos = source_position(src, t)[:, None, None, :]
    if kernel == "density":
        # Gaussian density with standard deviation `bandwidth`
        bw = 2.0 * src.bandwidth**2
        e = src.energy / (math.pi * bw)
    elif kernel == "exponential":
        bw, e = src.bandwidth, src.energy
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    z = block_energy(pos, bw, (jj, kk), e)  # (n, h, w)
    return z.reshape(len(t), h * w).T


def simulate_rotating(sources=None, grid=(20, 20), n=1000, noise_var=0.16, seed=0, kernel="density"):
    """Energy absorbed per grid block from rotating sources, plus white noise.

    ``kernel="density"`` spreads each source's energy as a Gaussian density
    with standard deviation ``bandwidth``; ``kernel="exponential"`` uses the
    unnormalised ``energy * exp(-d^2 / bandwidth)``. Each source's field is
    demeaned over time. Time runs ``t = 1 .. n``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    rng = np.random.default_rng(seed)
    sources = [RotatingSource(**asdict(s)) for s in (sources or default_rotating_sources())]
    for s in sources:
        if s.theta0 is None:
            s.theta0 = float(rng.uniform(0.0, 2 * math.pi))
    t = np.arange(1, n + 1)
    comps = []
    for s in sources:
        z = _source_field(s, t, grid, kernel)
        comps.append(z - z.mean(axis=1, keepdims=True))
    comps = np.array(comps)
    m = grid[0] * grid[1]
    noise = math.sqrt(noise_var) * rng.standard_normal((m, n)) if noise_var > 0 else np.zeros((m, n))
    params = {
        "scenario": "rotating",
        "sources": [asdict(s) for s in sources],
        "grid": list(grid),
        "n": n,
        "noise_var": noise_var,
        "kernel": kernel,
    }
    return SimOutput(comps, comps.sum(axis=0) + noise, tuple(grid), seed, params)


def _check_ar2(b1, b2):
    if not (abs(b2) < 1 and b2 + b1 < 1 and b2 - b1 < 1):
        raise ValueError(f"AR(2) coefficients ({b1}, {b2}) are not stationary")


def ar2_variance(b1, b2, sigma2=1.0):
    """Stationary variance of ``x_t = b1 x_{t-1} + b2 x_{t-2} + e_t``."""
    _check_ar2(b1, b2)
    return sigma2 * (1 - b2) / ((1 + b2) * ((1 - b2) ** 2 - b1**2))


def ar2_spectrum(b1, b2, omega, sigma2=1.0):
    """Spectral density ``sigma2 / |1 - b1 e^{-2 pi i w} - b2 e^{-4 pi i w}|^2``."""
    z = np.exp(-2j * np.pi * np.asarray(omega, dtype=float))
    return sigma2 / np.abs(1 - b1 * z - b2 * z**2) ** 2


def ar2_simulate(b1, b2, sigma2=1.0, n=1000, burn_in=500, seed=0, rng=None):
    """AR(2) series from a zero initial state; the first ``burn_in`` samples
    are dropped."""
    _check_ar2(b1, b2)
    if rng is None:
        rng = np.random.default_rng(seed)
    total = n + burn_in
    e = math.sqrt(sigma2) * rng.standard_normal(total)
    x = lfilter([1.0], [1.0, -b1, -b2], e)
    return x[burn_in:]


def default_propagating_signals(grid=(20, 20)):
    h, w = grid
    corners = [(0.0, 0.0), (float(h), 0.0), (0.0, float(w)), (float(h), float(w))]
    betas = [(0.9, -0.5), (0.9, -0.8), (-0.9, -0.5), (-0.9, -0.8)]
    return [PropagatingSignal(c, b1, b2) for c, (b1, b2) in zip(corners, betas)]


def _block_centres(grid):
    h, w = grid
    x, y = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    return x.ravel(), y.ravel()


def propagation_weights(signal, grid=(20, 20)):
    """Decay weights ``exp(-L2/decay)`` and lags ``L1`` at block centres.

    Returns ``(weights, lags, exact)`` where ``lags`` are integers and
    ``exact`` tells whether no rounding was needed.
    """
    x, y = _block_centres(grid)
    cx, cy = signal.location
    a = np.exp(-np.hypot(x - cx, y - cy) / signal.decay)
    l1 = np.abs(x - cx) + np.abs(y - cy)
    lags = np.rint(l1).astype(int)
    return a, lags, bool(np.allclose(l1, lags, atol=1e-9))


def simulate_propagation(signals=None, grid=(20, 20), n=1000, seed=0, burn_in=None):
    """Sum of decayed, delayed AR(2) signals; no observation noise."""
    rng = np.random.default_rng(seed)
    signals = signals or default_propagating_signals(grid)
    comps, flags = [], []
    for sig in signals:
        a, lags, exact = propagation_weights(sig, grid)
        if not exact:
            flags.append(f"lags for source at {sig.location} rounded to integers")
        max_lag = int(lags.max())
        need = max_lag + 500
        burn = need if burn_in is None else int(burn_in)
        if burn < need:
            raise ValueError(f"burn_in must be at least {need}")
        x = ar2_simulate(sig.beta1, sig.beta2, sig.innovation_var, n + max_lag, burn - max_lag, rng=rng)
        idx = max_lag + np.arange(n)[None, :] - lags[:, None]
        comps.append(a[:, None] * x[idx])
    comps = np.array(comps)
    for f in flags:
        log.warning(f)
    params = {
        "scenario": "propagation",
        "signals": [asdict(s) for s in signals],
        "grid": list(grid),
        "n": n,
    }
    return SimOutput(comps, comps.sum(axis=0), tuple(grid), seed, params, flags)
