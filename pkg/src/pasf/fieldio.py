"""Text field files, CSV/JSON outputs and heatmap frames.

Field file layout::

    # pasf-field v1
    # grid_h=<int> grid_w=<int> n=<int>
    v(s_1, t_1),...,v(s_m, t_1)
    ...                                  (n body lines)

Locations are row-major over the grid. Values are written with 17
significant digits, which round-trips float64 exactly.
"""

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Field", "FieldFormatError", "read_field", "write_field", "write_pcs_csv", "emit_heatmaps"]

MAGIC = "# pasf-field v1"
_DIMS = re.compile(r"#\s*grid_h=(\d+)\s+grid_w=(\d+)\s+n=(\d+)\s*$")


class FieldFormatError(ValueError):
    pass


@dataclass
class Field:
    """Real grid time series stored as ``(grid_h * grid_w, n)``, row-major
    over the grid."""

    data: np.ndarray
    grid_h: int
    grid_w: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[0] != self.grid_h * self.grid_w:
            raise ValueError(f"data shape {self.data.shape} does not match grid {self.grid_h}x{self.grid_w}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def from_grid(cls, values):
        """From an ``(h, w, n)`` array."""
        values = np.asarray(values, dtype=float)
        h, w, n = values.shape
        return cls(values.reshape(h * w, n), h, w)

    @property
    def shape(self):
        return (self.grid_h, self.grid_w)

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    def grid(self):
        return self.data.reshape(self.grid_h, self.grid_w, self.n)


def write_field(field, path):
    path = Path(path)
    with path.open("w") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"# grid_h={field.grid_h} grid_w={field.grid_w} n={field.n}\n")
        for row in field.data.T:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_field(path):
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise FieldFormatError(f"{path}:1: missing '{MAGIC}' header")
    dims = None
    body = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            mt = _DIMS.match(line.strip())
            if mt:
                dims = tuple(int(g) for g in mt.groups())
            continue
        if not line.strip():
            continue
        body.append((lineno, line))
    if dims is None:
        raise FieldFormatError(f"{path}: missing 'grid_h=.. grid_w=.. n=..' header")
    h, w, n = dims
    m = h * w
    if h < 1 or w < 1 or n < 1:
        raise FieldFormatError(f"{path}: dimensions must be positive")
    data = np.empty((m, n))
    for t, (lineno, line) in enumerate(body):
        if t >= n:
            raise FieldFormatError(f"{path}:{lineno}: more body lines than n={n}")
        parts = line.split(",")
        if len(parts) != m:
            raise FieldFormatError(f"{path}:{lineno}: expected {m} values, found {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise FieldFormatError(f"{path}:{lineno}: {exc}") from None
        if not all(np.isfinite(vals)):
            raise FieldFormatError(f"{path}:{lineno}: non-finite value")
        data[:, t] = vals
    if len(body) < n:
        last = body[-1][0] if body else len(lines)
        raise FieldFormatError(f"{path}:{last}: file ends after {len(body)} of {n} body lines")
    return Field(data, h, w)


def write_pcs_csv(series, path):
    """Principal component series ``(channels, n)`` as ``t,channel_1,..``."""
    series = np.atleast_2d(series)
    with Path(path).open("w") as fh:
        fh.write("t," + ",".join(f"channel_{c + 1}" for c in range(series.shape[0])) + "\n")
        for t in range(series.shape[1]):
            fh.write(f"{t + 1}," + ",".join(f"{v:.17g}" for v in series[:, t]) + "\n")


def _diverging(x):
    """Blue-white-red for ``x`` in [-1, 1]; returns uint8 RGB."""
    x = np.clip(x, -1.0, 1.0)
    pos = np.clip(x, 0, 1)[..., None]
    neg = np.clip(-x, 0, 1)[..., None]
    white = np.array([255.0, 255.0, 255.0])
    red = np.array([178.0, 24.0, 43.0])
    blue = np.array([33.0, 102.0, 172.0])
    rgb = white * (1 - pos - neg) + red * pos + blue * neg
    return np.rint(rgb).astype(np.uint8)


def emit_heatmaps(field, t_start, t_stop, prefix, upscale=1):
    """Write one binary PPM per time point ``t_start .. t_stop`` (1-based,
    inclusive) on a colour scale symmetric about zero and shared across the
    frames. A sidecar ``<prefix>scale.json`` records the scale."""
    if not 1 <= t_start <= t_stop <= field.n:
        raise ValueError(f"time range {t_start}..{t_stop} outside 1..{field.n}")
    upscale = int(upscale)
    if upscale < 1:
        raise ValueError("upscale must be >= 1")
    frames = field.grid()[:, :, t_start - 1 : t_stop]
    vmax = float(np.abs(frames).max())
    scale = vmax if vmax > 0 else 1.0
    prefix = str(prefix)
    Path(prefix + "x").parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(frames.shape[2]):
        img = _diverging(frames[:, :, i] / scale)
        if upscale > 1:
            img = img.repeat(upscale, axis=0).repeat(upscale, axis=1)
        p = Path(f"{prefix}{t_start + i:05d}.ppm")
        with p.open("wb") as fh:
            fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
            fh.write(img.tobytes())
        paths.append(p)
    with Path(f"{prefix}scale.json").open("w") as fh:
        json.dump({"vmin": -vmax, "vmax": vmax, "t_start": t_start, "t_stop": t_stop, "files": [p.name for p in paths]}, fh, indent=2)
    return paths


def read_ppm(path):
    """Read a binary PPM written by :func:`emit_heatmaps`."""
    raw = Path(path).read_bytes()
    header, _, rest = raw.partition(b"\n255\n")
    _, dims = header.split(b"\n", 1)
    w, h = (int(v) for v in dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)
