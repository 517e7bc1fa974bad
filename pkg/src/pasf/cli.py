"""Command line entry point: ``pasf {simulate,decompose,baseline,render}``.

Exit codes: 0 success, 2 invalid input, 3 no eigenpairs above the
threshold, 4 I/O failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import simkit
from .baseline import pca_decompose
from .fieldio import Field, FieldFormatError, emit_heatmaps, read_field, write_field, write_pcs_csv
from .pipeline import EmptyAtlasError, RunConfig, run_decompose

log = logging.getLogger("pasf")

EXIT_OK, EXIT_INVALID, EXIT_EMPTY, EXIT_IO = 0, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _write_json(path, obj):
    with Path(path).open("w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _load_config(path):
    if path is None:
        return {}
    try:
        with Path(path).open() as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_INVALID, f"{path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise _Fail(EXIT_INVALID, f"{path}: config must be a JSON object")
    return cfg


def _merged(args, keys, defaults=None):
    """Config-file values overridden by explicitly given flags."""
    cfg = dict(defaults or {})
    cfg.update(_load_config(args.config))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    if args.scenario == "rotating":
        cfg = _merged(args, ["n", "seed", "grid_h", "grid_w", "noise_var"], {"n": 1000, "seed": 0, "grid_h": 20, "grid_w": 20, "noise_var": 0.16})
        grid = (int(cfg.pop("grid_h")), int(cfg.pop("grid_w")))
        sim = simkit.simulate_rotating(grid=grid, n=int(cfg["n"]), noise_var=float(cfg["noise_var"]), seed=int(cfg["seed"]))
    else:
        cfg = _merged(args, ["n", "seed", "grid_h", "grid_w"], {"n": 1000, "seed": 0, "grid_h": 20, "grid_w": 20})
        grid = (int(cfg.pop("grid_h")), int(cfg.pop("grid_w")))
        sim = simkit.simulate_propagation(grid=grid, n=int(cfg["n"]), seed=int(cfg["seed"]))
    out = _outdir(args.output_dir)
    h, w = sim.grid
    files = ["observed.field"]
    write_field(Field(sim.observed, h, w), out / "observed.field")
    for k, comp in enumerate(sim.components, start=1):
        write_field(Field(comp, h, w), out / f"true_component_{k}.field")
        files.append(f"true_component_{k}.field")
    _write_json(out / "params.json", {"seed": sim.seed, **sim.params, "flags": sim.flags})
    _write_json(out / "manifest.json", {"command": f"simulate {args.scenario}", "files": files + ["params.json"]})
    print(out / "observed.field")
    return EXIT_OK


def cmd_decompose(args):
    cfg = _merged(args, ["q", "r", "delta", "n_select", "K", "seed", "output_dir"])
    try:
        config = RunConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise _Fail(EXIT_INVALID, f"bad configuration: {exc}") from None
    if config.output_dir is None:
        raise _Fail(EXIT_INVALID, "an output directory is required (--output-dir or config 'output_dir')")
    field = read_field(args.input)
    _outdir(config.output_dir)
    try:
        result = run_decompose(field, config)
    except EmptyAtlasError as exc:
        out = Path(config.output_dir)
        _write_json(out / "report.json", exc.report)
        write_field(Field(field.data - field.data.mean(axis=1, keepdims=True), *field.shape), out / "residual.field")
        _write_json(out / "manifest.json", {"command": "decompose", "files": ["residual.field", "report.json"]})
        raise _Fail(EXIT_EMPTY, str(exc)) from None
    rep = result.report
    print(f"{rep['selected_entries']} entries, K={rep['K']}, shares {', '.join(f'{s:.3f}' for s in rep['shares'])}, residual {rep['residual_share']:.3f}")
    return EXIT_OK


def cmd_baseline(args):
    field = read_field(args.input)
    data = field.data - field.data.mean(axis=1, keepdims=True)
    try:
        model, comps = pca_decompose(data, args.k)
    except ValueError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from None
    out = _outdir(args.output_dir)
    files = []
    for i, comp in enumerate(comps, start=1):
        write_field(Field(comp, *field.shape), out / f"component_{i}.field")
        write_pcs_csv(model.scores[i - 1], out / f"pcs_{i}.csv")
        files += [f"component_{i}.field", f"pcs_{i}.csv"]
    residual = data - np.sum(comps, axis=0)
    write_field(Field(residual, *field.shape), out / "residual.field")
    shares = [float(s) for s in model.shares]
    total = float(np.sum(data**2))
    report = {
        "method": "pca",
        "k": args.k,
        "shares": shares,
        "residual_share": float(np.sum(residual**2) / total) if total > 0 else 0.0,
        "eigenvalues": model.eigenvalues,
    }
    _write_json(out / "report.json", report)
    _write_json(out / "manifest.json", {"command": "baseline", "files": files + ["residual.field", "report.json"]})
    print(f"PCA k={args.k}, shares {', '.join(f'{s:.3f}' for s in shares)}")
    return EXIT_OK


def cmd_render(args):
    field = read_field(args.input)
    t_stop = args.t_stop if args.t_stop is not None else field.n
    try:
        paths = emit_heatmaps(field, args.t_start, t_stop, args.prefix, args.upscale)
    except ValueError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from None
    print(f"{len(paths)} frames written")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="pasf", description="Phase-aligned spectral filtering of gridded time series.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic field")
    s.add_argument("scenario", choices=["rotating", "propagation"])
    s.add_argument("--output-dir", dest="output_dir", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--grid-h", dest="grid_h", type=int)
    s.add_argument("--grid-w", dest="grid_w", type=int)
    s.add_argument("--noise-var", dest="noise_var", type=float, help="rotating scenario only")
    s.add_argument("--config")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("decompose", help="phase-aligned decomposition of a field file")
    d.add_argument("input")
    d.add_argument("--q", type=int, help="Daniell half-width (bandwidth 2q+1)")
    d.add_argument("--r", type=int, help="eigenpairs kept per frequency")
    d.add_argument("--delta", type=float, help="explicit eigenvalue threshold")
    d.add_argument("--n-select", "--n_select", dest="n_select", type=int, help="keep this many largest eigenvalues")
    d.add_argument("--K", help="cluster count or 'auto'")
    d.add_argument("--seed", type=int)
    d.add_argument("--output-dir", "--output_dir", dest="output_dir")
    d.add_argument("--config", help="JSON file with any of the above; flags win")
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("baseline", help="plain PCA of a field file")
    b.add_argument("input")
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--output-dir", "--output_dir", dest="output_dir", required=True)
    b.set_defaults(func=cmd_baseline)

    r = sub.add_parser("render", help="heatmap frames of a field file")
    r.add_argument("input")
    r.add_argument("--t-start", dest="t_start", type=int, default=1)
    r.add_argument("--t-stop", dest="t_stop", type=int)
    r.add_argument("--prefix", required=True, help="output path prefix, e.g. frames/t_")
    r.add_argument("--upscale", type=int, default=1)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"pasf: {exc}", file=sys.stderr)
        return exc.code
    except FieldFormatError as exc:
        print(f"pasf: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"pasf: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"pasf: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
