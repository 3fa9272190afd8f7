"""Command-line front end.

    kdescope hist      data.csv [--bins K] [--origin X0 --width H]
    kdescope kde       data.csv [--h H | --method NAME] [--kernel NAME]
    kdescope cdf       data.csv [--h H | --method NAME] [--kernel NAME]
    kdescope gamma-kde data.csv --b B
    kdescope bandwidth data.csv --method {rot,robust,plugin,...}
    kdescope sizer     data.csv [--alpha A] [--m M] [--out-prefix map]

Input is one value per row (or a chosen column of a delimited file); use
``-`` to read standard input. Results are CSV on standard output unless
``--output`` is given. Errors are reported on standard error as a single
JSON object and the process exits with status 1.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import bandwidth as bw
from . import estimators as est
from . import histogram as hist
from . import sizer as sz
from .errors import IngestionFailure, KdeError, ParseFailure
from .kernels import Kernel
from .sample import Sample

log = logging.getLogger("kdescope")

METHODS = ("rot", "robust", "plugin", "hsjm", "lscv", "bcv", "lcv", "icv", "chan", "bootstrap", "sarda")


def fmt(v: float) -> str:
    return f"{v:.9g}"


@dataclass
class DataSource:
    path: str = "-"
    column: Union[int, str] = 1
    delimiter: str = ","
    skip_header: bool = False


def _split(line: str, delimiter: str) -> list[str]:
    if delimiter in ("ws", "whitespace", " "):
        return line.split()
    return [f.strip() for f in line.split(delimiter)]


def ingest(source: DataSource, exclude_top: int = 0, stdin=None) -> Sample:
    """Read one column of numbers into a sorted Sample.

    Rows whose field cannot be parsed are skipped with a warning naming the
    line; NaN or infinite values are an error. ``exclude_top`` drops the
    largest observations (outlier removal).
    """
    if source.path == "-":
        lines = (stdin or sys.stdin).read().splitlines()
    else:
        try:
            with open(source.path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise IngestionFailure(f"cannot read {source.path}: {exc}") from exc

    col = source.column
    start = 0
    if isinstance(col, str) and not col.isdigit():
        if not lines:
            raise IngestionFailure("empty input")
        header = _split(lines[0], source.delimiter)
        if col not in header:
            raise IngestionFailure(f"column {col!r} not found in header {header}")
        col_idx = header.index(col)
        start = 1
    else:
        col_idx = int(col) - 1
        if col_idx < 0:
            raise IngestionFailure("column numbers start at 1")
        start = 1 if source.skip_header else 0

    values = []
    skipped = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = _split(line, source.delimiter)
        if col_idx >= len(fields):
            skipped.append(lineno)
            log.warning("line %d: no column %d", lineno, col_idx + 1)
            continue
        try:
            v = float(fields[col_idx])
        except ValueError:
            skipped.append(lineno)
            log.warning("line %d: cannot parse %r", lineno, fields[col_idx])
            continue
        if not math.isfinite(v):
            raise ParseFailure(f"line {lineno}: non-finite value {fields[col_idx]!r}", line=lineno)
        values.append(v)
    if not values:
        raise IngestionFailure(f"no numeric values found ({len(skipped)} unparseable rows: {skipped[:10]})")
    values.sort()
    if exclude_top:
        if exclude_top >= len(values):
            raise IngestionFailure(f"--exclude-top {exclude_top} removes all {len(values)} values")
        values = values[: len(values) - exclude_top]
    return Sample.from_values(values)


def _write_columns(out, header: tuple[str, str], xs, ys) -> None:
    out.write(f"{header[0]},{header[1]}\n")
    for a, b in zip(xs, ys):
        out.write(f"{fmt(a)},{fmt(b)}\n")


def _selector_kwargs(args) -> dict:
    kw = {"kernel": Kernel.GAUSSIAN}
    for name in ("alpha", "sigma", "c", "eps", "x", "B", "seed"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "icv_alpha", None) is not None:
        kw["alpha"] = args.icv_alpha
    return kw


def _resolve_h(args, sample: Sample) -> float:
    if args.h is not None:
        return args.h
    return bw.select(sample, args.method, kernel=Kernel.GAUSSIAN).h


def cmd_hist(args, sample, out):
    if args.width is not None or args.origin is not None:
        spec0 = hist.default_spec(sample, args.bins)
        origin = spec0.origin if args.origin is None else args.origin
        width = spec0.bin_width if args.width is None else args.width
        k = args.bins or max(1, math.ceil((sample.max - origin) / width + 1e-12))
        if origin + k * width < sample.max:
            k += 1
        spec = hist.HistogramSpec(origin, width, k)
    else:
        spec = hist.default_spec(sample, args.bins)
    h = hist.build_histogram(sample, spec)
    _write_columns(out, ("bin_left", "height"), spec.edges[:-1], h.heights)


def _grid(args, sample, h):
    if args.lo is not None or args.hi is not None:
        default = est.default_grid(sample, h, args.grid_size)
        lo = default[0] if args.lo is None else args.lo
        hi = default[-1] if args.hi is None else args.hi
        return np.linspace(lo, hi, args.grid_size)
    return est.default_grid(sample, h, args.grid_size)


def cmd_kde(args, sample, out):
    h = _resolve_h(args, sample)
    d = est.kde_grid(sample, args.kernel, h, _grid(args, sample, h))
    _write_columns(out, ("x", "value"), d.grid, d.values)


def cmd_cdf(args, sample, out):
    h = _resolve_h(args, sample)
    d = est.kdfe_grid(sample, args.kernel, h, _grid(args, sample, h))
    _write_columns(out, ("x", "value"), d.grid, d.values)


def cmd_gamma(args, sample, out):
    grid = None
    if args.hi is not None:
        grid = np.linspace(0.0, args.hi, args.grid_size)
    d = est.gamma_kde_grid(sample, args.b, grid, size=args.grid_size)
    _write_columns(out, ("x", "value"), d.grid, d.values)


def cmd_bandwidth(args, sample, out):
    if args.method == "icv" and (args.icv_alpha is None or args.sigma is None):
        raise KdeError("--method icv requires --alpha and --sigma")
    if args.method in ("chan", "bootstrap") and args.x is None:
        raise KdeError(f"--method {args.method} requires --x")
    kw = _selector_kwargs(args)
    if args.method == "chan":
        kw["alpha"] = args.level
    rep = bw.select(sample, args.method, **kw)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            fh.write(f"# method={rep.method} converged={rep.converged} iterations={rep.iterations}"
                     f" flags={'|'.join(rep.flags) or 'none'}\n")
            _write_columns(fh, ("h_candidate", "score"), *zip(*rep.trace) if rep.trace else ((), ()))
    for flag in rep.flags:
        log.warning("selector flag: %s", flag)
    out.write(fmt(rep.h) + "\n")


def cmd_sizer(args, sample, out):
    grid = sz.default_scale_grid(sample, args.x_points, args.h_points)
    smap = sz.sizer_map(sample, grid, m=args.m, alpha=args.alpha, workers=args.threads)
    sz.write_ppm(smap, f"{args.out_prefix}.ppm")
    sz.write_csv(smap, f"{args.out_prefix}.csv")
    out.write(f"{args.out_prefix}.ppm\n{args.out_prefix}.csv\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdescope", description="Kernel density estimation toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", nargs="?", default="-", help="data file, '-' for stdin (default)")
    common.add_argument("--column", default="1", help="1-based column number or header name")
    common.add_argument("--delimiter", default=",", help="field separator; 'ws' splits on whitespace")
    common.add_argument("--skip-header", action="store_true")
    common.add_argument("--exclude-top", type=int, default=0, metavar="K", help="drop the K largest values")
    common.add_argument("--output", "-o", help="write results here instead of stdout")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=None)

    kern = argparse.ArgumentParser(add_help=False)
    kern.add_argument("--kernel", default="gaussian", choices=[k.value for k in Kernel])
    kern.add_argument("--h", type=float, help="bandwidth; overrides --method")
    kern.add_argument("--method", default="rot", choices=("rot", "robust", "plugin", "hsjm", "lscv", "bcv", "lcv", "sarda"))

    gridp = argparse.ArgumentParser(add_help=False)
    gridp.add_argument("--grid-size", type=int, default=est.DEFAULT_GRID_SIZE)
    gridp.add_argument("--lo", type=float)
    gridp.add_argument("--hi", type=float)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hist", parents=[common], help="histogram heights")
    p.add_argument("--bins", type=int)
    p.add_argument("--origin", type=float)
    p.add_argument("--width", type=float)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("kde", parents=[common, kern, gridp], help="kernel density estimate on a grid")
    p.set_defaults(func=cmd_kde)

    p = sub.add_parser("cdf", parents=[common, kern, gridp], help="kernel distribution function estimate")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("gamma-kde", parents=[common, gridp], help="gamma-kernel estimate on [0, inf)")
    p.add_argument("--b", type=float, required=True, help="gamma kernel smoothing parameter")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("bandwidth", parents=[common], help="select a bandwidth")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--alpha", dest="icv_alpha", type=float, help="ICV alpha")
    p.add_argument("--sigma", type=float, help="ICV sigma")
    p.add_argument("--c", type=float, default=0.5, help="threshold rule: lower scan constant")
    p.add_argument("--eps", type=float, default=0.1, help="threshold rule: upper scan exponent")
    p.add_argument("--level", type=float, default=0.05, help="threshold rule: test level")
    p.add_argument("--x", type=float, help="evaluation point for local selectors")
    p.add_argument("--B", type=int, default=200, help="bootstrap replicates")
    p.add_argument("--trace", help="write the criterion trace CSV here")
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("sizer", parents=[common], help="SiZer map (PPM image and CSV)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=1, help="derivative order")
    p.add_argument("--x-points", type=int, default=101)
    p.add_argument("--h-points", type=int, default=21)
    p.add_argument("--out-prefix", default="map")
    p.set_defaults(func=cmd_sizer)
    return parser


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING)
    if args.command == "bandwidth" and args.seed is None:
        args.seed = 0
    try:
        source = DataSource(args.input, args.column, args.delimiter, args.skip_header)
        sample = ingest(source, args.exclude_top, stdin=stdin)
        buf = io.StringIO()
        args.func(args, sample, buf)
        if args.output:
            with open(args.output, "w", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            stdout.write(buf.getvalue())
    except KdeError as exc:
        stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
