"""Command-line front end: parameter entry, experiments, CSV/JSON emission.

Every output file starts with a header recording the resolved configuration
and the package version (comment lines for CSV, a "meta" object for JSON),
numbers are serialized with the shortest round-trip decimal representation,
and files are written atomically.  Identical configurations yield byte
identical outputs; there is no randomness anywhere in the package.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import __version__
from .density import density_series, h0, normalize
from .errors import ComputationError, ParameterError
from .experiments import (
    Family,
    asymptotic_ratio_report,
    counterexample_sequence,
    ratio_targets,
    sweep,
)
from .ulam import build_ulam, stationary_density
from .wmap import WParams, build_w_map, classify_case

EXIT_CONFIG = 2
EXIT_COMPUTE = 3


def _fmt(value) -> str:
    """Shortest round-trip text for a cell; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".acimlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _config_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True)


def _emit(path: str, fmt: str, config: dict, header: list[str], rows: list[list]) -> None:
    if fmt == "csv":
        lines = [
            f"# acimlab {__version__}",
            f"# config: {_config_json(config)}",
            ",".join(header),
        ]
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        _write_atomic(path, "\n".join(lines) + "\n")
    else:
        payload = {
            "meta": {"artifact": "acimlab", "version": __version__, "config": config},
            "rows": [dict(zip(header, row)) for row in rows],
        }
        _write_atomic(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _parse_schedule(args) -> list[float]:
    if args.a_schedule is not None:
        if isinstance(args.a_schedule, (list, tuple)):
            items = list(args.a_schedule)
        else:
            items = [s for s in args.a_schedule.split(",") if s.strip()]
        if not items:
            raise ParameterError("a_schedule is empty")
        return [float(s) for s in items]
    if args.a_start is None or args.a_stop is None or args.a_points is None:
        raise ParameterError(
            "a_schedule: pass --a-schedule or all of --a-start/--a-stop/--a-points"
        )
    import numpy as np

    if args.a_points < 1:
        raise ParameterError("a_points must be >= 1")
    if args.a_spacing == "log":
        vals = np.logspace(np.log10(args.a_start), np.log10(args.a_stop), args.a_points)
    else:
        vals = np.linspace(args.a_start, args.a_stop, args.a_points)
    return [float(v) for v in vals]


def _wparams(args, a=None) -> WParams:
    try:
        return WParams(args.s1, args.s2, args.p, args.q, args.r, args.a if a is None else a)
    except ParameterError:
        raise
    except TypeError as exc:
        raise ParameterError(f"incomplete parameters: {exc}") from exc


def _add_family_flags(parser, with_a=True):
    parser.add_argument("--s1", type=float, help="left slope at the turning point (> 1)")
    parser.add_argument("--s2", type=float, help="right slope magnitude at the turning point (> 1)")
    parser.add_argument("--p", type=float, help="left slope perturbation rate (> 0)")
    parser.add_argument("--q", type=float, help="right slope perturbation rate (> 0)")
    parser.add_argument("--r", type=float, help="turning-point lift rate (> 0)")
    if with_a:
        parser.add_argument("--a", type=float, help="perturbation size (>= 0, r*a < 1/2)")


def _add_schedule_flags(parser):
    parser.add_argument("--a-schedule", help="comma-separated decreasing a values")
    parser.add_argument("--a-start", type=float, help="largest a of a generated schedule")
    parser.add_argument("--a-stop", type=float, help="smallest a of a generated schedule")
    parser.add_argument("--a-points", type=int, help="number of schedule points")
    parser.add_argument(
        "--a-spacing", choices=("log", "linear"), default="log", help="schedule spacing"
    )


def _add_output_flags(parser):
    parser.add_argument("--output", required=False, help="output file path")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acimlab",
        description="invariant densities of W-shaped expanding interval maps",
    )
    parser.add_argument("--config", help="JSON file with defaults; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p_classify = sub.add_parser("classify", help="print the slope-sum case I/II/III")
    p_classify.add_argument("--s1", type=float)
    p_classify.add_argument("--s2", type=float)

    p_eval = sub.add_parser("map-eval", help="evaluate or iterate one map")
    _add_family_flags(p_eval)
    p_eval.add_argument("--x", type=float, help="point to evaluate")
    p_eval.add_argument("--steps", type=int, default=0, help="print the orbit of x this long")

    p_density = sub.add_parser("density", help="normalized invariant density to CSV/JSON")
    _add_family_flags(p_density)
    p_density.add_argument("--method", choices=("gora", "ulam", "both"), default="gora")
    p_density.add_argument("--bins", type=int, default=4096, help="Ulam bins")
    p_density.add_argument(
        "--align-half", action="store_true", help="snap the Ulam grid so 1/2 is a bin edge"
    )
    p_density.add_argument("--tail-tol", type=float, default=1e-10)
    _add_output_flags(p_density)

    p_sweep = sub.add_parser("sweep", help="family sweep over decreasing a")
    _add_family_flags(p_sweep, with_a=False)
    _add_schedule_flags(p_sweep)
    p_sweep.add_argument("--bins", type=int, default=4096, help="Ulam bins for case I points")
    _add_output_flags(p_sweep)

    p_ratios = sub.add_parser("ratios", help="case-II peak-region integral ratios")
    _add_family_flags(p_ratios, with_a=False)
    _add_schedule_flags(p_ratios)
    _add_output_flags(p_ratios)

    p_ce = sub.add_parser("counterexample", help="no-uniform-lower-bound sequence")
    p_ce.add_argument("--n-max", type=int, default=5)
    _add_output_flags(p_ce)

    return parser


FALLBACKS = {"p": 1.0, "q": 1.0, "r": 1.0}


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Apply config-file values under explicit flags, return the resolved map.

    Precedence per option: explicit flag, then config-file entry (keyed by
    the underscore name), then the built-in fallback where one exists.
    """
    file_values = {}
    if args.config:
        try:
            with open(args.config) as handle:
                file_values = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"config: cannot read {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ParameterError("config: top-level JSON object required")
    resolved = {}
    for key, value in sorted(vars(args).items()):
        if key in ("config",):
            continue
        if value is None and key in file_values:
            value = file_values[key]
        if value is None and key in FALLBACKS:
            value = FALLBACKS[key]
        setattr(args, key, value)
        resolved[key] = value
    return resolved


def _require(config: dict, *names: str) -> None:
    for name in names:
        if config.get(name) is None:
            raise ParameterError(f"missing required option: --{name.replace('_', '-')}")


def _cmd_classify(args, config):
    _require(config, "s1", "s2")
    print(f"case {classify_case(args.s1, args.s2)}")


def _cmd_map_eval(args, config):
    _require(config, "s1", "s2", "p", "q", "r", "a", "x")
    w = build_w_map(_wparams(args))
    if args.steps == 0:
        print(repr(float(w(args.x))))
    else:
        for value in w.iterate(args.x, args.steps):
            print(repr(float(value)))


def _density_cells(args, method):
    if method == "ulam":
        params = _wparams(args)
        ulam = build_ulam(build_w_map(params), args.bins, align_half=args.align_half)
        return stationary_density(ulam)
    params = _wparams(args)
    if params.a == 0:
        return h0(params.s1, params.s2)
    return normalize(density_series(params, tail_tol=args.tail_tol))


def _cmd_density(args, config):
    _require(config, "s1", "s2", "p", "q", "r", "a", "output")
    header = ["cell_left", "cell_right", "value"]

    def rows_of(density):
        return [
            [float(left), float(right), float(val)]
            for left, right, val in zip(
                density.breakpoints[:-1], density.breakpoints[1:], density.values
            )
        ]

    if args.method == "both":
        from .density import l1_distance

        gora = _density_cells(args, "gora")
        ulam = _density_cells(args, "ulam")
        root, ext = os.path.splitext(args.output)
        _emit(root + ".gora" + ext, args.format, config, header, rows_of(gora))
        _emit(root + ".ulam" + ext, args.format, config, header, rows_of(ulam))
        print(repr(l1_distance(gora, ulam)))
    else:
        _emit(args.output, args.format, config, header, rows_of(_density_cells(args, args.method)))


SWEEP_HEADER = [
    "a",
    "case",
    "d_to_limit",
    "C1_over_a",
    "C2_over_a",
    "C3_over_a",
    "B_over_a",
    "sup_density",
    "essinf_density",
    "k",
]


def _cmd_sweep(args, config):
    _require(config, "s1", "s2", "p", "q", "r", "output")
    schedule = _parse_schedule(args)
    family = Family(args.s1, args.s2, args.p, args.q, args.r)
    records = sweep(family, schedule, bins=args.bins)
    rows = []
    for rec in records:
        c = rec.c_over_a or (None, None, None, None)
        rows.append(
            [rec.a, rec.case, rec.d_to_limit, c[0], c[1], c[2], c[3],
             rec.sup_density, rec.essinf_density, rec.k]
        )
    _emit(args.output, args.format, config, SWEEP_HEADER, rows)


def _cmd_ratios(args, config):
    _require(config, "s1", "s2", "p", "q", "r", "output")
    schedule = _parse_schedule(args)
    family = Family(args.s1, args.s2, args.p, args.q, args.r)
    report = asymptotic_ratio_report(family, schedule)
    t1, t2, t3, tb = ratio_targets(family)
    header = [
        "a",
        "C1_over_a", "C2_over_a", "C3_over_a", "B_over_a",
        "C1_target", "C2_target", "C3_target", "B_target",
    ]
    rows = [
        [rec.a, rec.c_over_a[0], rec.c_over_a[1], rec.c_over_a[2], rec.c_over_a[3],
         t1, t2, t3, tb]
        for rec in report.rows
    ]
    if args.format == "csv":
        flags = ",".join(
            f"{name}={'yes' if report.monotone[name] else 'no'}"
            for name in ("C1", "C2", "C3", "B")
        )
        lines = [
            f"# acimlab {__version__}",
            f"# config: {_config_json(config)}",
            ",".join(header),
        ]
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        lines.append(f"# monotone_approach: {flags}")
        _write_atomic(args.output, "\n".join(lines) + "\n")
    else:
        payload = {
            "meta": {"artifact": "acimlab", "version": __version__, "config": config},
            "rows": [dict(zip(header, row)) for row in rows],
            "monotone_approach": report.monotone,
        }
        _write_atomic(args.output, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _cmd_counterexample(args, config):
    _require(config, "output")
    if args.n_max is None or args.n_max < 1:
        raise ParameterError("n_max must be >= 1")
    rows = [
        [row.n, row.r_n, row.a_n, row.d_n, row.essinf_n]
        for row in counterexample_sequence(args.n_max)
    ]
    _emit(args.output, args.format, config, ["n", "r_n", "a_n", "d_n", "essinf_n"], rows)


COMMANDS = {
    "classify": _cmd_classify,
    "map-eval": _cmd_map_eval,
    "density": _cmd_density,
    "sweep": _cmd_sweep,
    "ratios": _cmd_ratios,
    "counterexample": _cmd_counterexample,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merge_config(args, parser)
        COMMANDS[args.command](args, config)
    except ParameterError as exc:
        print(f"acimlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComputationError as exc:
        print(f"acimlab: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return 0


if __name__ == "__main__":
    sys.exit(main())
