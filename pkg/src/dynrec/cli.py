"""Command-line front end: ``dynrec <experiment> [flags]``.

Settings resolve in three layers, later ones winning: preset defaults
(``--preset desk|full``), a JSON config file (``--config``), then
individual flags.  ``--dry-run`` prints the resolved settings and exits.
Component indices are 1-based on the command line and in config files;
everything internal is 0-based.

Exit codes: 0 success, 2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys

import numpy as np

from .dynamics import EXACT_OBSERVED, FINE_STEP_FD
from .experiments import PRESETS, RUNNERS, write_csv, write_rows
from .recovery import required_bursts

# Config files may group settings under these headers (any of them, in any
# combination); sections are flattened into one namespace before validation.
_SECTIONS = (
    "system",
    "strategy",
    "dimensions",
    "sampling",
    "solver",
    "noise",
    "experiment",
)

_FLOAT_LISTS = {"gammas", "levels"}
_INT_LISTS = {"K_values", "windows"}


def _runner_defaults(name):
    fn = RUNNERS[name]
    return {k: p.default for k, p in inspect.signature(fn).parameters.items()}


def _coerce(name, key, value):
    if key == "component":
        value = int(value) - 1
        if value < 0:
            raise ValueError("component indices are 1-based; need >= 1")
        return value
    if key in _FLOAT_LISTS:
        return tuple(float(v) for v in value)
    if key in _INT_LISTS:
        return tuple(int(v) for v in value)
    if key == "velocity_mode":
        if value not in (EXACT_OBSERVED, FINE_STEP_FD):
            raise ValueError(
                f"velocity_mode must be {EXACT_OBSERVED!r} or {FINE_STEP_FD!r}, "
                f"got {value!r}"
            )
    return value


def _apply(cfg, updates, name):
    for key, value in updates.items():
        if key not in cfg:
            raise ValueError(
                f"unknown setting {key!r} for {name}; accepted: {sorted(cfg)}"
            )
        cfg[key] = _coerce(name, key, value)


def _flatten_sections(doc):
    if not isinstance(doc, dict):
        raise ValueError("config root must be a JSON object")
    flat = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ValueError(f"config section {key!r} must be an object")
            flat.update(value)
        else:
            flat[key] = value
    return flat


def resolve_config(name, preset=None, config_path=None, overrides=None):
    """Merge runner defaults <- preset <- config file <- flag overrides."""
    cfg = _runner_defaults(name)
    if preset is not None:
        cfg.update(PRESETS[name][preset])
    if config_path is not None:
        with open(config_path) as fh:
            doc = json.load(fh)
        _apply(cfg, _flatten_sections(doc), name)
    if overrides:
        _apply(cfg, overrides, name)
    return cfg


def _display(name, cfg):
    """Resolved settings in the user-facing convention (1-based component)."""
    shown = {"experiment": name}
    for key, value in cfg.items():
        if key == "component":
            value = value + 1
        elif isinstance(value, tuple):
            value = list(value)
        shown[key] = value
    return shown


def _add_runner_flags(sub, name):
    for key, default in _runner_defaults(name).items():
        flag = "--" + key.replace("_", "-")
        if key == "component":
            sub.add_argument(
                flag, type=int, default=None,
                help=f"1-based component index (default {default + 1})",
            )
        elif key in _FLOAT_LISTS or key in _INT_LISTS:
            elem = float if key in _FLOAT_LISTS else int
            sub.add_argument(
                flag, type=lambda s, e=elem: tuple(e(v) for v in s.split(",")),
                default=None, metavar="A,B,...",
                help=f"override {key} (default {','.join(map(str, default))})",
            )
        elif key == "velocity_mode":
            sub.add_argument(
                flag, choices=(EXACT_OBSERVED, FINE_STEP_FD), default=None,
                help=f"velocity source (default {default})",
            )
        elif isinstance(default, int):
            sub.add_argument(flag, type=int, default=None,
                             help=f"override {key} (default {default})")
        elif isinstance(default, float):
            sub.add_argument(flag, type=float, default=None,
                             help=f"override {key} (default {default})")
        else:
            sub.add_argument(flag, default=None,
                             help=f"override {key} (default {default})")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dynrec",
        description="Recover sparse quadratic dynamics from burst samples.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sub = subs.add_parser(name, help=f"run the {name} experiment")
        sub.add_argument("--config", default=None, metavar="PATH.json",
                         help="JSON settings file (overrides preset)")
        sub.add_argument("--out", default=None, metavar="PATH.csv",
                         help="write rows here instead of stdout")
        sub.add_argument("--preset", choices=("desk", "full"), default=None,
                         help="named parameter bundle (desk = fast)")
        sub.add_argument("--dry-run", action="store_true",
                         help="print resolved settings and exit")
        _add_runner_flags(sub, name)

    bound = subs.add_parser(
        "bound", help="print the burst count suggested by the sampling theory"
    )
    bound.add_argument("--sparsity", type=int, required=True,
                       help="number of nonzero coefficients s")
    bound.add_argument("--columns", type=int, required=True,
                       help="dictionary width N")
    bound.add_argument("--eps", type=float, default=None,
                       help="failure probability (theoretical mode only)")
    bound.add_argument("--mode", choices=("effective", "theoretical"),
                       default="effective", help="which count to print")
    bound.add_argument("--constant", type=float, default=3.2,
                       help="calibration constant c")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "bound":
        try:
            print(required_bursts(
                args.sparsity, args.columns, args.eps, args.mode, args.constant
            ))
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        return 0

    name = args.command
    overrides = {
        key: getattr(args, key)
        for key in _runner_defaults(name)
        if getattr(args, key) is not None
    }
    try:
        cfg = resolve_config(name, args.preset, args.config, overrides)
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.dry_run:
        print(json.dumps(_display(name, cfg), indent=2))
        return 0

    try:
        report = RUNNERS[name](**cfg)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    if args.out is not None:
        write_csv(report, args.out)
        print(
            f"{report.name}: {len(report.rows)} rows in "
            f"{report.wall_time:.1f}s -> {args.out}",
            file=sys.stderr,
        )
    else:
        write_rows(sys.stdout, report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
