"""
Command-line front end.

    ghz-sagnac phase-diagram     --grid 0:1:101 --workers 4 --out fig2.csv
    ghz-sagnac fock-histogram    --omega-s 0.1 --omega-p 0.6 --nmax 8
    ghz-sagnac qfi-scaling       --omega-p 0.5,0.55,0.6 --grid 2:16:4:log
    ghz-sagnac parity-scan       --n-particles 5 --grid 0:1:201
    ghz-sagnac precision-scaling --grid 1:64:7:log
    ghz-sagnac selftest

Settings resolve as: built-in defaults, then ``--config`` file, then flags.
A config file holds ``key = value`` lines (keys as the long flags, dashes or
underscores); the ``# spec.key=value`` header of a previous result table is
also accepted, which re-runs that table (its ``out`` is ignored).

Exit codes: 0 success, 1 usage error, 2 numeric-tolerance failure,
3 capacity guard.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import CapacityError, DomainError, NumericError, SagnacError
from .sweep import COMMANDS, ENGINES, Axis, SweepSpec, run

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CAPACITY = 0, 1, 2, 3

AXIS_ORDER = {
    "phase-diagram": ("omega_s", "omega_p"),
    "fock-histogram": (),
    "qfi-scaling": ("N",),
    "parity-scan": ("omega_s",),
    "precision-scaling": ("N",),
}

DEFAULTS = {
    "phase-diagram": dict(grid="omega_s=0:1:101;omega_p=0:1:101", omega_s="0.1", omega_p="0.5"),
    "fock-histogram": dict(grid="", omega_s="0.1", omega_p="0.6", nmax="10"),
    "qfi-scaling": dict(grid="N=2:16:4:log", omega_s="0.1", omega_p="0.5,0.55,0.6"),
    "parity-scan": dict(grid="omega_s=0:1:201", omega_p="0.5,0.55,0.6", n_particles="5"),
    "precision-scaling": dict(grid="N=1:64:7:log", omega_s="auto", omega_p="0.5"),
}

CONFIG_KEYS = (
    "grid", "omega_s", "omega_p", "n_particles", "engine", "branch", "nmax", "dt", "workers", "out", "command",
)


class UsageError(SagnacError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path: str) -> dict:
    """Read a flat ``key = value`` file, or the ``spec.*`` header of a result table.

    From a result table only the ``spec.*`` lines are used, minus ``out`` so a
    re-run never overwrites the table it came from.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    is_table = any(line.startswith("# spec.") for line in lines)
    values = {}
    for raw in lines:
        line = raw.strip()
        if is_table:
            if not line.startswith("# spec."):
                continue
            line = line[len("# spec."):]
        elif not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise UsageError(f"{path}: unrecognised config line {raw!r}")
        values[key] = value.strip()
    if is_table:
        values.pop("out", None)
    return values


def _floats(text: str, key: str) -> tuple:
    if text.strip() in ("", "auto"):
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{key} must be a comma-separated list of numbers, got {text!r}") from None


def _axes(command: str, grids: list) -> tuple:
    names = AXIS_ORDER[command]
    named, bare = {}, []
    for g in grids:
        if not g:
            continue
        if "=" in g:
            name, _, text = g.partition("=")
            named[name.strip()] = text
        else:
            bare.append(g)
    if bare:
        if len(bare) == 1:
            bare = bare * len(names)
        for name, text in zip(names, bare):
            named[name] = text
    unknown = set(named) - set(names)
    if unknown:
        raise UsageError(f"{command} has no grid axis {sorted(unknown)}; expected {list(names)}")
    return tuple(Axis.parse(name, named[name]) for name in names if name in named)


def resolve_spec(command: str, config: dict, flags: dict) -> SweepSpec:
    """Merge defaults, config-file values and explicit flags into a :class:`SweepSpec`."""
    merged = dict(DEFAULTS[command])
    merged.update({k: v for k, v in config.items() if k != "command"})
    if config.get("command") not in (None, command):
        raise UsageError(f"config is for {config['command']!r}, not {command!r}")
    grids = merged.pop("grid", "").split(";")
    if flags.get("grid"):
        grids = flags.pop("grid")
    merged.update({k: v for k, v in flags.items() if v is not None})
    try:
        return SweepSpec(
            command=command,
            axes=_axes(command, grids),
            omega_s=_floats(str(merged.get("omega_s", "0.1")), "omega_s"),
            omega_p=_floats(str(merged.get("omega_p", "0.5")), "omega_p"),
            n_particles=int(merged.get("n_particles", 5)),
            engine=str(merged.get("engine", "both")),
            branch=str(merged.get("branch", "up")),
            nmax=int(merged.get("nmax", 40)),
            dt=float(merged["dt"]) if merged.get("dt") not in (None, "") else None,
            workers=int(merged.get("workers", 1)),
            out=str(merged.get("out", "-")),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _check_spec(spec: SweepSpec):
    needs_one = spec.command in ("fock-histogram", "precision-scaling")
    if needs_one and len(spec.omega_p) != 1:
        raise UsageError(f"{spec.command} takes a single --omega-p")
    if spec.command != "precision-scaling" and not spec.omega_s and spec.command != "parity-scan":
        raise UsageError(f"{spec.command} needs --omega-s")
    if spec.command == "fock-histogram" and len(spec.omega_s) != 1:
        raise UsageError("fock-histogram takes a single --omega-s")
    if spec.command == "precision-scaling" and len(spec.omega_s) > 1:
        raise UsageError("precision-scaling takes at most one --omega-s")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ghz-sagnac", description="GHZ Sagnac interferometer sweeps")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--omega-s", dest="omega_s", help="rotation rate(s), comma separated, or 'auto'")
        p.add_argument("--omega-p", dest="omega_p", help="induced rate(s), comma separated")
        p.add_argument("--n-particles", dest="n_particles", type=int)
        p.add_argument("--grid", action="append", help="[name=]min:max:count[:log]; repeatable")
        p.add_argument("--engine", choices=ENGINES)
        p.add_argument("--branch", choices=("up", "down"))
        p.add_argument("--out", help="output CSV path, '-' for stdout")
        p.add_argument("--config", help="flat key=value file or a previous result table")
        p.add_argument("--workers", type=int)
        p.add_argument("--nmax", type=int)
        p.add_argument("--dt", type=float)
    st = sub.add_parser("selftest", help="run the invariant and oracle battery")
    st.add_argument("--nmax", type=int, default=40)
    st.add_argument("--dt", type=float, default=None)
    st.add_argument("--workers", type=int, default=2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            from .selftest import print_report, run_selftest

            results = run_selftest(n_max=args.nmax, dt=args.dt, workers=args.workers)
            print_report(results)
            return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC
        flags = {k: getattr(args, k) for k in CONFIG_KEYS if k != "command" and hasattr(args, k)}
        config = load_config(args.config) if args.config else {}
        spec = resolve_spec(args.command, config, flags)
        _check_spec(spec)
        table = run(spec)
        text = table.to_csv()
        if spec.out in ("-", ""):
            sys.stdout.write(text)
        else:
            Path(spec.out).write_text(text, encoding="utf-8")
        return EXIT_OK
    except (UsageError, DomainError, OSError) as exc:
        print(f"ghz-sagnac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"ghz-sagnac: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NumericError as exc:
        print(f"ghz-sagnac: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SagnacError as exc:
        print(f"ghz-sagnac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
