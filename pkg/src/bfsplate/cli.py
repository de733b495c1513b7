"""Command line entry point: ``bfsplate {converge,run,info}``.

Exit status is 0 on success, 2 for usage or configuration errors (nothing is
written), 1 when the numerics fail.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .cases import CASES, get_case
from .convergence import run_study
from .mesh import ConfigurationError
from .scenarios import ConfigError, SolverFailure, info_lines, load_config, load_mesh_config, run_scenario
from .time_schemes import SCHEMES

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
BUILTIN_PREFIX = "builtin:"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


class _UsageError(Exception):
    pass


def bundled_configs() -> list[str]:
    root = resources.files("bfsplate") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def resolve_config(name: str) -> Path:
    """A path, or ``builtin:NAME`` for one of the shipped configs."""
    if name.startswith(BUILTIN_PREFIX):
        stem = name[len(BUILTIN_PREFIX):]
        if stem not in bundled_configs():
            raise ConfigError(f"no bundled config {stem!r}; available: {', '.join(bundled_configs())}")
        return Path(str(resources.files("bfsplate") / "configs" / f"{stem}.ini"))
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"{name}: no such config file")
    return path


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bfsplate", description="Clamped-plate wave solver with BFS elements.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("converge", help="convergence study against a manufactured solution")
    c.add_argument("--scheme", required=True, choices=SCHEMES)
    c.add_argument("--levels", type=int, default=4, help="number of levels, starting at 0")
    c.add_argument("--case", default="fct2", choices=sorted(CASES))
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--tau0", type=float, default=0.1)
    c.add_argument("--n0", type=int, default=5, help="cells per side on level 0")
    c.add_argument("--quiet", action="store_true")

    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("--config", required=True, help=f"config path or {BUILTIN_PREFIX}NAME")
    r.add_argument("--out", required=True, help="output directory")

    i = sub.add_parser("info", help="dof and nonzero counts of every scheme")
    i.add_argument("--config", required=True, help=f"config path or {BUILTIN_PREFIX}NAME")

    sub.add_parser("configs", help="list bundled configs")
    return p


def _converge(args, out, err) -> int:
    if args.levels < 2:
        raise _UsageError("converge: --levels must be at least 2")
    if args.tau0 <= 0 or args.n0 < 1:
        raise _UsageError("converge: --tau0 and --n0 must be positive")
    case = get_case(args.case)
    log = None if args.quiet else (lambda msg: print(msg, file=err, flush=True))
    table = run_study(args.scheme, case, args.levels, tau0=args.tau0, n0=args.n0, log=log)
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    stem = f"eoc_{args.scheme}_{args.case}"
    with open(dest / f"{stem}.csv", "w", newline="\n") as fh:
        fh.write(table.to_csv())
    with open(dest / f"{stem}.txt", "w", newline="\n") as fh:
        fh.write(table.to_text())
    out.write(table.to_text())
    return EXIT_OK


def _run(args, out, err) -> int:
    cfg = load_config(resolve_config(args.config))
    res = run_scenario(cfg, args.out)
    out.write(f"{cfg.scheme}: N = {cfg.N}, {cfg.nx}x{cfg.ny} cells, wrote {len(res.files)} files to {args.out}\n")
    return EXIT_OK


def _info(args, out, err) -> int:
    mesh, coef = load_mesh_config(resolve_config(args.config))
    out.write("\n".join(info_lines(mesh, coef)) + "\n")
    return EXIT_OK


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(parser.format_usage().rstrip(), file=err)
        print(exc, file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.command == "configs":
            out.write("\n".join(bundled_configs()) + "\n")
            return EXIT_OK
        return {"converge": _converge, "run": _run, "info": _info}[args.command](args, out, err)
    except _UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except (ConfigError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
