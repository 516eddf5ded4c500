"""Command-line entry point: ``peridyn <subcommand> [--config FILE] [overrides]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import _kernels
from .config import ConfigError, load_spec
from .experiments import ResultTable, run_experiment
from .integrator import BlowupError

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP = 0, 2, 3

SUBCOMMANDS = {
    "info": None,
    "consistency": "consistency",
    "h-conv": "h-conv",
    "eps-conv": "eps-conv",
    "compare": "compare",
    "gap": "npd-lpd-gap",
    "stability": "stability",
    "run": "single-run",
}

# flag name -> config key
_FLAGS = (("eps", "eps"), ("h", "h"), ("p", "p"), ("dt", "dt"), ("T", "T"),
          ("out", "out"), ("model", "model"), ("ic", "ic"))


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="peridyn", description="1-D peridynamics experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value file")
        for flag, _ in _FLAGS:
            kw = {"choices": ("npd", "lpd", "elasto")} if flag == "model" else {}
            sp.add_argument(f"--{flag}", dest=f"opt_{flag}", **kw)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
        sp.add_argument("--allow-unstable", action="store_true",
                        help="warn instead of failing when dt exceeds the stable bound")
    return ap


def _overrides(args) -> dict[str, str]:
    items = {}
    for raw in args.set:
        if "=" not in raw:
            raise ConfigError(f"--set expects KEY=VALUE, got {raw!r}")
        k, v = raw.split("=", 1)
        items[k.strip()] = v.strip()
    for flag, key in _FLAGS:
        val = getattr(args, f"opt_{flag}")
        if val is not None:
            items[key] = val
    if args.allow_unstable:
        items["allow_unstable"] = "true"
    return items


def _info(spec) -> ResultTable:
    mat = spec.material()
    rows = [[k, v] for k, v in mat.describe().items()]
    rows.append(["backend", _kernels.BACKEND])
    rows.append(["threads", os.environ.get("PERIDYN_THREADS", "")])
    return ResultTable("info", ("key", "value"), rows, header=spec.echo())


def _emit(tables: list[ResultTable], out: str | None) -> None:
    if out is None:
        for t in tables:
            sys.stdout.write(t.to_csv())
        return
    os.makedirs(out, exist_ok=True)
    for t in tables:
        path = os.path.join(out, f"{t.name}.csv")
        t.to_csv(path)
        print(path)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = _overrides(args)
        kind = SUBCOMMANDS[args.command]
        if kind is not None:
            overrides["kind"] = kind
        spec = load_spec(args.config, overrides)
        tables = [_info(spec)] if kind is None else run_experiment(spec)
        _emit(tables, spec.out)
    except BlowupError as exc:
        print(f"peridyn: blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ConfigError, ValueError, TypeError, OSError) as exc:
        print(f"peridyn: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
