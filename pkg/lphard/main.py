# lphard/main.py
import argparse
import logging
import sys
from typing import List, Optional, TextIO

from mpmath import mp

from . import __version__, config
from .commands import CommandOutput
from .commands.constants import router as constants_router
from .commands.count import router as count_router
from .commands.gadget import router as gadget_router
from .commands.lattice import router as lattice_router
from .commands.oracle import router as oracle_router
from .commands.reduce import router as reduce_router
from .errors import ToolkitError, UsageError
from .formats import dump_csv, dump_json
from .models import OutputFormat, RunConfig

log = logging.getLogger(__name__)

ROUTERS = [constants_router, count_router, lattice_router, gadget_router, reduce_router, oracle_router]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=None, help="working precision in bits")
    common.add_argument("--out", choices=[f.value for f in OutputFormat], default=OutputFormat.text.value)
    common.add_argument("--out-file", default=None)
    common.add_argument("--log-config", default=None)

    parser = argparse.ArgumentParser(prog="lphard", description="lp lattice hardness toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for router in ROUTERS:
        router.install(sub, parents=[common])
    return parser


def render(output: CommandOutput, fmt: OutputFormat, run: RunConfig) -> str:
    extra = {"subcommand": run.subcommand}
    if fmt is OutputFormat.json:
        return dump_json(output.payload, run.precision, extra)
    if fmt is OutputFormat.csv:
        if output.table is None:
            raise UsageError(f"{run.subcommand} has no CSV output")
        columns, rows = output.table
        return dump_csv(columns, rows, run.precision, extra)
    return output.text + "\n"


def emit(output: CommandOutput, run: RunConfig, stdout: TextIO) -> None:
    if run.output_path is None:
        stdout.write(render(output, run.output_format, run))
        return
    fmt = run.output_format
    if fmt is OutputFormat.text:
        # files always get a machine-readable document
        fmt = OutputFormat.json
    with open(run.output_path, "w", encoding="utf-8") as fh:
        fh.write(render(output, fmt, run))
    stdout.write(output.text + "\n")


def run(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Exit codes: 0 success, 2 precondition refusal, 1 internal error, 64 usage error."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else UsageError.status_code

    config.configure_logging(args.log_config)
    name = args.subcommand + (f" {args.action}" if getattr(args, "action", None) else "")
    run_cfg = RunConfig(
        subcommand=name,
        precision=int(args.precision or config.PRECISION_BITS),
        seed=getattr(args, "seed", None),
        output_format=OutputFormat(args.out),
        output_path=args.out_file,
        overrides={k: v for k, v in vars(args).items() if k != "handler" and v is not None},
    )
    saved = config.PRECISION_BITS
    config.PRECISION_BITS = run_cfg.precision
    try:
        with mp.workprec(run_cfg.precision):
            output = args.handler(args, run_cfg)
            emit(output, run_cfg, stdout)
        return 0
    except ToolkitError as exc:
        log.error("%s: %s", name, exc.detail)
        return exc.status_code
    except Exception:
        log.exception("%s: internal error", name)
        return 1
    finally:
        config.PRECISION_BITS = saved


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
