# lphard/commands/constants.py
import argparse
import logging
from fractions import Fraction
from typing import List

import mpmath

from . import CommandOutput, CommandRouter, arg, one_of, rational
from ..errors import UsageError
from ..formats import constants_rows, real_json
from ..models import RunConfig
from ..theta import find_p0, sweep_constants

router = CommandRouter("constants", help="W_p, C_p and the threshold p0")
log = logging.getLogger(__name__)

COLUMNS = ("p", "W_p", "tau_star", "C_p")


def parse_sweep(spec: str) -> List[Fraction]:
    """'lo:hi:step' -> [lo, lo + step, ..., <= hi]."""
    try:
        lo, hi, step = (Fraction(x) for x in spec.split(":"))
    except ValueError:
        raise UsageError(f"--sweep expects lo:hi:step, got {spec!r}")
    if step <= 0 or hi < lo:
        raise UsageError("--sweep needs step > 0 and lo <= hi")
    out, k = [], 0
    while lo + k * step <= hi:
        out.append(lo + k * step)
        k += 1
    return out


@router.command(args=[
    arg("--p", type=rational, help="single exponent"),
    arg("--p0", action="store_true", help="solve W_p = 2"),
    arg("--sweep", metavar="LO:HI:STEP"),
    arg("--workers", type=int, default=1),
])
def constants(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    mode = one_of(args, "p", "p0", "sweep")
    if mode == "p0":
        p0 = find_p0(run.precision)
        return CommandOutput(f"p0 = {mpmath.nstr(p0.value, 15)}", {"p0": real_json(p0)})

    ps = [args.p] if mode == "p" else parse_sweep(args.sweep)
    log.debug("constants for %d exponents with %d workers", len(ps), args.workers)
    results = sweep_constants(ps, workers=args.workers, prec=run.precision)
    rows = constants_rows(results)
    payload = {"constants": [dict(zip(COLUMNS, (real_json(x) if x != "" else None for x in row))) for row in rows]}
    text = "\n".join(
        f"p={r.p} W_p={mpmath.nstr(r.w_p.value, 15)} "
        f"C_p={mpmath.nstr(r.c_p.value, 15) if r.c_p is not None else 'undefined'}"
        for r in results
    )
    return CommandOutput(text, payload, (COLUMNS, rows))
