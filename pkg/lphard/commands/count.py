# lphard/commands/count.py
import argparse
import os
from typing import Any

from . import CommandOutput, CommandRouter, arg, one_of, rational, read_text
from ..counting import count_bounds, count_exact
from ..errors import UsageError
from ..formats import number_str
from ..models import RunConfig, ShiftedBallQuery, norm_exponent, pow_value

router = CommandRouter("count", help="certified N_p(Z^n, r, t)")


def parse_shift(value: str, n: int) -> Any:
    """A rational, or a file of n rationals separated by whitespace."""
    try:
        if not os.path.exists(value):
            return rational(value)
        tokens = read_text(value).split()
        if len(tokens) != n:
            raise UsageError(f"shift file {value} has {len(tokens)} entries, expected {n}")
        return tuple(rational(tok) for tok in tokens)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"--shift: {exc}")


@router.command(args=[
    arg("--p", type=rational, required=True),
    arg("--n", type=int, required=True),
    arg("--radius", type=rational),
    arg("--radius-pow", type=rational),
    arg("--shift", default="0"),
    arg("--exact", action="store_true"),
    arg("--resolution", type=rational),
])
def count(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    p = norm_exponent(args.p)
    which = one_of(args, "radius", "radius_pow")
    radius_pow = pow_value(args.radius, p) if which == "radius" else args.radius_pow
    shift = parse_shift(args.shift, args.n)
    if args.exact:
        bounds = count_exact(ShiftedBallQuery(p, args.n, radius_pow, shift))
    else:
        bounds = count_bounds(p, args.n, radius_pow, shift, args.resolution)
    payload = {
        "p": number_str(p),
        "n": args.n,
        "radius_pow": number_str(radius_pow),
        "lo": bounds.lo,
        "hi": bounds.hi,
        "exact": bounds.exact,
    }
    return CommandOutput(f"lo={bounds.lo} hi={bounds.hi}", payload,
                         (("lo", "hi"), [(str(bounds.lo), str(bounds.hi))]))
