# lphard/commands/gadget.py
import argparse
from fractions import Fraction

import mpmath

from . import CommandOutput, CommandRouter, arg, rational
from ..formats import number_str, real_json
from ..gadgets import close_prob_mc, integer_gadget_params
from ..models import RunConfig

router = CommandRouter("gadget", help="integer gadget constants and sphere Monte-Carlo")


@router.command("params", help="t*, eps, beta for the integer gadget", args=[
    arg("--p", type=rational, required=True),
    arg("--delta", type=rational, default=Fraction(1, 2)),
])
def params_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    gp = integer_gadget_params(args.p, args.delta, prec=run.precision)
    payload = {
        "p": number_str(gp.p),
        "t_star": number_str(gp.t_star),
        "theta_ratio": real_json(gp.theta_ratio),
        "mu": real_json(gp.mu),
        "eps": number_str(gp.eps),
        "delta": number_str(gp.delta),
        "c_r_pow": number_str(gp.c_r_pow),
        "beta": real_json(gp.beta),
    }
    text = (f"t*={number_str(gp.t_star, 15)} ratio={mpmath.nstr(gp.theta_ratio.value, 15)} "
            f"eps={mpmath.nstr(gp.eps, 10)} beta={mpmath.nstr(gp.beta.value, 15)}")
    return CommandOutput(text, payload)


@router.command("mc-close", help="frequency of a random sphere point landing close to a fixed vector", args=[
    arg("--n", type=int, required=True),
    arg("--delta", type=float, required=True),
    arg("--eps", type=float, required=True),
    arg("--trials", type=int, default=100000),
    arg("--seed", type=int, default=0),
    arg("--report-only", action="store_true"),
])
def mc_close_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    v = [1.0] + [0.0] * (args.n - 1)
    res = close_prob_mc(v, args.delta, args.eps, args.trials, args.seed, report_only=args.report_only)
    payload = {
        "n": args.n,
        "frequency": res.frequency,
        "hits": res.hits,
        "trials": res.trials,
        "bound": number_str(res.bound, 15),
        "sigma": res.sigma,
        "violations": list(res.violations),
    }
    text = f"frequency={res.frequency:.6f} bound={mpmath.nstr(res.bound, 10)} sigma={res.sigma:.2e}"
    return CommandOutput(text, payload, (("frequency", "bound", "sigma"), [(res.frequency, res.bound, res.sigma)]))
