# lphard/commands/oracle.py
import argparse

from . import CommandOutput, CommandRouter, arg, rational, read_text
from .lattice import load, radius
from ..errors import UsageError
from ..formats import load_setcover
from ..oracles import cvp_decide, exact_cover_search, svp_decide
from ..models import RunConfig

router = CommandRouter("oracle", help="brute-force SVP, CVP and exact set cover")

LATTICE_ARGS = [
    arg("--in", dest="input", required=True, help="lattice JSON"),
    arg("--p", type=rational),
    arg("--r", type=rational),
    arg("--r-pow", type=rational),
    arg("--rank-cap", type=int),
]


@router.command("svp", help="is lambda_1 <= r?", args=LATTICE_ARGS)
def svp_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    doc, p, budget = load(args)
    decision = svp_decide(doc.basis, p, radius(args, doc, p), budget)
    return CommandOutput(decision.value, {"decision": decision.value})


@router.command("cvp", help="is dist(t, L) <= r?", args=LATTICE_ARGS)
def cvp_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    doc, p, budget = load(args)
    if doc.target is None:
        raise UsageError("cvp needs a target in the lattice document")
    decision = cvp_decide(doc.basis, doc.target, p, radius(args, doc, p), budget)
    return CommandOutput(decision.value, {"decision": decision.value})


@router.command("cover", help="minimal exact set cover", args=[
    arg("--in", dest="input", required=True, help="set cover JSON"),
    arg("--size-cap", type=int),
])
def cover_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    esc = load_setcover(read_text(args.input))
    cap = args.size_cap if args.size_cap is not None else esc.size_bound
    res = exact_cover_search(esc, cap)
    payload = {
        "witness": None if res.witness is None else [i + 1 for i in res.witness],
        "exact_size": res.exact_size,
        "min_cover_size": res.min_cover_size,
        "size_cap": cap,
    }
    text = "NO" if res.witness is None else f"YES sets={payload['witness']}"
    return CommandOutput(text, payload)
