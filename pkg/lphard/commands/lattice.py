# lphard/commands/lattice.py
import argparse
from typing import Any, Tuple

import mpmath

from . import CommandOutput, CommandRouter, arg, rational, read_text
from ..errors import UsageError
from ..formats import LatticeDocument, basis_json, load_lattice, number_str
from ..lattice import count_primitive, dist_pow, lambda1_pow, sparsify_with_congruence
from ..models import OracleBudget, RunConfig, norm_exponent, pow_value, to_mpf

router = CommandRouter("lattice", help="lambda_1, dist, primitive counts and sparsification", shared=[
    arg("--in", dest="input", required=True, help="lattice JSON"),
    arg("--p", type=rational, help="overrides the document's p"),
    arg("--rank-cap", type=int),
])


def load(args: argparse.Namespace) -> Tuple[LatticeDocument, Any, OracleBudget]:
    doc = load_lattice(read_text(args.input))
    p = norm_exponent(args.p) if args.p is not None else doc.p
    if p is None:
        raise UsageError("no p given: pass --p or set it in the document")
    return doc, p, OracleBudget.from_settings(rank_cap=args.rank_cap)


def radius(args: argparse.Namespace, doc: LatticeDocument, p: Any) -> Any:
    if getattr(args, "r", None) is not None:
        return pow_value(args.r, p)
    if getattr(args, "r_pow", None) is not None:
        return args.r_pow
    if doc.radius_pow is None:
        raise UsageError("no radius given: pass --r/--r-pow or set it in the document")
    return doc.radius_pow


def _root_str(x_pow: Any, p: Any) -> str:
    return mpmath.nstr(to_mpf(x_pow) ** (1 / to_mpf(p)), 20)


@router.command("lambda1", help="shortest nonzero vector length")
def lambda1_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    doc, p, budget = load(args)
    value = lambda1_pow(doc.basis, p, budget)
    return CommandOutput(f"lambda1 = {_root_str(value, p)}",
                         {"lambda1_pow": number_str(value), "lambda1": _root_str(value, p)})


@router.command("dist", help="distance from the document's target")
def dist_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    doc, p, budget = load(args)
    if doc.target is None:
        raise UsageError("dist needs a target in the lattice document")
    value = dist_pow(doc.basis, doc.target, p, budget)
    return CommandOutput(f"dist = {_root_str(value, p)}",
                         {"dist_pow": number_str(value), "dist": _root_str(value, p)})


@router.command("count-primitive", help="primitive vectors within r, up to sign", args=[
    arg("--r", type=rational),
    arg("--r-pow", type=rational),
])
def count_primitive_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    doc, p, budget = load(args)
    r_pow = radius(args, doc, p)
    value = count_primitive(doc.basis, p, r_pow, budget)
    return CommandOutput(f"primitive = {value}", {"primitive": value, "r_pow": number_str(r_pow)})


@router.command("sparsify", help="random index-q sublattice", args=[
    arg("--q", type=int, required=True),
    arg("--seed", type=int, required=True),
])
def sparsify_cmd(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    doc = load_lattice(read_text(args.input))
    sparse = sparsify_with_congruence(doc.basis, args.q, args.seed)
    payload = {
        "q": sparse.q,
        "seed": args.seed,
        "congruence": list(sparse.congruence),
        "lattice": basis_json(sparse.basis),
    }
    return CommandOutput(f"congruence = {list(sparse.congruence)} mod {sparse.q}", payload)
