# lphard/commands/reduce.py
import argparse
import logging
from fractions import Fraction

from . import CommandOutput, CommandRouter, arg, rational, read_text
from ..errors import UsageError
from ..formats import transcript_json
from ..models import GadgetMode, OracleBudget, PipelineParams, ReductionOverrides, RunConfig
from ..reductions import fresh_seed, parse_dimacs, pipeline_sat_to_svp, stage_summary

router = CommandRouter("reduce", help="SAT -> set cover -> (A,G)-CVP -> SVP with an oracle decision")
log = logging.getLogger(__name__)


@router.command("sat-to-svp", help="run the full chain on a DIMACS formula", args=[
    arg("--in", dest="input", required=True, help="DIMACS CNF file"),
    arg("--p", type=rational, default=Fraction(3)),
    arg("--width", type=int, default=3),
    arg("--seed", type=int),
    arg("--ell", type=int),
    arg("--q-min", type=int),
    arg("--threshold-fraction", type=rational),
    arg("--n-dagger", type=int, default=4),
    arg("--s", type=rational, default=Fraction(1, 2)),
    arg("--gadget-mode", choices=[m.value for m in GadgetMode], default=GadgetMode.desk.value),
    arg("--rank-cap", type=int),
    arg("--unsafe-overrides", action="store_true",
        help="accept out-of-guarantee parameters (reduced ell/q/threshold, G < 1000 A)"),
])
def sat_to_svp(args: argparse.Namespace, run: RunConfig) -> CommandOutput:
    overrides = ReductionOverrides(
        ell=args.ell,
        q_min=args.q_min,
        threshold_fraction=args.threshold_fraction,
        allow_small_gap=args.unsafe_overrides,
    )
    if overrides.any and not args.unsafe_overrides:
        raise UsageError("--ell, --q-min and --threshold-fraction require --unsafe-overrides")
    formula = parse_dimacs(read_text(args.input), width=args.width)
    params = PipelineParams(
        gadget_mode=GadgetMode(args.gadget_mode),
        n_dagger=args.n_dagger,
        s=args.s,
        overrides=overrides,
        budget=OracleBudget.from_settings(rank_cap=args.rank_cap),
    )
    seed = args.seed if args.seed is not None else (run.seed if run.seed is not None else fresh_seed())
    result = pipeline_sat_to_svp(formula, args.p, params, seed)
    summary = stage_summary(result)
    log.info("sat-to-svp: %d/%d hits against threshold %d (rank %d)",
             summary["hits"], summary["ell"], summary["threshold"], summary["rank"])
    line = f"DECISION={result.decision.value} seed={seed}"
    return CommandOutput(line, transcript_json(result.transcript, summary))
