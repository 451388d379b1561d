# lphard/formats.py
"""
File formats: lattice and set-cover JSON in, transcript JSON and CSV out.

Every written document starts from `header()`. JSON is dumped with sorted keys
and without timestamps so two runs with the same seed are byte-identical.
"""
import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mpf

from . import __version__, config
from .errors import ParseError
from .models import (
    AgCvpInstance,
    Basis,
    HardnessConstants,
    RealApprox,
    ReductionTranscript,
    SetCoverInstance,
    as_fraction,
    norm_exponent,
    pow_value,
)


TOOL = "lphard"
CSV_DIGITS = 15


@dataclass(frozen=True)
class LatticeDocument:
    basis: Basis
    target: Optional[Tuple[Fraction, ...]]
    p: Any
    radius_pow: Optional[Any]
    shape: Optional[str] = None


# ---------- scalars ----------

def number_str(x: Any, digits: int = 30) -> str:
    if isinstance(x, RealApprox):
        return mpmath.nstr(x.value, digits)
    if isinstance(x, bool):
        return str(x).lower()
    frac = as_fraction(x)
    if frac is not None:
        return str(frac)
    return mpmath.nstr(mpf(x), digits)


def real_json(x: Any) -> Any:
    """RealApprox -> {value, err}; exact numbers -> rational strings."""
    if isinstance(x, RealApprox):
        return {"value": mpmath.nstr(x.value, 30), "err": mpmath.nstr(x.err, 5)}
    if x is None:
        return None
    return number_str(x)


def _rational(value: Any, where: str) -> Fraction:
    try:
        frac = as_fraction(value)
    except (ValueError, ZeroDivisionError):
        frac = None
    if frac is None:
        raise ParseError(f"{where}: {value!r} is not a rational number")
    return frac


# ---------- headers & writers ----------

def header(precision: Optional[int] = None, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    precision = int(precision or config.PRECISION_BITS)
    return {
        "tool": TOOL,
        "version": __version__,
        "precision": precision,
        "config_hash": config_hash_for(precision, extra),
    }


def config_hash_for(precision: int, extra: Optional[Dict[str, Any]] = None) -> str:
    payload = {"precision_bits": precision}
    if extra:
        payload.update(extra)
    return config.config_hash(payload)


def dump_json(payload: Dict[str, Any], precision: Optional[int] = None,
              extra: Optional[Dict[str, Any]] = None) -> str:
    doc = {"header": header(precision, extra), **payload}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def dump_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], precision: Optional[int] = None,
             extra: Optional[Dict[str, Any]] = None) -> str:
    h = header(precision, extra)
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={h[k]}" for k in sorted(h)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else number_str(cell, CSV_DIGITS) for cell in row])
    return buf.getvalue()


def constants_rows(results: Iterable[HardnessConstants]) -> List[List[Any]]:
    return [[c.p, c.w_p, c.tau_star, c.c_p if c.c_p is not None else ""] for c in results]


# ---------- lattice JSON ----------

def basis_json(b: Basis) -> Dict[str, Any]:
    return {"d": b.d, "n": b.n, "basis": [[str(x) for x in row] for row in b.rows]}


def lattice_json(b: Basis, target: Optional[Sequence[Any]] = None, p: Any = None,
                 radius_pow: Any = None, shape: Optional[str] = None) -> Dict[str, Any]:
    doc = basis_json(b)
    if target is not None:
        doc["target"] = [str(x) for x in target]
    if p is not None:
        doc["p"] = number_str(p)
    if radius_pow is not None:
        doc["r_pow"] = number_str(radius_pow)
    if shape:
        doc["shape"] = shape
    return doc


def load_lattice(text: str) -> LatticeDocument:
    """{"d", "n", "basis" (row-major rational strings), "target"?, "r" | "r_pow"?, "p"?, "shape"?}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno)
    for key in ("d", "n", "basis"):
        if key not in doc:
            raise ParseError(f"lattice document lacks {key!r}")
    d, n = int(doc["d"]), int(doc["n"])
    rows = doc["basis"]
    if len(rows) != d or any(len(row) != n for row in rows):
        raise ParseError(f"basis is not a {d} x {n} matrix")
    basis = Basis.from_rows([[_rational(x, "basis") for x in row] for row in rows])
    target = None
    if doc.get("target") is not None:
        target = tuple(_rational(x, "target") for x in doc["target"])
        if len(target) != d:
            raise ParseError(f"target has {len(target)} entries, expected {d}")
    p = norm_exponent(doc["p"]) if "p" in doc else None
    radius_pow = None
    if "r_pow" in doc:
        radius_pow = _rational(doc["r_pow"], "r_pow")
    elif "r" in doc:
        if p is None:
            raise ParseError("'r' needs 'p' to form r^p")
        radius_pow = pow_value(_rational(doc["r"], "r"), p)
    return LatticeDocument(basis, target, p, radius_pow, doc.get("shape"))


def load_setcover(text: str) -> SetCoverInstance:
    """{"k", "sets" (lists of 1-based elements), "d", "eta"?}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno)
    for key in ("k", "sets", "d"):
        if key not in doc:
            raise ParseError(f"set cover document lacks {key!r}")
    eta = _rational(doc.get("eta", 1), "eta")
    return SetCoverInstance(int(doc["k"]), tuple(frozenset(int(e) for e in s) for s in doc["sets"]),
                            int(doc["d"]), eta)


def setcover_json(esc: SetCoverInstance) -> Dict[str, Any]:
    return {
        "k": esc.universe_size,
        "sets": [sorted(s) for s in esc.sets],
        "d": esc.size_bound,
        "eta": str(esc.eta),
        "labels": list(esc.labels),
    }


# ---------- transcripts ----------

def agcvp_json(inst: AgCvpInstance) -> Dict[str, Any]:
    doc = lattice_json(inst.basis, inst.target, inst.p, inst.radius_pow)
    doc.update({
        "s": str(inst.s),
        "gamma_pow": number_str(inst.gamma_pow),
        "A": inst.A,
        "G": inst.G,
        "meta": {k: v if isinstance(v, (int, str, bool)) or v is None else number_str(v)
                 for k, v in inst.meta.items()},
    })
    return doc


def transcript_json(t: ReductionTranscript, summary: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "agcvp": agcvp_json(t.agcvp),
        "svp": lattice_json(t.svp.basis, None, t.svp.p, t.svp.radius_pow),
        "parameters": {
            "q": t.q,
            "ell": t.ell,
            "delta": number_str(t.delta),
            "M": number_str(t.M),
            "threshold": t.threshold,
            "guarantee": t.guarantee,
            "separated": t.separated,
        },
        "overrides": t.overrides.as_dict(),
        "seed": t.seed,
        "trials": [list(trial.congruence) for trial in t.trials],
    }
    if t.setcover is not None:
        doc["setcover"] = setcover_json(t.setcover)
    if summary is not None:
        doc["summary"] = summary
    return doc
