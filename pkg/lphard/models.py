# lphard/models.py
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import mp, mpf
from sympy import Matrix, Rational

from . import config
from .errors import DomainError, LatticeError

Real = Union[int, Fraction, float, Any]  # Any covers mpf
Scalar = Union[int, Fraction, Any]


# ---------- scalar helpers ----------

def to_mpf(x: Any) -> mpf:
    """Convert ints, Fractions, decimal strings, floats and RealApprox to mpf at the current precision."""
    if isinstance(x, RealApprox):
        return x.value
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    if isinstance(x, str):
        return to_mpf(Fraction(x)) if "/" in x else mpf(x)
    return mpf(x)


def as_fraction(x: Any) -> Optional[Fraction]:
    """Exact rational view of x, or None when x is not rational (mpf input)."""
    if isinstance(x, bool):
        raise DomainError("boolean is not a number")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # decimal-faithful: 0.3 means 3/10
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return None


def norm_exponent(p: Any) -> Union[int, mpf]:
    """Validate 1 <= p < inf. Integral p comes back as int so exact paths can use it."""
    frac = as_fraction(p)
    if frac is not None:
        if frac < 1:
            raise DomainError(f"norm exponent must satisfy p >= 1, got {p}")
        if frac.denominator == 1:
            return int(frac)
        return to_mpf(frac)
    value = mpf(p)
    if not mpmath.isfinite(value):
        raise DomainError("p = inf is not supported")
    if value < 1:
        raise DomainError(f"norm exponent must satisfy p >= 1, got {p}")
    if value == int(value):
        return int(value)
    return value


def canonical_shift(t: Any):
    """Map t to min(frac t, 1 - frac t) in [0, 1/2]. Rationals stay exact."""
    frac = as_fraction(t)
    if frac is not None:
        f = frac - math.floor(frac)
        return min(f, 1 - f)
    value = mpf(t)
    f = value - mpmath.floor(value)
    return min(f, 1 - f)


def pow_value(x: Any, p: Any):
    """|x|^p, exact for rational x and integer p."""
    frac = as_fraction(x)
    if frac is not None and isinstance(p, int):
        return abs(frac) ** p
    return abs(to_mpf(x)) ** to_mpf(p)


def _all_exact(values: Sequence[Any]) -> Optional[List[Fraction]]:
    fracs = [as_fraction(v) for v in values]
    return None if any(f is None for f in fracs) else fracs


def rsum(*values: Any):
    """Sum staying exact while every term is rational; mpf otherwise."""
    fracs = _all_exact(values)
    if fracs is not None:
        return sum(fracs, Fraction(0))
    return mpmath.fsum(to_mpf(v) for v in values)


def rmul(*values: Any):
    fracs = _all_exact(values)
    if fracs is not None:
        out = Fraction(1)
        for f in fracs:
            out *= f
        return out
    out = mpf(1)
    for v in values:
        out *= to_mpf(v)
    return out


def rle(a: Any, b: Any) -> bool:
    """a <= b, exact when both sides are rational."""
    fracs = _all_exact((a, b))
    if fracs is not None:
        return fracs[0] <= fracs[1]
    return to_mpf(a) <= to_mpf(b)


def rdiv(a: Any, b: Any):
    fracs = _all_exact((a, b))
    if fracs is not None:
        return fracs[0] / fracs[1]
    return to_mpf(a) / to_mpf(b)


# ---------- certified reals ----------

def _rounding(value: mpf) -> mpf:
    return abs(value) * mp.eps * 4


@dataclass(frozen=True)
class RealApprox:
    """value with an absolute error bound: the true number lies in [value - err, value + err]."""

    value: Any
    err: Any = mpf(0)

    def __post_init__(self):
        object.__setattr__(self, "value", to_mpf(self.value))
        object.__setattr__(self, "err", abs(to_mpf(self.err)))

    @classmethod
    def exact(cls, x: Any) -> "RealApprox":
        return cls(to_mpf(x), mpf(0))

    @staticmethod
    def _coerce(other: Any) -> "RealApprox":
        if isinstance(other, RealApprox):
            return other
        frac = as_fraction(other)
        if frac is not None:
            v = to_mpf(frac)
            return RealApprox(v, _rounding(v) if frac.denominator & (frac.denominator - 1) else 0)
        return RealApprox(mpf(other), 0)

    @property
    def lo(self) -> mpf:
        return self.value - self.err

    @property
    def hi(self) -> mpf:
        return self.value + self.err

    def contains(self, x: Any) -> bool:
        return self.lo <= to_mpf(x) <= self.hi

    def __float__(self) -> float:
        return float(self.value)

    def __neg__(self) -> "RealApprox":
        return RealApprox(-self.value, self.err)

    def __add__(self, other: Any) -> "RealApprox":
        o = self._coerce(other)
        v = self.value + o.value
        return RealApprox(v, self.err + o.err + _rounding(v))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "RealApprox":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "RealApprox":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "RealApprox":
        o = self._coerce(other)
        v = self.value * o.value
        err = abs(self.value) * o.err + abs(o.value) * self.err + self.err * o.err
        return RealApprox(v, err + _rounding(v))

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "RealApprox":
        o = self._coerce(other)
        if abs(o.value) <= o.err:
            raise DomainError("division by an interval containing zero")
        v = self.value / o.value
        err = (self.err + abs(v) * o.err) / (abs(o.value) - o.err)
        return RealApprox(v, err + _rounding(v))

    def __rtruediv__(self, other: Any) -> "RealApprox":
        return self._coerce(other) / self

    def __pow__(self, k: int) -> "RealApprox":
        if not isinstance(k, int) or k < 0:
            raise DomainError("RealApprox supports nonnegative integer powers only")
        v = self.value ** k
        a = abs(self.value)
        err = (a + self.err) ** k - a ** k
        return RealApprox(v, err + _rounding(v))

    def exp(self) -> "RealApprox":
        v = mpmath.exp(self.value)
        return RealApprox(v, v * mpmath.expm1(self.err) + _rounding(v))

    def log(self) -> "RealApprox":
        if self.lo <= 0:
            raise DomainError("log of an interval reaching zero")
        v = mpmath.log(self.value)
        return RealApprox(v, self.err / self.lo + _rounding(v))

    def log2(self) -> "RealApprox":
        return self.log() / RealApprox(mpmath.log(2), mp.eps)

    def __repr__(self) -> str:
        return f"RealApprox({mpmath.nstr(self.value, 20)} ± {mpmath.nstr(self.err, 3)})"


# ---------- theta engine ----------

@dataclass(frozen=True)
class ThetaPoint:
    """(tau > 0, shift) with the shift folded into [0, 1/2]."""

    tau: Any
    shift: Any

    def __post_init__(self):
        if to_mpf(self.tau) <= 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "shift", canonical_shift(self.shift))


@dataclass(frozen=True)
class HardnessConstants:
    p: Any
    w_p: RealApprox
    tau_star: RealApprox
    c_p: Optional[RealApprox]

    @property
    def c_p_defined(self) -> bool:
        return self.c_p is not None


@dataclass(frozen=True)
class ThetaBound:
    bound: RealApprox
    tau: Optional[Any]
    limiting: bool = False


@dataclass(frozen=True)
class SandwichReport:
    p: Any
    tau: Any
    n: int
    radius_pow: Fraction
    exact: int
    lower: RealApprox
    upper: RealApprox
    best_delta: Optional[Any]
    log_gap: mpf

    @property
    def holds(self) -> bool:
        return self.lower.lo <= self.exact <= self.upper.hi


# ---------- integer counting ----------

@dataclass(frozen=True)
class CountBounds:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.lo > self.hi:
            raise DomainError(f"invalid count interval [{self.lo}, {self.hi}]")

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, count: int) -> bool:
        return self.lo <= count <= self.hi


@dataclass(frozen=True)
class ShiftedBallQuery:
    """N_p(Z^n, r, t): radius carried as r^p, shift as a scalar or an explicit vector."""

    p: Any
    n: int
    radius_pow: Any
    shift: Any = 0

    def __post_init__(self):
        object.__setattr__(self, "p", norm_exponent(self.p))
        if self.n < 1:
            raise DomainError(f"dimension must be >= 1, got {self.n}")
        frac = as_fraction(self.radius_pow)
        if frac is not None:
            object.__setattr__(self, "radius_pow", frac)
        if to_mpf(self.radius_pow) < 0:
            raise DomainError("radius_pow must be nonnegative")
        if isinstance(self.shift, (list, tuple)):
            if len(self.shift) != self.n:
                raise DomainError(f"shift vector has {len(self.shift)} entries, expected {self.n}")
            object.__setattr__(self, "shift", tuple(self.shift))

    @classmethod
    def from_radius(cls, p: Any, n: int, r: Any, shift: Any = 0) -> "ShiftedBallQuery":
        p = norm_exponent(p)
        frac = as_fraction(r)
        if frac is not None and isinstance(p, int):
            return cls(p, n, frac ** p, shift)
        return cls(p, n, to_mpf(r) ** to_mpf(p), shift)

    @property
    def shifts(self) -> Tuple[Any, ...]:
        if isinstance(self.shift, tuple):
            return tuple(canonical_shift(t) for t in self.shift)
        return (canonical_shift(self.shift),) * self.n


# ---------- lattices ----------

def _sympy_matrix(rows: Sequence[Sequence[Fraction]]) -> Matrix:
    return Matrix([[Rational(x.numerator, x.denominator) for x in row] for row in rows])


@dataclass(frozen=True)
class Basis:
    """d x n rational matrix stored by columns; columns are linearly independent."""

    d: int
    columns: Tuple[Tuple[Fraction, ...], ...]
    checked: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        cols = tuple(tuple(Fraction(x) for x in col) for col in self.columns)
        object.__setattr__(self, "columns", cols)
        for col in cols:
            if len(col) != self.d:
                raise LatticeError(f"column of length {len(col)} in a basis of dimension {self.d}")
        if len(cols) > self.d:
            raise LatticeError(f"rank {len(cols)} exceeds ambient dimension {self.d}")
        if self.checked and cols:
            rank = _sympy_matrix(self.rows).rank()
            if rank != len(cols):
                raise LatticeError(f"basis columns are linearly dependent (rank {rank} < {len(cols)})")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]], checked: bool = True) -> "Basis":
        rows = [[as_fraction(x) for x in row] for row in rows]
        d = len(rows)
        n = len(rows[0]) if rows else 0
        if any(len(row) != n for row in rows):
            raise LatticeError("ragged basis rows")
        return cls(d, tuple(tuple(rows[i][j] for i in range(d)) for j in range(n)), checked)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Any]], d: Optional[int] = None,
                     checked: bool = True) -> "Basis":
        cols = tuple(tuple(as_fraction(x) for x in c) for c in columns)
        if d is None:
            if not cols:
                raise LatticeError("dimension required for an empty basis")
            d = len(cols[0])
        return cls(d, cols, checked)

    @classmethod
    def identity(cls, n: int) -> "Basis":
        return cls(n, tuple(tuple(Fraction(int(i == j)) for i in range(n)) for j in range(n)), False)

    @property
    def n(self) -> int:
        return len(self.columns)

    @property
    def rows(self) -> List[List[Fraction]]:
        return [[col[i] for col in self.columns] for i in range(self.d)]

    def combine(self, coefficients: Sequence[int]) -> Tuple[Fraction, ...]:
        out = [Fraction(0)] * self.d
        for a, col in zip(coefficients, self.columns):
            if a:
                for i, x in enumerate(col):
                    if x:
                        out[i] += a * x
        return tuple(out)


@dataclass(frozen=True)
class LatticePoint:
    coefficients: Tuple[int, ...]
    vector: Tuple[Fraction, ...]


@dataclass(frozen=True)
class CvpInstance:
    basis: Basis
    target: Tuple[Fraction, ...]
    radius_pow: Any
    p: Any
    shape: Optional[str] = None

    def __post_init__(self):
        if len(self.target) != self.basis.d:
            raise LatticeError(f"target has {len(self.target)} entries, basis dimension is {self.basis.d}")
        object.__setattr__(self, "target", tuple(as_fraction(x) for x in self.target))
        object.__setattr__(self, "p", norm_exponent(self.p))


@dataclass(frozen=True)
class SvpInstance:
    basis: Basis
    radius_pow: Any
    p: Any

    def __post_init__(self):
        if to_mpf(self.radius_pow) <= 0:
            raise LatticeError("SVP radius must be positive")
        object.__setattr__(self, "p", norm_exponent(self.p))


@dataclass(frozen=True)
class AgCvpInstance:
    """(A,G)-CVP: YES when N_p(L, r, t) >= G, NO when the annoying count is <= A."""

    basis: Basis
    target: Tuple[Fraction, ...]
    p: Any
    radius_pow: Any
    s: Fraction
    gamma_pow: Any
    A: int
    G: int
    meta: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if len(self.target) != self.basis.d:
            raise LatticeError("target dimension does not match the basis")
        if to_mpf(self.radius_pow) <= 0 or self.s <= 0:
            raise LatticeError("r and s must be positive")
        if to_mpf(self.gamma_pow) < 1:
            raise LatticeError("gamma must be >= 1")

    @property
    def r(self) -> mpf:
        return to_mpf(self.radius_pow) ** (1 / to_mpf(self.p))

    @property
    def gamma(self) -> mpf:
        return to_mpf(self.gamma_pow) ** (1 / to_mpf(self.p))

    @property
    def lifted_radius_pow(self):
        return rsum(self.radius_pow, pow_value(self.s, self.p))

    @property
    def separated(self) -> bool:
        """G > A: only then can the sparsified SVP answers tell YES from NO."""
        return self.G > self.A


@dataclass(frozen=True)
class Sparsification:
    basis: Basis
    congruence: Tuple[int, ...]
    q: int
    coefficients: Tuple[Tuple[int, ...], ...]  # columns of U, basis = B U


@dataclass(frozen=True)
class SurvivalStats:
    hits: int
    trials: int
    probability: float
    n_short: int
    lower: float
    upper: float
    sigma: float
    guarantee_applies: bool
    violations: Tuple[str, ...] = ()

    def within_bounds(self, k: float = 3.0) -> bool:
        return self.lower - k * self.sigma <= self.probability <= self.upper + k * self.sigma


# ---------- oracles ----------

class Decision(enum.Enum):
    yes = "YES"
    no = "NO"


@dataclass(frozen=True)
class OracleBudget:
    rank_cap: int
    coefficient_box: int
    seconds: Optional[float] = None

    def __post_init__(self):
        if self.rank_cap <= 0 or self.coefficient_box <= 0:
            raise DomainError("oracle budget limits must be positive")
        if self.seconds is not None and self.seconds <= 0:
            raise DomainError("oracle time cap must be positive")

    @classmethod
    def from_settings(cls, **overrides: Any) -> "OracleBudget":
        values = {
            "rank_cap": config.RANK_CAP,
            "coefficient_box": config.COEFF_BOX,
            "seconds": config.ORACLE_SECONDS or None,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class CoverSearchResult:
    witness: Optional[Tuple[int, ...]]  # set indices (0-based)
    exact_size: Optional[int]
    min_cover_size: Optional[int]


# ---------- reductions ----------

@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: Tuple[Tuple[int, ...], ...]
    width: int
    duplicates: Tuple[Tuple[int, int], ...] = ()  # (clause number, literal) pairs removed while parsing

    def occurrences(self, literal: int) -> Tuple[int, ...]:
        """1-based indices of the clauses containing the literal."""
        return tuple(i + 1 for i, clause in enumerate(self.clauses) if literal in clause)

    @property
    def occurrence_cap(self) -> int:
        counts: Dict[int, int] = {}
        for clause in self.clauses:
            for lit in clause:
                counts[lit] = counts.get(lit, 0) + 1
        return max(counts.values(), default=0)

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any((lit > 0) == assignment[abs(lit) - 1] for lit in clause) for clause in self.clauses)


@dataclass(frozen=True)
class SetCoverInstance:
    universe_size: int
    sets: Tuple[FrozenSet[int], ...]
    size_bound: int
    eta: Fraction = Fraction(1)
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        for s in self.sets:
            if not s:
                raise DomainError("set cover instance contains an empty set")
            if min(s) < 1 or max(s) > self.universe_size:
                raise DomainError(f"set {sorted(s)} leaves the universe 1..{self.universe_size}")
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def m(self) -> int:
        return len(self.sets)


@dataclass(frozen=True)
class ReductionOverrides:
    ell: Optional[int] = None
    q_min: Optional[int] = None
    threshold_fraction: Optional[Fraction] = None
    allow_small_gap: bool = False

    @property
    def any(self) -> bool:
        return (self.ell is not None or self.q_min is not None
                or self.threshold_fraction is not None or self.allow_small_gap)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "ell": self.ell,
            "q_min": self.q_min,
            "threshold_fraction": None if self.threshold_fraction is None else str(self.threshold_fraction),
            "allow_small_gap": self.allow_small_gap,
        }


@dataclass(frozen=True)
class SparsifiedTrial:
    index: int
    congruence: Tuple[int, ...]


# ---------- gadgets ----------

class GadgetMode(enum.Enum):
    lemma = "lemma"
    desk = "desk"


@dataclass(frozen=True)
class GadgetParams:
    p: Any
    t_star: Any
    eps: mpf
    delta: mpf
    c_r_pow: mpf
    beta: RealApprox
    theta_ratio: RealApprox
    mu: RealApprox

    @property
    def c_r(self) -> mpf:
        return self.c_r_pow ** (1 / to_mpf(self.p))


@dataclass(frozen=True)
class GadgetScaling:
    mode: GadgetMode
    p: Any
    alpha: Fraction
    alpha_pow: Any
    r_pow: Any
    s: Fraction
    gamma_pow: Any
    n_dagger: int
    c_dagger: Any
    eta: Fraction
    d: int
    m: Optional[int]
    t_star: Fraction
    violations: Tuple[str, ...] = ()

    @property
    def r_star_pow(self):
        return rmul(self.gamma_pow, rsum(self.r_pow, pow_value(self.s, self.p)))


@dataclass(frozen=True)
class GadgetInequality:
    n_dagger: int
    lhs_hi: mpf
    rhs_lo: mpf
    holds: bool
    center_count_hi: int
    close_count_lo: int


@dataclass(frozen=True)
class CloseProbability:
    frequency: float
    hits: int
    trials: int
    bound: mpf
    sigma: float
    violations: Tuple[str, ...] = ()


@dataclass(frozen=True)
class LocalDensityResult:
    shift: Tuple[Fraction, ...]
    count: int
    reference_count: int
    bound: mpf
    samples: int
    report_only: bool


@dataclass(frozen=True)
class ChainResult:
    index: Optional[int]
    radii: Tuple[Any, ...]
    counts: Tuple[int, ...]
    ratio_threshold: mpf
    certificate: Optional[str] = None


# ---------- cli ----------

class OutputFormat(enum.Enum):
    json = "json"
    csv = "csv"
    text = "text"


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    precision: int
    seed: Optional[int]
    output_format: OutputFormat
    output_path: Optional[str]
    overrides: Dict[str, Any] = field(default_factory=dict, hash=False)


def fractions_of(values: Iterable[Any]) -> Tuple[Fraction, ...]:
    out = []
    for v in values:
        frac = as_fraction(v)
        if frac is None:
            raise LatticeError(f"expected a rational entry, got {v!r}")
        out.append(frac)
    return tuple(out)


# ---------- reduction transcripts ----------

@dataclass(frozen=True)
class ReductionTranscript:
    """Everything needed to replay a sparsification run: instances, parameters, congruences and seed."""

    agcvp: AgCvpInstance
    svp: SvpInstance
    trials: Tuple[SparsifiedTrial, ...]
    q: int
    ell: int
    delta: Any
    M: Any
    threshold: int
    guarantee: bool
    seed: int
    overrides: ReductionOverrides = ReductionOverrides()
    setcover: Optional[SetCoverInstance] = None

    def __post_init__(self):
        if self.threshold != int(mpmath.ceil(to_mpf(rmul(self.delta, self.ell)))):
            raise DomainError(f"threshold {self.threshold} is not ceil(delta * ell)")
        if len(self.trials) != self.ell:
            raise DomainError(f"{len(self.trials)} trials recorded for ell = {self.ell}")

    def svp_instance(self, i: int) -> SvpInstance:
        from .lattice import sublattice_from_congruence

        sparse = sublattice_from_congruence(self.svp.basis, self.trials[i].congruence, self.q)
        return SvpInstance(sparse.basis, self.svp.radius_pow, self.svp.p)

    @property
    def separated(self) -> bool:
        return self.agcvp.separated


@dataclass(frozen=True)
class EmbeddingResult:
    basis: Basis
    m: int
    normalizer: float
    distortion_lo: float
    distortion_hi: float
    samples: int


@dataclass(frozen=True)
class PipelineParams:
    gadget_mode: GadgetMode = GadgetMode.desk
    n_dagger: int = 4
    s: Fraction = Fraction(1, 2)
    delta_target: Fraction = Fraction(1, 2)
    eta_prime: Fraction = Fraction(7, 8)
    max_doublings: int = 8
    overrides: ReductionOverrides = ReductionOverrides()
    budget: Optional[OracleBudget] = None


@dataclass(frozen=True)
class PipelineResult:
    formula: CnfFormula
    setcover: SetCoverInstance
    scaling: GadgetScaling
    transcript: ReductionTranscript
    decision: Decision
    hits: int

    @property
    def rank(self) -> int:
        return self.transcript.svp.basis.n
