"""Dissipative systems described by their cell measures nu_k = mu(f^k(W)).

A system generated by a wandering set W is summarized by the two-sided
sequence of cell measures.  The shadowing conditions (contraction, dilation
and the split generalized hyperbolic condition) are growth-rate statements
about n-step ratios of this sequence; bounded distortion is a statement about
how sub-cells of W are transported relative to W itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (GeneratorMismatch, InconsistentPartition, NonPositiveMeasure,
                     NoWitness, UnboundedOperator)
from .rates import (Classification, ConditionSpec, Kind, LogPair, LogTable, RateEstimate,
                    Tail, decide, estimate)

DEFAULT_WINDOW = 256
DEFAULT_DEPTH = 64
DEFAULT_MARGIN = 0.05

CONDITIONS = {
    "HC": ConditionSpec("HC", "sup", "all"),
    "HD": ConditionSpec("HD", "inf", "all"),
    "GH_minus": ConditionSpec("GH_minus", "sup", "left"),
    "GH_plus": ConditionSpec("GH_plus", "inf", "right"),
}


@dataclass(frozen=True)
class SpaceParams:
    p: float
    mu_W: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not (self.mu_W > 0 and math.isfinite(self.mu_W)):
            raise ValueError(f"mu_W must be positive and finite, got {self.mu_W}")


class Generator:
    """Closed form for log nu_k, valid for every integer k."""

    kind = "generator"

    def log_nu(self, k, mu_W: float) -> np.ndarray:
        raise NotImplementedError

    def pair(self, mu_W: float) -> LogPair:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Geometric(Generator):
    """nu_k = nu_0 * r^k."""

    r: float
    kind = "geometric"

    def log_nu(self, k, mu_W):
        return math.log(mu_W) + np.asarray(k, dtype=float) * math.log(self.r)

    def pair(self, mu_W):
        f = lambda k: self.log_nu(k, mu_W)
        s = math.log(self.r)
        return LogPair(f, f, (0, 0), Tail(s), Tail(s))

    def describe(self):
        return {"kind": self.kind, "r": self.r}


@dataclass(frozen=True)
class ExpAbs(Generator):
    """nu_k = nu_0 * c^(-|k|)."""

    c: float
    kind = "exp-abs"

    def log_nu(self, k, mu_W):
        return math.log(mu_W) - np.abs(np.asarray(k, dtype=float)) * math.log(self.c)

    def pair(self, mu_W):
        f = lambda k: self.log_nu(k, mu_W)
        s = math.log(self.c)
        return LogPair(f, f, (0, 0), Tail(s), Tail(-s))

    def describe(self):
        return {"kind": self.kind, "c": self.c}


def generator_from_spec(spec: dict | None) -> Generator | None:
    if spec is None:
        return None
    kind = spec.get("kind", "tabulated")
    if kind == "tabulated":
        return None
    if kind == "geometric":
        return Geometric(float(spec["r"]))
    if kind == "exp-abs":
        return ExpAbs(float(spec["c"]))
    if kind in ("density", "density-derived"):
        from .density_rn import DensityDerived, density_from_spec
        return DensityDerived(density_from_spec(spec["density"]))
    raise ValueError(f"unknown generator kind {kind!r}")


@dataclass(frozen=True, eq=False)
class MeasureSequence:
    """nu_k for k in [-N, N], stored as logarithms.

    ``values`` keeps the raw input when the sequence was built from plain
    numbers, so validation can report the offending entry.
    """

    N: int
    log_nu: np.ndarray
    generator: Generator | None = None
    values: np.ndarray | None = None

    @classmethod
    def from_values(cls, nu, generator: Generator | None = None) -> "MeasureSequence":
        nu = np.asarray(nu, dtype=float)
        if nu.ndim != 1 or len(nu) % 2 == 0:
            raise ValueError("window must be symmetric about 0: expected 2N+1 values")
        with np.errstate(divide="ignore", invalid="ignore"):
            log_nu = np.log(nu)
        return cls(len(nu) // 2, log_nu, generator, nu)

    @classmethod
    def from_mapping(cls, mapping: dict, generator: Generator | None = None) -> "MeasureSequence":
        ks = sorted(mapping)
        N = max(abs(ks[0]), abs(ks[-1]))
        if ks != list(range(-N, N + 1)):
            raise ValueError("window must be the full symmetric integer range [-N, N]")
        return cls.from_values([mapping[k] for k in ks], generator)

    @classmethod
    def from_generator(cls, generator: Generator, N: int = DEFAULT_WINDOW,
                       mu_W: float = 1.0) -> "MeasureSequence":
        ks = np.arange(-N, N + 1)
        return cls(N, np.asarray(generator.log_nu(ks, mu_W), dtype=float), generator)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def nu(self) -> np.ndarray:
        return np.exp(self.log_nu)

    @property
    def mu_W(self) -> float:
        return float(math.exp(self.log_nu[self.N]))

    @property
    def exact(self) -> bool:
        return self.generator is not None

    def log_at(self, k) -> np.ndarray:
        return self.log_nu[np.asarray(k) + self.N]

    def source(self):
        """Closed-form pair when a generator is present, else the finite table."""
        if self.generator is not None:
            return self.generator.pair(self.mu_W)
        return LogTable(-self.N, self.log_nu, self.log_nu)

    def tabulated(self) -> "MeasureSequence":
        return MeasureSequence(self.N, self.log_nu, None, self.values)


def validate_measure_sequence(nu: MeasureSequence) -> MeasureSequence:
    if nu.N < 0 or len(nu.log_nu) != 2 * nu.N + 1:
        raise ValueError("window must be nonempty and symmetric about 0")
    bad = np.flatnonzero(~np.isfinite(nu.log_nu))
    if len(bad):
        i = int(bad[0])
        value = nu.values[i] if nu.values is not None else math.exp(nu.log_nu[i])
        raise NonPositiveMeasure(i - nu.N, value)
    if nu.generator is not None:
        expected = np.asarray(nu.generator.log_nu(nu.ks, nu.mu_W), dtype=float)
        # relative 1e-12 on nu is absolute 1e-12 on log nu
        off = np.flatnonzero(np.abs(expected - nu.log_nu) > 1e-12)
        if len(off):
            i = int(off[0])
            raise GeneratorMismatch(i - nu.N, math.exp(nu.log_nu[i]), math.exp(expected[i]))
    return nu


@dataclass(frozen=True, eq=False)
class SubCellMeasures:
    """mu(f^k(B_i)) for a finite partition {B_i} of W over the window [-N, N]."""

    cells: tuple
    base: np.ndarray            # mu(B_i)
    log_table: np.ndarray       # shape (len(cells), 2N+1)

    def __post_init__(self):
        if self.log_table.shape != (len(self.cells), self.log_table.shape[1]):
            raise ValueError("one row of measures per cell expected")
        if np.any(~(self.base > 0)) or np.any(~np.isfinite(self.log_table)):
            raise InconsistentPartition("all sub-cell measures must be strictly positive")

    @classmethod
    def from_table(cls, cells, base, table) -> "SubCellMeasures":
        table = np.asarray(table, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_table = np.log(table)
        return cls(tuple(cells), np.asarray(base, dtype=float), log_table)

    @classmethod
    def proportional(cls, nu: MeasureSequence, fractions, cells=None) -> "SubCellMeasures":
        """Sub-cells carrying fixed fractions of every cell (distortion K = 1)."""
        fractions = np.asarray(fractions, dtype=float)
        if abs(fractions.sum() - 1.0) > 1e-12:
            raise ValueError("fractions must sum to 1")
        cells = cells or tuple(f"B{i + 1}" for i in range(len(fractions)))
        log_table = np.log(fractions)[:, None] + nu.log_nu[None, :]
        return cls(tuple(cells), fractions * nu.mu_W, log_table)

    @property
    def N(self) -> int:
        return self.log_table.shape[1] // 2

    @property
    def table(self) -> np.ndarray:
        return np.exp(self.log_table)

    @property
    def mu_W(self) -> float:
        return float(self.base.sum())

    def index(self, cell) -> int:
        return self.cells.index(cell)

    def log_measure(self, i, k):
        return self.log_table[i, np.asarray(k) + self.N]

    def relabeled(self, order) -> "SubCellMeasures":
        order = list(order)
        return SubCellMeasures(tuple(self.cells[i] for i in order), self.base[order],
                               self.log_table[order])

    def scaled(self, factor: float) -> "SubCellMeasures":
        return SubCellMeasures(self.cells, self.base * factor, self.log_table + math.log(factor))


@dataclass(frozen=True)
class DistortionReport:
    K_hat: float
    H: float
    star_c: float

    def to_dict(self) -> dict:
        return {"K_hat": self.K_hat, "H": self.H, "star_c": self.star_c}


def check_bounded_distortion(sub: SubCellMeasures, nu: MeasureSequence) -> DistortionReport:
    if sub.N != nu.N:
        raise InconsistentPartition(f"sub-cell window {sub.N} != measure window {nu.N}")
    sums = np.logaddexp.reduce(sub.log_table, axis=0)
    if np.any(np.abs(np.expm1(sums - nu.log_nu)) > 1e-9):
        k = int(np.argmax(np.abs(sums - nu.log_nu))) - nu.N
        raise InconsistentPartition(f"sub-cell measures do not sum to nu_{k}")
    if abs(sub.mu_W / nu.mu_W - 1.0) > 1e-9:
        raise InconsistentPartition("base measures do not sum to mu(W)")
    log_ratio = (sub.log_table - nu.log_nu[None, :]
                 + math.log(nu.mu_W) - np.log(sub.base)[:, None])
    K_hat = max(1.0, float(np.exp(np.max(np.abs(log_ratio)))))
    H = K_hat ** 2
    step = np.diff(nu.log_nu)
    M = float(np.exp(np.max(np.abs(step)))) if len(step) else 1.0
    return DistortionReport(K_hat, H, H * M)


def eval_condition(cond: str, nu: MeasureSequence, depth: int = DEFAULT_DEPTH) -> RateEstimate:
    spec = CONDITIONS[cond]
    src = nu.source()
    if isinstance(src, LogPair) and not src.finite_slopes:
        raise UnboundedOperator("cell-measure ratios diverge in a tail")
    return estimate(spec, src, depth)


def operator_bounded(nu: MeasureSequence) -> bool:
    """One-step ratios nu_{k+-1}/nu_k bounded (T_f and its inverse bounded)."""
    if nu.generator is None:
        return bool(np.all(np.isfinite(np.diff(nu.log_nu))))
    return nu.generator.pair(nu.mu_W).finite_slopes


def classify_measures(nu: MeasureSequence, depth: int = DEFAULT_DEPTH,
                      margin: float = DEFAULT_MARGIN) -> Classification:
    validate_measure_sequence(nu)
    if not operator_bounded(nu):
        return Classification(Kind.INCONCLUSIVE, reason="UnboundedOperator")
    evidence = {name: eval_condition(name, nu, depth) for name in CONDITIONS}
    return decide(evidence, "HC", "HD", "GH_minus", "GH_plus", margin)


@dataclass(frozen=True)
class Witness:
    K: float
    t: float

    def __post_init__(self):
        if not (self.K > 0 and self.t > 0):
            raise ValueError("witness constants must be positive")


def _growth_base(rates: RateEstimate, t: float) -> float:
    # the "_plus" side of the split condition is measured against (1/t)^n
    return 1.0 / t if rates.condition.endswith(("plus", "c_pos")) else t


def find_witness(rates: RateEstimate, t: float) -> Witness:
    """Smallest K with a_n <= K t^n (sup-type) or a_n >= t^n / K (inf-type).

    Inf-type conditions on the positive side use the base 1/t, matching the
    UGH_minus class.  The witness is certified for n = 0..depth only; a
    monotone drift of the required constant over the last quartile is read as
    divergence.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if not rates.log_extremes:
        raise ValueError("rates carry no samples")
    base = _growth_base(rates, t)
    ns = np.array(sorted(rates.log_extremes))
    logs = np.array([rates.log_extremes[n] for n in ns])
    if rates.direction == "sup":
        c = logs - ns * math.log(base)
        beyond = rates.exact and rates.limit_estimate > base
    else:
        c = ns * math.log(base) - logs
        beyond = rates.exact and rates.limit_estimate < base
    if beyond:
        raise NoWitness(f"limit {rates.limit_estimate:.6g} is on the wrong side of {base:.6g}")
    q = max(2, len(c) // 4)
    tail = c[-q:]
    steps = np.diff(tail)
    if np.all(steps > 1e-12 * np.maximum(1.0, np.abs(tail[1:]))) and tail[-1] - tail[0] > 1e-9:
        raise NoWitness("required constant grows without bound across sampled n")
    return Witness(float(math.exp(c.max())), t)
