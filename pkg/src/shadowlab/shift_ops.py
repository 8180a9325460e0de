"""Bilateral weighted backward shifts (B_w x)_n = w_{n+1} x_{n+1} on truncated l^p(Z).

Products of consecutive weights telescope through a potential lambda with
log w_j = lambda_{j-1} - lambda_j, so

    log(w_k ... w_{k+n}) = lambda_{k-1} - lambda_{k+n}

and the shadowing conditions for shifts become the same extremal-ratio problem
as the measure conditions, with span n + 1 and one factor per weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotSplittable, WindowOverrun
from .measure_core import DEFAULT_DEPTH, DEFAULT_MARGIN, DEFAULT_WINDOW, MeasureSequence, \
    validate_measure_sequence
from .rates import (Classification, ConditionSpec, Kind, LogPair, LogTable, RateEstimate,
                    Tail, decide, estimate, extremes)

SHIFT_CONDITIONS = {
    "sup_all": ConditionSpec("sup_all", "sup", "all", span_offset=1),
    "inf_all": ConditionSpec("inf_all", "inf", "all", span_offset=1),
    # products w_{-k-n} ... w_{-k} with k >= 1
    "sup_neg": ConditionSpec("sup_neg", "sup", "left", span_offset=1, left_offset=2),
    # products w_k ... w_{k+n} with k >= 1
    "inf_pos": ConditionSpec("inf_pos", "inf", "right", span_offset=1),
}


class WeightGenerator:
    kind = "generator"

    def log_w(self, j) -> np.ndarray:
        raise NotImplementedError

    def potential(self) -> LogPair:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class ConstantWeights(WeightGenerator):
    w: float
    kind = "constant"

    def log_w(self, j):
        return np.full(np.shape(j), math.log(self.w))

    def potential(self):
        s = -math.log(self.w)
        lam = lambda j: s * np.asarray(j, dtype=float)
        return LogPair(lam, lam, (0, 0), Tail(s), Tail(s))

    def describe(self):
        return {"kind": self.kind, "w": self.w}


@dataclass(frozen=True)
class TwoSidedWeights(WeightGenerator):
    """w_j = neg for j <= 0 and pos for j >= 1."""

    neg: float
    pos: float
    kind = "two-sided"

    def log_w(self, j):
        j = np.asarray(j)
        return np.where(j >= 1, math.log(self.pos), math.log(self.neg))

    def potential(self):
        sl, sr = -math.log(self.neg), -math.log(self.pos)

        def lam(j):
            j = np.asarray(j, dtype=float)
            return np.where(j >= 0, sr * j, sl * j)

        return LogPair(lam, lam, (0, 0), Tail(sl), Tail(sr))

    def describe(self):
        return {"kind": self.kind, "neg": self.neg, "pos": self.pos}


@dataclass(frozen=True, eq=False)
class MeasureWeights(WeightGenerator):
    """w_j = (nu_{j-1} / nu_j)^(1/p) for a closed-form measure sequence."""

    nu: MeasureSequence
    p: float
    kind = "measure-derived"

    def _log_nu(self, k):
        return self.nu.generator.log_nu(k, self.nu.mu_W)

    def log_w(self, j):
        j = np.asarray(j)
        return (self._log_nu(j - 1) - self._log_nu(j)) / self.p

    def potential(self):
        src = self.nu.generator.pair(self.nu.mu_W)
        lam = lambda j: np.asarray(self._log_nu(j), dtype=float) / self.p
        scale = lambda t: Tail(t.slope / self.p, t.geometric, t.gap / self.p)
        return LogPair(lam, lam, src.core, scale(src.left), scale(src.right), src.extension)

    def describe(self):
        return {"kind": self.kind, "p": self.p, "measures": self.nu.generator.describe()}


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Positive weights w_j on [lo, hi]; a generator extends them to all of Z."""

    lo: int
    log_w: np.ndarray
    generator: WeightGenerator | None = None

    def __post_init__(self):
        if np.any(~np.isfinite(self.log_w)):
            raise ValueError("weights must be positive and finite")

    @classmethod
    def from_values(cls, w, lo: int) -> "WeightSequence":
        w = np.asarray(w, dtype=float)
        if np.any(~(w > 0)):
            raise ValueError("weights must be positive (moduli only)")
        return cls(int(lo), np.log(w))

    @classmethod
    def from_generator(cls, gen: WeightGenerator, N: int = DEFAULT_WINDOW) -> "WeightSequence":
        j = np.arange(-N, N + 1)
        return cls(-N, np.asarray(gen.log_w(j), dtype=float), gen)

    @classmethod
    def constant(cls, w: float, N: int = DEFAULT_WINDOW) -> "WeightSequence":
        return cls.from_generator(ConstantWeights(float(w)), N)

    @classmethod
    def two_sided(cls, neg: float, pos: float, N: int = DEFAULT_WINDOW) -> "WeightSequence":
        return cls.from_generator(TwoSidedWeights(float(neg), float(pos)), N)

    @property
    def hi(self) -> int:
        return self.lo + len(self.log_w) - 1

    @property
    def exact(self) -> bool:
        return self.generator is not None

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_w)

    def log_at(self, j) -> np.ndarray:
        j = np.asarray(j)
        if self.generator is not None:
            return np.asarray(self.generator.log_w(j), dtype=float)
        if j.size and (j.min() < self.lo or j.max() > self.hi):
            raise WindowOverrun(f"weights known on [{self.lo}, {self.hi}] only")
        return self.log_w[j - self.lo]

    def at(self, j) -> np.ndarray:
        return np.exp(self.log_at(j))

    def potential(self):
        """lambda as a closed-form pair, or tabulated over [lo - 1, hi]."""
        if self.generator is not None:
            return self.generator.potential()
        lam = np.concatenate([[0.0], -np.cumsum(self.log_w)])
        return LogTable(self.lo - 1, lam, lam)

    def tabulated(self) -> "WeightSequence":
        return WeightSequence(self.lo, self.log_w)


@dataclass(frozen=True, eq=False)
class LpVector:
    """Entries x_n for n in [lo, lo + len - 1], zero elsewhere."""

    p: float
    lo: int
    entries: np.ndarray

    @classmethod
    def basis(cls, k: int, p: float = 2.0) -> "LpVector":
        return cls(p, k, np.array([1.0]))

    @classmethod
    def zeros(cls, p: float, lo: int, hi: int) -> "LpVector":
        return cls(p, lo, np.zeros(hi - lo + 1))

    @classmethod
    def from_mapping(cls, mapping: dict, p: float = 2.0) -> "LpVector":
        if not mapping:
            return cls(p, 0, np.zeros(0))
        lo, hi = min(mapping), max(mapping)
        x = np.zeros(hi - lo + 1)
        for n, v in mapping.items():
            x[n - lo] = v
        return cls(p, lo, x)

    @property
    def hi(self) -> int:
        return self.lo + len(self.entries) - 1

    @property
    def window(self) -> tuple[int, int]:
        return self.lo, self.hi

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __getitem__(self, n: int) -> float:
        i = n - self.lo
        return float(self.entries[i]) if 0 <= i < len(self.entries) else 0.0

    def norm(self) -> float:
        if not len(self.entries):
            return 0.0
        return float(np.linalg.norm(self.entries, ord=self.p))

    def on(self, lo: int, hi: int) -> "LpVector":
        """Same vector viewed on [lo, hi]; entries outside must vanish."""
        out = np.zeros(max(0, hi - lo + 1))
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo:b - lo + 1] = self.entries[a - self.lo:b - self.lo + 1]
        outside = (self.indices < lo) | (self.indices > hi)
        if np.any(self.entries[outside] != 0.0):
            raise WindowOverrun(f"vector has mass outside [{lo}, {hi}]")
        return LpVector(self.p, lo, out)

    def _aligned(self, other: "LpVector"):
        if not len(self.entries):
            return other.lo, np.zeros_like(other.entries), other.entries
        if not len(other.entries):
            return self.lo, self.entries, np.zeros_like(self.entries)
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return lo, self.on(lo, hi).entries, other.on(lo, hi).entries

    def __add__(self, other: "LpVector") -> "LpVector":
        lo, a, b = self._aligned(other)
        return LpVector(self.p, lo, a + b)

    def __sub__(self, other: "LpVector") -> "LpVector":
        lo, a, b = self._aligned(other)
        return LpVector(self.p, lo, a - b)

    def __mul__(self, c: float) -> "LpVector":
        return LpVector(self.p, self.lo, self.entries * c)

    __rmul__ = __mul__

    def __neg__(self) -> "LpVector":
        return self * -1.0

    def masked(self, keep) -> "LpVector":
        """Coordinate projection onto the indices where ``keep(n)`` is true."""
        return LpVector(self.p, self.lo, np.where(keep(self.indices), self.entries, 0.0))

    def to_dict(self) -> dict:
        return {int(n): float(v) for n, v in zip(self.indices, self.entries) if v != 0.0}


def apply_shift(w: WeightSequence, x: LpVector) -> LpVector:
    if not len(x.entries):
        return x
    return LpVector(x.p, x.lo - 1, w.at(x.indices) * x.entries)


def apply_inverse(w: WeightSequence, x: LpVector) -> LpVector:
    if not len(x.entries):
        return x
    return LpVector(x.p, x.lo + 1, x.entries / w.at(x.indices + 1))


def _growth_estimate(w: WeightSequence, side: str, depth: int) -> RateEstimate:
    return estimate(SHIFT_CONDITIONS[side], w.potential(), depth)


def norm_growth(w: WeightSequence, n: int, side: str) -> float:
    """Extremal (w_k ... w_{k+n})^(1/(n+1)) over the k-range of ``side``.

    The root is taken over the number of factors, n + 1; the limits as n grows
    coincide with the 1/n normalization.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = SHIFT_CONDITIONS[side]
    span, lo, hi = spec.bounds(n)
    ex = extremes(w.potential(), span, lo, hi)
    value = ex.max if spec.direction == "sup" else ex.min
    return float(math.exp(value / spec.normalizer(n)))


def invertible(w: WeightSequence) -> bool:
    """0 < inf w and sup w < infinity (over Z for closed forms)."""
    src = w.potential()
    if isinstance(src, LogPair):
        return src.finite_slopes
    return bool(np.all(np.isfinite(w.log_w)))


def classify_shift(w: WeightSequence, depth: int = DEFAULT_DEPTH,
                   margin: float = DEFAULT_MARGIN) -> Classification:
    if not invertible(w):
        return Classification(Kind.INCONCLUSIVE, reason="UnboundedOperator")
    evidence = {side: _growth_estimate(w, side, depth) for side in SHIFT_CONDITIONS}
    return decide(evidence, "sup_all", "inf_all", "sup_neg", "inf_pos", margin,
                  hyperbolic=True)


def weights_from_measures(nu: MeasureSequence, p: float) -> WeightSequence:
    if not p >= 1:
        raise ValueError("p must be >= 1")
    validate_measure_sequence(nu)
    log_w = -np.diff(nu.log_nu) / p
    gen = MeasureWeights(nu, float(p)) if nu.generator is not None else None
    return WeightSequence(-nu.N + 1, log_w, gen)


@dataclass(frozen=True)
class IndexSet:
    """A set of integer coordinates: all, none, n < 0 or n >= 0."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("all", "none", "neg", "nonneg"):
            raise ValueError(f"unknown index set {self.kind!r}")

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n)
        if self.kind == "all":
            return np.ones(n.shape, dtype=bool)
        if self.kind == "none":
            return np.zeros(n.shape, dtype=bool)
        if self.kind == "neg":
            return n < 0
        return n >= 0

    def __contains__(self, n: int) -> bool:
        return bool(self(n))

    @property
    def empty(self) -> bool:
        return self.kind == "none"

    def __str__(self) -> str:
        return {"all": "all", "none": "empty", "neg": "{n < 0}", "nonneg": "{n >= 0}"}[self.kind]


ALL, NONE, NEG, NONNEG = IndexSet("all"), IndexSet("none"), IndexSet("neg"), IndexSet("nonneg")


def shift_splitting(w: WeightSequence, classification: Classification | None = None,
                    depth: int = DEFAULT_DEPTH, margin: float = DEFAULT_MARGIN
                    ) -> tuple[IndexSet, IndexSet]:
    """Coordinate splitting (stable M, unstable N) for a shadowing shift."""
    c = classification or classify_shift(w, depth, margin)
    if c.kind is Kind.CONTRACTION:
        return ALL, NONE
    if c.kind is Kind.DILATION:
        return NONE, ALL
    if c.kind is Kind.GENERALIZED_HYPERBOLIC:
        return NEG, NONNEG
    raise NotSplittable(f"classification is {c.kind.value}")
