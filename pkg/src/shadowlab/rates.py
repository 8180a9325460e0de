"""Extremal n-step log-ratios of two-sided sequences and the verdicts built on them.

Each criterion (measure conditions, Radon-Nikodym envelope conditions and the
weighted shift conditions) reduces to the same computation:

    ext_{lo(n) <= k <= hi(n)}  upper(k) - lower(k + span(n))

divided by a normalizer ~ n, where ``upper``/``lower`` are log-sequences
(log nu twice, log M and log m, or minus the prefix sums of log w).

Two sources are supported:

* ``LogPair``: closed forms valid for every integer k, with a finite core and
  a tail model on each side.  Geometric tails (exactly affine log-values beyond
  the core) make the sup/inf over an unbounded k-range a finite enumeration.
  Convergent tails are scanned over an extended range and closed with their
  limiting value.
* ``LogTable``: finitely many tabulated values.  The k-range shrinks with n and
  extrema that sit on a truncated edge are counted as boundary hits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import WindowExhausted

INF = math.inf


@dataclass(frozen=True)
class Tail:
    """Asymptotic model of a log-sequence on one side.

    ``slope`` is the limit of the increments ``s(k+1) - s(k)``.  When
    ``geometric`` is true the increments equal ``slope`` exactly beyond the core.
    ``gap`` is the limit of ``upper(k) - lower(k)`` along the tail and is only
    consulted for non-geometric tails.
    """

    slope: float
    geometric: bool = True
    gap: float = 0.0


@dataclass(frozen=True)
class LogPair:
    upper: Callable[[np.ndarray], np.ndarray]
    lower: Callable[[np.ndarray], np.ndarray]
    core: tuple[int, int]
    left: Tail
    right: Tail
    extension: int = 4096

    def swapped(self) -> "LogPair":
        return LogPair(self.lower, self.upper, self.core,
                       Tail(self.left.slope, self.left.geometric, -self.left.gap),
                       Tail(self.right.slope, self.right.geometric, -self.right.gap),
                       self.extension)

    @property
    def finite_slopes(self) -> bool:
        return math.isfinite(self.left.slope) and math.isfinite(self.right.slope)


@dataclass(frozen=True)
class LogTable:
    k0: int
    upper: np.ndarray
    lower: np.ndarray

    @property
    def k1(self) -> int:
        return self.k0 + len(self.lower) - 1


@dataclass(frozen=True)
class Extremes:
    min: float
    max: float
    edge_min: bool = False
    edge_max: bool = False


def _pick(values: np.ndarray, edge_mask: np.ndarray) -> tuple[float, float, bool, bool]:
    vmin = float(values.min())
    vmax = float(values.max())
    edge_min = edge_max = False
    if edge_mask.any() and (~edge_mask).any():
        inner = values[~edge_mask]
        tol = 1e-12
        edge_max = vmax - float(inner.max()) > tol * max(1.0, abs(vmax))
        edge_min = float(inner.min()) - vmin > tol * max(1.0, abs(vmin))
    return vmin, vmax, edge_min, edge_max


def extremes_closed(src: LogPair, span: int, lo: float, hi: float) -> Extremes:
    clo, chi = src.core
    ext_l = 0 if src.left.geometric else src.extension
    ext_r = 0 if src.right.geometric else src.extension
    a = max(lo, clo - span - 1 - ext_l)
    b = min(hi, chi + 1 + ext_r)
    if a > b:
        # whole range inside one tail; a single point represents it
        a = b = lo if lo > chi else hi
    ks = np.arange(int(a), int(b) + 1)
    vals = src.upper(ks) - src.lower(ks + span)
    extra = []
    if hi > b and not src.right.geometric:
        extra.append(src.right.gap - span * src.right.slope)
    if lo < a and not src.left.geometric:
        extra.append(src.left.gap - span * src.left.slope)
    if extra:
        vals = np.concatenate([vals, np.asarray(extra, dtype=float)])
    return Extremes(float(np.min(vals)), float(np.max(vals)))


def extremes_table(src: LogTable, span: int, lo: float, hi: float) -> Extremes:
    a = max(lo, src.k0)
    b = min(hi, src.k1 - span)
    if a > b:
        raise WindowExhausted(f"no admissible k for span {span} in window [{src.k0}, {src.k1}]")
    a, b = int(a), int(b)
    vals = src.upper[a - src.k0:b - src.k0 + 1] - src.lower[a + span - src.k0:b + span - src.k0 + 1]
    edge = np.zeros(len(vals), dtype=bool)
    if a == src.k0 and lo < src.k0:
        edge[0] = True
    if b == src.k1 - span and hi > src.k1 - span:
        edge[-1] = True
    vmin, vmax, emin, emax = _pick(vals, edge)
    return Extremes(vmin, vmax, emin, emax)


def extremes(src, span: int, lo: float, hi: float) -> Extremes:
    if isinstance(src, LogPair):
        return extremes_closed(src, span, lo, hi)
    return extremes_table(src, span, lo, hi)


@dataclass(frozen=True)
class ConditionSpec:
    """How a named condition maps depth n to (span, k-range, normalizer)."""

    name: str
    direction: str          # "sup" (compare < 1) or "inf" (compare > 1)
    region: str             # "all", "left" or "right"
    span_offset: int = 0
    left_offset: int = 0    # left region: k <= -(n + left_offset)

    def bounds(self, n: int) -> tuple[int, float, float]:
        span = n + self.span_offset
        if self.region == "all":
            return span, -INF, INF
        if self.region == "left":
            return span, -INF, -(n + self.left_offset)
        return span, 0, INF

    def normalizer(self, n: int) -> int:
        return n + self.span_offset

    def analytic_limit(self, src: LogPair) -> float:
        sl, sr = src.left.slope, src.right.slope
        if self.region == "all":
            s = min(sl, sr) if self.direction == "sup" else max(sl, sr)
        elif self.region == "left":
            s = sl
        else:
            s = sr
        return math.exp(-s) if s > -INF else INF


@dataclass(frozen=True)
class RateEstimate:
    """n-th-root growth-rate evidence for one condition.

    ``samples[n]`` is the normalized extremal ratio r_n for n = 1..depth and
    ``log_extremes[n]`` the logarithm of the un-rooted extremal ratio a_n for
    n = 0..depth.
    """

    condition: str
    direction: str
    samples: dict
    log_extremes: dict
    limit_estimate: float
    exact: bool
    boundary_hits: int = 0

    @property
    def depth(self) -> int:
        return max(self.samples) if self.samples else 0

    @property
    def verdict_margin(self) -> float:
        return abs(self.limit_estimate - 1.0)

    @property
    def boundary_dominated(self) -> bool:
        return self.boundary_hits > self.depth / 2

    def holds(self, margin: float) -> bool:
        lim = self.limit_estimate
        if self.exact:
            return lim < 1.0 if self.direction == "sup" else lim > 1.0
        if self.boundary_dominated:
            return False
        return lim < 1.0 - margin if self.direction == "sup" else lim > 1.0 + margin

    @classmethod
    def from_sequence(cls, a, condition: str, direction: str, a0: float = 1.0,
                      exact: bool = False, limit: float | None = None) -> "RateEstimate":
        """Wrap a plain sequence a_1, a_2, ... of extremal ratios."""
        a = np.asarray(a, dtype=float)
        logs = {0: math.log(a0)}
        samples = {}
        for n, value in enumerate(a, start=1):
            logs[n] = math.log(value)
            samples[n] = math.exp(logs[n] / n)
        if limit is None:
            limit = tail_average(samples)
        return cls(condition, direction, samples, logs, limit, exact)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "direction": self.direction,
            "exact": self.exact,
            "limit": self.limit_estimate,
            "verdict_margin": self.verdict_margin,
            "boundary_dominated": self.boundary_dominated,
            "samples": [[n, r] for n, r in sorted(self.samples.items())],
        }


def tail_average(samples: dict) -> float:
    ns = sorted(samples)
    q = max(1, len(ns) // 4)
    return float(np.mean([samples[n] for n in ns[-q:]]))


def estimate(spec: ConditionSpec, src, depth: int) -> RateEstimate:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    exact = isinstance(src, LogPair)
    logs, samples = {}, {}
    hits = 0
    for n in range(depth + 1):
        span, lo, hi = spec.bounds(n)
        ex = extremes(src, span, lo, hi)
        value = ex.max if spec.direction == "sup" else ex.min
        logs[n] = value
        if n == 0:
            continue
        samples[n] = math.exp(value / spec.normalizer(n))
        if (ex.edge_max if spec.direction == "sup" else ex.edge_min):
            hits += 1
    limit = spec.analytic_limit(src) if exact else tail_average(samples)
    return RateEstimate(spec.name, spec.direction, samples, logs, limit, exact, hits)


class Kind(str, enum.Enum):
    CONTRACTION = "Contraction"
    DILATION = "Dilation"
    GENERALIZED_HYPERBOLIC = "GeneralizedHyperbolic"
    NON_SHADOWING = "NonShadowing"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Classification:
    kind: Kind
    stable_rate: float | None = None
    unstable_rate: float | None = None
    evidence: dict = field(default_factory=dict)
    hyperbolic: bool | None = None
    reason: str | None = None
    flags: tuple = ()
    certificate: dict | None = None

    @property
    def definitive(self) -> bool:
        return self.kind is not Kind.INCONCLUSIVE

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "stable_rate": self.stable_rate,
            "unstable_rate": self.unstable_rate,
            "rates": [r for r in (self.stable_rate, self.unstable_rate) if r is not None],
        }
        if self.hyperbolic is not None:
            out["hyperbolic"] = self.hyperbolic
        if self.reason:
            out["reason"] = self.reason
        if self.flags:
            out["flags"] = list(self.flags)
        if self.certificate:
            out["certificate"] = self.certificate
        return out


def decide(evidence: dict, contraction: str, dilation: str, stable: str, unstable: str,
           margin: float, hyperbolic: bool = False) -> Classification:
    """Shared decision logic: contraction, then dilation, then the split case."""
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must lie in (0, 1)")
    flags = tuple(f"boundary-dominated:{name}" for name, est in evidence.items()
                  if not est.exact and est.boundary_dominated)
    c, d = evidence[contraction], evidence[dilation]
    s, u = evidence[stable], evidence[unstable]
    hyp = None
    if hyperbolic:
        hyp = c.holds(margin) or d.holds(margin)
    if c.holds(margin):
        return Classification(Kind.CONTRACTION, stable_rate=c.limit_estimate,
                              evidence=evidence, hyperbolic=hyp, flags=flags)
    if d.holds(margin):
        return Classification(Kind.DILATION, unstable_rate=d.limit_estimate,
                              evidence=evidence, hyperbolic=hyp, flags=flags)
    if s.holds(margin) and u.holds(margin):
        return Classification(Kind.GENERALIZED_HYPERBOLIC, stable_rate=s.limit_estimate,
                              unstable_rate=u.limit_estimate, evidence=evidence,
                              hyperbolic=hyp, flags=flags)
    if all(est.exact for est in evidence.values()):
        return Classification(Kind.NON_SHADOWING, evidence=evidence, hyperbolic=hyp, flags=flags)
    reason = "boundary dominance" if flags else "finite data within margin of 1"
    return Classification(Kind.INCONCLUSIVE, evidence=evidence, hyperbolic=hyp,
                          reason=reason, flags=flags)
