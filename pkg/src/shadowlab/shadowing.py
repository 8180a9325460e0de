"""Constructive shadowing for operators with a coordinate splitting.

For T with T(M) in M and T^{-1}(N) in N, both restricted maps proper
contractions with rates a and b, the bounded solution of

    y_{n+1} = T y_n + z_n

is y_n = u_n + v_n with u the forward stable series and v the backward unstable
series.  On a finite window both series are generated by their own recursions
(z vanishing outside the window), which satisfy the equation exactly at every
index and obey ||y_n|| <= (1/(1-a) + b/(1-b)) sup ||z||.  The tail budget decides
which indices also agree with the bi-infinite series to within ``tail_tol``.

A delta-pseudotrajectory x gives z_n = x_{n+1} - T x_n; the seed x_0 - y_0 then
has orbit with T^n(seed) - x_n = -y_n, since both sides solve the same recursion
from the same initial value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotGeneralizedHyperbolic, TailBudgetExceeded, WindowOverrun
from .rates import extremes
from .shift_ops import (ALL, NONE, IndexSet, LpVector, WeightSequence, apply_inverse,
                        apply_shift, classify_shift, shift_splitting)

DEFAULT_TAIL_TOL = 1e-10
DEFAULT_SUPPORT = 4
ROUNDING = 16 * np.finfo(float).eps


def _sup_log_weight(w: WeightSequence, jlo: float, jhi: float, sign: float) -> float:
    """sup of sign * log w_j over integers j in [jlo, jhi]."""
    src = w.potential()
    # log w_j = lambda_{j-1} - lambda_j, a span-1 ratio at k = j - 1
    ex = extremes(src, 1, jlo - 1, jhi - 1)
    return ex.max if sign > 0 else -ex.min


def _index_range(s: IndexSet, kind: str) -> tuple[float, float] | None:
    """Weight indices j that drive the restricted map on the subspace ``s``."""
    if s.empty:
        return None
    if s.kind == "all":
        return -math.inf, math.inf
    if kind == "diagonal":
        return (-math.inf, -1) if s.kind == "neg" else (0, math.inf)
    # shift: (Tx)_n = w_{n+1} x_{n+1} needs j and j - 1 in the set
    return (-math.inf, -1) if s.kind == "neg" else (1, math.inf)


@dataclass(frozen=True, eq=False)
class SplitOperator:
    """Weighted shift (or diagonal multiplier) with a stable/unstable coordinate split."""

    weights: WeightSequence
    M: IndexSet
    N: IndexSet
    kind: str = "shift"

    def __post_init__(self):
        if self.kind not in ("shift", "diagonal"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.a >= 1 or self.b >= 1:
            raise NotGeneralizedHyperbolic(f"rates a = {self.a:.6g}, b = {self.b:.6g}")

    @classmethod
    def from_weights(cls, w: WeightSequence, **kw) -> "SplitOperator":
        M, N = shift_splitting(w, classify_shift(w, **kw))
        return cls(w, M, N, "shift")

    @classmethod
    def scalar(cls, c: float) -> "SplitOperator":
        """Multiplication by c on every coordinate; use with one-coordinate vectors."""
        w = WeightSequence.constant(c, N=0)
        if c < 1:
            return cls(w, ALL, NONE, "diagonal")
        if c > 1:
            return cls(w, NONE, ALL, "diagonal")
        raise NotGeneralizedHyperbolic("|c| = 1 has no proper splitting")

    @property
    def a(self) -> float:
        r = _index_range(self.M, self.kind)
        return 0.0 if r is None else math.exp(_sup_log_weight(self.weights, *r, 1.0))

    @property
    def b(self) -> float:
        r = _index_range(self.N, self.kind)
        return 0.0 if r is None else math.exp(_sup_log_weight(self.weights, *r, -1.0))

    @property
    def K(self) -> float:
        k = 0.0
        if not self.M.empty:
            k += 1.0 / (1.0 - self.a)
        if not self.N.empty:
            k += self.b / (1.0 - self.b)
        return k

    def apply(self, x: LpVector) -> LpVector:
        if self.kind == "shift":
            return apply_shift(self.weights, x)
        return LpVector(x.p, x.lo, self.weights.at(x.indices) * x.entries)

    def apply_inverse(self, x: LpVector) -> LpVector:
        if self.kind == "shift":
            return apply_inverse(self.weights, x)
        return LpVector(x.p, x.lo, x.entries / self.weights.at(x.indices))

    def project_stable(self, x: LpVector) -> LpVector:
        return x.masked(self.M)

    def project_unstable(self, x: LpVector) -> LpVector:
        return x.masked(self.N)

    def describe(self) -> dict:
        return {"kind": self.kind, "M": str(self.M), "N": str(self.N),
                "a": self.a, "b": self.b, "K": self.K,
                "weights": self.weights.generator.describe() if self.weights.generator
                else {"kind": "tabulated", "window": [self.weights.lo, self.weights.hi]}}


def _orbit(T: SplitOperator, x0: LpVector, lo: int, hi: int) -> dict:
    out = {0: x0}
    for n in range(0, hi):
        out[n + 1] = T.apply(out[n])
    for n in range(0, lo, -1):
        out[n - 1] = T.apply_inverse(out[n])
    return {n: out[n] for n in range(lo, hi + 1)}


@dataclass(frozen=True, eq=False)
class PseudoTrajectory:
    """Points x_n on [lo, hi] with ||T x_n - x_{n+1}|| <= delta, audited on construction."""

    lo: int
    hi: int
    points: dict
    delta: float
    operator: SplitOperator | None = None

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be >= 0")
        if sorted(self.points) != list(range(self.lo, self.hi + 1)):
            raise ValueError("points must cover the window")
        if self.operator is not None:
            T = self.operator
            for n in range(self.lo, self.hi):
                step = T.apply(self.points[n])
                d = (step - self.points[n + 1]).norm()
                # defects of growing orbits carry rounding at the scale of the points
                slack = ROUNDING * (step.norm() + self.points[n + 1].norm())
                if d > self.delta * (1 + 1e-12) + slack:
                    raise ValueError(f"defect {d!r} at n = {n} exceeds delta {self.delta!r}")

    @property
    def p(self) -> float:
        return self.points[self.lo].p

    @property
    def window(self) -> tuple[int, int]:
        return self.lo, self.hi

    def defects(self, T: SplitOperator) -> dict:
        return {n: (T.apply(self.points[n]) - self.points[n + 1]).norm()
                for n in range(self.lo, self.hi)}

    def perturbations(self, T: SplitOperator) -> dict:
        return {n: self.points[n + 1] - T.apply(self.points[n]) for n in range(self.lo, self.hi)}


def _noise(rng: np.random.Generator, p: float, support: int, delta: float) -> LpVector:
    d = rng.standard_normal(2 * support + 1)
    nrm = float(np.linalg.norm(d, ord=p))
    return LpVector(p, -support, d * (delta / nrm))


def make_pseudotrajectory(T: SplitOperator, seed: LpVector, delta: float,
                          window: tuple[int, int] = (-50, 50), noise_seed: int = 0,
                          support: int = DEFAULT_SUPPORT) -> PseudoTrajectory:
    """Perturbed orbit through ``seed`` at time 0 with defects of norm exactly delta."""
    if not delta >= 0:
        raise ValueError("delta must be >= 0")
    lo, hi = window
    if not lo <= 0 <= hi:
        raise WindowOverrun("the window must contain time 0")
    if T.kind == "diagonal":
        support = 0
    rng = np.random.default_rng(noise_seed)
    pts = {0: seed}
    for n in range(0, hi):
        step = T.apply(pts[n])
        pts[n + 1] = step + _noise(rng, seed.p, support, delta) if delta > 0 else step
    for n in range(0, lo, -1):
        d = _noise(rng, seed.p, support, delta) if delta > 0 else None
        pts[n - 1] = T.apply_inverse(pts[n] - d if d is not None else pts[n])
    pts = {n: pts[n] for n in range(lo, hi + 1)}
    return PseudoTrajectory(lo, hi, pts, float(delta), T)


class OrbitSolution(dict):
    """y_n for n in the window, plus the index range certified against the series tails."""

    def __init__(self, y: dict, interior: tuple[int, int], J_stable: int, J_unstable: int,
                 K: float, z_sup: float):
        super().__init__(y)
        self.interior = interior
        self.J_stable = J_stable
        self.J_unstable = J_unstable
        self.K = K
        self.z_sup = z_sup


def _terms_needed(rate: float, offset: int, z_sup: float, tail_tol: float) -> int:
    # smallest J with rate^(J + offset) / (1 - rate) * z_sup <= tail_tol
    if z_sup == 0 or rate == 0:
        return 0
    need = math.log(tail_tol * (1.0 - rate) / z_sup) / math.log(rate) - offset
    return max(0, math.ceil(need - 1e-12))


def solve_perturbed_orbit(T: SplitOperator, z: dict, tail_tol: float = DEFAULT_TAIL_TOL
                          ) -> OrbitSolution:
    """Bounded solution of y_{n+1} = T y_n + z_n over the window of z (plus one index)."""
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    if T.a >= 1 or T.b >= 1:
        raise NotGeneralizedHyperbolic(f"rates a = {T.a:.6g}, b = {T.b:.6g}")
    if not z:
        raise ValueError("empty perturbation")
    lo, hi = min(z), max(z)
    p = z[lo].p
    z_sup = max(v.norm() for v in z.values())
    J_s = _terms_needed(T.a, 0, z_sup, tail_tol) if not T.M.empty else 0
    J_u = _terms_needed(T.b, 1, z_sup, tail_tol) if not T.N.empty else 0
    interior = (lo + J_s, hi + 1 - J_u)
    if interior[0] > interior[1]:
        raise TailBudgetExceeded(f"needs {J_s} + {J_u} terms, window has {hi - lo + 2} indices")
    zero = LpVector(p, 0, np.zeros(0))
    u = {lo: zero}
    for n in range(lo, hi + 1):
        u[n + 1] = T.apply(u[n]) + T.project_stable(z[n])
    v = {hi + 1: zero}
    for n in range(hi, lo - 1, -1):
        v[n] = T.apply_inverse(v[n + 1] - T.project_unstable(z[n]))
    y = {n: u[n] + v[n] for n in range(lo, hi + 2)}
    return OrbitSolution(y, interior, J_s, J_u, T.K, z_sup)


@dataclass(frozen=True, eq=False)
class ShadowReport:
    seed: LpVector
    K_used: float
    residuals: dict
    delta: float
    interior: tuple[int, int]

    @property
    def epsilon(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def bound(self) -> float:
        return self.K_used * self.delta

    def to_dict(self) -> dict:
        return {
            "K_used": self.K_used,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "certified_bound": self.bound,
            "interior": list(self.interior),
            "residuals": [[n, r] for n, r in sorted(self.residuals.items())],
            "seed": [[n, v] for n, v in sorted(self.seed.to_dict().items())],
        }


def verify_shadowing(T: SplitOperator, pseudo: PseudoTrajectory, seed: LpVector) -> dict:
    orbit = _orbit(T, seed, pseudo.lo, pseudo.hi)
    return {n: (orbit[n] - pseudo.points[n]).norm() for n in range(pseudo.lo, pseudo.hi + 1)}


def shadow(T: SplitOperator, pseudo: PseudoTrajectory, tail_tol: float = DEFAULT_TAIL_TOL
           ) -> ShadowReport:
    x0 = pseudo.points[0]
    if pseudo.delta == 0 or pseudo.lo == pseudo.hi:
        seed, interior = x0, pseudo.window
    else:
        y = solve_perturbed_orbit(T, pseudo.perturbations(T), tail_tol)
        # x_n - T^n(seed) solves the same recursion as y with the same value at n = 0
        seed, interior = x0 - y[0], y.interior
    return ShadowReport(seed, T.K, verify_shadowing(T, pseudo, seed), pseudo.delta, interior)
