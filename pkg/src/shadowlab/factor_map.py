"""L^p(X) over the cell decomposition, and its factor map onto l^p(Z).

Simple functions are finite combinations of indicators of f^k(B_i), where the
B_i partition W.  Everything is exact in this model:

* T_f(chi_{f^k(B)}) = chi_{f^(k-1)(B)};
* int_X |phi|^p o f^(-k) dmu = sum |a|^p mu(f^(k + k_piece)(B_i));
* Pi(phi)_k = nu_k^(1/p) / mu(W) * int_W phi o f^k dmu intertwines T_f with the
  weighted shift whose weights are (nu_(k-1) / nu_k)^(1/p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WeightMismatch, WindowExhausted, WindowOverrun, WrongSubspace
from .measure_core import DistortionReport, MeasureSequence, SubCellMeasures, Witness
from .shift_ops import LpVector, WeightSequence, apply_shift

CLASSES = ("UC", "UD", "UGH_plus", "UGH_minus")


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    """phi = sum a * chi_{f^k(B_i)} keyed by (k, i)."""

    pieces: dict
    sub: SubCellMeasures
    nu: MeasureSequence
    p: float = 2.0

    def __post_init__(self):
        clean = {}
        for (k, i), a in self.pieces.items():
            if not 0 <= i < len(self.sub.cells):
                raise ValueError(f"unknown sub-cell index {i}")
            if a != 0:
                clean[(int(k), int(i))] = float(a)
        object.__setattr__(self, "pieces", clean)
        if clean:
            ks = [k for k, _ in clean]
            if min(ks) < -self.sub.N or max(ks) > self.sub.N:
                raise WindowOverrun(f"pieces outside the measure window [-{self.sub.N}, {self.sub.N}]")

    @classmethod
    def from_pieces(cls, items, sub, nu, p=2.0) -> "SimpleFunction":
        """Build from (k, cell, a) triples; ``cell`` is a name or an index."""
        pieces = {}
        for k, cell, a in items:
            i = sub.index(cell) if not isinstance(cell, (int, np.integer)) else int(cell)
            if (k, i) in pieces:
                raise ValueError(f"duplicate piece ({k}, {cell})")
            pieces[(k, i)] = a
        return cls(pieces, sub, nu, p)

    @classmethod
    def indicator(cls, k: int, sub, nu, p=2.0, cell=None) -> "SimpleFunction":
        """chi_{f^k(W)}, or chi_{f^k(B)} for a single sub-cell."""
        cells = range(len(sub.cells)) if cell is None else [cell]
        return cls({(k, i): 1.0 for i in cells}, sub, nu, p)

    def _like(self, pieces) -> "SimpleFunction":
        return SimpleFunction(pieces, self.sub, self.nu, self.p)

    @property
    def cells(self) -> list:
        return sorted({k for k, _ in self.pieces})

    def is_zero(self) -> bool:
        return not self.pieces

    def norm_p(self) -> float:
        """||phi||_p^p."""
        if not self.pieces:
            return 0.0
        ks, ii, a = self._arrays()
        return float(np.sum(np.abs(a) ** self.p * np.exp(self.sub.log_measure(ii, ks))))

    def norm(self) -> float:
        return self.norm_p() ** (1.0 / self.p)

    def _arrays(self):
        keys = sorted(self.pieces)
        ks = np.array([k for k, _ in keys])
        ii = np.array([i for _, i in keys])
        a = np.array([self.pieces[key] for key in keys])
        return ks, ii, a

    def __add__(self, other: "SimpleFunction") -> "SimpleFunction":
        out = dict(self.pieces)
        for key, a in other.pieces.items():
            out[key] = out.get(key, 0.0) + a
        return self._like(out)

    def __mul__(self, c: float) -> "SimpleFunction":
        return self._like({key: c * a for key, a in self.pieces.items()})

    __rmul__ = __mul__

    def disjoint(self, other: "SimpleFunction") -> bool:
        return not (set(self.pieces) & set(other.pieces))

    def to_dict(self) -> dict:
        return {"pieces": [{"k": k, "cell": self.sub.cells[i], "a": a}
                           for (k, i), a in sorted(self.pieces.items())]}


def _moved(phi: SimpleFunction, step: int) -> SimpleFunction:
    N = phi.sub.N
    out = {}
    for (k, i), a in phi.pieces.items():
        if not -N <= k + step <= N:
            raise WindowOverrun(f"cell {k + step} is outside the measure window")
        out[(k + step, i)] = a
    return phi._like(out)


def apply_Tf(phi: SimpleFunction, power: int = 1) -> SimpleFunction:
    """phi o f^power; each application moves every piece one cell toward -infinity."""
    return _moved(phi, -power)


def apply_Tf_inverse(phi: SimpleFunction, power: int = 1) -> SimpleFunction:
    return _moved(phi, power)


def split_pm(phi: SimpleFunction) -> tuple[SimpleFunction, SimpleFunction]:
    """(phi_plus, phi_minus): the parts on cells k < 0 and k >= 0."""
    plus = {key: a for key, a in phi.pieces.items() if key[0] < 0}
    minus = {key: a for key, a in phi.pieces.items() if key[0] >= 0}
    return phi._like(plus), phi._like(minus)


def project_pi(phi: SimpleFunction) -> LpVector:
    """x_k = nu_k^(1/p) / mu(W) * sum_i a_(k,i) mu(B_i)."""
    if not phi.pieces:
        return LpVector(phi.p, 0, np.zeros(0))
    ks = phi.cells
    lo, hi = ks[0], ks[-1]
    acc = np.zeros(hi - lo + 1)
    for (k, i), a in phi.pieces.items():
        acc[k - lo] += a * phi.sub.base[i]
    idx = np.arange(lo, hi + 1)
    scale = np.exp(phi.nu.log_at(idx) / phi.p) / phi.nu.mu_W
    return LpVector(phi.p, lo, acc * scale)


def pi_norm_bound(report: DistortionReport, p: float) -> float:
    return report.H ** (1.0 / p)


def selector(x: LpVector, sub: SubCellMeasures, nu: MeasureSequence) -> SimpleFunction:
    """phi = sum_k x_k nu_k^(-1/p) chi_{f^k(W)}, an isometric right inverse of Pi."""
    if len(x.entries) and (x.lo < -nu.N or x.hi > nu.N):
        raise WindowOverrun(f"vector window {x.window} exceeds the measure window")
    pieces = {}
    coef = x.entries * np.exp(-nu.log_at(x.indices) / x.p) if len(x.entries) else []
    for n, c in zip(x.indices, coef):
        if c != 0:
            for i in range(len(sub.cells)):
                pieces[(int(n), i)] = float(c)
    return SimpleFunction(pieces, sub, nu, x.p)


def _check_weights(w: WeightSequence, nu: MeasureSequence, p: float, js: np.ndarray):
    js = js[(js > -nu.N) & (js <= nu.N)]
    expected = (nu.log_at(js - 1) - nu.log_at(js)) / p
    got = w.log_at(js)
    bad = np.flatnonzero(np.abs(got - expected) > 1e-12)
    if len(bad):
        j = int(js[bad[0]])
        raise WeightMismatch(f"w_{j} = {math.exp(got[bad[0]])!r}, measures give "
                             f"{math.exp(expected[bad[0]])!r}")


def check_commuting(phi: SimpleFunction, w: WeightSequence) -> float:
    """|| Pi(T_f phi) - B_w Pi(phi) ||_p."""
    if phi.is_zero():
        return 0.0
    ks = phi.cells
    _check_weights(w, phi.nu, phi.p, np.arange(ks[0], ks[-1] + 1))
    lhs = project_pi(apply_Tf(phi))
    rhs = apply_shift(w, project_pi(phi))
    return (lhs - rhs).norm()


def log_integrals(phi: SimpleFunction, ks: np.ndarray) -> np.ndarray:
    """log int_X |phi|^p o f^(-k) dmu for each k (pieces move with k)."""
    kp, ii, a = phi._arrays()
    logs = phi.p * np.log(np.abs(a))[None, :] + phi.sub.log_measure(ii[None, :], ks[:, None] + kp[None, :])
    return np.logaddexp.reduce(logs, axis=1)


def _check_subspace(phi: SimpleFunction, cls: str):
    ks = phi.cells
    if cls == "UGH_plus" and ks and max(ks) >= 0:
        raise WrongSubspace("UGH_plus members live on cells k < 0")
    if cls == "UGH_minus" and ks and min(ks) < 0:
        raise WrongSubspace("UGH_minus members live on cells k >= 0")


def required_constant(phi: SimpleFunction, cls: str, t: float, depth: int | None = None
                      ) -> float:
    """Smallest K for which phi satisfies the class inequality with rate t.

    UC:        sup_k I(k)/I(k+n)            <= K t^n
    UD:        inf_k I(k)/I(k+n)            >= t^n / K
    UGH_plus:  sup_{k<=0} I(k-n)/I(k)       <= K t^n
    UGH_minus: inf_{k>=0} I(k)/I(k+n)       >= t^(-n) / K
    with I(k) = int |phi|^p o f^(-k), n = 1..depth, over the k for which every
    shifted piece stays inside the measure window.  ``depth=None`` runs n up to
    the largest value the window admits.
    """
    if cls not in CLASSES:
        raise ValueError(f"unknown class {cls!r}")
    if not t > 0:
        raise ValueError("t must be positive")
    _check_subspace(phi, cls)
    if phi.is_zero():
        return 0.0
    N = phi.sub.N
    kp = phi.cells
    lo, hi = -N - kp[0], N - kp[-1]
    ks = np.arange(lo, hi + 1)
    logI = log_integrals(phi, ks)
    lt = math.log(t)
    worst = -math.inf
    for n in range(1, (depth or 2 * N + 1) + 1):
        if cls == "UGH_plus":
            # k - n >= lo and k <= min(0, hi)
            k = np.arange(lo + n, min(0, hi) + 1)
            r = logI[k - n - lo] - logI[k - lo]
            need = r - n * lt
        else:
            top = hi - n
            k = np.arange(max(lo, 0) if cls == "UGH_minus" else lo, top + 1)
            r = logI[k - lo] - logI[k + n - lo]
            if cls == "UC":
                need = r - n * lt
            elif cls == "UD":
                need = n * lt - r
            else:
                need = -n * lt - r
        if not len(k):
            if depth is None and n > 1:
                break
            raise WindowExhausted(f"no admissible k at n = {n} for window [-{N}, {N}]")
        worst = max(worst, float(need.max()))
    return math.exp(worst)


def class_membership(phi: SimpleFunction, cls: str, witness: Witness,
                     depth: int | None = None) -> bool:
    K = required_constant(phi, cls, witness.t, depth)
    # compared in log space with a rounding allowance
    return K == 0 or math.log(K) <= math.log(witness.K) + 1e-12 * max(1.0, abs(math.log(K)))
