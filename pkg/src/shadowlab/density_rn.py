"""Translation systems f(x) = x + 1 on the line, generated by W = [0, 1).

A density h gives mu(B) = int_B h, the Radon-Nikodym derivatives
rho_k(x) = h(x + k) / h(x) and their envelopes m_k = inf_W rho_k,
M_k = sup_W rho_k.  For the built-in families the envelopes are exact: log rho_k
is either affine between known kinks (exponential, Laplace, Gaussian) or has
its critical points at the roots of y^2 + k y - 1 = 0 (Cauchy), so the extrema
over [0, 1] sit on a short list of candidate points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (HypothesisViolated, InvalidConfig, NonPositiveDensity, QuadratureFailure,
                     WindowOverrun)
from .measure_core import (DEFAULT_DEPTH, DEFAULT_MARGIN, DEFAULT_WINDOW, Generator,
                           MeasureSequence, SubCellMeasures)
from .rates import (Classification, ConditionSpec, Kind, LogPair, LogTable, RateEstimate,
                    Tail, decide, estimate, extremes_closed)

FAMILIES = ("exponential", "laplace", "cauchy", "gaussian", "constant", "tabulated")

GRID_TOL = 1e-6
GRID_MAX_LEVEL = 16
QUAD_TOL = 1e-10

RN_CONDITIONS = {
    "RNC": ConditionSpec("RNC", "sup", "all"),
    "RND": ConditionSpec("RND", "inf", "all"),
    "RNGH_minus": ConditionSpec("RNGH_minus", "sup", "left"),
    "RNGH_plus": ConditionSpec("RNGH_plus", "inf", "right"),
}


@dataclass(frozen=True, eq=False)
class DensityModel:
    """A positive density on the real line, optionally translated by ``shift``.

    ``h(x) = base(x + shift)``.  Tabulated densities are piecewise linear in the
    supplied ``grid`` (x values) and ``values`` (h values).
    """

    family: str
    sign: int = 1
    b: float = 1.0
    lam: float = 0.0
    shift: float = 0.0
    grid: np.ndarray | None = None
    values: np.ndarray | None = None
    mode: str = "closed_form"
    resolution: int = 64

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfig(f"unknown density family {self.family!r}")
        if self.family == "laplace" and not self.b > 0:
            raise ValueError("Laplace scale b must be positive")
        if self.family == "exponential" and self.sign not in (1, -1):
            raise ValueError("exponential sign must be +1 or -1")
        if self.family == "tabulated":
            if self.grid is None or self.values is None or len(self.grid) != len(self.values):
                raise ValueError("tabulated density needs matching grid and values")
            if np.any(np.diff(self.grid) <= 0):
                raise ValueError("tabulated x must be strictly increasing")
            bad = np.flatnonzero(~(np.asarray(self.values) > 0))
            if len(bad):
                raise NonPositiveDensity(float(self.grid[bad[0]]))
        if self.mode not in ("closed_form", "adaptive_grid"):
            raise ValueError(f"unknown evaluation mode {self.mode!r}")

    @property
    def closed_form(self) -> bool:
        return self.mode == "closed_form" and self.family != "tabulated"

    def with_mode(self, mode: str, resolution: int | None = None) -> "DensityModel":
        return DensityModel(self.family, self.sign, self.b, self.lam, self.shift, self.grid,
                            self.values, mode, resolution or self.resolution)

    def translated(self, c: float) -> "DensityModel":
        return DensityModel(self.family, self.sign, self.b, self.lam, self.shift + c,
                            self.grid, self.values, self.mode, self.resolution)

    def log_h(self, x) -> np.ndarray:
        return self._log_shape(x) + self._log_const()

    def _log_const(self) -> float:
        if self.family == "laplace":
            return -math.log(2 * self.b)
        if self.family == "cauchy":
            return -math.log(math.pi)
        return 0.0

    def _log_shape(self, x) -> np.ndarray:
        # log h up to an additive constant, so that log rho_k has no rounding from it
        y = np.asarray(x, dtype=float) + self.shift
        fam = self.family
        if fam == "exponential":
            return self.sign * y
        if fam == "laplace":
            return -np.abs(y - self.lam) / self.b
        if fam == "cauchy":
            return -np.log1p(y * y)
        if fam == "gaussian":
            return -y * y
        if fam == "constant":
            return np.zeros_like(y)
        lo, hi = self.grid[0], self.grid[-1]
        if np.any(y < lo) or np.any(y > hi):
            raise WindowOverrun(f"tabulated density covers [{lo}, {hi}] only")
        return np.log(np.interp(y, self.grid, self.values))

    def h(self, x) -> np.ndarray:
        return np.exp(self.log_h(x))

    def log_rho(self, k, x) -> np.ndarray:
        return self._log_shape(np.asarray(x) + np.asarray(k)) - self._log_shape(x)

    def describe(self) -> dict:
        out = {"family": self.family}
        if self.family == "exponential":
            out["sign"] = self.sign
        if self.family == "laplace":
            out.update(b=self.b, **{"lambda": self.lam})
        if self.shift:
            out["shift"] = self.shift
        if self.mode != "closed_form":
            out.update(mode=self.mode, resolution=self.resolution)
        return out


def density_from_spec(spec: dict) -> DensityModel:
    """Build a model from its JSON description, e.g. {"family": "laplace", "b": 1.0}."""
    fam = spec.get("family", "").lower().replace("_", "-")
    common = {"shift": float(spec.get("shift", 0.0)),
              "mode": spec.get("mode", "closed_form").replace("-", "_"),
              "resolution": int(spec.get("resolution", 64))}
    if fam in ("exponential", "exp"):
        return DensityModel("exponential", sign=int(spec.get("sign", 1)), **common)
    if fam in ("negative-exponential", "neg-exponential"):
        return DensityModel("exponential", sign=-1, **common)
    if fam == "laplace":
        return DensityModel("laplace", b=float(spec.get("b", 1.0)),
                            lam=float(spec.get("lambda", 0.0)), **common)
    if fam in ("cauchy", "gaussian", "constant"):
        return DensityModel(fam, **common)
    if fam == "tabulated":
        if "path" in spec:
            from .io import read_density_csv
            x, h = read_density_csv(spec["path"])
        else:
            x, h = spec["x"], spec["h"]
        return DensityModel("tabulated", grid=np.asarray(x, dtype=float),
                            values=np.asarray(h, dtype=float), **common)
    raise InvalidConfig(f"unknown density family {spec.get('family')!r}")


# -- envelopes -----------------------------------------------------------------

def _candidates(model: DensityModel, k: np.ndarray) -> np.ndarray:
    """Points of [0, 1] where log rho_k may attain its extrema, shape (len(k), C)."""
    k = np.asarray(k, dtype=float)[:, None]
    ends = np.broadcast_to(np.array([0.0, 1.0]), (k.shape[0], 2))
    s = model.shift
    if model.family == "laplace":
        kinks = np.concatenate([np.full_like(k, model.lam - s), model.lam - s - k], axis=1)
        return np.concatenate([ends, np.clip(kinks, 0.0, 1.0)], axis=1)
    if model.family == "cauchy":
        disc = np.sqrt(k * k + 4.0)
        # cancellation-free positive root; the roots multiply to -1
        r1 = np.where(k > 0, 2.0 / (k + disc), (disc - k) / 2.0)
        roots = np.concatenate([r1, -1.0 / r1], axis=1) - s
        return np.concatenate([ends, np.clip(roots, 0.0, 1.0)], axis=1)
    return np.array(ends)


def closed_envelopes(model: DensityModel, k) -> tuple[np.ndarray, np.ndarray]:
    """(log M_k, log m_k) for integer array k, exact for the built-in families."""
    k = np.atleast_1d(np.asarray(k))
    xs = _candidates(model, k)
    vals = model.log_rho(k[:, None].astype(float), xs)
    return vals.max(axis=1), vals.min(axis=1)


def grid_envelopes(model: DensityModel, k) -> tuple[np.ndarray, np.ndarray]:
    """Bracket (log M_k, log m_k) by refining a uniform grid on [0, 1].

    The grid doubles until successive extrema agree to GRID_TOL; the result is
    widened by that tolerance.  Sampled bounds cannot certify an essential
    supremum, so callers mark these envelopes unverified.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    r = max(2, int(model.resolution))
    prev = None
    for _ in range(GRID_MAX_LEVEL):
        x = np.linspace(0.0, 1.0, r + 1)
        lh = model.log_h(x)
        if np.any(~np.isfinite(lh)):
            raise NonPositiveDensity(float(x[np.flatnonzero(~np.isfinite(lh))[0]]))
        vals = model.log_h(x[None, :] + k[:, None]) - lh[None, :]
        if np.any(~np.isfinite(vals)):
            i, j = np.argwhere(~np.isfinite(vals))[0]
            raise NonPositiveDensity(float(x[j] + k[i]))
        cur = (vals.max(axis=1), vals.min(axis=1))
        if prev is not None and max(np.max(np.abs(cur[0] - prev[0])),
                                    np.max(np.abs(cur[1] - prev[1]))) <= GRID_TOL:
            return cur[0] + GRID_TOL, cur[1] - GRID_TOL
        prev = cur
        r *= 2
    return prev[0] + GRID_TOL, prev[1] - GRID_TOL


def _core(model: DensityModel) -> tuple[int, int]:
    c = model.lam - model.shift if model.family == "laplace" else -model.shift
    return math.floor(c) - 2, math.ceil(c) + 2


def _cauchy_gap(model: DensityModel) -> float:
    # log((1 + y^2) max / min) over y in [s, s + 1]
    s = model.shift
    ys = np.array([s, s + 1.0, min(max(0.0, s), s + 1.0)])
    q = 1.0 + ys * ys
    return float(math.log(q.max() / q.min()))


def envelope_pair(model: DensityModel) -> LogPair:
    """Closed-form (log M, log m) valid for every integer k, with tail models."""
    fam = model.family
    up = lambda k: closed_envelopes(model, k)[0]
    lo = lambda k: closed_envelopes(model, k)[1]
    core = _core(model)
    if fam == "exponential":
        t = Tail(float(model.sign))
        return LogPair(up, lo, core, t, t)
    if fam == "constant":
        return LogPair(up, lo, core, Tail(0.0), Tail(0.0))
    if fam == "laplace":
        return LogPair(up, lo, core, Tail(1.0 / model.b), Tail(-1.0 / model.b))
    if fam == "gaussian":
        return LogPair(up, lo, core, Tail(math.inf), Tail(-math.inf))
    if fam == "cauchy":
        g = _cauchy_gap(model)
        return LogPair(up, lo, core, Tail(0.0, False, g), Tail(0.0, False, g))
    raise ValueError(f"no closed form for family {fam!r}")


@dataclass(frozen=True, eq=False)
class Envelopes:
    model: DensityModel
    k0: int
    log_M: np.ndarray
    log_m: np.ndarray
    exact: bool
    pair: LogPair | None = None

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k0, self.k0 + len(self.log_M))

    @property
    def M(self) -> np.ndarray:
        return np.exp(self.log_M)

    @property
    def m(self) -> np.ndarray:
        return np.exp(self.log_m)

    @property
    def unverified(self) -> bool:
        return not self.exact

    def at(self, k: int) -> tuple[float, float]:
        i = k - self.k0
        return float(math.exp(self.log_m[i])), float(math.exp(self.log_M[i]))

    def source(self, swap: bool = False):
        if self.exact:
            return self.pair.swapped() if swap else self.pair
        if swap:
            return LogTable(self.k0, self.log_m, self.log_M)
        return LogTable(self.k0, self.log_M, self.log_m)


def envelopes(model: DensityModel, window: tuple[int, int] = (-DEFAULT_WINDOW, DEFAULT_WINDOW)
              ) -> Envelopes:
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError("empty window")
    ks = np.arange(lo, hi + 1)
    if model.closed_form:
        log_M, log_m = closed_envelopes(model, ks)
        return Envelopes(model, lo, log_M, log_m, True, envelope_pair(model))
    log_M, log_m = grid_envelopes(model, ks)
    return Envelopes(model, lo, log_M, log_m, False)


@dataclass(frozen=True)
class RatioBound:
    """sup_k M_k/m_k, or an unbounded flag when a closed form proves divergence."""

    value: float
    verified: bool = True

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value


UNBOUNDED = RatioBound(math.inf)


def check_bounded_ratio(env: Envelopes) -> RatioBound:
    if env.exact:
        if not env.pair.finite_slopes:
            return UNBOUNDED
        gap = extremes_closed(env.pair, 0, -math.inf, math.inf).max
        return RatioBound(float(math.exp(gap)))
    return RatioBound(float(np.exp(np.max(env.log_M - env.log_m))), verified=False)


def eval_rn_condition(cond: str, env: Envelopes, depth: int = DEFAULT_DEPTH,
                      swap: bool = False) -> RateEstimate:
    """Rate evidence for one envelope condition; ``swap`` exchanges M and m."""
    if check_bounded_ratio(env).unbounded:
        raise HypothesisViolated("M_k/m_k is unbounded")
    return estimate(RN_CONDITIONS[cond], env.source(swap), depth)


def cauchy_certificate(evidence: dict) -> dict:
    """Check the closed-form sandwich for the standard Cauchy density.

    inf_{k>=0} M_k/m_{k+n} <= 2(1 + (n+1)^2) and
    sup_{k<=0} M_{k-n}/m_k >= 1 / (2(1 + (n-1)^2)); both n-th roots tend to 1.
    """
    plus, minus = evidence["RNGH_plus"], evidence["RNGH_minus"]
    ok = True
    for n in sorted(plus.samples):
        upper = math.log(2.0 * (1.0 + (n + 1) ** 2))
        lower = -math.log(2.0 * (1.0 + (n - 1) ** 2))
        ok &= plus.log_extremes[n] <= upper + 1e-12
        ok &= minus.log_extremes[n] >= lower - 1e-12
    n = plus.depth
    return {
        "sandwich_holds": bool(ok),
        "plus_upper_bound": (2.0 * (1.0 + (n + 1) ** 2)) ** (1.0 / n),
        "minus_lower_bound": (1.0 / (2.0 * (1.0 + (n - 1) ** 2))) ** (1.0 / n),
        "depth": n,
    }


def classify_density(model: DensityModel, depth: int = DEFAULT_DEPTH,
                     margin: float = DEFAULT_MARGIN,
                     window: tuple[int, int] = (-DEFAULT_WINDOW, DEFAULT_WINDOW),
                     swap: bool = False) -> Classification:
    env = envelopes(model, window)
    bound = check_bounded_ratio(env)
    if bound.unbounded:
        return Classification(Kind.INCONCLUSIVE, reason="HypothesisViolated",
                              flags=("ratio-unbounded",))
    evidence = {name: eval_rn_condition(name, env, depth, swap) for name in RN_CONDITIONS}
    result = decide(evidence, "RNC", "RND", "RNGH_minus", "RNGH_plus", margin)
    flags = result.flags + (() if bound.verified else ("unverified-envelopes",))
    cert = None
    if model.family == "cauchy" and model.shift == 0 and env.exact:
        cert = cauchy_certificate(evidence)
    return Classification(result.kind, result.stable_rate, result.unstable_rate, evidence,
                          result.hyperbolic, result.reason, flags, cert)


# -- cell measures ---------------------------------------------------------------

def _log_diff_exp(hi, lo):
    # log(e^hi - e^lo) for hi > lo
    return hi + np.log(-np.expm1(lo - hi))


def log_interval_measure(model: DensityModel, a, b) -> np.ndarray:
    """log int_a^b h(x) dx, elementwise, closed form for built-in families."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b <= a):
        raise ValueError("intervals must have positive length")
    fam = model.family
    ua, ub = a + model.shift, b + model.shift
    if fam == "constant":
        return np.log(b - a)
    if fam == "exponential":
        if model.sign > 0:
            return _log_diff_exp(ub, ua)
        return _log_diff_exp(-ua, -ub)
    if fam == "laplace":
        za, zb = (ua - model.lam) / model.b, (ub - model.lam) / model.b
        with np.errstate(divide="ignore", invalid="ignore"):
            left = math.log(0.5) + _log_diff_exp(np.minimum(zb, 0.0), za)
            right = math.log(0.5) + _log_diff_exp(-np.maximum(za, 0.0), -zb)
            mid = np.log(1.0 - 0.5 * np.exp(za) - 0.5 * np.exp(-zb))
        return np.where(zb <= 0, left, np.where(za >= 0, right, mid))
    if fam == "cauchy":
        prod = 1.0 + ua * ub
        with np.errstate(divide="ignore", invalid="ignore"):
            stable = np.arctan((ub - ua) / prod)
        direct = np.arctan(ub) - np.arctan(ua)
        return np.log(np.where(prod > 0, stable, direct) / math.pi)
    if fam == "gaussian":
        c = math.log(math.sqrt(math.pi) / 2.0)

        def pos(lo, hi):
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return c - lo * lo + np.log(special.erfcx(lo)
                                            - np.exp(lo * lo - hi * hi) * special.erfcx(hi))

        with np.errstate(divide="ignore", invalid="ignore"):
            straddle = c + np.log(special.erf(ub) - special.erf(ua))
        return np.where(ua >= 0, pos(ua, ub), np.where(ub <= 0, pos(-ub, -ua), straddle))
    return np.log(np.vectorize(lambda lo, hi: quad_measure(model, lo, hi))(a, b))


def quad_measure(model: DensityModel, a: float, b: float, tol: float = QUAD_TOL) -> float:
    """int_a^b h by adaptive quadrature; raises QuadratureFailure past the budget."""
    pts = None
    if model.family == "tabulated":
        g = model.grid - model.shift
        pts = g[(g > a) & (g < b)][:90]
    elif model.family == "laplace":
        kink = model.lam - model.shift
        pts = [kink] if a < kink < b else None
    # absolute tol, relaxed to relative 1e-12 on cells too heavy for it in doubles
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(lambda x: float(model.h(x)), a, b, epsabs=tol, epsrel=1e-12,
                                  limit=200, points=pts)
    if not err <= max(tol, 1e-12 * abs(val)) or not val > 0:
        raise QuadratureFailure(f"int over [{a}, {b}]: value {val!r}, error {err!r}")
    return float(val)


@dataclass(frozen=True)
class DensityDerived(Generator):
    """nu_k = int_k^{k+1} h for a built-in density family."""

    model: DensityModel
    kind = "density-derived"

    def log_nu(self, k, mu_W=None):
        k = np.asarray(k, dtype=float)
        return log_interval_measure(self.model, k, k + 1.0)

    def pair(self, mu_W=None):
        m = self.model
        f = self.log_nu
        core = _core(m)
        if m.family == "exponential":
            t = Tail(float(m.sign))
            return LogPair(f, f, core, t, t)
        if m.family == "constant":
            return LogPair(f, f, core, Tail(0.0), Tail(0.0))
        if m.family == "laplace":
            return LogPair(f, f, core, Tail(1.0 / m.b), Tail(-1.0 / m.b))
        if m.family == "gaussian":
            return LogPair(f, f, core, Tail(math.inf), Tail(-math.inf))
        return LogPair(f, f, core, Tail(0.0, False), Tail(0.0, False))

    def describe(self):
        return {"kind": self.kind, "density": self.model.describe()}


def measures_from_density(model: DensityModel,
                          window: tuple[int, int] = (-DEFAULT_WINDOW, DEFAULT_WINDOW)
                          ) -> MeasureSequence:
    lo, hi = int(window[0]), int(window[1])
    if lo != -hi:
        raise ValueError("measure windows are symmetric about 0")
    ks = np.arange(lo, hi + 1)
    if model.family == "tabulated":
        vals = [quad_measure(model, float(k), float(k) + 1.0) for k in ks]
        return MeasureSequence.from_values(vals)
    gen = DensityDerived(model.with_mode("closed_form"))
    return MeasureSequence(hi, np.asarray(gen.log_nu(ks), dtype=float), gen)


def subcells_from_density(model: DensityModel, cuts, N: int) -> SubCellMeasures:
    """Sub-cells B1, B2, ... = [c_0, c_1), [c_1, c_2), ... of W with the measures of
    their translates over [-N, N]."""
    cuts = np.asarray(cuts, dtype=float)
    if cuts[0] != 0.0 or cuts[-1] != 1.0 or np.any(np.diff(cuts) <= 0):
        raise ValueError("cuts must increase from 0 to 1")
    ks = np.arange(-N, N + 1, dtype=float)
    a, b = cuts[:-1, None] + ks[None, :], cuts[1:, None] + ks[None, :]
    log_table = log_interval_measure(model, a, b)
    base = np.exp(log_interval_measure(model, cuts[:-1], cuts[1:]))
    cells = tuple(f"B{i + 1}" for i in range(len(cuts) - 1))
    return SubCellMeasures(cells, base, log_table)
