"""Exception hierarchy.

Every error carries a one-line ``hint`` that the CLI prints as a remediation
suggestion next to the error name.
"""


class ShadowlabError(Exception):
    hint = "check the inputs"

    def __init__(self, message="", hint=None):
        super().__init__(message or self.__class__.__name__)
        if hint is not None:
            self.hint = hint


class NonPositiveMeasure(ShadowlabError):
    hint = "every cell measure nu_k must be strictly positive (f nonsingular)"

    def __init__(self, k, value=None):
        self.k = k
        super().__init__(f"nu_{k} = {value!r} is not strictly positive")


class GeneratorMismatch(ShadowlabError):
    hint = "tabulated values must agree with the closed-form generator to 1e-12"

    def __init__(self, k, tabulated=None, expected=None):
        self.k = k
        super().__init__(f"nu_{k}: tabulated {tabulated!r} != generator {expected!r}")


class InconsistentPartition(ShadowlabError):
    hint = "sub-cell measures must sum to nu_k for every k"


class WindowExhausted(ShadowlabError):
    hint = "enlarge the window or lower --depth"


class NoWitness(ShadowlabError):
    hint = "the growth rate is on the wrong side of t; pick a t with margin"


class NonPositiveDensity(ShadowlabError):
    hint = "the density must be strictly positive on the probed cells"

    def __init__(self, x):
        self.x = x
        super().__init__(f"density is not positive at x = {x!r}")


class HypothesisViolated(ShadowlabError):
    hint = "M_k/m_k is unbounded, so the envelope criterion does not apply"


class UnboundedOperator(ShadowlabError):
    hint = "one-step measure ratios are unbounded, so T_f is not a bounded operator"


class QuadratureFailure(ShadowlabError):
    hint = "the integrand is too rough for the quadrature budget; tabulate nu_k directly"


class WindowOverrun(ShadowlabError):
    hint = "the data window is too small for the requested indices"


class NotSplittable(ShadowlabError):
    hint = "only contractions, dilations and generalized hyperbolic shifts have a splitting"


class NotGeneralizedHyperbolic(ShadowlabError):
    hint = "both splitting rates must be < 1"


class TailBudgetExceeded(ShadowlabError):
    hint = "loosen --tail-tol or enlarge the window"


class WrongSubspace(ShadowlabError):
    hint = "UGH_plus needs pieces at k < 0 only, UGH_minus at k >= 0 only"


class WeightMismatch(ShadowlabError):
    hint = "use weights_from_measures on the same measure sequence"


class InvalidConfig(ShadowlabError):
    hint = "see `shadowlab <command> --help`"
