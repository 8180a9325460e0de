"""Numerical tests for shadowing and generalized hyperbolicity of weighted shifts
and of composition operators on dissipative measure systems."""

__version__ = "0.1.0"

from .errors import ShadowlabError
from .rates import Classification, Kind, RateEstimate
from .measure_core import (ExpAbs, Geometric, MeasureSequence, SpaceParams, SubCellMeasures,
                           Witness, check_bounded_distortion, classify_measures, find_witness)
from .density_rn import (DensityModel, check_bounded_ratio, classify_density, density_from_spec,
                         envelopes, measures_from_density, subcells_from_density)
from .shift_ops import (LpVector, WeightSequence, classify_shift, norm_growth,
                        weights_from_measures)
from .shadowing import (PseudoTrajectory, SplitOperator, make_pseudotrajectory, shadow,
                        solve_perturbed_orbit)
from .factor_map import (SimpleFunction, apply_Tf, check_commuting, class_membership,
                         project_pi, required_constant, selector)

__all__ = [name for name in dir() if not name.startswith("_")]
