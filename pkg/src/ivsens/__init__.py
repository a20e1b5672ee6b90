"""Sensitivity analysis for matched-pair instrumental-variable studies."""

from .adjusted import AdjustedDiffs, GammaShifted, adjusted_diffs, gamma_shift, shift_factor
from .core import (DataError, DegenerateInstrumentError, MatchedPair, PairedDataset,
                   SensitivityParams, effect_ratio_estimate, validate_dataset)
from .design_sens import MixtureSpec, abs_moment, design_sensitivity, table5
from .heterogeneity import OmnibusResult, f_statistic, omnibus_test, prop_dose_p
from .mcnemar import McNemarDecomp, check_equivalence, mcnemar_decompose, mcnemar_sens_p
from .nonbipartite import (DistanceMatrix, PairsOfPairs, mahalanobis_matrix, min_weight_pairing,
                           pair_odd, pair_pairs)
from .reference import (ReferenceSampler, SensInterval, SensResult, SensitivityValue,
                        reference_draw, reference_exact, sens_interval, sens_test,
                        sensitivity_value)
from .variance import (QDesign, build_q_groups, build_q_intercept, build_q_regression, se_pop,
                       se_q)

__version__ = "0.1.0"
