"""
Heavy-tailed p-value combination (HCCT, EHMP) with exact null
distributions, convex confidence regions, divide-and-combine inference and
network meta-analysis.
"""
from .errors import (BracketError, ConnectivityError, ConvergenceWarning, DomainError,
                     NumericError, SpanError, StateError, UnsupportedWeightsError)
from .nulldist import NullDistribution, Weights, exact_cdf, exact_pdf, get_null, quantile
from .combine import global_pvalue, reject, statistic, threshold
from .confregion import (IntervalResult, RegionHandle, StudySummary1D, SubStudy,
                         adaptive_nonempty, build_region, cct_invert_grid, contains,
                         contour_2d, invert_1d, lower_bound_stat, simultaneous_ci,
                         slice_region)
from .divide_combine import coordinate_blocks, dac_covers, dac_region
from .netmeta import (Contrast, NetworkFit, all_pairwise_cis, build_design, expand_arms,
                      hcct_fit, wls_fit, wls_simultaneous)

__version__ = "0.1.0"
