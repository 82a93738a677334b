"""Likelihood-free posteriors from matching-support proportions.

Candidates drawn from a prior are weighted by the fraction of repeated
pseudo-samples that fall within a tolerance of the observed data, with
exact Kolmogorov-distance matching in one dimension and random-projection
half-space matching in higher dimensions.
"""

from .bounds import (
    PmatchBound,
    ToleranceBound,
    dkw_tail,
    epsilon_upper_conditional,
    epsilon_upper_devroye,
    epsilon_upper_unconditional,
    g_function,
    pmatch_lower_bound,
)
from .calibration import (
    DEFAULT_QUANTILE_LEVELS,
    QuantileTable,
    ToleranceChoice,
    build_quantile_table,
    default_probes,
    render_table,
    select_tolerance,
    table_from_csv,
    table_to_csv,
)
from .empirical import (
    KS1D,
    EmpiricalCdf,
    MatchSpec,
    ParametricAbs,
    ProjectedTV,
    Sample,
    ecdf_eval,
    ks_distance,
    match,
    project,
    projected_tv,
    sample_directions,
    sample_from_csv,
    sample_to_csv,
)
from .inference import (
    MODE_ABC_FLAT,
    MODE_FILTERED,
    MODE_FOR_ALL,
    PMATCH_WEIGHTED,
    UNWEIGHTED,
    EmptyPosteriorError,
    Posterior,
    PosteriorAtom,
    SummaryStats,
    abc_reject,
    atoms_from_csv,
    atoms_to_csv,
    expected_h,
    extend_abc_to_fabc,
    fabc,
    match_distances,
    pmatch,
    pool_duplicates,
    posterior_to_json,
    summarize,
)
from .models import (
    BivariateNormal,
    GenerativeModel,
    GridDiscretization,
    Normal1D,
    UniformBox,
    normal_cdf,
    prior_draw,
)
from .rng import RngTree

__version__ = "0.1.0"
