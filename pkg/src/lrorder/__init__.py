"""Tests of homogeneity against likelihood-ratio ordering for independent
multinomial samples: log-linear reparametrization, phi-divergence statistic
families, chi-bar-squared asymptotics and a Monte Carlo size/power study."""

__version__ = "0.1.0"

from .tables import (  # noqa: F401
    ContingencyTable,
    ProbabilityModel,
    from_counts,
    local_odds_ratios,
    read_table_csv,
    relative_frequencies,
    vec_lex,
)
from .loglinear import (  # noqa: F401
    THETA_CAP,
    DesignSet,
    ThetaParams,
    design_matrices,
    log_likelihood,
    normalization_u,
    probabilities_from_theta,
    row_terms_u1,
    theta_from_probabilities,
)
from .divergence import (  # noqa: F401
    DEFAULT_LAMBDAS,
    CustomPhi,
    PowerDivergence,
    TestOutcome,
    phi_divergence,
    power_divergence,
    statistic_S,
    statistic_T,
)
from .estimate import (  # noqa: F401
    ConstrainedFit,
    kkt_residual,
    mle_h0,
    mle_h1,
)
from .chibar import (  # noqa: F401
    ChiBarWeights,
    HMatrices,
    chibar_pvalue,
    chibar_quantile,
    chisq_survival,
    estimate_weights,
    fisher_information,
    fisher_information_h0,
    h_matrices,
    k_matrix,
    k_matrix_inverse,
    nonneg_projection,
    weights_by_subsets,
    weights_from_json,
    weights_to_json,
)
from .simulate import (  # noqa: F401
    SCENARIOS,
    SimulationConfig,
    SizePowerReport,
    dale_criterion,
    relative_efficiencies,
    run_study,
    sample_row,
    sample_table,
    theoretical_local_odds,
    truth_probabilities,
)
from . import errors  # noqa: F401
