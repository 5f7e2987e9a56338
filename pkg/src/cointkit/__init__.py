"""Unit-root, structural-break cointegration, VECM and causality toolkit."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .data import (
    AlignmentRoles,
    MarketPanel,
    ObservationSeries,
    apply_closing_time_alignment,
    build_panel,
    descriptive_stats,
    difference,
    lag,
    log_transform,
    read_panel_csv,
    rebase_to_relative,
    write_panel_csv,
)
from .distributions import chi_square_survival, f_survival
from .linreg import (
    AdlSpec,
    DesignMatrix,
    RegressionFit,
    adl_fit,
    cusum_sq_test,
    cusum_test,
    lop_coefficient_sum_test,
    ols_fit,
    schwarz_criterion,
    wald_linear_restriction,
)
from .unitroot import DeterministicSpec, adf_test, kpss_test, long_run_variance
from .cointegration import (
    BreakDummy,
    BreakModel,
    StatisticKind,
    breakpoint_grid,
    engle_granger_test,
    gh_fit_at,
    gh_test,
    phillips_z,
)
from .vecm import (
    beta_restriction_test,
    homogeneity_restriction,
    johansen_rank_test,
    levels_var_fit,
    var_sum_integration_test,
    vecm_estimate,
)
from .causality import causality_matrix, granger_test
from .simulate import DgpSpec, generate, monte_carlo

