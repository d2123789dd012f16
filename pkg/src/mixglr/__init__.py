"""Sequential tests of a simple null against finitely many alternatives.

The mixture likelihood ratio test (MiLRT) and the weighted generalized
likelihood ratio test (WGLRT), with renewal-theoretic design of weights and
thresholds, asymptotic approximations and a Monte Carlo engine.
"""

__version__ = "0.1.0"

from .asymptotics import (  # noqa: E402
    Approximation,
    GaussianClusterStats,
    c_penalty,
    corrected_ess_from_prior,
    corrected_ess_under_hi,
    error_approximations,
    gaussian_cluster,
    gaussian_max_expectation,
    minimax_value,
    performance_loss,
    sprt_ess,
    test_ess_under_h0,
    test_ess_under_hi,
    weighted_ess,
)
from .design import (  # noqa: E402
    CONSERVATIVE,
    CORRECTED,
    Design,
    Prior,
    ThresholdRule,
    design,
    make_prior,
    reference_weights,
    thresholds,
    weights_from_prior,
)
from .errors import ConfigError, DesignError, DomainError, MixGLRError, NumericError, UsageError  # noqa: E402
from .models import (  # noqa: E402
    ChannelFamily,
    GenericModel,
    ModelSuite,
    TwoPointChannel,
    exponential_suite,
    gaussian_suite,
    load_suite,
    loglr_increment,
    mixture_loglr,
    sample,
    suite_from_dict,
)
from .oracle import OracleResult, bernoulli_oracle, wald_ruin  # noqa: E402
from .renewal import (  # noqa: E402
    OvershootEstimate,
    RenewalConstants,
    bhattacharyya,
    kl_numbers,
    l_number_series,
    order_alternatives,
    overshoot_constants_closed,
    overshoot_mc,
    renewal_constants,
)
from .sequential import (  # noqa: E402
    MILRT,
    SPRT,
    WGLRT,
    TestConfig,
    TestState,
    Truncated,
    Verdict,
    Weights,
    decomposition_terms,
    new_state,
    run_on_path,
    run_to_verdict,
    step,
)
from .simulate import (  # noqa: E402
    SimPlan,
    SimReport,
    crossing_times,
    kl_until_stopping,
    run_mc,
    simulate_paths,
    type1_importance_sampling,
)
