"""Tweedie and geometric Tweedie models: densities, fitting and discrimination."""
from .core import (
    POISSON_ALPHA,
    DomainError,
    EvaluationError,
    Family,
    ModelSpec,
    PowerParam,
    ScenarioError,
    SelectionError,
    SeriesConvergenceError,
    Support,
    SupportKind,
    TweedieError,
    kappa_of_mean,
    matched_geometric_dispersion,
    theta_of_mean,
    variation_index,
    zero_mass,
)
from .density import (
    DensityValue,
    SeriesPolicy,
    a_series,
    cdf,
    density,
    quantile,
    sample,
    tweedie_cdf,
    tweedie_logpdf,
)
from .geometric import (
    MixtureMonteCarlo,
    MixtureQuadrature,
    gauss_laguerre,
    geom_cdf,
    geom_density_gl,
    geom_density_mc,
    geom_logpdf,
    geom_sample,
    geom_zero_mass,
)
from .divergence import KlEstimate, kl_curve, kl_estimate
from .inference import (
    Analytic,
    Candidate,
    Criterion,
    EcdfFromSamples,
    FitResult,
    Sample,
    SelectionOutcome,
    fit,
    ksd,
    log_likelihood,
    lrt,
    select,
)
from .pcs import PcsRow, PcsTable, Scenario, run_grid, run_scenario
from .datasets import AIRPLANE, PUMPS, Dataset

__version__ = "0.1.0"
