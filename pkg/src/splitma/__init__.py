"""Simulation and estimation for the Gaussian Split-BREAK process and its Split-MA increments."""

from .charfn import (
    MomentTable,
    cf1,
    cf1_factorized,
    cf2,
    cf2_factorized,
    cf_ell,
    cf_ell_factorized,
    cf_eta,
    ecf,
    kurtosis,
    lk_poly,
    moment,
    pdf_x,
)
from .estim import (
    EcfEstimate,
    EcfOptions,
    FeasibilityError,
    MomEstimate,
    empirical_acov,
    estimate_ecf,
    estimate_mom,
    minimize_ecf,
    mom_from_moments,
    nelder_mead,
    objective_s2,
)
from .mc import McConfig, McReport, ad_test, cvm_test, jb_test, run_mc, summarize
from .model import (
    SimulationOutput,
    SplitMaParams,
    acf1,
    cov_sum,
    cov_x,
    cov_y,
    invert,
    make_rng,
    omega_weights,
    reconstruct_martingale,
    simulate,
)
from .quad import (
    CubatureRule,
    QuadratureError,
    RadialRule,
    build_cubature,
    build_radial,
    cubature_for_weight,
    integrate,
    weight_gamma,
)
from .statfun import chi2_1_cdf, chi2_1_quantile, std_normal_cdf

__version__ = "0.1.0"
