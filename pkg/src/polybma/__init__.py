"""Bayesian polynomial extrapolation with naturalness priors and model averaging."""

__version__ = "0.1.0"

from .toy_functions import (  # noqa: F401
    Dataset,
    UnderlyingFunction,
    draw_validation,
    eval_underlying,
    generate_dataset,
    taylor_coefficients,
)
from .linear_model import build_design, lec_posterior, log_marginal_likelihood, predictive_at  # noqa: F401
from .sigma_marginal import GridConfig, SigmaPrior, build_sigma_grid, fit_fixed_order  # noqa: F401
from .evidence import fit_models, model_weights  # noqa: F401
from .mixture import GaussianMixturePdf, bma_lec, bma_pdf, fixed_order_pdf, hpd_set  # noqa: F401
from .diagnostics import CidConfig, band, cid_run  # noqa: F401
