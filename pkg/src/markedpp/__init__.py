"""Bayesian joint modeling of marked spatial point processes.

Non-homogeneous Poisson intensity with spatial covariates, an
intensity-dependent logistic mark model, MH-within-Gibbs posterior
sampling, decomposed DIC/LPML model comparison, NMF basis covariates,
Ward clustering of fitted coefficients, and a simulation-study harness.
"""

from .grid import Domain, DomainGrid, Field, OutOfDomainError, riemann_integral
from .intensity import (CovariateStack, IntensityParams, intensity_at,
                        intensity_field, log_lik_intensity, simulate_nhpp)
from .mark import (IntensityLink, MarkedPattern, MarkParams,
                   build_mark_covariates, log_lik_mark, mark_mse,
                   simulate_marks, success_probs)
from .joint import (ModelData, ModelParams, PriorSpec, log_joint_likelihood,
                    log_posterior, log_prior)
from .mcmc import (ChainConfig, PosteriorDraws, Summary, effective_diagnostics,
                   run_chain, summarize)
from .selection import (CriteriaReport, compare_xi_models, criteria_report,
                        deviance_intensity, deviance_mark, dic,
                        lpml_intensity, lpml_mark)
from .basis import (BasisSet, IntensityMatrixSet, basis_covariates,
                    compute_basis_set, estimate_intensity_matrices,
                    kernel_intensity, nmf)
from .cluster import Dendrogram, FeatureTable, cut_tree, ward_cluster
from .simstudy import RecoveryReport, SimDesign, format_report, run_design
from .pipeline import RunConfig, export_surfaces, fit, two_stage_fit

__version__ = "0.1.0"

__all__ = [
    "Domain", "DomainGrid", "Field", "OutOfDomainError", "riemann_integral",
    "CovariateStack", "IntensityParams", "intensity_at", "intensity_field",
    "log_lik_intensity", "simulate_nhpp",
    "IntensityLink", "MarkedPattern", "MarkParams", "build_mark_covariates",
    "log_lik_mark", "mark_mse", "simulate_marks", "success_probs",
    "ModelData", "ModelParams", "PriorSpec", "log_joint_likelihood",
    "log_posterior", "log_prior",
    "ChainConfig", "PosteriorDraws", "Summary", "effective_diagnostics",
    "run_chain", "summarize",
    "CriteriaReport", "compare_xi_models", "criteria_report",
    "deviance_intensity", "deviance_mark", "dic", "lpml_intensity", "lpml_mark",
    "BasisSet", "IntensityMatrixSet", "basis_covariates", "compute_basis_set",
    "estimate_intensity_matrices", "kernel_intensity", "nmf",
    "Dendrogram", "FeatureTable", "cut_tree", "ward_cluster",
    "RecoveryReport", "SimDesign", "format_report", "run_design",
    "RunConfig", "export_surfaces", "fit", "two_stage_fit",
    "__version__",
]
