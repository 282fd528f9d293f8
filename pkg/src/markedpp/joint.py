"""Joint model assembly: parameters, priors, likelihood, posterior.

The joint log likelihood is the mark Bernoulli term plus the Poisson
process term, sharing one set of per-point intensities. The posterior
is unnormalized (Metropolis-Hastings only needs ratios).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .grid import riemann_integral
from .intensity import CovariateStack, IntensityParams, intensity_at, intensity_field
from .mark import IntensityLink, MarkedPattern, MarkParams, log_lik_mark


@dataclass(frozen=True)
class PriorSpec:
    """Gamma(a, b) prior on lambda0; independent zero-mean normals elsewhere."""

    a: float = 0.01
    b: float = 0.01
    sigma2_beta: float = 100.0
    sigma2_xi: float = 100.0
    sigma2_alpha: float = 100.0

    def __post_init__(self):
        for name in ("a", "b", "sigma2_beta", "sigma2_xi", "sigma2_alpha"):
            if getattr(self, name) <= 0:
                raise ValueError(f"prior hyper-parameter {name} must be positive")

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "sigma2_beta": self.sigma2_beta,
            "sigma2_xi": self.sigma2_xi,
            "sigma2_alpha": self.sigma2_alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ModelParams:
    """Full parameter vector (lambda0, beta, xi, alpha) plus the xi switch.

    With ``xi_enabled`` False the intensity coefficient is pinned at 0
    and excluded from sampling and from the prior.
    """

    intensity: IntensityParams
    mark: MarkParams
    xi_enabled: bool = True

    def __post_init__(self):
        if not self.xi_enabled and self.mark.xi != 0.0:
            object.__setattr__(self, "mark", replace(self.mark, xi=0.0))

    def to_dict(self) -> dict:
        return {
            "lambda0": self.intensity.lambda0,
            "beta": [float(b) for b in self.intensity.beta],
            "scale": self.intensity.scale,
            "xi": self.mark.xi,
            "alpha": [float(a) for a in self.mark.alpha],
            "xi_enabled": self.xi_enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            intensity=IntensityParams(
                lambda0=float(d["lambda0"]),
                beta=np.asarray(d.get("beta", []), dtype=float),
                scale=float(d.get("scale", 1.0)),
            ),
            mark=MarkParams(
                xi=float(d.get("xi", 0.0)),
                alpha=np.asarray(d.get("alpha", []), dtype=float),
            ),
            xi_enabled=bool(d.get("xi_enabled", True)),
        )


_LOG_2PI = math.log(2.0 * math.pi)


def _normal_logpdf_sum(x: np.ndarray, sigma2: float) -> float:
    x = np.atleast_1d(x)
    if x.size == 0:
        return 0.0
    return float(-0.5 * (x.size * (_LOG_2PI + math.log(sigma2)) + (x * x).sum() / sigma2))


def gamma_logpdf(x: float, a: float, b: float) -> float:
    """Log density of Gamma(shape a, rate b); -inf for x <= 0."""
    if x <= 0.0:
        return -math.inf
    return a * math.log(b) - math.lgamma(a) + (a - 1.0) * math.log(x) - b * x


def log_prior(params: ModelParams, prior: PriorSpec) -> float:
    """Joint log prior density. Returns -inf for lambda0 <= 0 rather
    than raising, so samplers may propose freely."""
    lp = gamma_logpdf(params.intensity.lambda0, prior.a, prior.b)
    lp += _normal_logpdf_sum(params.intensity.beta, prior.sigma2_beta)
    if params.xi_enabled:
        lp += _normal_logpdf_sum(np.array([params.mark.xi]), prior.sigma2_xi)
    lp += _normal_logpdf_sum(params.mark.alpha, prior.sigma2_alpha)
    return lp


def log_joint_likelihood(pattern: MarkedPattern, params: ModelParams,
                         covs: CovariateStack,
                         link: IntensityLink = IntensityLink()) -> float:
    """Mark log likelihood plus intensity log likelihood, with the
    per-point intensities computed once and shared by both factors."""
    lam_field = intensity_field(params.intensity, covs)
    total = riemann_integral(lam_field)
    if pattern.n:
        lam = intensity_at(pattern.locations, params.intensity, covs)
        ll_int = float(np.sum(np.log(lam))) - total
        v = link.values(lam, lam_field)
    else:
        ll_int = -total
        v = np.zeros(0)
    ll_mark = log_lik_mark(pattern.marks, v, pattern.mark_covariates,
                           params.mark, pattern.link_scaled)
    return ll_int + ll_mark


def log_posterior(pattern: MarkedPattern, params: ModelParams,
                  covs: CovariateStack, prior: PriorSpec,
                  link: IntensityLink = IntensityLink()) -> float:
    lp = log_prior(params, prior)
    if not math.isfinite(lp):
        return -math.inf
    return log_joint_likelihood(pattern, params, covs, link) + lp


class ModelData:
    """Packed arrays for repeated likelihood evaluation of one data set.

    Holds the per-point and per-cell covariate matrices plus the mark
    design so the kernels can be called with plain arrays. Instances are
    immutable after construction and safe to share across chains.
    """

    def __init__(self, pattern: MarkedPattern, covs: CovariateStack,
                 link: IntensityLink = IntensityLink()):
        miss = ~covs.grid.domain.contains(pattern.locations) if pattern.n else np.zeros(0, bool)
        if pattern.n and miss.any():
            raise ValueError(f"{int(miss.sum())} pattern locations outside the domain")
        self.pattern = pattern
        self.covs = covs
        self.link = link
        self.x_pts = np.ascontiguousarray(covs.values_at(pattern.locations)
                                          if pattern.n else np.zeros((0, covs.p)))
        self.x_cells = np.ascontiguousarray(covs.cell_matrix)
        self.z = np.ascontiguousarray(pattern.mark_covariates)
        self.link_mask = np.ascontiguousarray(pattern.link_mask)
        self.marks = np.ascontiguousarray(pattern.marks)
        self.cell_area = covs.grid.cell_area
        self.n = pattern.n
        self.p = covs.p
        self.q = pattern.q

    def loglik_parts(self, params: ModelParams):
        """(ll_intensity, ll_mark, v_base, vscale, exp_sum, sum_eta)."""
        return _kernels.joint_parts(
            math.log(params.intensity.lambda0),
            params.intensity.beta,
            params.mark.xi,
            params.mark.alpha,
            self.x_pts, self.x_cells, self.z, self.link_mask, self.marks,
            self.cell_area, math.log(params.intensity.scale), self.link.code,
        )

    def log_joint_likelihood(self, params: ModelParams) -> float:
        ll_int, ll_mark = self.loglik_parts(params)[:2]
        return ll_int + ll_mark

    def log_posterior(self, params: ModelParams, prior: PriorSpec) -> float:
        if params.intensity.lambda0 <= 0:
            return -math.inf
        return self.log_joint_likelihood(params) + log_prior(params, prior)
