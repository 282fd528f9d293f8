"""Bayesian model comparison: decomposed DIC and LPML.

Both criteria split into an intensity part and a conditional mark part;
the joint value is their sum by construction. The intensity LPML uses
the Monte Carlo estimator with per-point harmonic-mean intensities and
the integrated arithmetic-mean surface; the mark LPML is the usual sum
of log conditional predictive ordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .intensity import CovariateStack, IntensityParams, intensity_at, intensity_field
from .joint import ModelParams, PriorSpec
from .mark import IntensityLink, MarkedPattern, MarkParams, log_lik_mark
from .mcmc import ChainConfig, PosteriorDraws, run_chain
from .grid import riemann_integral

# probabilities are clamped at this floor only inside CPO denominators
CPO_EPS = 1e-12
_LOG_CPO_EPS = math.log(CPO_EPS)

COMPONENTS = ("joint", "intensity", "mark")

# rule-of-thumb decision thresholds
DIC_SUBSTANTIAL = 10.0
LPML_VERY_STRONG = 4.5


@dataclass
class CriteriaReport:
    dic_joint: float
    dic_intensity: float
    dic_mark: float
    pd_joint: float
    pd_intensity: float
    pd_mark: float
    lpml_joint: float
    lpml_intensity: float
    lpml_mark: float
    cpo_clamped: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def deviance_intensity(pattern: MarkedPattern, params: ModelParams,
                       covs: CovariateStack) -> float:
    """-2 times the Poisson process log likelihood."""
    from .intensity import log_lik_intensity

    return -2.0 * log_lik_intensity(pattern.locations, params.intensity, covs)


def deviance_mark(pattern: MarkedPattern, params: ModelParams,
                  covs: CovariateStack,
                  link: IntensityLink = IntensityLink()) -> float:
    """-2 times the Bernoulli mark log likelihood at the given parameters."""
    if pattern.n:
        lam_field = intensity_field(params.intensity, covs)
        lam = intensity_at(pattern.locations, params.intensity, covs)
        v = link.values(lam, lam_field)
    else:
        v = np.zeros(0)
    return -2.0 * log_lik_mark(pattern.marks, v, pattern.mark_covariates,
                               params.mark, pattern.link_scaled)


def deviance_joint(pattern, params, covs, link=IntensityLink()) -> float:
    return deviance_intensity(pattern, params, covs) + deviance_mark(
        pattern, params, covs, link)


def params_from_draw(row: np.ndarray, columns, scale: float = 1.0) -> ModelParams:
    """Rebuild ModelParams from one row of a draws matrix."""
    cols = list(columns)
    lam0 = float(row[cols.index("lambda0")])
    beta = np.array([row[i] for i, c in enumerate(cols) if c.startswith("beta_")])
    alpha = np.array([row[i] for i, c in enumerate(cols) if c.startswith("alpha_")])
    xi_enabled = "xi" in cols
    xi = float(row[cols.index("xi")]) if xi_enabled else 0.0
    return ModelParams(
        intensity=IntensityParams(lambda0=lam0, beta=beta, scale=scale),
        mark=MarkParams(xi=xi, alpha=alpha),
        xi_enabled=xi_enabled,
    )


def posterior_mean_params(draws: PosteriorDraws, scale: float = 1.0) -> ModelParams:
    """Theta-bar: column-wise posterior means on the natural scales."""
    return params_from_draw(draws.draws.mean(axis=0), draws.columns, scale)


class _DrawSweep:
    """One chunked pass over the draws, accumulating everything the
    criteria need: per-draw log likelihoods, the arithmetic-mean
    intensity surface, per-point harmonic-mean intensities, and
    streaming log CPO terms."""

    def __init__(self, pattern: MarkedPattern, draws: PosteriorDraws,
                 covs: CovariateStack, link: IntensityLink,
                 scale: float = 1.0, chunk: int = 256):
        cols = list(draws.columns)
        d = draws.draws
        k = d.shape[0]
        lam0s = d[:, cols.index("lambda0")]
        beta_ix = [i for i, c in enumerate(cols) if c.startswith("beta_")]
        alpha_ix = [i for i, c in enumerate(cols) if c.startswith("alpha_")]
        betas = d[:, beta_ix]
        alphas = d[:, alpha_ix]
        xis = d[:, cols.index("xi")] if "xi" in cols else np.zeros(k)

        x_cells = covs.cell_matrix
        x_pts = covs.values_at(pattern.locations) if pattern.n else np.zeros((0, covs.p))
        z = pattern.mark_covariates
        mask = pattern.link_mask.astype(bool)
        z_static = z[:, ~mask]
        z_dyn = z[:, mask]
        marks = pattern.marks
        n = pattern.n
        n_cells = covs.grid.n_cells
        cell_area = covs.grid.cell_area

        self.ll_int = np.empty(k)
        self.ll_mark = np.empty(k)
        mean_cell_lambda = np.zeros(n_cells)
        inv_lambda_sum = np.zeros(n)
        # streaming log-sum-exp of -log f over draws, per point
        lse_max = np.full(n, -np.inf)
        lse_sum = np.zeros(n)
        clamped = 0

        for lo in range(0, k, chunk):
            hi = min(lo + chunk, k)
            b = betas[lo:hi]
            l0 = lam0s[lo:hi]
            a = alphas[lo:hi]
            xi = xis[lo:hi]
            kk = hi - lo

            eta_c = x_cells @ b.T if b.shape[1] else np.zeros((n_cells, kk))
            exp_c = np.exp(eta_c)
            exp_sum = exp_c.sum(axis=0)
            lam_c = (scale * l0)[None, :] * exp_c
            mean_cell_lambda += lam_c.sum(axis=1)
            integral = cell_area * scale * l0 * exp_sum

            eta_p = x_pts @ b.T if b.shape[1] else np.zeros((n, kk))
            self.ll_int[lo:hi] = (n * np.log(scale * l0) + eta_p.sum(axis=0)
                                  - integral)

            if link.mode == "raw":
                v = (scale * l0)[None, :] * np.exp(eta_p)
            elif link.mode == "max_normalized":
                v = np.exp(eta_p - eta_c.max(axis=0)[None, :])
            else:
                mu = exp_c.mean(axis=0)
                sd = exp_c.std(axis=0)
                sd = np.where(sd > 0, sd, np.inf)
                v = (np.exp(eta_p) - mu[None, :]) / sd[None, :]

            lam_pts = (scale * l0)[None, :] * np.exp(eta_p)
            if np.any(lam_pts <= 0):
                raise ValueError("nonpositive draw intensity at a data point")
            inv_lambda_sum += (1.0 / lam_pts).sum(axis=1)

            logits = v * xi[None, :]
            if z_dyn.shape[1]:
                logits = logits + v * (z_dyn @ a[:, mask].T)
            if z_static.shape[1]:
                logits = logits + z_static @ a[:, ~mask].T
            # log f(m_i | draw): log sigmoid(logit) or log sigmoid(-logit)
            sign = 2.0 * marks[:, None] - 1.0
            logf = -np.logaddexp(0.0, -sign * logits)
            self.ll_mark[lo:hi] = logf.sum(axis=0)

            clamped += int(np.count_nonzero(logf < _LOG_CPO_EPS))
            neg = -np.maximum(logf, _LOG_CPO_EPS)
            m = neg.max(axis=1)
            grow = m > lse_max
            lse_sum[grow] *= np.exp(lse_max[grow] - m[grow])
            lse_max[grow] = m[grow]
            lse_sum += np.exp(neg - lse_max[:, None]).sum(axis=1)

        self.k = k
        self.n = n
        self.clamped = clamped
        self.mean_intensity_integral = cell_area * float(mean_cell_lambda.sum()) / k
        with np.errstate(divide="ignore"):
            self.log_harmonic_lambda = np.log(k) - np.log(inv_lambda_sum) if n else np.zeros(0)
        # log CPO_i = log K - logsumexp_k(-log f_ik)
        self.log_cpo = (np.log(k) - (lse_max + np.log(lse_sum))) if n else np.zeros(0)


def lpml_intensity(pattern: MarkedPattern, draws: PosteriorDraws,
                   covs: CovariateStack, scale: float = 1.0,
                   _sweep: _DrawSweep | None = None) -> float:
    """Sum of log harmonic-mean intensities minus the integrated
    arithmetic-mean intensity surface."""
    sweep = _sweep or _DrawSweep(pattern, draws, covs, IntensityLink(), scale)
    return float(sweep.log_harmonic_lambda.sum() - sweep.mean_intensity_integral)


def lpml_mark(pattern: MarkedPattern, draws: PosteriorDraws,
              covs: CovariateStack, link: IntensityLink = IntensityLink(),
              scale: float = 1.0, _sweep: _DrawSweep | None = None) -> float:
    """Sum of log conditional predictive ordinates for the marks."""
    sweep = _sweep or _DrawSweep(pattern, draws, covs, link, scale)
    return float(sweep.log_cpo.sum())


def dic(pattern: MarkedPattern, draws: PosteriorDraws, covs: CovariateStack,
        link: IntensityLink = IntensityLink(), component: str = "joint",
        scale: float = 1.0, _sweep: _DrawSweep | None = None) -> dict:
    """Deviance information criterion Dev(theta-bar) + 2 p_D for the
    requested component, with p_D = mean deviance minus deviance at the
    posterior mean."""
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}")
    sweep = _sweep or _DrawSweep(pattern, draws, covs, link, scale)
    at_mean = posterior_mean_params(draws, scale)
    if component == "intensity":
        dev_draws = -2.0 * sweep.ll_int
        dev_at_mean = deviance_intensity(pattern, at_mean, covs)
    elif component == "mark":
        dev_draws = -2.0 * sweep.ll_mark
        dev_at_mean = deviance_mark(pattern, at_mean, covs, link)
    else:
        dev_draws = -2.0 * (sweep.ll_int + sweep.ll_mark)
        dev_at_mean = deviance_joint(pattern, at_mean, covs, link)
    dev_mean = float(dev_draws.mean())
    p_d = dev_mean - dev_at_mean
    return {"dic": dev_at_mean + 2.0 * p_d, "p_d": p_d,
            "dev_at_mean": dev_at_mean, "dev_mean": dev_mean}


def criteria_report(pattern: MarkedPattern, draws: PosteriorDraws,
                    covs: CovariateStack,
                    link: IntensityLink = IntensityLink(),
                    scale: float = 1.0) -> CriteriaReport:
    """All criteria from one pass over the draws."""
    sweep = _DrawSweep(pattern, draws, covs, link, scale)
    d_int = dic(pattern, draws, covs, link, "intensity", scale, _sweep=sweep)
    d_mark = dic(pattern, draws, covs, link, "mark", scale, _sweep=sweep)
    d_joint = dic(pattern, draws, covs, link, "joint", scale, _sweep=sweep)
    l_int = lpml_intensity(pattern, draws, covs, scale, _sweep=sweep)
    l_mark = lpml_mark(pattern, draws, covs, link, scale, _sweep=sweep)
    return CriteriaReport(
        dic_joint=d_joint["dic"],
        dic_intensity=d_int["dic"],
        dic_mark=d_mark["dic"],
        pd_joint=d_joint["p_d"],
        pd_intensity=d_int["p_d"],
        pd_mark=d_mark["p_d"],
        lpml_joint=l_int + l_mark,
        lpml_intensity=l_int,
        lpml_mark=l_mark,
        cpo_clamped=sweep.clamped,
    )


@dataclass
class XiComparison:
    report_free: CriteriaReport
    report_zero: CriteriaReport
    draws_free: PosteriorDraws
    draws_zero: PosteriorDraws
    preferred: dict

    def to_dict(self) -> dict:
        return {
            "xi_free": self.report_free.to_dict(),
            "xi_zero": self.report_zero.to_dict(),
            "preferred": self.preferred,
        }


def _prefer(diff: float, threshold: float) -> str:
    if diff > threshold:
        return "xi_free"
    if diff < -threshold:
        return "xi_zero"
    return "indistinguishable"


def compare_xi_models(pattern: MarkedPattern, covs: CovariateStack,
                      prior: PriorSpec, config: ChainConfig,
                      link: IntensityLink = IntensityLink(),
                      scale: float = 1.0) -> XiComparison:
    """Fit the model with xi free and with xi restricted to zero under
    identical seeds, and flag the preferred model per criterion.

    DIC differences beyond 10 are treated as substantial; LPML
    differences beyond 4.5 as very strong.
    """
    draws_free = run_chain(pattern, covs, prior, config, link, scale, xi_enabled=True)
    draws_zero = run_chain(pattern, covs, prior, config, link, scale, xi_enabled=False)
    rep_free = criteria_report(pattern, draws_free, covs, link, scale)
    rep_zero = criteria_report(pattern, draws_zero, covs, link, scale)
    preferred = {
        "dic": _prefer(rep_zero.dic_joint - rep_free.dic_joint, DIC_SUBSTANTIAL),
        "dic_mark": _prefer(rep_zero.dic_mark - rep_free.dic_mark, DIC_SUBSTANTIAL),
        "lpml": _prefer(rep_free.lpml_joint - rep_zero.lpml_joint, LPML_VERY_STRONG),
        "lpml_mark": _prefer(rep_free.lpml_mark - rep_zero.lpml_mark, LPML_VERY_STRONG),
    }
    return XiComparison(rep_free, rep_zero, draws_free, draws_zero, preferred)


def comparison_table(cmp: XiComparison) -> str:
    """Side-by-side text table of both fits' criteria."""
    rows = [
        ("Joint", "DIC", "dic_joint"),
        ("Joint", "LPML", "lpml_joint"),
        ("Intensity", "DIC", "dic_intensity"),
        ("Intensity", "LPML", "lpml_intensity"),
        ("Mark", "DIC", "dic_mark"),
        ("Mark", "LPML", "lpml_mark"),
    ]
    lines = [f"{'component':<10} {'criterion':<9} {'xi free':>12} {'xi = 0':>12}"]
    for comp, crit, attr in rows:
        a = getattr(cmp.report_free, attr)
        b = getattr(cmp.report_zero, attr)
        lines.append(f"{comp:<10} {crit:<9} {a:>12.6g} {b:>12.6g}")
    lines.append(f"preferred: dic={cmp.preferred['dic']}, lpml={cmp.preferred['lpml']}")
    return "\n".join(lines)
