"""Metropolis-Hastings-within-Gibbs sampler and posterior summaries.

One scalar random-walk block per coordinate: log(lambda0), each beta_j,
xi (when enabled), each alpha_j. Proposal standard deviations adapt
toward a target acceptance rate during burn-in only and are frozen
afterwards, preserving the invariant distribution of the retained
draws. The baseline intensity is sampled on the log scale with the
Jacobian folded into the target.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grid import atomic_writer
from .intensity import CovariateStack, IntensityParams
from .joint import ModelData, ModelParams, PriorSpec, gamma_logpdf, _normal_logpdf_sum
from .mark import IntensityLink, MarkedPattern, MarkParams


@dataclass
class ChainConfig:
    n_iter: int = 20_000
    n_burnin: int = 10_000
    thin: int = 1
    seed: int = 0
    adapt_interval: int = 50
    target_accept: float = 0.44
    initial_step: float = 0.1
    init: ModelParams | None = None

    def __post_init__(self):
        if self.n_burnin >= self.n_iter:
            raise ValueError("burn-in must be shorter than the chain")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_retained < 2:
            raise ValueError("need at least 2 retained draws")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.n_burnin) // self.thin


@dataclass
class PosteriorDraws:
    """Retained posterior sample with acceptance diagnostics."""

    draws: np.ndarray
    columns: tuple[str, ...]
    acceptance_rates: dict = field(default_factory=dict)
    proposal_sds: dict = field(default_factory=dict)
    adaptation_log: list = field(default_factory=list)
    config: ChainConfig | None = None

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 2 or d.shape[0] < 1:
            raise ValueError("draws must be a K x dim matrix with K >= 1")
        if d.shape[1] != len(self.columns):
            raise ValueError("one column label per parameter required")
        object.__setattr__(self, "draws", d)
        self.columns = tuple(self.columns)
        if "lambda0" in self.columns and not np.all(self.column("lambda0") > 0):
            raise ValueError("lambda0 draws must be strictly positive")

    @property
    def k(self) -> int:
        return self.draws.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.columns.index(name)]

    def to_csv(self, path, meta: dict | None = None) -> None:
        with atomic_writer(path) as fh:
            for key, val in (meta or {}).items():
                fh.write(f"# {key}={val}\n")
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.draws:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "PosteriorDraws":
        with open(path, newline="") as fh:
            rows = (line for line in fh if not line.startswith("#"))
            reader = csv.reader(rows)
            columns = tuple(next(reader))
            draws = np.asarray([[float(v) for v in row] for row in reader])
        return cls(draws=draws, columns=columns)


def mh_accept(log_ratio: float, rng: np.random.Generator) -> bool:
    """Symmetric-proposal Metropolis decision: accept iff log U < log ratio."""
    if log_ratio >= 0.0:
        rng.random()  # keep the stream aligned regardless of outcome
        return True
    return math.log(rng.random()) < log_ratio


def default_init(pattern: MarkedPattern, covs: CovariateStack, scale: float,
                 xi_enabled: bool) -> ModelParams:
    """Cheap, always-finite start: method-of-moments baseline under flat
    covariates (guarded for empty patterns), all coefficients zero."""
    lam0 = (pattern.n + 0.5) / (scale * covs.grid.domain.area)
    return ModelParams(
        intensity=IntensityParams(lambda0=lam0, beta=np.zeros(covs.p), scale=scale),
        mark=MarkParams(xi=0.0, alpha=np.zeros(pattern.q)),
        xi_enabled=xi_enabled,
    )


class _State:
    """Current chain position plus cached likelihood components."""

    __slots__ = ("u", "beta", "xi", "alpha", "ll_int", "ll_mark",
                 "v_base", "vscale", "exp_sum", "sum_eta", "log_prior")


def run_chain(pattern: MarkedPattern, covs: CovariateStack, prior: PriorSpec,
              config: ChainConfig, link: IntensityLink = IntensityLink(),
              scale: float = 1.0, xi_enabled: bool = True) -> PosteriorDraws:
    """Sample the joint posterior; deterministic given ``config.seed``.

    Raises if the initial state has non-finite posterior or if a
    non-finite log posterior is ever encountered at the current state.
    """
    init = config.init
    if init is not None:
        scale = init.intensity.scale
        xi_enabled = init.xi_enabled
    else:
        init = default_init(pattern, covs, scale, xi_enabled)
    md = ModelData(pattern, covs, link)
    if covs.p != init.intensity.p or pattern.q != init.mark.q:
        raise ValueError("init dimensions do not match data")

    raw_link = link.mode == "raw"
    log_scale = math.log(scale)
    n = md.n
    p, q = md.p, md.q

    st = _State()
    if init.intensity.lambda0 <= 0:
        raise ValueError("initial lambda0 must be positive")
    st.u = math.log(init.intensity.lambda0)
    st.beta = init.intensity.beta.copy()
    st.xi = init.mark.xi
    st.alpha = init.mark.alpha.copy()

    def full_parts(u, beta, xi, alpha):
        return _kernels.joint_parts(
            u, beta, xi, alpha, md.x_pts, md.x_cells, md.z, md.link_mask,
            md.marks, md.cell_area, log_scale, link.code)

    def prior_terms(u, beta, xi, alpha):
        # target prior in u = log(lambda0) coordinates, Jacobian included
        lp = gamma_logpdf(math.exp(u), prior.a, prior.b) + u
        lp += _normal_logpdf_sum(beta, prior.sigma2_beta)
        if xi_enabled:
            lp += _normal_logpdf_sum(np.array([xi]), prior.sigma2_xi)
        lp += _normal_logpdf_sum(alpha, prior.sigma2_alpha)
        return lp

    parts = full_parts(st.u, st.beta, st.xi, st.alpha)
    st.ll_int, st.ll_mark, st.v_base, st.vscale, st.exp_sum, st.sum_eta = parts
    st.log_prior = prior_terms(st.u, st.beta, st.xi, st.alpha)
    cur_target = st.ll_int + st.ll_mark + st.log_prior
    if not math.isfinite(cur_target):
        raise ValueError("initial state has non-finite log posterior")

    blocks = ["lambda0"]
    blocks += [f"beta_{name}" for name in covs.names]
    if xi_enabled:
        blocks.append("xi")
    blocks += [f"alpha_{lab}" for lab in pattern.mark_labels]
    n_blocks = len(blocks)

    rng = np.random.default_rng(config.seed)
    log_step = np.full(n_blocks, math.log(config.initial_step))
    win_acc = np.zeros(n_blocks)
    win_att = np.zeros(n_blocks)
    post_acc = np.zeros(n_blocks)
    post_att = np.zeros(n_blocks)
    adaptation_log: list[dict] = []
    adapt_round = 0

    k_out = config.n_retained
    out = np.empty((k_out, 1 + p + (1 if xi_enabled else 0) + q))
    k_written = 0

    int_const = md.cell_area * scale  # integral = int_const * e^u * exp_sum

    for it in range(1, config.n_iter + 1):
        in_burnin = it <= config.n_burnin
        for b in range(n_blocks):
            eps = rng.normal() * math.exp(log_step[b])
            if b == 0:
                # log(lambda0) block: likelihood pieces move in closed form
                u_new = st.u + eps
                ll_int_new = (n * (log_scale + u_new) + st.sum_eta
                              - int_const * math.exp(u_new) * st.exp_sum)
                if raw_link:
                    vscale_new = math.exp(log_scale + u_new)
                    ll_mark_new = _kernels.mark_loglik(
                        st.v_base, vscale_new, md.z, md.link_mask,
                        st.xi, st.alpha, md.marks)
                else:
                    vscale_new = st.vscale
                    ll_mark_new = st.ll_mark
                lp_new = prior_terms(u_new, st.beta, st.xi, st.alpha)
                prop_target = ll_int_new + ll_mark_new + lp_new
                if mh_accept(prop_target - cur_target, rng):
                    st.u = u_new
                    st.ll_int, st.ll_mark = ll_int_new, ll_mark_new
                    st.vscale, st.log_prior = vscale_new, lp_new
                    cur_target = prop_target
                    accepted = True
                else:
                    accepted = False
            elif b <= p:
                j = b - 1
                beta_new = st.beta.copy()
                beta_new[j] += eps
                parts = full_parts(st.u, beta_new, st.xi, st.alpha)
                lp_new = prior_terms(st.u, beta_new, st.xi, st.alpha)
                prop_target = parts[0] + parts[1] + lp_new
                if mh_accept(prop_target - cur_target, rng):
                    st.beta = beta_new
                    (st.ll_int, st.ll_mark, st.v_base, st.vscale,
                     st.exp_sum, st.sum_eta) = parts
                    st.log_prior = lp_new
                    cur_target = prop_target
                    accepted = True
                else:
                    accepted = False
            else:
                # mark-side blocks leave the intensity cache untouched
                if xi_enabled and b == p + 1:
                    xi_new, alpha_new = st.xi + eps, st.alpha
                else:
                    j = b - 1 - p - (1 if xi_enabled else 0)
                    alpha_new = st.alpha.copy()
                    alpha_new[j] += eps
                    xi_new = st.xi
                ll_mark_new = _kernels.mark_loglik(
                    st.v_base, st.vscale, md.z, md.link_mask,
                    xi_new, alpha_new, md.marks)
                lp_new = prior_terms(st.u, st.beta, xi_new, alpha_new)
                prop_target = st.ll_int + ll_mark_new + lp_new
                if mh_accept(prop_target - cur_target, rng):
                    st.xi, st.alpha = xi_new, alpha_new
                    st.ll_mark, st.log_prior = ll_mark_new, lp_new
                    cur_target = prop_target
                    accepted = True
                else:
                    accepted = False

            if not math.isfinite(cur_target):
                raise FloatingPointError(
                    f"non-finite log posterior at iteration {it}, block {blocks[b]}"
                )
            win_att[b] += 1
            win_acc[b] += accepted
            if not in_burnin:
                post_att[b] += 1
                post_acc[b] += accepted

        if in_burnin and it % config.adapt_interval == 0:
            adapt_round += 1
            gamma = adapt_round ** -0.5
            rates = win_acc / np.maximum(win_att, 1.0)
            log_step += gamma * (rates - config.target_accept)
            np.clip(log_step, -15.0, 10.0, out=log_step)
            win_acc[:] = 0.0
            win_att[:] = 0.0
            adaptation_log.append({
                "iteration": it,
                "steps": {blk: math.exp(s) for blk, s in zip(blocks, log_step)},
            })

        if not in_burnin and (it - config.n_burnin) % config.thin == 0:
            row = [math.exp(st.u)]
            row.extend(st.beta)
            if xi_enabled:
                row.append(st.xi)
            row.extend(st.alpha)
            out[k_written] = row
            k_written += 1

    columns = ["lambda0"]
    columns += [f"beta_{name}" for name in covs.names]
    if xi_enabled:
        columns.append("xi")
    columns += [f"alpha_{lab}" for lab in pattern.mark_labels]

    return PosteriorDraws(
        draws=out[:k_written],
        columns=tuple(columns),
        acceptance_rates={
            blk: float(a / t) if t else math.nan
            for blk, a, t in zip(blocks, post_acc, post_att)
        },
        proposal_sds={blk: math.exp(s) for blk, s in zip(blocks, log_step)},
        adaptation_log=adaptation_log,
        config=config,
    )


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------

INTERVAL_KINDS = ("quantile95", "hpd95")


@dataclass
class Summary:
    columns: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    interval_kind: str

    def row(self, name: str) -> dict:
        i = self.columns.index(name)
        return {
            "mean": float(self.mean[i]),
            "sd": float(self.sd[i]),
            "ci_low": float(self.ci_low[i]),
            "ci_high": float(self.ci_high[i]),
        }

    def covers(self, name: str, value: float) -> bool:
        r = self.row(name)
        return r["ci_low"] <= value <= r["ci_high"]

    def to_dict(self) -> dict:
        return {
            "interval_kind": self.interval_kind,
            "parameters": {name: self.row(name) for name in self.columns},
        }


def hpd_interval(x: np.ndarray, mass: float = 0.95) -> tuple[float, float]:
    """Shortest contiguous window over the sorted sample holding ``mass``."""
    xs = np.sort(np.asarray(x, dtype=float))
    k = xs.shape[0]
    w = min(k, max(2, math.ceil(mass * k)))
    widths = xs[w - 1:] - xs[: k - w + 1]
    i = int(np.argmin(widths))
    return float(xs[i]), float(xs[i + w - 1])


def summarize(draws: PosteriorDraws, interval_kind: str = "quantile95") -> Summary:
    """Posterior mean, SD, and 95% interval per parameter.

    quantile95 uses the empirical 2.5/97.5 percentiles with linear
    interpolation between order statistics; hpd95 uses the shortest
    contiguous window containing 95% of the sorted draws.
    """
    if interval_kind not in INTERVAL_KINDS:
        raise ValueError(f"interval_kind must be one of {INTERVAL_KINDS}")
    d = draws.draws
    if d.shape[0] < 2:
        raise ValueError("need at least 2 draws to summarize")
    mean = d.mean(axis=0)
    sd = d.std(axis=0, ddof=1)
    if interval_kind == "quantile95":
        ci_low = np.percentile(d, 2.5, axis=0)
        ci_high = np.percentile(d, 97.5, axis=0)
    else:
        bounds = np.array([hpd_interval(d[:, j]) for j in range(d.shape[1])])
        ci_low, ci_high = bounds[:, 0], bounds[:, 1]
    return Summary(draws.columns, mean, sd, ci_low, ci_high, interval_kind)


# ---------------------------------------------------------------------------
# convergence diagnostics
# ---------------------------------------------------------------------------

def _autocorrelation(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    xc = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    if acov[0] <= 0:
        out = np.zeros(n)
        out[0] = 1.0
        return out
    return acov / acov[0]


def ess(x: np.ndarray) -> float:
    """Effective sample size via Geyer's initial positive, monotone
    pair-sum sequence."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    rho = _autocorrelation(x)
    tau = 0.0
    prev = math.inf
    m = 0
    while 2 * m + 1 < n:
        gamma = rho[2 * m] + rho[2 * m + 1]
        if gamma <= 0.0:
            break
        gamma = min(gamma, prev)
        tau += gamma
        prev = gamma
        m += 1
    tau = 2.0 * tau - 1.0
    if tau < 1e-12:
        return float(n)
    return float(n / tau)


def split_rhat(x: np.ndarray) -> float:
    """Potential scale reduction of the first vs second half of one chain."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0] // 2
    halves = np.stack([x[:n], x[n:2 * n]])
    w = halves.var(axis=1, ddof=1).mean()
    b = n * halves.mean(axis=1).var(ddof=1)
    if w <= 0.0:
        return 1.0
    var_plus = (n - 1) / n * w + b / n
    return float(math.sqrt(var_plus / w))


def effective_diagnostics(draws: PosteriorDraws) -> dict:
    """Per-parameter {ess, split_rhat}; requires at least 20 draws."""
    if draws.k < 20:
        raise ValueError("need at least 20 draws for diagnostics")
    return {
        name: {
            "ess": ess(draws.column(name)),
            "split_rhat": split_rhat(draws.column(name)),
        }
        for name in draws.columns
    }
