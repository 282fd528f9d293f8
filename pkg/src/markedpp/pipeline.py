"""End-to-end fitting pipeline for shot-chart data plus surface exports.

A RunConfig fully describes one fit: data path, covariate selection,
prior, chain settings, link, and model variant. Artifacts embed the
config hash and seed, and all files are written atomically.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np

from . import court
from .basis import basis_covariates, load_basis_set
from .grid import Field, write_field_csv
from .intensity import CovariateStack, intensity_field
from .joint import ModelParams, PriorSpec
from .mark import (IntensityLink, MarkedPattern, build_mark_covariates,
                   effective_mark_matrix, success_probs, MARK_COLUMNS)
from .mcmc import (ChainConfig, PosteriorDraws, Summary, effective_diagnostics,
                   run_chain, summarize)
from .selection import CriteriaReport, criteria_report, posterior_mean_params
from .shotdata import load_shot_csv

RHAT_WARN = 1.1


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


@dataclass(frozen=True)
class RunConfig:
    data_csv: str
    seed: int
    basis_dir: str | None = None
    intensity_bases: tuple[str, ...] | None = None
    mark_columns: tuple[str, ...] = MARK_COLUMNS
    mark_labels_drop: tuple[str, ...] = ()
    xi_enabled: bool = True
    link: str = "max_normalized"
    scale: float = 1.0
    n_iter: int = 60_000
    n_burnin: int = 20_000
    thin: int = 10
    interval_kind: str = "hpd95"
    prior: PriorSpec = field(default_factory=PriorSpec)
    out_dir: str | None = None

    def __post_init__(self):
        if "intercept" in self.mark_labels_drop:
            raise ValueError("the mark intercept is never dropped")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["prior"] = self.prior.to_dict()
        for key in ("intensity_bases", "mark_columns", "mark_labels_drop"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "prior" in d and isinstance(d["prior"], dict):
            d["prior"] = PriorSpec.from_dict(d["prior"])
        for key in ("intensity_bases", "mark_columns", "mark_labels_drop"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path, **overrides) -> "RunConfig":
        with open(path) as fh:
            d = json.load(fh)
        d.update(overrides)
        return cls.from_dict(d)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def chain_config(self) -> ChainConfig:
        return ChainConfig(n_iter=self.n_iter, n_burnin=self.n_burnin,
                           thin=self.thin, seed=self.seed)


@dataclass
class FitResult:
    config: RunConfig
    pattern: MarkedPattern
    covs: CovariateStack
    draws: PosteriorDraws
    summary: Summary
    criteria: CriteriaReport
    diagnostics: dict
    params_mean: ModelParams
    n_dropped_rows: int

    @property
    def converged(self) -> bool:
        return all(v["split_rhat"] <= RHAT_WARN for v in self.diagnostics.values())


def _build_inputs(config: RunConfig):
    loaded = load_shot_csv(config.data_csv)
    pattern = loaded.pattern
    if config.basis_dir is not None:
        covs = basis_covariates(load_basis_set(config.basis_dir))
        if config.intensity_bases is not None:
            covs = covs.subset(config.intensity_bases)
    else:
        covs = CovariateStack.empty(court.court_grid())
    z, labels, scaled = build_mark_covariates(pattern, config.mark_columns)
    if config.mark_labels_drop:
        unknown = [c for c in config.mark_labels_drop if c not in labels]
        if unknown:
            raise ValueError(f"cannot drop unknown mark columns {unknown}")
        keep = [j for j, lab in enumerate(labels)
                if lab not in config.mark_labels_drop]
        z = z[:, keep]
        scaled = tuple(scaled[j] for j in keep)
        labels = tuple(labels[j] for j in keep)
    pattern = pattern.with_covariates(z, labels, scaled)
    return pattern, covs, loaded.n_dropped


def fit(config: RunConfig, write: bool = True) -> FitResult:
    """Full pipeline: ingest, assemble covariates, sample, summarize,
    compute criteria, and (optionally) write artifacts."""
    pattern, covs, n_dropped = _build_inputs(config)
    link = IntensityLink(config.link)
    draws = run_chain(pattern, covs, config.prior, config.chain_config(),
                      link=link, scale=config.scale,
                      xi_enabled=config.xi_enabled)
    summary = summarize(draws, config.interval_kind)
    criteria = criteria_report(pattern, draws, covs, link, config.scale)
    diagnostics = effective_diagnostics(draws)
    result = FitResult(
        config=config, pattern=pattern, covs=covs, draws=draws,
        summary=summary, criteria=criteria, diagnostics=diagnostics,
        params_mean=posterior_mean_params(draws, config.scale),
        n_dropped_rows=n_dropped)
    if write and config.out_dir:
        write_fit_artifacts(result)
    return result


def write_fit_artifacts(result: FitResult) -> None:
    out = result.config.out_dir
    os.makedirs(out, exist_ok=True)
    meta = {"config_hash": result.config.config_hash(),
            "seed": result.config.seed}
    result.draws.to_csv(os.path.join(out, "draws.csv"), meta=meta)
    atomic_write_text(
        os.path.join(out, "summary.json"),
        dump_json({**meta, "summary": result.summary.to_dict(),
                   "acceptance_rates": result.draws.acceptance_rates,
                   "proposal_sds": result.draws.proposal_sds}))
    atomic_write_text(
        os.path.join(out, "criteria.json"),
        dump_json({**meta, "criteria": result.criteria.to_dict()}))
    atomic_write_text(
        os.path.join(out, "params_mean.json"),
        dump_json({**meta, "params": result.params_mean.to_dict()}))
    atomic_write_text(
        os.path.join(out, "diagnostics.json"),
        dump_json({**meta, "converged": result.converged,
                   "rhat_threshold": RHAT_WARN,
                   "diagnostics": result.diagnostics}))
    atomic_write_text(
        os.path.join(out, "manifest.json"),
        dump_json({**meta,
                   "config": result.config.to_dict(),
                   "n_points": result.pattern.n,
                   "n_dropped_rows": result.n_dropped_rows,
                   "files": ["draws.csv", "summary.json", "criteria.json",
                             "params_mean.json", "diagnostics.json"]}))


@dataclass
class TwoStageResult:
    stage1: FitResult
    final: FitResult
    dropped_bases: tuple[str, ...]
    dropped_mark: tuple[str, ...]
    xi_dropped: bool


def two_stage_fit(config: RunConfig) -> TwoStageResult:
    """Fit, drop covariates whose 95% HPD interval covers zero, refit.

    The baseline intensity and the mark intercept are never dropped; a
    zero-covering xi switches the refit to the restricted variant. If
    every mark covariate drops, the refit keeps the intercept alone.
    """
    stage1 = fit(replace(config, out_dir=None), write=False)
    hpd = summarize(stage1.draws, "hpd95")

    def covers_zero(name: str) -> bool:
        row = hpd.row(name)
        return row["ci_low"] <= 0.0 <= row["ci_high"]

    dropped_bases = tuple(
        name for name in stage1.covs.names if covers_zero(f"beta_{name}"))
    kept_bases = tuple(n for n in stage1.covs.names if n not in dropped_bases)
    dropped_mark = tuple(
        lab for lab in stage1.pattern.mark_labels
        if lab != "intercept" and covers_zero(f"alpha_{lab}"))
    xi_dropped = bool(config.xi_enabled and covers_zero("xi"))

    cfg2 = replace(
        config,
        intensity_bases=kept_bases if config.basis_dir else None,
        mark_labels_drop=tuple(sorted(set(config.mark_labels_drop) | set(dropped_mark))),
        xi_enabled=config.xi_enabled and not xi_dropped,
    )
    final = fit(cfg2)
    return TwoStageResult(stage1=stage1, final=final,
                          dropped_bases=dropped_bases,
                          dropped_mark=dropped_mark, xi_dropped=xi_dropped)


def export_surfaces(params: ModelParams, covs: CovariateStack,
                    link: IntensityLink, mark_labels, link_scaled,
                    out_dir, pattern: MarkedPattern | None = None,
                    score_mode: str = "points",
                    meta: dict | None = None) -> dict:
    """Write fitted intensity, success-probability, and expected-score
    surfaces as grid CSVs; returns the three fields.

    The probability surface slices non-spatial covariates at reference
    levels: period 1, median seconds_left, opp_playoff 0; distance and
    the three-point indicator come from cell geometry.
    """
    if score_mode not in ("points", "rate"):
        raise ValueError("score_mode must be 'points' or 'rate'")
    grid = covs.grid
    lam_field = intensity_field(params.intensity, covs)
    centers = grid.cell_centers
    v_cells = link.values(lam_field.values.ravel(), lam_field)

    secs_ref = 0.0
    if pattern is not None and pattern.meta and "seconds_left" in pattern.meta:
        secs_ref = float(np.median(pattern.meta["seconds_left"]))
    cols = []
    for lab in mark_labels:
        if lab == "intercept":
            cols.append(np.ones(grid.n_cells))
        elif lab == "intensity_x_3pt":
            cols.append(court.is_three_point_region(centers).astype(float))
        elif lab == "distance":
            cols.append(court.distance_to_basket(centers))
        elif lab == "seconds_left":
            cols.append(np.full(grid.n_cells, secs_ref))
        elif lab.startswith("period_") or lab == "opp_playoff":
            cols.append(np.zeros(grid.n_cells))
        else:
            raise ValueError(f"no reference rule for mark covariate {lab!r}")
    z_cells = np.column_stack(cols) if cols else np.zeros((grid.n_cells, 0))
    theta = success_probs(v_cells, z_cells, params.mark, link_scaled)
    theta_field = Field(grid, theta.reshape(grid.n_x, grid.n_y))

    score = lam_field.values.ravel() * theta
    if score_mode == "points":
        score = score * court.shot_value(centers)
    score_field = Field(grid, score.reshape(grid.n_x, grid.n_y))

    os.makedirs(out_dir, exist_ok=True)
    write_field_csv(lam_field, os.path.join(out_dir, "intensity.csv"), meta)
    write_field_csv(theta_field, os.path.join(out_dir, "theta.csv"), meta)
    write_field_csv(score_field, os.path.join(out_dir, "score.csv"), meta)
    return {"intensity": lam_field, "theta": theta_field, "score": score_field}
