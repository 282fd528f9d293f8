"""Intensity-dependent logistic mark model.

The binary mark at point s follows Bernoulli(theta(s)) with

    logit(theta(s)) = xi * link(lambda(s)) + Z(s)' alpha,

where ``link`` rescales the raw intensity before it enters the linear
predictor. Columns of Z flagged as link-scaled are multiplied by
link(lambda(s)) at evaluation time, which is how the intensity-by-
shot-type interaction enters the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .grid import Field

LINK_MODES = ("raw", "max_normalized", "z_scored")


def _as_design_matrix(z, n_rows: int) -> np.ndarray:
    """Coerce to an (n_rows, q) float matrix; tolerates empty inputs."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        q = z.shape[1] if z.ndim == 2 else 0
        return np.zeros((n_rows, q))
    return z.reshape(n_rows, -1)

_MODE_CODES = {
    "raw": _kernels.LINK_RAW,
    "max_normalized": _kernels.LINK_MAX,
    "z_scored": _kernels.LINK_ZSCORE,
}


@dataclass(frozen=True)
class IntensityLink:
    """How the intensity enters the mark model.

    max_normalized divides lambda(s) by the maximum over grid cells
    (values in (0, 1]); z_scored standardizes against the cell values;
    raw passes lambda(s) through unchanged.
    """

    mode: str = "max_normalized"

    def __post_init__(self):
        if self.mode not in LINK_MODES:
            raise ValueError(f"unknown link mode {self.mode!r}; use one of {LINK_MODES}")

    @property
    def code(self) -> int:
        return _MODE_CODES[self.mode]

    def values(self, lambdas: np.ndarray, intensity_field: Field) -> np.ndarray:
        """Transform raw per-point intensities given the fitted surface."""
        lam = np.asarray(lambdas, dtype=float)
        cells = intensity_field.values
        if self.mode == "raw":
            return lam.copy()
        if self.mode == "max_normalized":
            return lam / float(cells.max())
        sd = float(cells.std())
        if sd == 0.0:
            return np.zeros_like(lam)
        return (lam - float(cells.mean())) / sd


@dataclass(frozen=True)
class MarkParams:
    """Intensity coefficient xi and mark-covariate coefficients alpha."""

    xi: float = 0.0
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if not np.isfinite(self.xi):
            raise ValueError("xi must be finite")
        if not np.all(np.isfinite(a)):
            raise ValueError("alpha must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "alpha", a)

    @property
    def q(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class MarkedPattern:
    """Observed locations with binary marks and per-point mark covariates.

    ``mark_covariates`` is the N x q matrix Z; ``link_scaled`` flags the
    columns that are multiplied by link(lambda(s)) when the linear
    predictor is evaluated. ``meta`` optionally carries raw per-point
    records (shot_type, distance, period, seconds_left, opp_playoff).
    """

    locations: np.ndarray
    marks: np.ndarray
    mark_covariates: np.ndarray = None
    mark_labels: tuple[str, ...] = ()
    link_scaled: tuple[bool, ...] = ()
    meta: dict = None

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float).reshape(-1, 2)
        marks = np.asarray(self.marks, dtype=float).ravel()
        if marks.shape[0] != locs.shape[0]:
            raise ValueError(
                f"{locs.shape[0]} locations but {marks.shape[0]} marks"
            )
        if marks.size and not np.all((marks == 0.0) | (marks == 1.0)):
            raise ValueError("marks must be binary")
        z = self.mark_covariates
        if z is None:
            z = np.zeros((locs.shape[0], 0))
        z = _as_design_matrix(z, locs.shape[0])
        labels = tuple(self.mark_labels)
        scaled = tuple(self.link_scaled)
        if labels and len(labels) != z.shape[1]:
            raise ValueError("one label per mark covariate column required")
        if not labels:
            labels = tuple(f"z{j + 1}" for j in range(z.shape[1]))
        if not scaled:
            scaled = tuple(False for _ in range(z.shape[1]))
        if len(scaled) != z.shape[1]:
            raise ValueError("one link_scaled flag per column required")
        for arr in (locs, marks, z):
            arr.flags.writeable = False
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "mark_covariates", z)
        object.__setattr__(self, "mark_labels", labels)
        object.__setattr__(self, "link_scaled", scaled)

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def q(self) -> int:
        return self.mark_covariates.shape[1]

    def with_covariates(self, z, labels, link_scaled=None) -> "MarkedPattern":
        return replace(
            self,
            mark_covariates=z,
            mark_labels=tuple(labels),
            link_scaled=tuple(link_scaled) if link_scaled is not None else (),
        )

    @property
    def link_mask(self) -> np.ndarray:
        return np.asarray(self.link_scaled, dtype=float)


def effective_mark_matrix(z: np.ndarray, link_scaled, link_vals: np.ndarray) -> np.ndarray:
    """Z with link-scaled columns multiplied by the per-point link values."""
    z = np.asarray(z, dtype=float)
    out = z.copy()
    for j, scaled in enumerate(link_scaled):
        if scaled:
            out[:, j] = z[:, j] * link_vals
    return out


def mark_logits(link_vals: np.ndarray, z: np.ndarray, params: MarkParams,
                link_scaled=None) -> np.ndarray:
    """Linear predictor xi * v + Z(v)' alpha for each point."""
    v = np.asarray(link_vals, dtype=float)
    z = _as_design_matrix(z, v.shape[0])
    if z.shape[1] != params.q:
        raise ValueError(f"alpha has length {params.q} but Z has {z.shape[1]} columns")
    if link_scaled is not None and any(link_scaled):
        z = effective_mark_matrix(z, link_scaled, v)
    out = params.xi * v
    if params.q:
        out = out + z @ params.alpha
    return out


def success_probs(link_vals, z, params: MarkParams, link_scaled=None) -> np.ndarray:
    """theta(s) per point, always inside (0, 1) for finite logits."""
    t = mark_logits(link_vals, z, params, link_scaled)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-t))


def log_lik_mark(marks: np.ndarray, link_vals: np.ndarray, z: np.ndarray,
                 params: MarkParams, link_scaled=None) -> float:
    """Bernoulli log likelihood via the stable log-sigmoid form."""
    marks = np.asarray(marks, dtype=float).ravel()
    v = np.asarray(link_vals, dtype=float).ravel()
    if marks.shape[0] != v.shape[0]:
        raise ValueError(f"{marks.shape[0]} marks but {v.shape[0]} intensities")
    z = _as_design_matrix(z, marks.shape[0])
    mask = np.zeros(z.shape[1])
    if link_scaled is not None:
        mask = np.asarray(link_scaled, dtype=float)
    return _kernels.mark_loglik(v, 1.0, z, mask, params.xi, params.alpha, marks)


def simulate_marks(link_vals, z, params: MarkParams, rng,
                   link_scaled=None) -> np.ndarray:
    """Independent Bernoulli draws at the model probabilities."""
    rng = np.random.default_rng(rng)
    theta = success_probs(link_vals, z, params, link_scaled)
    return (rng.random(theta.shape[0]) < theta).astype(np.int64)


def mark_mse(marks, thetas) -> float:
    """Mean squared error between observed marks and fitted probabilities."""
    m = np.asarray(marks, dtype=float).ravel()
    t = np.asarray(thetas, dtype=float).ravel()
    if m.shape[0] == 0:
        raise ValueError("mark MSE undefined for an empty pattern")
    if m.shape[0] != t.shape[0]:
        raise ValueError("marks and fitted probabilities differ in length")
    return float(np.mean((m - t) ** 2))


# Canonical mark-covariate columns in their fixed assembly order.
MARK_COLUMNS = (
    "intercept",
    "intensity_x_3pt",
    "distance",
    "seconds_left",
    "periods",
    "opp_playoff",
)


def build_mark_covariates(pattern: MarkedPattern, columns=MARK_COLUMNS,
                          link_vals: np.ndarray | None = None):
    """Assemble the mark design matrix from per-point metadata.

    Column order is fixed: intercept, intensity-by-3pt interaction,
    distance, seconds_left, period dummies (2 through 5, period 1 as
    reference), opp_playoff. The interaction column holds the 3pt
    indicator and is flagged link-scaled so the sampler multiplies it by
    link(lambda(s)) per draw; passing ``link_vals`` instead bakes fixed
    link values into the column.

    Returns (Z, labels, link_scaled).
    """
    meta = pattern.meta or {}
    n = pattern.n
    cols, labels, scaled = [], [], []

    def need(key):
        if key not in meta:
            raise ValueError(f"mark covariate needs missing meta field {key!r}")
        return np.asarray(meta[key], dtype=float).ravel()

    for name in MARK_COLUMNS:
        if name not in columns:
            continue
        if name == "intercept":
            cols.append(np.ones(n))
            labels.append("intercept")
            scaled.append(False)
        elif name == "intensity_x_3pt":
            ind = (need("shot_type") == 3).astype(float)
            if link_vals is not None:
                ind = ind * np.asarray(link_vals, dtype=float).ravel()
                scaled.append(False)
            else:
                scaled.append(True)
            cols.append(ind)
            labels.append("intensity_x_3pt")
        elif name == "distance":
            cols.append(need("distance"))
            labels.append("distance")
            scaled.append(False)
        elif name == "seconds_left":
            cols.append(need("seconds_left"))
            labels.append("seconds_left")
            scaled.append(False)
        elif name == "periods":
            period = need("period")
            for k in range(2, 6):
                cols.append((period == k).astype(float))
                labels.append(f"period_{k}")
                scaled.append(False)
        elif name == "opp_playoff":
            cols.append(need("opp_playoff"))
            labels.append("opp_playoff")
            scaled.append(False)

    unknown = [c for c in columns if c not in MARK_COLUMNS]
    if unknown:
        raise ValueError(f"unknown mark covariate columns: {unknown}")
    z = np.column_stack(cols) if cols else np.zeros((n, 0))
    return z, tuple(labels), tuple(scaled)
