"""Non-homogeneous Poisson process: intensity surface, likelihood, simulation.

The intensity is log-linear in spatially varying covariates,

    lambda(s) = scale * lambda0 * exp(X(s)' beta),

with ``scale`` a fixed, known multiplier (1 by default; 100 in the
simulation designs) and the covariates X read from piecewise-constant
grid fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import Domain, DomainGrid, Field, atomic_writer, riemann_integral


@dataclass(frozen=True)
class IntensityParams:
    """Baseline intensity, covariate coefficients, and fixed multiplier.

    lambda0 <= 0 is storable (the posterior treats it as a rejected
    state with density zero) but every intensity evaluation requires a
    positive baseline.
    """

    lambda0: float
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: float = 1.0

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if not np.isfinite(self.lambda0):
            raise ValueError(f"lambda0 must be finite, got {self.lambda0}")
        if self.scale <= 0 or not np.isfinite(self.scale):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not np.all(np.isfinite(b)):
            raise ValueError("beta must be finite")
        b.flags.writeable = False
        object.__setattr__(self, "beta", b)

    @property
    def p(self) -> int:
        return self.beta.shape[0]


@dataclass(frozen=True)
class CovariateStack:
    """Spatial covariate fields sharing one grid, with labels.

    An empty stack (p = 0) describes a homogeneous process; the grid is
    still required because it carries the quadrature.
    """

    grid: DomainGrid
    fields: tuple[Field, ...] = ()
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.fields) != len(self.names):
            raise ValueError("one name per covariate field required")
        for f in self.fields:
            if f.grid != self.grid:
                raise ValueError("all covariate fields must share the stack grid")

    @property
    def p(self) -> int:
        return len(self.fields)

    @cached_property
    def cell_matrix(self) -> np.ndarray:
        """(n_cells, p) covariate values at cell centers, flat cell order."""
        if self.p == 0:
            m = np.zeros((self.grid.n_cells, 0))
        else:
            m = np.column_stack([f.values.ravel() for f in self.fields])
        m.flags.writeable = False
        return m

    def values_at(self, points: np.ndarray) -> np.ndarray:
        """(N, p) covariate values at the cells containing the points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.p == 0:
            return np.zeros((pts.shape[0], 0))
        idx = self.grid.flat_index(pts)
        return self.cell_matrix[idx]

    def subset(self, names) -> "CovariateStack":
        keep = list(names)
        missing = [n for n in keep if n not in self.names]
        if missing:
            raise ValueError(f"unknown covariates: {missing}")
        pairs = [(f, n) for f, n in zip(self.fields, self.names) if n in keep]
        return CovariateStack(
            self.grid,
            tuple(f for f, _ in pairs),
            tuple(n for _, n in pairs),
        )

    @classmethod
    def empty(cls, grid: DomainGrid) -> "CovariateStack":
        return cls(grid)

    @classmethod
    def coordinates(cls, grid: DomainGrid) -> "CovariateStack":
        """The two coordinate covariates x and y as grid fields."""
        fx = Field.from_function(grid, lambda x, y: x)
        fy = Field.from_function(grid, lambda x, y: y)
        return cls(grid, (fx, fy), ("x", "y"))


def _check_baseline(params: IntensityParams, strict: bool) -> None:
    if params.lambda0 < 0 or (strict and params.lambda0 == 0):
        raise ValueError(f"lambda0 must be positive, got {params.lambda0}")


def intensity_at(points: np.ndarray, params: IntensityParams,
                 covs: CovariateStack) -> np.ndarray:
    """lambda(s) at each point, covariates read from the containing cell."""
    _check_baseline(params, strict=False)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x = covs.values_at(pts)
    if x.shape[1] != params.p:
        raise ValueError(
            f"beta has length {params.p} but stack provides {x.shape[1]} covariates"
        )
    return params.scale * params.lambda0 * np.exp(x @ params.beta)


def intensity_field(params: IntensityParams, covs: CovariateStack) -> Field:
    """Intensity surface evaluated at every cell center."""
    _check_baseline(params, strict=False)
    if covs.p != params.p:
        raise ValueError(
            f"beta has length {params.p} but stack provides {covs.p} covariates"
        )
    eta = covs.cell_matrix @ params.beta if params.p else np.zeros(covs.grid.n_cells)
    values = params.scale * params.lambda0 * np.exp(eta)
    return Field(covs.grid, values.reshape(covs.grid.n_x, covs.grid.n_y))


def log_lik_intensity(points: np.ndarray, params: IntensityParams,
                      covs: CovariateStack) -> float:
    """Poisson process log likelihood: sum of log lambda(s_i) minus the
    grid-quadrature integral of the intensity over the domain."""
    _check_baseline(params, strict=True)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    lam_field = intensity_field(params, covs)
    total = riemann_integral(lam_field)
    if pts.shape[0] == 0:
        return -total
    lam = intensity_at(pts, params, covs)
    return float(np.sum(np.log(lam))) - total


def simulate_nhpp(params: IntensityParams, covs: CovariateStack,
                  rng) -> np.ndarray:
    """Simulate point locations by dominating-rate thinning.

    A homogeneous candidate process at the maximum cell intensity is
    thinned with probability lambda(s) / lambda_max. Because the
    intensity is itself piecewise constant on the grid, the dominating
    rate is exact and no safety factor is needed. Deterministic given
    the generator state.
    """
    rng = np.random.default_rng(rng)
    lam_field = intensity_field(params, covs)
    lam_max = float(lam_field.values.max())
    if not np.isfinite(lam_max):
        raise ValueError("intensity field is not finite")
    domain = covs.grid.domain
    if lam_max <= 0.0:
        return np.zeros((0, 2))
    n_hom = rng.poisson(lam_max * domain.area)
    xs = rng.uniform(domain.x_min, domain.x_max, n_hom)
    ys = rng.uniform(domain.y_min, domain.y_max, n_hom)
    if n_hom == 0:
        return np.zeros((0, 2))
    pts = np.column_stack([xs, ys])
    keep = rng.random(n_hom) * lam_max < lam_field.value_at(pts)
    return pts[keep]


def write_points_csv(points: np.ndarray, path, meta: dict | None = None) -> None:
    """Serialize a point pattern as an ``x,y`` CSV with a header row."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    with atomic_writer(path) as fh:
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in pts:
            writer.writerow([repr(float(x)), repr(float(y))])


def read_points_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(rows)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "y"]:
            raise ValueError(f"unexpected points CSV header: {header}")
        pts = [(float(r[0]), float(r[1])) for r in reader]
    return np.asarray(pts, dtype=float).reshape(-1, 2)
