"""Basis shot-type covariates: kernel intensity estimates per player,
factorized across players by non-negative matrix factorization.

The resulting bases are archetypal intensity surfaces. Normalized to
unit sum, they serve directly as the spatial covariate stack of the
intensity model, so fitted coefficients are comparable across players.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import DomainGrid, Field, read_field_csv, write_field_csv
from .intensity import CovariateStack

SILVERMAN_EXPONENT = -1.0 / 6.0  # 2-d rule-of-thumb rate


def silverman_bandwidth(points: np.ndarray, floor: float = 1.5) -> float:
    """Per-axis 1.06 sigma N^(-1/6) rule, averaged over axes, floored.

    The floor (in domain units) keeps single-player estimates from
    collapsing onto individual shots.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    if n < 2:
        return floor
    sd = pts.std(axis=0, ddof=1).mean()
    return max(floor, 1.06 * sd * n ** SILVERMAN_EXPONENT)


def kernel_intensity(points: np.ndarray, grid: DomainGrid,
                     bandwidth: float | None = None,
                     bandwidth_floor: float = 1.5) -> Field:
    """Isotropic Gaussian kernel intensity estimate on the grid.

    Each point contributes unit mass, so the field integrates to about
    the point count (mass falling outside the domain is lost; there is
    no edge correction). An empty point set yields the zero field.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return Field(grid, np.zeros((grid.n_x, grid.n_y)))
    h = bandwidth if bandwidth is not None else silverman_bandwidth(pts, bandwidth_floor)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    values = _kernels.kde_grid(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
        np.asarray(grid.x_centers), np.asarray(grid.y_centers), float(h))
    return Field(grid, values)


@dataclass
class NMFResult:
    w: np.ndarray           # (n_rows, rank) weights
    h: np.ndarray           # (rank, n_cols) bases
    objectives: np.ndarray  # Frobenius error after each iteration


def nmf(v: np.ndarray, rank: int, n_iter: int = 500, seed: int = 0,
        eps: float = 1e-12) -> NMFResult:
    """Multiplicative-update NMF minimizing squared Frobenius error.

    Factors stay entrywise non-negative and the objective is
    non-increasing across iterations (Lee-Seung updates). Random
    uniform initialization, deterministic given the seed.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("NMF input must be non-negative")
    if not 1 <= rank <= min(v.shape):
        raise ValueError(f"rank must be in [1, {min(v.shape)}], got {rank}")
    rng = np.random.default_rng(seed)
    avg = math.sqrt(max(v.mean(), eps) / rank)
    w = avg * rng.random((v.shape[0], rank)) + eps
    h = avg * rng.random((rank, v.shape[1])) + eps
    objectives = np.empty(n_iter)
    for t in range(n_iter):
        h *= (w.T @ v) / (w.T @ w @ h + eps)
        w *= (v @ h.T) / (w @ (h @ h.T) + eps)
        objectives[t] = np.linalg.norm(v - w @ h)
    return NMFResult(w=w, h=h, objectives=objectives)


@dataclass(frozen=True)
class IntensityMatrixSet:
    """Per-player kernel intensity fields on a shared grid."""

    players: tuple[str, ...]
    fields: tuple[Field, ...]
    grid: DomainGrid
    min_shots: int = 50

    def matrix(self) -> np.ndarray:
        """(n_players, n_cells) stack, flat cell order."""
        return np.vstack([f.values.ravel() for f in self.fields])


def estimate_intensity_matrices(player_points: dict[str, np.ndarray],
                                grid: DomainGrid, min_shots: int = 50,
                                bandwidth: float | None = None) -> IntensityMatrixSet:
    """Kernel intensity estimate per player, keeping players with at
    least ``min_shots`` points."""
    players, fields = [], []
    for name in sorted(player_points):
        pts = np.asarray(player_points[name], dtype=float).reshape(-1, 2)
        if pts.shape[0] < min_shots:
            continue
        players.append(name)
        fields.append(kernel_intensity(pts, grid, bandwidth))
    return IntensityMatrixSet(tuple(players), tuple(fields), grid, min_shots)


@dataclass(frozen=True)
class BasisSet:
    """Non-negative basis fields (unit sum each) with per-player weights.

    Bases are ordered by descending total weight so "basis_1" is the
    most load-bearing shot type in the input population.
    """

    grid: DomainGrid
    bases: tuple[Field, ...]
    weights: np.ndarray          # (n_players, rank), scale absorbed from bases
    players: tuple[str, ...]
    seed: int = 0

    @property
    def rank(self) -> int:
        return len(self.bases)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"basis_{i + 1}" for i in range(self.rank))


def compute_basis_set(mats: IntensityMatrixSet, rank: int = 10,
                      n_iter: int = 500, seed: int = 0) -> BasisSet:
    """Factorize the players-by-cells intensity matrix and normalize
    each basis to unit sum, absorbing the scale into the weights."""
    v = mats.matrix()
    res = nmf(v, rank, n_iter=n_iter, seed=seed)
    sums = res.h.sum(axis=1)
    safe = np.where(sums > 0, sums, 1.0)
    weights = res.w * sums[None, :]
    order = np.argsort(-weights.sum(axis=0), kind="stable")
    bases = tuple(
        Field(mats.grid, (res.h[j] / safe[j]).reshape(mats.grid.n_x, mats.grid.n_y))
        for j in order
    )
    return BasisSet(mats.grid, bases, weights[:, order], mats.players, seed)


def basis_covariates(basis_set: BasisSet) -> CovariateStack:
    """The basis fields as the spatial covariate stack X(s)."""
    return CovariateStack(basis_set.grid, basis_set.bases, basis_set.names)


def save_basis_set(basis_set: BasisSet, out_dir) -> None:
    """One grid CSV per basis plus a JSON manifest."""
    os.makedirs(out_dir, exist_ok=True)
    for name, fld in zip(basis_set.names, basis_set.bases):
        write_field_csv(fld, os.path.join(out_dir, f"{name}.csv"))
    manifest = {
        "rank": basis_set.rank,
        "names": list(basis_set.names),
        "normalization": "unit_sum",
        "ordering": "descending_total_weight",
        "seed": basis_set.seed,
        "players": list(basis_set.players),
        "weights": [[float(w) for w in row] for row in basis_set.weights],
        "grid": {
            "n_x": basis_set.grid.n_x,
            "n_y": basis_set.grid.n_y,
            "domain": [basis_set.grid.domain.x_min, basis_set.grid.domain.x_max,
                       basis_set.grid.domain.y_min, basis_set.grid.domain.y_max],
        },
    }
    with open(os.path.join(out_dir, "basis_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_basis_set(in_dir) -> BasisSet:
    with open(os.path.join(in_dir, "basis_manifest.json")) as fh:
        manifest = json.load(fh)
    fields = []
    grid = None
    for name in manifest["names"]:
        fld = read_field_csv(os.path.join(in_dir, f"{name}.csv"))
        grid = fld.grid
        fields.append(fld)
    fields = tuple(Field(grid, f.values) for f in fields)
    return BasisSet(
        grid=grid,
        bases=fields,
        weights=np.asarray(manifest["weights"], dtype=float),
        players=tuple(manifest["players"]),
        seed=int(manifest["seed"]),
    )
