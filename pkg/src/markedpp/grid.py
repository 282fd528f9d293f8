"""Rectangular spatial domain, grid discretization, fields, and quadrature.

Every likelihood evaluation in the package reduces integrals over the
domain to midpoint-rule sums over this grid, and covariates are
piecewise-constant fields read at the cell containing each point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class OutOfDomainError(ValueError):
    """Raised when a point lies outside the closed spatial domain."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate domain: [{self.x_min}, {self.x_max}] x "
                f"[{self.y_min}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of an (N, 2) array inside the closed domain."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (pts[:, 0] >= self.x_min)
            & (pts[:, 0] <= self.x_max)
            & (pts[:, 1] >= self.y_min)
            & (pts[:, 1] <= self.y_max)
        )


@dataclass(frozen=True)
class DomainGrid:
    """Regular n_x by n_y partition of a domain.

    Cells are indexed by (ix, iy) with ix along x. The flat enumeration
    is row-major over the (n_x, n_y) value matrix, i.e. ``ix * n_y + iy``.
    Field values are attached to cell centers.
    """

    domain: Domain
    n_x: int
    n_y: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("grid resolution must be positive")

    @property
    def dx(self) -> float:
        return self.domain.width / self.n_x

    @property
    def dy(self) -> float:
        return self.domain.height / self.n_y

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def n_cells(self) -> int:
        return self.n_x * self.n_y

    @cached_property
    def x_centers(self) -> np.ndarray:
        c = self.domain.x_min + self.dx * (np.arange(self.n_x) + 0.5)
        c.flags.writeable = False
        return c

    @cached_property
    def y_centers(self) -> np.ndarray:
        c = self.domain.y_min + self.dy * (np.arange(self.n_y) + 0.5)
        c.flags.writeable = False
        return c

    @cached_property
    def cell_centers(self) -> np.ndarray:
        """(n_cells, 2) array of centers in flat enumeration order."""
        xx, yy = np.meshgrid(self.x_centers, self.y_centers, indexing="ij")
        c = np.column_stack([xx.ravel(), yy.ravel()])
        c.flags.writeable = False
        return c

    def cell_of(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map points to (ix, iy) cell indices.

        Points on the maximum boundary belong to the last cell; points
        outside the closed domain raise :class:`OutOfDomainError`.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.domain.contains(pts)
        if not inside.all():
            bad = pts[~inside][0]
            raise OutOfDomainError(
                f"point ({bad[0]}, {bad[1]}) outside domain "
                f"[{self.domain.x_min}, {self.domain.x_max}] x "
                f"[{self.domain.y_min}, {self.domain.y_max}]"
            )
        ix = np.floor((pts[:, 0] - self.domain.x_min) / self.dx).astype(np.int64)
        iy = np.floor((pts[:, 1] - self.domain.y_min) / self.dy).astype(np.int64)
        np.clip(ix, 0, self.n_x - 1, out=ix)
        np.clip(iy, 0, self.n_y - 1, out=iy)
        return ix, iy

    def flat_index(self, points: np.ndarray) -> np.ndarray:
        ix, iy = self.cell_of(points)
        return ix * self.n_y + iy


@dataclass(frozen=True)
class Field:
    """Piecewise-constant scalar field: one finite value per grid cell."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_x, self.grid.n_y):
            raise ValueError(
                f"field shape {v.shape} does not match grid "
                f"({self.grid.n_x}, {self.grid.n_y})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def value_at(self, points: np.ndarray) -> np.ndarray:
        """Piecewise-constant lookup: value of the cell containing each point."""
        ix, iy = self.grid.cell_of(points)
        return self.values[ix, iy]

    @classmethod
    def constant(cls, grid: DomainGrid, value: float) -> "Field":
        return cls(grid, np.full((grid.n_x, grid.n_y), float(value)))

    @classmethod
    def from_function(cls, grid: DomainGrid, fn) -> "Field":
        """Evaluate ``fn(x, y)`` (vectorized) at cell centers."""
        xx, yy = np.meshgrid(grid.x_centers, grid.y_centers, indexing="ij")
        return cls(grid, np.asarray(fn(xx, yy), dtype=float))


def riemann_integral(field: Field) -> float:
    """Midpoint-rule integral: cell_area times the sum of cell values."""
    return field.grid.cell_area * float(field.values.sum())


def atomic_writer(path):
    """Open a temp file beside ``path`` that replaces it on a clean close."""
    import os

    class _Writer:
        def __enter__(self):
            self.tmp = f"{path}.tmp{os.getpid()}"
            self.fh = open(self.tmp, "w", newline="")
            return self.fh

        def __exit__(self, exc_type, exc, tb):
            self.fh.close()
            if exc_type is None:
                os.replace(self.tmp, path)
            else:
                os.unlink(self.tmp)
            return False

    return _Writer()


def write_field_csv(field: Field, path, meta: dict | None = None) -> None:
    """Write a field as ``x,y,value`` rows (cell centers, flat order).

    Optional ``meta`` entries are emitted as leading ``# key=value``
    comment lines, which :func:`read_field_csv` skips. The write is
    atomic (temp file plus rename).
    """
    centers = field.grid.cell_centers
    flat = field.values.ravel()
    with atomic_writer(path) as fh:
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for (x, y), v in zip(centers, flat):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


def read_field_csv(path) -> Field:
    """Reconstruct a field from :func:`write_field_csv` output.

    The grid is inferred from the distinct cell-center coordinates,
    assuming even spacing.
    """
    xs, ys, vs = [], [], []
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(rows)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "y", "value"]:
            raise ValueError(f"unexpected field CSV header: {header}")
        for row in reader:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
            vs.append(float(row[2]))
    x_centers = np.unique(xs)
    y_centers = np.unique(ys)
    n_x, n_y = len(x_centers), len(y_centers)
    if n_x * n_y != len(vs):
        raise ValueError("field CSV does not cover a full grid")
    dx = x_centers[1] - x_centers[0] if n_x > 1 else 1.0
    dy = y_centers[1] - y_centers[0] if n_y > 1 else 1.0
    domain = Domain(
        x_centers[0] - dx / 2,
        x_centers[-1] + dx / 2,
        y_centers[0] - dy / 2,
        y_centers[-1] + dy / 2,
    )
    grid = DomainGrid(domain, n_x, n_y)
    values = np.asarray(vs).reshape(n_x, n_y)
    return Field(grid, values)
