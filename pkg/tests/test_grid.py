import math

import numpy as np
import pytest

from markedpp.grid import (Domain, DomainGrid, Field, OutOfDomainError,
                           read_field_csv, riemann_integral, write_field_csv)

UNIT = Domain(-1.0, 1.0, -1.0, 1.0)

# sinh(2) * (e - 1/e), the exact integral of exp(2x + y) over [-1, 1]^2
EXACT_EXP_INTEGRAL = math.sinh(2.0) * (math.e - 1.0 / math.e)


def exp_field(n):
    grid = DomainGrid(UNIT, n, n)
    return Field.from_function(grid, lambda x, y: np.exp(2 * x + y))


class TestDomain:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            Domain(1.0, 1.0, 0.0, 2.0)
        with pytest.raises(ValueError):
            Domain(0.0, 1.0, 5.0, 2.0)

    def test_area(self):
        assert UNIT.area == 4.0
        assert Domain(0, 50, 0, 35).area == 1750.0

    def test_contains_closed(self):
        inside = UNIT.contains([(-1, -1), (1, 1), (0, 0), (1.0001, 0)])
        assert inside.tolist() == [True, True, True, False]


class TestCellOf:
    def test_lower_corner(self):
        grid = DomainGrid(UNIT, 100, 100)
        ix, iy = grid.cell_of([(-1.0, -1.0)])
        assert (ix[0], iy[0]) == (0, 0)

    def test_max_boundary_maps_to_last_cell(self):
        grid = DomainGrid(UNIT, 100, 100)
        ix, iy = grid.cell_of([(1.0, 1.0)])
        assert (ix[0], iy[0]) == (99, 99)

    def test_interior_by_hand(self):
        # floor((0.01 - (-1)) / 0.02) = floor(50.5) = 50 on both axes
        grid = DomainGrid(UNIT, 100, 100)
        ix, iy = grid.cell_of([(0.01, 0.01)])
        assert (ix[0], iy[0]) == (50, 50)

    def test_outside_raises(self):
        grid = DomainGrid(UNIT, 10, 10)
        with pytest.raises(OutOfDomainError):
            grid.cell_of([(1.5, 0.0)])

    def test_cell_centers_cover_domain(self):
        grid = DomainGrid(Domain(0, 50, 0, 35), 50, 35)
        centers = grid.cell_centers
        assert centers.shape == (50 * 35, 2)
        assert centers[0].tolist() == [0.5, 0.5]
        assert centers[-1].tolist() == [49.5, 34.5]
        # flat order is row-major over (n_x, n_y)
        assert centers[1].tolist() == [0.5, 1.5]


class TestFieldLookup:
    def test_constant_field(self):
        grid = DomainGrid(UNIT, 7, 3)
        f = Field.constant(grid, 2.5)
        pts = np.array([(-1, -1), (0.3, 0.9), (1, 1)])
        assert np.all(f.value_at(pts) == 2.5)

    def test_coordinate_field_near_boundary(self):
        grid = DomainGrid(UNIT, 100, 100)
        f = Field.from_function(grid, lambda x, y: x)
        # (0.99, 0) falls in column 99 whose center x is 0.99
        assert f.value_at([(0.99, 0.0)])[0] == pytest.approx(0.99, abs=1e-12)

    def test_two_cell_grid(self):
        grid = DomainGrid(Domain(0, 2, 0, 1), 2, 1)
        f = Field(grid, np.array([[1.0], [2.0]]))
        assert f.value_at([(1.5, 0.5)])[0] == 2.0
        assert f.value_at([(0.5, 0.5)])[0] == 1.0

    def test_lookup_at_cell_centers_is_exact(self):
        grid = DomainGrid(UNIT, 13, 9)
        rng = np.random.default_rng(5)
        f = Field(grid, rng.standard_normal((13, 9)))
        got = f.value_at(grid.cell_centers)
        assert np.array_equal(got, f.values.ravel())

    def test_rejects_wrong_shape_and_nonfinite(self):
        grid = DomainGrid(UNIT, 4, 4)
        with pytest.raises(ValueError):
            Field(grid, np.zeros((4, 5)))
        bad = np.zeros((4, 4))
        bad[1, 2] = np.nan
        with pytest.raises(ValueError):
            Field(grid, bad)

    def test_values_are_immutable(self):
        grid = DomainGrid(UNIT, 2, 2)
        f = Field.constant(grid, 1.0)
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0


class TestRiemannIntegral:
    def test_constant(self):
        grid = DomainGrid(UNIT, 10, 10)
        assert riemann_integral(Field.constant(grid, 3.0)) == pytest.approx(12.0)

    def test_odd_symmetry(self):
        grid = DomainGrid(UNIT, 64, 64)
        f = Field.from_function(grid, lambda x, y: x)
        assert riemann_integral(f) == pytest.approx(0.0, abs=1e-12)

    def test_exp_integral_against_analytic(self):
        val = riemann_integral(exp_field(100))
        assert val == pytest.approx(EXACT_EXP_INTEGRAL, abs=1e-2)

    def test_linearity(self):
        grid = DomainGrid(UNIT, 30, 30)
        rng = np.random.default_rng(11)
        f = Field(grid, rng.random((30, 30)))
        g = Field(grid, rng.random((30, 30)))
        combo = Field(grid, 2.5 * f.values - 1.25 * g.values)
        lhs = riemann_integral(combo)
        rhs = 2.5 * riemann_integral(f) - 1.25 * riemann_integral(g)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_refinement_shrinks_error(self):
        err_coarse = abs(riemann_integral(exp_field(50)) - EXACT_EXP_INTEGRAL)
        err_fine = abs(riemann_integral(exp_field(200)) - EXACT_EXP_INTEGRAL)
        assert err_coarse / err_fine >= 3.0


class TestFieldCsv:
    def test_round_trip(self, tmp_path):
        grid = DomainGrid(Domain(0, 5, 0, 4), 5, 4)
        rng = np.random.default_rng(3)
        f = Field(grid, rng.standard_normal((5, 4)))
        path = tmp_path / "field.csv"
        write_field_csv(f, path, meta={"config_hash": "abc", "seed": 1})
        back = read_field_csv(path)
        assert np.array_equal(back.values, f.values)
        assert back.grid == grid

    def test_header_and_order(self, tmp_path):
        grid = DomainGrid(Domain(0, 2, 0, 2), 2, 2)
        f = Field(grid, np.array([[1.0, 2.0], [3.0, 4.0]]))
        path = tmp_path / "f.csv"
        write_field_csv(f, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y,value"
        # row-major flat order: (0.5,0.5), (0.5,1.5), (1.5,0.5), (1.5,1.5)
        assert lines[1].split(",") == ["0.5", "0.5", "1.0"]
        assert lines[2].split(",") == ["0.5", "1.5", "2.0"]
