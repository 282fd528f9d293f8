import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from markedpp.grid import Domain, DomainGrid
from markedpp.intensity import (CovariateStack, IntensityParams,
                                intensity_at, intensity_field, simulate_nhpp)
from markedpp.mark import IntensityLink, MarkParams, MarkedPattern, simulate_marks

UNIT_DOMAIN = Domain(-1.0, 1.0, -1.0, 1.0)


@pytest.fixture(scope="session")
def unit_grid():
    return DomainGrid(UNIT_DOMAIN, 100, 100)


@pytest.fixture(scope="session")
def coord_covs(unit_grid):
    return CovariateStack.coordinates(unit_grid)


def make_design_dataset(seed, lambda0=1.0, beta=(2.0, 1.0), xi=0.5,
                        alpha=(0.5, 0.8, 1.0), scale=100.0, n_grid=100,
                        link_mode="max_normalized", z2_bernoulli=False):
    """One draw from the simulation design: locations, covariates,
    marks, and the assembled pattern."""
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    grid = DomainGrid(UNIT_DOMAIN, n_grid, n_grid)
    covs = CovariateStack.coordinates(grid)
    ip = IntensityParams(lambda0, np.asarray(beta, float), scale)
    locs = simulate_nhpp(ip, covs, rng)
    n = locs.shape[0]
    link = IntensityLink(link_mode)
    v = link.values(intensity_at(locs, ip, covs), intensity_field(ip, covs))
    z1 = rng.standard_normal(n)
    z2 = (rng.integers(0, 2, n).astype(float) if z2_bernoulli
          else rng.standard_normal(n))
    z = np.column_stack([np.ones(n), z1, z2])
    marks = simulate_marks(v, z, MarkParams(xi, np.asarray(alpha, float)), rng)
    pattern = MarkedPattern(locs, marks, z, ("intercept", "z1", "z2"))
    return {"pattern": pattern, "covs": covs, "link": link, "scale": scale,
            "truth": {"lambda0": lambda0, "beta_x": beta[0], "beta_y": beta[1],
                      "xi": xi, "alpha_intercept": alpha[0],
                      "alpha_z1": alpha[1], "alpha_z2": alpha[2]}}


@pytest.fixture(scope="session")
def design_dataset():
    """A single moderately sized design draw shared across test modules."""
    return make_design_dataset(seed=314, n_grid=60)


def gaussian_bump_field(grid, center, width):
    from markedpp.grid import Field

    xx, yy = np.meshgrid(grid.x_centers, grid.y_centers, indexing="ij")
    vals = np.exp(-((xx - center[0]) ** 2 + (yy - center[1]) ** 2)
                  / (2.0 * width ** 2))
    return Field(grid, vals / vals.sum())


def make_court_dataset(seed, n_target=600, beta=(420.0, 300.0), xi=0.8,
                       alpha=None, mark_columns=("intercept",
                                                 "intensity_x_3pt",
                                                 "distance", "opp_playoff"),
                       link_mode="max_normalized"):
    """Synthetic shot chart on the real court frame with two unit-sum
    basis covariates (a rim bump and a top-of-key bump) and a known
    joint model. Returns the truth alongside the pattern and bases.
    """
    from markedpp import court
    from markedpp.basis import BasisSet
    from markedpp.grid import riemann_integral
    from markedpp.mark import build_mark_covariates, effective_mark_matrix, mark_logits

    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    grid = court.court_grid()
    b1 = gaussian_bump_field(grid, (25.0, 6.0), 4.0)
    b2 = gaussian_bump_field(grid, (25.0, 25.0), 6.0)
    covs = CovariateStack(grid, (b1, b2), ("basis_1", "basis_2"))

    base = IntensityParams(1.0, np.asarray(beta, float))
    lam0 = n_target / riemann_integral(intensity_field(base, covs))
    ip = IntensityParams(lam0, np.asarray(beta, float))
    locs = simulate_nhpp(ip, covs, rng)
    n = locs.shape[0]

    meta = {
        "shot_type": np.where(court.is_three_point_region(locs), 3.0, 2.0),
        "distance": court.distance_to_basket(locs),
        "period": rng.integers(1, 5, n).astype(float),
        "seconds_left": rng.uniform(0.0, 720.0, n),
        "opp_playoff": rng.integers(0, 2, n).astype(float),
    }
    pattern = MarkedPattern(locs, np.zeros(n), meta=meta)
    z, labels, scaled = build_mark_covariates(pattern, mark_columns)
    if alpha is None:
        defaults = {"intercept": 0.6, "intensity_x_3pt": -0.5,
                    "distance": -0.06, "seconds_left": 0.0004,
                    "period_2": 0.2, "period_3": -0.2, "period_4": 0.15,
                    "period_5": -0.3, "opp_playoff": -0.35}
        alpha = np.array([defaults[lab] for lab in labels])
    else:
        alpha = np.asarray(alpha, float)
    link = IntensityLink(link_mode)
    field = intensity_field(ip, covs)
    v = link.values(intensity_at(locs, ip, covs), field)
    params = MarkParams(xi, alpha)
    logits = mark_logits(v, z, params, scaled)
    marks = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(float)
    pattern = MarkedPattern(locs, marks, z, labels, scaled, meta=meta)

    # unit-sum bases put intensity coefficients on a large scale, so
    # court fits need a wide coefficient prior
    weights = np.ones((3, 2))
    basis_set = BasisSet(grid, (b1, b2), weights,
                         ("hist_a", "hist_b", "hist_c"), seed=0)
    truth = {"lambda0": lam0, "beta_basis_1": beta[0],
             "beta_basis_2": beta[1], "xi": xi}
    truth.update({f"alpha_{lab}": a for lab, a in zip(labels, alpha)})
    return {"pattern": pattern, "covs": covs, "link": link,
            "basis_set": basis_set, "truth": truth, "labels": labels}


def write_court_csv(dataset, path):
    from markedpp.shotdata import write_shot_csv

    write_shot_csv(dataset["pattern"], path)
