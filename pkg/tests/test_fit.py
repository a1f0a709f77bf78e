import math

import numpy as np
import pytest

from pbchron.fit import (
    DEFAULT_ITERATIONS,
    MIN_STORED_DRAWS,
    InfeasibleModelError,
    PlumConfig,
    build_grid,
    initial_points,
    run_plum,
)
from pbchron.model import PlumModel, PlumParameters, PriorConfig, in_support


def test_initial_points_default_priors(simulated_split):
    chron, sup = simulated_split
    ds = chron.with_supported(sup)
    grid = build_grid(ds)
    cfg = PriorConfig()
    x0, x1 = initial_points(cfg, grid, ds, np.random.default_rng(0))
    model = PlumModel(ds, grid, cfg)
    for x in (x0, x1):
        assert math.isfinite(model.energy(x))
        assert in_support(PlumParameters.from_vector(x), grid, cfg)
    assert not np.array_equal(x0, x1)


def test_initial_points_reproducible(simulated_split):
    chron, sup = simulated_split
    ds = chron.with_supported(sup)
    grid = build_grid(ds)
    a = initial_points(PriorConfig(), grid, ds, np.random.default_rng(5))
    b = initial_points(PriorConfig(), grid, ds, np.random.default_rng(5))
    assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_infeasible_threshold(simulated_split):
    chron, sup = simulated_split
    ds = chron.with_supported(sup)
    grid = build_grid(ds)
    # a_l above one year of any plausible supply: the limit is below every model age
    with pytest.raises(InfeasibleModelError):
        initial_points(PriorConfig(a_l=1e4), grid, ds, np.random.default_rng(0), max_tries=500)


def test_default_iterations_store_enough():
    cfg = PlumConfig()
    for dim in (5, 33, 500):
        n = cfg.resolved_iterations(dim)
        kept = math.ceil((n - int(cfg.burn_in * n)) / cfg.resolved_thin(dim))
        assert kept >= MIN_STORED_DRAWS
        assert n >= DEFAULT_ITERATIONS
    assert PlumConfig(n_iter=1234).resolved_iterations(33) == 1234


def test_grid_covers_data(simulated_split):
    chron, _ = simulated_split
    assert build_grid(chron).bottom == 27
    assert build_grid(chron, max_depth=30).bottom == 30
    assert build_grid(chron, dc=2.0).bottom == 28


@pytest.fixture(scope="module")
def short_run(simulated_split):
    chron, sup = simulated_split
    cfg = PlumConfig(n_iter=40_000, seed=3, max_depth=30)
    return run_plum(chron, cfg, supported=sup), cfg


def test_run_plum_shapes_and_support(short_run):
    ens, cfg = short_run
    assert ens.grid.K == 30
    assert ens.draws.shape == (len(ens), 33)
    assert len(ens) == math.ceil(32_000 / 33)
    prior = cfg.prior
    assert all(in_support(p, ens.grid, prior) for p in ens.parameters()[::50])
    assert np.all(np.isfinite(ens.energies))


def test_run_plum_metadata(short_run):
    ens, cfg = short_run
    md = ens.metadata
    for key in ("version", "config", "grid", "n_iter", "burn_in_iterations", "thin", "chain_seed", "acceptance_rate", "supported"):
        assert key in md
    assert md["config"]["prior"] == cfg.prior.to_dict()
    assert md["config"]["seed"] == 3
    assert 0 <= md["acceptance_rate"] <= 1


def test_run_plum_deterministic(simulated_split, short_run):
    chron, sup = simulated_split
    ens, cfg = short_run
    again = run_plum(chron, cfg, supported=sup)
    assert np.array_equal(again.draws, ens.draws)


def test_run_plum_needs_supported(simulated_split):
    chron, _ = simulated_split
    with pytest.raises(ValueError):
        run_plum(chron.with_supported(()), PlumConfig(n_iter=100))
