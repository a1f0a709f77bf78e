"""Posterior sampling for one core: grid construction, starting points, t-walk run."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .agedepth import SectionGrid, _slopes
from .model import N_GLOBAL, PlumModel, PriorConfig, energy_jit
from .summary import PosteriorEnsemble
from .twalk import run_twalk_compiled


class InfeasibleModelError(RuntimeError):
    """No starting point satisfies the support (e.g. a_l too large for the prior)."""


MIN_STORED_DRAWS = 2000
# the posterior is strongly correlated along the slopes; short chains do not mix
DEFAULT_ITERATIONS = 2_000_000


@dataclass
class PlumConfig:
    dc: float = 1.0
    max_depth: float | None = None
    n_iter: int | None = None
    burn_in: float = 0.2
    thin: int | None = None
    seed: int = 0
    anchor: str = "bottom"
    prior: PriorConfig = field(default_factory=PriorConfig)
    init_tries: int = 100_000

    def resolved_thin(self, dim):
        return dim if self.thin is None else int(self.thin)

    def resolved_iterations(self, dim):
        """``n_iter`` if set, else ``DEFAULT_ITERATIONS`` raised as needed to store ``MIN_STORED_DRAWS``."""
        if self.n_iter is not None:
            return int(self.n_iter)
        thin = self.resolved_thin(dim)
        if self.burn_in < 1:
            floor = math.ceil(MIN_STORED_DRAWS * thin / (1.0 - self.burn_in)) + 1
        else:
            floor = int(self.burn_in) + MIN_STORED_DRAWS * thin
        return max(DEFAULT_ITERATIONS, int(floor))

    def to_dict(self):
        d = asdict(self)
        d["prior"] = self.prior.to_dict()
        return d


def build_grid(ds, dc=1.0, max_depth=None):
    deepest = float(ds.depths.max())
    target = deepest if max_depth is None else max(deepest, float(max_depth))
    return SectionGrid.covering(target, dc)


def draw_prior(prior, K, rng):
    """One draw ``[phi, p_s, omega, alpha...]`` from the prior."""
    phi = rng.gamma(prior.phi_shape, 1.0 / prior.phi_rate)
    p_s = rng.gamma(prior.ps_shape, 1.0 / prior.ps_rate)
    omega = rng.beta(prior.omega_a, prior.omega_b)
    alpha = rng.gamma(prior.alpha_shape, 1.0 / prior.alpha_rate, size=K)
    return np.concatenate([[phi, p_s, omega], alpha])


def initial_points(cfg, grid, ds, rng, max_tries=100_000, model=None):
    """Two distinct in-support prior draws.

    Raises :class:`InfeasibleModelError` when ``max_tries`` draws in total do
    not yield two in-support points.
    """
    model = model or PlumModel(ds, grid, cfg)
    found = []
    for _ in range(max_tries):
        x = draw_prior(cfg, grid.K, rng)
        if model.support(x) and math.isfinite(model.energy(x)):
            found.append(x)
            if len(found) == 2:
                return found[0], found[1]
    raise InfeasibleModelError(
        f"no in-support starting point in {max_tries} prior draws; "
        f"the detection threshold a_l={cfg.a_l} may be too large for this prior and core depth"
    )


def run_plum(ds, config=None, supported=None):
    """Sample the posterior for chronology data ``ds``.

    ``supported`` defaults to ``ds.supported``. Returns a
    :class:`~pbchron.summary.PosteriorEnsemble` with full run metadata.
    """
    config = config or PlumConfig()
    grid = build_grid(ds, config.dc, config.max_depth)
    model = PlumModel(ds, grid, config.prior, supported=supported, anchor=config.anchor)
    init_seed, chain_seed = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(init_seed)
    x0, x1 = initial_points(config.prior, grid, ds, rng, config.init_tries, model=model)

    thin = config.resolved_thin(model.dim)
    n_iter = config.resolved_iterations(model.dim)
    chain_rng_seed = int(chain_seed.generate_state(1)[0])
    t0 = time.perf_counter()
    chain = run_twalk_compiled(
        energy_jit, model.compiled_data(), x0, x1, n_iter, seed=chain_rng_seed, burn_in=config.burn_in, thin=thin
    )
    elapsed = time.perf_counter() - t0

    metadata = {
        "software": "pbchron",
        "version": __version__,
        "model": "plum",
        "label": ds.label,
        "config": config.to_dict(),
        "grid": {"dc": grid.dc, "K": grid.K, "bottom": grid.bottom},
        "n_iter": n_iter,
        "burn_in_iterations": chain.burn_in,
        "thin": thin,
        "stored_draws": len(chain),
        "chain_seed": chain_rng_seed,
        "acceptance_rate": chain.acceptance_rate,
        "move_counts": chain.move_counts,
        "move_accepts": chain.move_accepts,
        "n_measurements": len(ds),
        "n_supported": len(model.supported),
        "supported": [[s.value, s.sigma] for s in model.supported],
        "sampling_seconds": elapsed,
        "defaults_note": "phi shape, omega Beta(a, b), alpha gamma shape/mean, burn-in and thinning are package defaults, not literature values",
    }
    return PosteriorEnsemble(chain.draws, grid, energies=chain.energies, anchor=config.anchor, metadata=metadata)
