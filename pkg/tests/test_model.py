import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from pbchron.agedepth import SectionGrid
from pbchron.data import CoreDataset, Measurement, SupportedDatum, parse_dataset, to_csv
from pbchron.fit import build_grid, draw_prior
from pbchron.model import (
    PlumModel,
    PlumParameters,
    PriorConfig,
    beta_logpdf,
    energy,
    energy_jit,
    gamma_logpdf,
    in_support,
    log_likelihood,
    log_prior,
)
from pbchron.physics import LAMBDA, areal_mass, unsupported_activity


def innovations_for(slopes, omega):
    """Invert the bottom-anchored recursion for target slopes."""
    m = np.asarray(slopes, float)
    alpha = np.empty_like(m)
    alpha[-1] = m[-1]
    alpha[:-1] = (m[:-1] - omega * m[1:]) / (1 - omega)
    return alpha


def truth_params(phi=150.0, p_s=20.0, K=27, omega=0.1):
    j = np.arange(1, K + 1)
    slopes = (2 * j - 1) / 3 + 0.5  # chords of x^2/3 + x/2 over 1 cm sections
    return PlumParameters(phi, p_s, omega, innovations_for(slopes, omega))


def one_slice(phi=100.0, p_s=10.0, slope=2.0, sigma=3.0, density=0.2):
    """A single slice whose measurement equals its model activity."""
    t_bot = slope * 1.0
    mass = areal_mass(density, 1.0)
    y = p_s * mass + unsupported_activity(phi, 0.0, t_bot)
    m = Measurement(1.0, 1.0, density, y / mass, sigma)
    ds = CoreDataset((m,), supported=(SupportedDatum(p_s, 2.0),))
    return ds, SectionGrid(1.0, 1), PlumParameters(phi, p_s, 0.5, np.array([slope]))


def test_zero_residuals_give_zero():
    ds, grid, params = one_slice()
    assert log_likelihood(params, ds, grid) == pytest.approx(0.0, abs=1e-20)


def test_truth_beats_half_supply(simulated_split):
    chron, sup = simulated_split
    grid = build_grid(chron)
    ds = chron.with_supported(sup)
    at_truth = log_likelihood(truth_params(), ds, grid)
    at_half = log_likelihood(truth_params(phi=75.0), ds, grid)
    assert math.isfinite(at_truth)
    assert at_truth > at_half


def scalar_loglik(params, ds, grid):
    """Term-by-term evaluation with plain loops."""
    m = np.asarray(PlumModel(ds, grid).slopes(params.to_vector()))
    total = 0.0
    for meas in ds.measurements:
        def age(d):
            out, top = 0.0, 0.0
            for s in m:
                if d <= top + grid.dc:
                    return out + s * (d - top)
                out += s * grid.dc
                top += grid.dc
            return out

        mass = 10.0 * meas.density * meas.thickness
        mu = params.p_s * mass + params.phi / LAMBDA * (math.exp(-LAMBDA * age(meas.depth_top)) - math.exp(-LAMBDA * age(meas.depth_bottom)))
        total -= (meas.total_pb * mass - mu) ** 2 / (2 * (meas.sigma * mass) ** 2)
    for s in ds.supported:
        total -= (s.value - params.p_s) ** 2 / (2 * s.sigma**2)
    return total


def test_loglik_matches_scalar_evaluation(simulated_split):
    chron, sup = simulated_split
    ds = chron.with_supported(sup)
    grid = build_grid(ds)
    for phi in (75.0, 150.0, 210.0):
        p = truth_params(phi=phi)
        assert log_likelihood(p, ds, grid) == pytest.approx(scalar_loglik(p, ds, grid), rel=1e-12)


def test_supported_term_is_quadratic():
    ds, grid, params = one_slice()
    base = energy(params, ds, grid, PriorConfig())
    diffs = []
    for k in (1, 2, 3):
        shifted = ds.with_supported([SupportedDatum(params.p_s + 0.5 * k, 2.0)])
        diffs.append(energy(params, shifted, grid, PriorConfig()) - base)
    np.testing.assert_allclose(diffs, [0.5**2 * k**2 / (2 * 4.0) for k in (1, 2, 3)], rtol=1e-10)


def test_residual_scale_is_sigma_times_mass():
    ds, grid, params = one_slice(sigma=3.0, density=0.2)
    meas = ds.measurements[0]
    off = CoreDataset((Measurement(1.0, 1.0, meas.density, meas.total_pb + 6.0, meas.sigma),), ds.supported)
    # concentration residual 6 Bq/kg against sigma 3: half of (6/3)^2, whatever the slice mass
    assert log_likelihood(params, off, grid) == pytest.approx(-0.5 * (6.0 / 3.0) ** 2, rel=1e-10)
    doubled = CoreDataset((Measurement(1.0, 1.0, meas.density, meas.total_pb + 6.0, 2 * meas.sigma),), ds.supported)
    assert log_likelihood(params, doubled, grid) == pytest.approx(-0.5 * (6.0 / 6.0) ** 2, rel=1e-10)


def test_gamma_logpdf_at_mode():
    cfg = PriorConfig()
    assert gamma_logpdf(25.0, cfg.phi_shape, cfg.phi_rate) == pytest.approx(stats.gamma.logpdf(25.0, 2, scale=25.0), rel=1e-12)


def test_beta_uniform():
    assert beta_logpdf(0.5, 1.0, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert beta_logpdf(0.3, 4.0, 1.714) == pytest.approx(stats.beta.logpdf(0.3, 4.0, 1.714), rel=1e-12)


def test_log_prior_is_sum_of_marginals():
    cfg = PriorConfig()
    p = PlumParameters(30.0, 15.0, 0.6, np.array([3.0, 8.0, 12.0]))
    expected = (
        stats.gamma.logpdf(30.0, 2, scale=25.0)
        + stats.gamma.logpdf(15.0, 2, scale=10.0)
        + stats.beta.logpdf(0.6, 4.0, 1.714)
        + stats.gamma.logpdf([3.0, 8.0, 12.0], 1.5, scale=10.0 / 1.5).sum()
    )
    assert log_prior(p, cfg) == pytest.approx(expected, rel=1e-12)


def test_log_prior_mode():
    cfg = PriorConfig(omega_a=4.0, omega_b=2.0)
    mode = PlumParameters(25.0, 10.0, 0.75, np.array([10.0 / 3.0] * 3))
    best = log_prior(mode, cfg)
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = mode.to_vector() * np.exp(0.2 * rng.standard_normal(6))
        x[2] = min(x[2], 0.99)
        assert log_prior(PlumParameters.from_vector(x), cfg) <= best + 1e-12


def test_prior_config_validation():
    with pytest.raises(ValueError):
        PriorConfig(a_l=0.0)
    with pytest.raises(ValueError):
        PriorConfig.from_dict({"bogus": 1})
    assert PriorConfig.from_dict(PriorConfig().to_dict()) == PriorConfig()


def test_in_support_examples():
    cfg = PriorConfig()
    grid = SectionGrid(1.0, 10)
    assert in_support(PlumParameters(50.0, 10.0, 0.5, np.full(10, 0.01)), grid, cfg)
    assert not in_support(PlumParameters(50.0, 10.0, 0.5, np.full(10, 50.0)), grid, cfg)  # 500 yr > 199 yr
    assert not in_support(PlumParameters(50.0, 10.0, 1.0, np.full(10, 0.01)), grid, cfg)
    assert not in_support(PlumParameters(50.0, 10.0, 0.0, np.full(10, 0.01)), grid, cfg)
    assert not in_support(PlumParameters(-1.0, 10.0, 0.5, np.full(10, 0.01)), grid, cfg)
    assert not in_support(PlumParameters(50.0, 10.0, 0.5, np.full(9, 0.01)), grid, cfg)


@given(st.integers(0, 2**32 - 1), st.integers(0, 9), st.floats(0.01, 0.99))
def test_in_support_monotone_in_alpha(seed, j, shrink):
    cfg = PriorConfig()
    grid = SectionGrid(1.0, 10)
    x = draw_prior(cfg, 10, np.random.default_rng(seed))
    p = PlumParameters.from_vector(x)
    if in_support(p, grid, cfg):
        x[3 + j] *= shrink
        assert in_support(PlumParameters.from_vector(x), grid, cfg)


def test_energy_definition(simulated_split):
    chron, sup = simulated_split
    ds = chron.with_supported(sup)
    grid = build_grid(ds, max_depth=30)
    cfg = PriorConfig(a_l=0.001)
    a, b = truth_params(K=30), truth_params(phi=140.0, K=30, omega=0.2)
    ua, ub = energy(a, ds, grid, cfg), energy(b, ds, grid, cfg)
    assert ua == -(log_likelihood(a, ds, grid) + log_prior(a, cfg))
    assert ua - ub == pytest.approx(
        (log_likelihood(b, ds, grid) + log_prior(b, cfg)) - (log_likelihood(a, ds, grid) + log_prior(a, cfg)), abs=1e-10
    )
    # the truth runs past the default limit at 30 cm
    assert energy(a, ds, grid, PriorConfig()) == math.inf


def test_energy_invariant_to_row_order(simulated_split):
    chron, sup = simulated_split
    lines = to_csv(chron).splitlines()
    shuffled = "\n".join([lines[0], *reversed(lines[1:])])
    ds2 = parse_dataset(shuffled).with_supported(sup)
    grid = build_grid(chron)
    cfg = PriorConfig(a_l=0.001)
    p = truth_params()
    assert energy(p, ds2, grid, cfg) == energy(p, chron.with_supported(sup), grid, cfg)


def test_loglik_drops_when_residual_grows():
    ds, grid, params = one_slice()
    meas = ds.measurements[0]
    prev = 0.0
    for shift in (0.5, 1.0, 2.0, 4.0):
        for sign in (1, -1):
            moved = CoreDataset((Measurement(1.0, 1.0, meas.density, meas.total_pb + sign * shift, meas.sigma),), ds.supported)
            assert log_likelihood(params, moved, grid) < prev
        prev = log_likelihood(params, moved, grid)


def test_zero_residual_is_stationary():
    ds, grid, params = one_slice()
    meas = ds.measurements[0]
    h = 1e-6 * meas.total_pb

    def ll(p):
        return log_likelihood(params, CoreDataset((Measurement(1.0, 1.0, meas.density, p, meas.sigma),), ds.supported), grid)

    grad = (ll(meas.total_pb + h) - ll(meas.total_pb - h)) / (2 * h)
    curvature = 1.0 / meas.sigma**2
    assert abs(grad) < 1e-4 * curvature * meas.total_pb


def test_depth_outside_grid():
    ds, _, _ = one_slice()
    with pytest.raises(ValueError):
        PlumModel(ds, SectionGrid(0.5, 1))


@pytest.mark.parametrize("anchor", ["bottom", "top"])
def test_compiled_energy_matches(simulated_split, anchor):
    chron, sup = simulated_split
    grid = build_grid(chron, max_depth=30)
    model = PlumModel(chron, grid, PriorConfig(a_l=0.01), supported=sup, anchor=anchor)
    data = model.compiled_data()
    rng = np.random.default_rng(3)
    finite = 0
    for _ in range(500):
        x = draw_prior(model.prior, grid.K, rng)
        if rng.random() < 0.1:
            x[2] = 1.0
        u = model.energy(x)
        uj = energy_jit(x, data)
        if math.isfinite(u):
            finite += 1
            assert uj == pytest.approx(u, rel=1e-12)
        else:
            assert uj == math.inf
    assert finite > 100
