"""Classical constant-rate-of-supply (CRS) ages with Monte Carlo uncertainty."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .physics import LAMBDA, areal_mass


class CrsError(ValueError):
    pass


class DroppedSampleWarning(UserWarning):
    pass


@dataclass
class CrsResult:
    """CRS chronology at slice bottoms.

    ``records`` rows hold depth, point age, Monte Carlo mean, sd and the
    2.5/97.5 percentiles. Only dated depths appear; ``dropped_depths`` are
    slices at or below the supported level and ``undated_depths`` are
    retained slices with nothing left beneath them (zero inventory).
    """

    depth: np.ndarray
    age: np.ndarray
    age_mean: np.ndarray
    age_sd: np.ndarray
    age_lo95: np.ndarray
    age_hi95: np.ndarray
    supported_mean: float
    supported_sd: float
    a0: float
    phi: float
    dropped_depths: list = field(default_factory=list)
    undated_depths: list = field(default_factory=list)
    interpolated_gaps: list = field(default_factory=list)
    extrapolated: bool = False
    n_mc: int = 0
    seed: int | None = None

    @property
    def records(self):
        return [
            dict(depth=float(d), age=float(a), age_mean=float(m), age_sd=float(s), age_lo95=float(lo), age_hi95=float(hi))
            for d, a, m, s, lo, hi in zip(
                self.depth, self.age, self.age_mean, self.age_sd, self.age_lo95, self.age_hi95
            )
        ]


def _gap_inventory(dens_above, dens_below, z_above, z_below, gap_top, gap_bottom):
    """Inventory of a gap under exponential interpolation of activity density.

    Densities (Bq/m^2 per cm) are anchored at the mid-depths of the
    neighbouring slices. Non-positive neighbours contribute nothing.
    """
    ok = (dens_above > 0) & (dens_below > 0)
    da = np.where(ok, dens_above, 1.0)
    db = np.where(ok, dens_below, 1.0)
    k = np.log(db / da) / (z_below - z_above)
    small = np.abs(k) < 1e-12
    k_safe = np.where(small, 1.0, k)
    val = da * np.where(
        small,
        gap_bottom - gap_top,
        (np.exp(k_safe * (gap_bottom - z_above)) - np.exp(k_safe * (gap_top - z_above))) / k_safe,
    )
    return np.where(ok, val, 0.0)


def _tail_inventory(dens, mids, bottom, n_fit=3):
    """Exponential tail below the deepest slice, fitted on the last ``n_fit`` slices.

    ``dens`` is (replicates, slices); returns per-replicate inventory below
    the deepest slice bottom, 0 where the fit does not decay.
    """
    out = np.zeros(dens.shape[0])
    for r in range(dens.shape[0]):
        pos = np.flatnonzero(dens[r] > 0)
        if pos.size < 2:
            continue
        sel = pos[-n_fit:]
        slope, intercept = np.polyfit(mids[sel], np.log(dens[r, sel]), 1)
        if slope >= 0:
            continue
        k = -slope
        out[r] = math.exp(intercept + slope * bottom) / k
    return out


def _ages(conc, supported, ds_arrays, lam, extrapolate):
    """CRS ages for a batch of replicates.

    ``conc`` is (R, n) concentrations and ``supported`` is (R,). Returns
    ``(ages, inventory_below, a0, positive)`` with NaN ages where the
    inventory below is zero.
    """
    tops, bottoms, thick, mass = ds_arrays
    excess = conc - supported[:, None]
    positive = excess > 0
    unsup = np.where(positive, excess, 0.0) * mass  # Bq/m^2 per slice
    dens = unsup / thick

    # inventory strictly below each slice bottom
    below = np.cumsum(unsup[:, ::-1], axis=1)[:, ::-1]
    below = np.concatenate([below[:, 1:], np.zeros((below.shape[0], 1))], axis=1)

    gap_idx = np.flatnonzero(tops[1:] > bottoms[:-1] + 1e-9)
    mids = bottoms - thick / 2.0
    for g in gap_idx:
        inv = _gap_inventory(dens[:, g], dens[:, g + 1], mids[g], mids[g + 1], bottoms[g], tops[g + 1])
        below[:, : g + 1] += inv[:, None]

    if extrapolate:
        below += _tail_inventory(dens, mids, bottoms[-1])[:, None]

    a0 = below[:, 0] + unsup[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ages = np.where(below > 0, np.log(a0[:, None] / below) / lam, np.nan)
    return ages, below, a0, positive


def crs_point_ages(ds, supported_mean, lam=LAMBDA, extrapolate=False):
    """Deterministic CRS ages at slice bottoms (NaN where undated or dropped)."""
    arrays = (ds.tops, ds.depths, ds.thickness, areal_mass(ds.density, ds.thickness))
    ages, below, a0, positive = _ages(ds.total_pb[None, :], np.array([float(supported_mean)]), arrays, lam, extrapolate)
    ages = ages[0]
    ages[~positive[0]] = np.nan
    return ages, float(a0[0]), positive[0]


def crs_ages(ds, supported_mean, supported_sd, n_mc=5000, seed=None, lam=LAMBDA, extrapolate=False):
    """CRS chronology of ``ds`` with Monte Carlo error propagation.

    Each replicate redraws every concentration from N(p_i, sigma_i^2) and
    the supported level from N(supported_mean, supported_sd^2); slices that
    fall to or below the supported level in a replicate are dropped from
    that replicate's inventories.
    """
    if supported_sd < 0:
        raise CrsError("supported_sd must be non-negative")
    if supported_mean < 0:
        raise CrsError("supported_mean must be non-negative")
    if n_mc < 1:
        raise CrsError("n_mc must be positive")
    depths = ds.depths
    arrays = (ds.tops, depths, ds.thickness, areal_mass(ds.density, ds.thickness))

    point, a0, positive = crs_point_ages(ds, supported_mean, lam, extrapolate)
    if positive.sum() < 2:
        raise CrsError("no unsupported activity: fewer than two slices exceed the supported level")
    dropped = [float(d) for d in depths[~positive]]
    if dropped:
        warnings.warn(
            f"slices at {', '.join(f'{d:g}' for d in dropped)} cm are at or below the supported level and were dropped",
            DroppedSampleWarning,
            stacklevel=2,
        )
    dated = np.isfinite(point)
    undated = [float(d) for d in depths[positive & ~dated]]

    rng = np.random.default_rng(seed)
    conc = ds.total_pb[None, :] + ds.sigma[None, :] * rng.standard_normal((n_mc, len(ds)))
    sup = supported_mean + supported_sd * rng.standard_normal(n_mc)
    mc = _ages(conc, sup, arrays, lam, extrapolate)[0][:, dated]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(mc, axis=0)
        sd = np.nanstd(mc, axis=0, ddof=1)
        lo, hi = np.nanpercentile(mc, [2.5, 97.5], axis=0)

    return CrsResult(
        depth=depths[dated],
        age=point[dated],
        age_mean=mean,
        age_sd=sd,
        age_lo95=lo,
        age_hi95=hi,
        supported_mean=float(supported_mean),
        supported_sd=float(supported_sd),
        a0=a0,
        phi=lam * a0,
        dropped_depths=dropped,
        undated_depths=undated,
        interpolated_gaps=ds.gaps(),
        extrapolated=extrapolate,
        n_mc=n_mc,
        seed=seed,
    )
