"""Decay bookkeeping for lead-210 under a constant rate of supply.

Units: supply ``phi`` in Bq/(m^2 yr), activities in Bq/m^2, ages in years,
concentrations in Bq/kg and areal masses in kg/m^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LAMBDA = 0.03114  # 1/yr, half-life 22.3 yr

# 1 g/cm^2 of dry sediment is 10 kg/m^2
KG_M2_PER_G_CM2 = 10.0


@dataclass(frozen=True)
class DecayConstants:
    lam: float = LAMBDA

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("decay constant must be positive")

    @property
    def one_minus_exp_over_lambda(self):
        """Activity of one year of deposition per unit supply, (1 - e^-lam)/lam."""
        return -math.expm1(-self.lam) / self.lam

    @property
    def half_life(self):
        return math.log(2.0) / self.lam


DEFAULT_DECAY = DecayConstants()


def unsupported_activity(phi, t_top, t_bottom, lam=LAMBDA):
    """Unsupported activity of a slice whose top and bottom have the given ages.

    Integral of ``phi * exp(-lam * tau)`` over ``[t_top, t_bottom]``. Accepts
    scalars or broadcastable arrays.
    """
    phi = np.asarray(phi, dtype=float)
    t_top = np.asarray(t_top, dtype=float)
    t_bottom = np.asarray(t_bottom, dtype=float)
    if np.any(phi <= 0):
        raise ValueError("phi must be positive")
    if np.any(t_top < 0):
        raise ValueError("ages must be non-negative")
    if np.any(t_top > t_bottom):
        raise ValueError("t_top must not exceed t_bottom")
    out = _unsupported(phi, t_top, t_bottom, lam)
    return float(out) if out.ndim == 0 else out


def _unsupported(phi, t_top, t_bottom, lam=LAMBDA):
    # unchecked fast path; written with expm1 for accuracy on thin slices
    return -(phi / lam) * np.exp(-lam * t_top) * np.expm1(-lam * (t_bottom - t_top))


def supported_activity(p_s, rho):
    """Supported activity ``p_s * rho`` of a slice with areal mass ``rho``."""
    if np.any(np.asarray(p_s) < 0):
        raise ValueError("supported concentration must be non-negative")
    if np.any(np.asarray(rho) <= 0):
        raise ValueError("areal mass must be positive")
    return p_s * rho


def areal_mass(density, thickness):
    """Dry mass per unit area (kg/m^2) of slices with density in g/cm^3 and thickness in cm."""
    return KG_M2_PER_G_CM2 * np.asarray(density, dtype=float) * np.asarray(thickness, dtype=float)


def chronology_limit(phi, a_l, lam=LAMBDA):
    """Oldest datable age given supply ``phi`` and detection threshold ``a_l``.

    Solves ``a_l = phi * exp(-lam * t) * (1 - e^-lam) / lam`` for ``t``; one
    year of deposition at age ``t`` then carries exactly ``a_l`` of activity.
    """
    if phi <= 0 or a_l <= 0:
        raise ValueError("phi and a_l must be positive")
    k = DecayConstants(lam).one_minus_exp_over_lambda
    if a_l >= k * phi:
        raise ValueError(
            f"detection threshold {a_l} is at or above one year of supply ({k * phi:.4g}); no datable range"
        )
    return math.log(k * phi / a_l) / lam


def chronology_limit_approx(phi, a_l, lam=LAMBDA):
    """The simplified ``log(phi / a_l) / lam`` form, kept for comparison."""
    return math.log(phi / a_l) / lam
