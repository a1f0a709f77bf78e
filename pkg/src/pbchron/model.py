"""Bayesian constant-rate-of-supply model: priors, likelihood, support, energy.

The parameter vector is laid out as ``[phi, p_s, omega, alpha_1..alpha_K]``.
Activities are compared in Bq/m^2: a slice's measured activity is its
concentration times its areal mass, and its modelled activity is the
supported part plus the unsupported activity implied by the ages of the
slice top and bottom.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numba
import numpy as np
from scipy.special import gammaln

from .agedepth import ANCHORS, AgeDepthFunction, _boundary_ages, _slopes
from .physics import LAMBDA, DecayConstants, _unsupported, areal_mass, chronology_limit

N_GLOBAL = 3  # phi, p_s, omega


@dataclass(frozen=True, eq=False)
class PlumParameters:
    phi: float
    p_s: float
    omega: float
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))

    @property
    def K(self):
        return self.alpha.size

    def to_vector(self):
        return np.concatenate([[self.phi, self.p_s, self.omega], self.alpha])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), float(x[1]), float(x[2]), x[N_GLOBAL:].copy())

    def age_depth(self, grid, anchor="bottom"):
        return AgeDepthFunction.from_innovations(grid, self.alpha, self.omega, anchor)


@dataclass(frozen=True)
class PriorConfig:
    """Prior hyperparameters; gamma priors are given by shape and mean.

    Only the supported-level prior (shape 2, mean 20 Bq/kg) and the supply
    mean of 50 Bq/(m^2 yr) are literature values; the rest are weakly
    informative defaults and are reported in run metadata.
    """

    phi_shape: float = 2.0
    phi_mean: float = 50.0
    ps_shape: float = 2.0
    ps_mean: float = 20.0
    omega_a: float = 4.0
    omega_b: float = 1.714
    alpha_shape: float = 1.5
    alpha_mean: float = 10.0
    a_l: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"prior setting {f.name} must be a positive number, got {value!r}")

    @property
    def phi_rate(self):
        return self.phi_shape / self.phi_mean

    @property
    def ps_rate(self):
        return self.ps_shape / self.ps_mean

    @property
    def alpha_rate(self):
        return self.alpha_shape / self.alpha_mean

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown prior setting(s): {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in d.items()})


def gamma_logpdf(x, shape, rate):
    x = np.asarray(x, dtype=float)
    return shape * math.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x


def beta_logpdf(x, a, b):
    return (
        gammaln(a + b) - gammaln(a) - gammaln(b)
        + (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x)
    )


class PlumModel:
    """Precomputed data arrays and the energy function for one core.

    ``supported`` defaults to the dataset's own ``supported`` field.
    """

    def __init__(self, ds, grid, prior=None, supported=None, lam=LAMBDA, anchor="bottom"):
        if anchor not in ANCHORS:
            raise ValueError(f"anchor must be one of {ANCHORS}")
        self.ds = ds
        self.grid = grid
        self.prior = prior or PriorConfig()
        supported = ds.supported if supported is None else tuple(supported)
        if not supported:
            raise ValueError("the model needs at least one supported-activity datum")
        self.supported = tuple(supported)
        self.lam = lam
        self.anchor = anchor
        self.one_year = DecayConstants(lam).one_minus_exp_over_lambda

        if ds.depths.max() > grid.bottom * (1 + 1e-12):
            raise ValueError(f"measurement at {ds.depths.max()} cm lies below the section grid ({grid.bottom} cm)")

        self.tops = ds.tops
        self.bottoms = ds.depths
        # section index and within-section offset of every slice edge; fixed by the grid
        self._i_top, self._off_top = _locate(self.tops, grid)
        self._i_bot, self._off_bot = _locate(self.bottoms, grid)
        mass = areal_mass(ds.density, ds.thickness)
        self.mass = mass
        self.y = ds.total_pb * mass
        self.scale = ds.sigma * mass
        self.ys = np.array([s.value for s in supported])
        self.sigma_s = np.array([s.sigma for s in supported])
        self.dim = N_GLOBAL + grid.K
        self._mp = np.zeros(grid.K + 1)

        # prior constants
        p = self.prior
        self._phi_norm = p.phi_shape * math.log(p.phi_rate) - gammaln(p.phi_shape)
        self._ps_norm = p.ps_shape * math.log(p.ps_rate) - gammaln(p.ps_shape)
        self._alpha_norm = p.alpha_shape * math.log(p.alpha_rate) - gammaln(p.alpha_shape)
        self._beta_norm = gammaln(p.omega_a + p.omega_b) - gammaln(p.omega_a) - gammaln(p.omega_b)

    # -- pieces on the flat vector -------------------------------------------------

    def slopes(self, x):
        return _slopes(np.asarray(x[N_GLOBAL:], dtype=float), x[2], self.anchor)

    def _edge_ages(self, m):
        cum = _boundary_ages(m, self.grid.dc)
        mp = self._mp
        mp[:-1] = m  # offsets at c_K are zero, so index K may read the trailing 0
        t_top = cum[self._i_top] + mp[self._i_top] * self._off_top
        t_bot = cum[self._i_bot] + mp[self._i_bot] * self._off_bot
        return t_top, t_bot

    def model_activity(self, x, m=None):
        """Expected measured activity of each slice, Bq/m^2."""
        if m is None:
            m = self.slopes(x)
        t_top, t_bot = self._edge_ages(m)
        return x[1] * self.mass + _unsupported(x[0], t_top, t_bot, self.lam)

    def loglik(self, x, m=None):
        r = (self.y - self.model_activity(x, m)) / self.scale
        rs = (self.ys - x[1]) / self.sigma_s
        return -0.5 * float(r @ r) - 0.5 * float(rs @ rs)

    def logprior(self, x):
        phi, p_s, w = x[0], x[1], x[2]
        alpha = np.asarray(x[N_GLOBAL:], dtype=float)
        p = self.prior
        lp = self._phi_norm + (p.phi_shape - 1.0) * math.log(phi) - p.phi_rate * phi
        lp += self._ps_norm + (p.ps_shape - 1.0) * math.log(p_s) - p.ps_rate * p_s
        lp += self._beta_norm + (p.omega_a - 1.0) * math.log(w) + (p.omega_b - 1.0) * math.log1p(-w)
        lp += alpha.size * self._alpha_norm + (p.alpha_shape - 1.0) * float(np.log(alpha).sum()) - p.alpha_rate * float(alpha.sum())
        return lp

    def _support_slopes(self, x):
        """Slopes if ``x`` is in the support, else ``None``."""
        phi, p_s, w = x[0], x[1], x[2]
        if not (phi > 0 and p_s > 0 and 0 < w < 1):
            return None
        alpha = np.asarray(x[N_GLOBAL:], dtype=float)
        if not alpha.min() > 0:
            return None
        if self.prior.a_l >= self.one_year * phi:
            return None
        limit = math.log(self.one_year * phi / self.prior.a_l) / self.lam
        m = _slopes(alpha, w, self.anchor)
        if self.grid.dc * float(m.sum()) > limit:
            return None
        return m

    def support(self, x):
        return self._support_slopes(x) is not None

    def energy(self, x):
        m = self._support_slopes(x)
        if m is None:
            return math.inf
        return -(self.loglik(x, m) + self.logprior(x))

    __call__ = energy

    # -- compiled path ---------------------------------------------------------------

    def compiled_data(self):
        """Arguments for :func:`energy_jit`, the compiled twin of :meth:`energy`."""
        p = self.prior
        consts = np.array([
            self.grid.dc, self.lam, self.one_year, p.a_l,
            p.phi_shape, p.phi_rate, self._phi_norm,
            p.ps_shape, p.ps_rate, self._ps_norm,
            p.omega_a, p.omega_b, self._beta_norm,
            p.alpha_shape, p.alpha_rate, self._alpha_norm,
            1.0 if self.anchor == "bottom" else 0.0,
        ])
        return (
            self._i_top.astype(np.int64), self._off_top.astype(float),
            self._i_bot.astype(np.int64), self._off_bot.astype(float),
            self.mass.astype(float), self.y.astype(float), self.scale.astype(float),
            self.ys.astype(float), self.sigma_s.astype(float), consts,
        )


@numba.njit(cache=True)
def energy_jit(x, data):
    """Negative log posterior on the flat vector; ``inf`` outside the support."""
    i_top, off_top, i_bot, off_bot, mass, y, scale, ys, sigma_s, c = data
    dc, lam, one_year, a_l = c[0], c[1], c[2], c[3]
    phi, p_s, w = x[0], x[1], x[2]
    K = x.size - 3
    if not (phi > 0.0 and p_s > 0.0 and 0.0 < w < 1.0):
        return np.inf
    for k in range(K):
        if not x[3 + k] > 0.0:
            return np.inf
    if a_l >= one_year * phi:
        return np.inf

    m = np.empty(K + 1)
    m[K] = 0.0
    if c[16] > 0.5:
        m[K - 1] = x[3 + K - 1]
        for k in range(K - 2, -1, -1):
            m[k] = w * m[k + 1] + (1.0 - w) * x[3 + k]
    else:
        m[0] = x[3]
        for k in range(1, K):
            m[k] = w * m[k - 1] + (1.0 - w) * x[3 + k]
    cum = np.empty(K + 1)
    cum[0] = 0.0
    for k in range(K):
        cum[k + 1] = cum[k] + dc * m[k]
    if cum[K] > math.log(one_year * phi / a_l) / lam:
        return np.inf

    ss = 0.0
    for i in range(y.size):
        t_top = cum[i_top[i]] + m[i_top[i]] * off_top[i]
        t_bot = cum[i_bot[i]] + m[i_bot[i]] * off_bot[i]
        unsup = (phi / lam) * math.exp(-lam * t_top) * -math.expm1(-lam * (t_bot - t_top))
        r = (y[i] - p_s * mass[i] - unsup) / scale[i]
        ss += r * r
    for j in range(ys.size):
        r = (ys[j] - p_s) / sigma_s[j]
        ss += r * r

    lp = c[6] + (c[4] - 1.0) * math.log(phi) - c[5] * phi
    lp += c[9] + (c[7] - 1.0) * math.log(p_s) - c[8] * p_s
    lp += c[12] + (c[10] - 1.0) * math.log(w) + (c[11] - 1.0) * math.log1p(-w)
    sa = 0.0
    sla = 0.0
    for k in range(K):
        sa += x[3 + k]
        sla += math.log(x[3 + k])
    lp += K * c[15] + (c[13] - 1.0) * sla - c[14] * sa
    return 0.5 * ss - lp


def _locate(depths, grid):
    i = np.floor(depths / grid.dc).astype(int)
    i = np.where(grid.dc * (i + 1) <= depths, i + 1, i)
    i = np.clip(i, 0, grid.K)
    return i, depths - grid.dc * i


def _model(ds, grid, cfg=None, anchor="bottom"):
    return PlumModel(ds, grid, cfg, anchor=anchor)


def log_likelihood(params, ds, grid, anchor="bottom"):
    """Gaussian log-likelihood of slice activities and supported data.

    Residuals of slice activity are scaled by ``sigma_i`` times the slice's
    areal mass and the supported-data term is quadratic in
    ``value_j - p_s``. Additive constants are dropped.
    """
    if params.K != grid.K:
        raise ValueError("parameter count does not match the grid")
    return _model(ds, grid, anchor=anchor).loglik(params.to_vector())


def log_prior(params, cfg):
    """Normalised log prior density (gamma, gamma, beta, iid gamma)."""
    lp = gamma_logpdf(params.phi, cfg.phi_shape, cfg.phi_rate)
    lp += gamma_logpdf(params.p_s, cfg.ps_shape, cfg.ps_rate)
    lp += beta_logpdf(params.omega, cfg.omega_a, cfg.omega_b)
    lp += float(np.sum(gamma_logpdf(params.alpha, cfg.alpha_shape, cfg.alpha_rate)))
    return float(lp)


def in_support(params, grid, cfg, anchor="bottom"):
    """Positivity and range checks plus the age cap at the base of the grid."""
    if params.K != grid.K:
        return False
    if not (params.phi > 0 and params.p_s > 0 and 0 < params.omega < 1 and np.all(params.alpha > 0)):
        return False
    try:
        limit = chronology_limit(params.phi, cfg.a_l)
    except ValueError:
        return False
    m = _slopes(params.alpha, params.omega, anchor)
    return grid.dc * float(m.sum()) <= limit


def energy(params, ds, grid, cfg, anchor="bottom"):
    """Negative log posterior, or ``inf`` outside the support."""
    if not in_support(params, grid, cfg, anchor):
        return math.inf
    return -(log_likelihood(params, ds, grid, anchor) + log_prior(params, cfg))
