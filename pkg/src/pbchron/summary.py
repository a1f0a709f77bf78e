"""Posterior ensembles: age bands, parameter marginals, diagnostics, serialisation."""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .agedepth import SectionGrid, _age_at, _boundary_ages, _slopes
from .model import N_GLOBAL, PlumParameters

QUANTILES = (0.025, 0.975)


class DegenerateChainWarning(UserWarning):
    pass


@dataclass
class PosteriorEnsemble:
    """Stored draws as rows ``[phi, p_s, omega, alpha_1..alpha_K]``."""

    draws: np.ndarray
    grid: SectionGrid
    energies: np.ndarray | None = None
    anchor: str = "bottom"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.atleast_2d(np.asarray(self.draws, dtype=float))
        if self.draws.shape[1] != N_GLOBAL + self.grid.K:
            raise ValueError(f"draws have {self.draws.shape[1]} columns, grid needs {N_GLOBAL + self.grid.K}")
        if self.energies is not None:
            self.energies = np.asarray(self.energies, dtype=float)

    def __len__(self):
        return self.draws.shape[0]

    @property
    def phi(self):
        return self.draws[:, 0]

    @property
    def p_s(self):
        return self.draws[:, 1]

    @property
    def omega(self):
        return self.draws[:, 2]

    @property
    def alpha(self):
        return self.draws[:, N_GLOBAL:]

    @property
    def slopes(self):
        return np.array([_slopes(row[N_GLOBAL:], row[2], self.anchor) for row in self.draws])

    def parameters(self):
        return [PlumParameters.from_vector(row) for row in self.draws]

    def ages(self, depths):
        """Ages of every draw at ``depths``; shape (draws, depths)."""
        d = np.asarray(depths, dtype=float)
        if np.any(d < 0) or np.any(d > self.grid.bottom * (1 + 1e-12)):
            raise ValueError(f"depths must lie within [0, {self.grid.bottom}]")
        out = np.empty((len(self), d.size))
        for k, m in enumerate(self.slopes):
            out[k] = _age_at(m, self.grid.dc, d, _boundary_ages(m, self.grid.dc))
        return out


@dataclass
class Marginal:
    mean: float
    sd: float
    lo95: float
    hi95: float

    @classmethod
    def of(cls, x):
        x = np.asarray(x, dtype=float)
        lo, hi = np.quantile(x, QUANTILES)
        sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
        return cls(float(x.mean()), sd, float(lo), float(hi))

    def contains(self, value):
        return self.lo95 <= value <= self.hi95


@dataclass
class ChronologySummary:
    depth: np.ndarray
    mean: np.ndarray
    lo95: np.ndarray
    hi95: np.ndarray
    phi: Marginal
    p_s: Marginal

    def covers(self, truth):
        """Boolean mask of depths whose band contains ``truth(depth)``."""
        t = np.asarray(truth(self.depth), dtype=float)
        return (self.lo95 <= t) & (t <= self.hi95)


def summarize(ens, depth_grid):
    """Mean and equal-tailed 95% band of age at each depth.

    Percentiles interpolate linearly between order statistics.
    """
    if len(ens) == 0:
        raise ValueError("empty ensemble")
    depth = np.asarray(depth_grid, dtype=float)
    ages = ens.ages(depth)
    lo, hi = np.quantile(ages, QUANTILES, axis=0)
    return ChronologySummary(
        depth=depth,
        mean=ages.mean(axis=0),
        lo95=lo,
        hi95=hi,
        phi=Marginal.of(ens.phi),
        p_s=Marginal.of(ens.p_s),
    )


# -- diagnostics ---------------------------------------------------------------


def autocorrelation(x):
    """Normalised autocorrelation function of a 1-D series via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    if acov[0] == 0:
        return np.full(n, np.nan)
    return acov / acov[0]


def integrated_autocorrelation_time(x):
    """IAT by the initial positive sequence estimator.

    Sums autocorrelations in adjacent pairs until a pair sum turns
    non-positive. A constant series gets IAT equal to its length and a
    :class:`DegenerateChainWarning`.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    rho = autocorrelation(x)
    if np.isnan(rho[0]):
        warnings.warn("constant chain: autocorrelation undefined, IAT set to chain length", DegenerateChainWarning, stacklevel=2)
        return float(n)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(min(max(tau, 1e-12), n))


def diagnostics(ens, acceptance_rate=None, min_draws=100):
    """Per-parameter IAT and ESS of a stored chain."""
    draws = ens.draws if isinstance(ens, PosteriorEnsemble) else np.asarray(ens.draws)
    if draws.shape[0] < min_draws:
        raise ValueError(f"need at least {min_draws} draws, got {draws.shape[0]}")
    if acceptance_rate is None and isinstance(ens, PosteriorEnsemble):
        acceptance_rate = ens.metadata.get("acceptance_rate")
    elif acceptance_rate is None:
        acceptance_rate = getattr(ens, "acceptance_rate", None)
    names = parameter_names(draws.shape[1] - N_GLOBAL)
    iat = {name: integrated_autocorrelation_time(draws[:, j]) for j, name in enumerate(names)}
    n = draws.shape[0]
    ess = {name: n / t for name, t in iat.items()}
    return {"iat_per_param": iat, "ess_per_param": ess, "acceptance_rate": acceptance_rate}


# -- serialisation ---------------------------------------------------------------


def parameter_names(K):
    return ["phi", "p_s", "omega", *(f"alpha_{j}" for j in range(1, K + 1))]


def write_draws_csv(ens, path):
    names = parameter_names(ens.grid.K)
    energies = ens.energies if ens.energies is not None else np.full(len(ens), np.nan)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, "energy"])
        for row, u in zip(ens.draws, energies):
            w.writerow([repr(float(v)) for v in row] + [repr(float(u))])


def read_draws_csv(path, grid, anchor="bottom"):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if header != [*parameter_names(grid.K), "energy"]:
        raise ValueError("draws file columns do not match the grid")
    return PosteriorEnsemble(body[:, :-1], grid, energies=body[:, -1], anchor=anchor)


CHRONOLOGY_COLUMNS = ("depth", "mean", "lo95", "hi95")


def write_chronology_csv(path, depth, mean, lo95, hi95):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHRONOLOGY_COLUMNS)
        for row in zip(depth, mean, lo95, hi95):
            w.writerow([repr(float(v)) for v in row])


def read_chronology_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CHRONOLOGY_COLUMNS:
        raise ValueError(f"unexpected chronology columns {rows[0]}")
    arr = np.array(rows[1:], dtype=float).reshape(-1, 4)
    return {name: arr[:, j] for j, name in enumerate(CHRONOLOGY_COLUMNS)}


def write_metadata(path, metadata):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
