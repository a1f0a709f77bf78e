"""Piecewise-linear age-depth function over equal-length sections."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ANCHORS = ("bottom", "top")


@dataclass(frozen=True)
class SectionGrid:
    """Section boundaries ``0 = c_0 < c_1 < ... < c_K`` spaced ``dc`` apart."""

    dc: float
    K: int

    def __post_init__(self):
        if not self.dc > 0:
            raise ValueError("section length must be positive")
        if self.K < 1:
            raise ValueError("need at least one section")

    @classmethod
    def covering(cls, depth, dc=1.0):
        """Smallest grid with ``c_K >= depth``."""
        if depth <= 0:
            raise ValueError("depth must be positive")
        K = max(1, math.ceil(depth / dc - 1e-9))
        return cls(float(dc), K)

    @property
    def c(self):
        return self.dc * np.arange(self.K + 1)

    @property
    def bottom(self):
        return self.dc * self.K


def slopes_from_innovations(alpha, omega, anchor="bottom"):
    """Accumulation rates from gamma innovations and memory ``omega``.

    ``anchor="bottom"`` sets ``m_K = alpha_K`` and recurses upward,
    ``m_j = omega * m_{j+1} + (1 - omega) * alpha_j``. ``anchor="top"`` runs
    the mirror recursion from ``m_1 = alpha_1`` downward.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise ValueError("alpha must be a non-empty vector")
    if np.any(alpha <= 0):
        raise ValueError("innovations must be positive")
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    if anchor not in ANCHORS:
        raise ValueError(f"anchor must be one of {ANCHORS}")
    return _slopes(alpha, omega, anchor)


def _slopes(alpha, omega, anchor="bottom"):
    seq = alpha.tolist()
    if anchor == "bottom":
        seq.reverse()
    c = 1.0 - omega
    prev = seq[0]
    for k in range(1, len(seq)):
        prev = omega * prev + c * seq[k]
        seq[k] = prev
    if anchor == "bottom":
        seq.reverse()
    return np.array(seq)


@dataclass(frozen=True, eq=False)
class AgeDepthFunction:
    grid: SectionGrid
    slopes: np.ndarray
    omega: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.slopes, dtype=float)
        if m.shape != (self.grid.K,):
            raise ValueError(f"expected {self.grid.K} slopes, got {m.shape}")
        if np.any(m <= 0):
            raise ValueError("slopes must be positive")
        m.setflags(write=False)
        object.__setattr__(self, "slopes", m)

    @classmethod
    def from_innovations(cls, grid, alpha, omega, anchor="bottom"):
        return cls(grid, slopes_from_innovations(alpha, omega, anchor), omega)

    @property
    def boundary_ages(self):
        """Ages at ``c_0..c_K``."""
        return _boundary_ages(self.slopes, self.grid.dc)

    def age_at(self, d):
        d_arr = np.asarray(d, dtype=float)
        if np.any(d_arr < 0) or np.any(d_arr > self.grid.bottom * (1 + 1e-12)):
            raise ValueError(f"depth outside [0, {self.grid.bottom}]")
        out = _age_at(self.slopes, self.grid.dc, d_arr)
        return float(out) if out.ndim == 0 else out

    __call__ = age_at


def _boundary_ages(slopes, dc):
    cum = np.empty(slopes.size + 1)
    cum[0] = 0.0
    np.cumsum(slopes, out=cum[1:])
    return dc * cum


def _age_at(slopes, dc, d, cum=None):
    if cum is None:
        cum = _boundary_ages(slopes, dc)
    K = slopes.size
    i = np.floor(d / dc).astype(int)
    # d / dc may round below an exact boundary c_i = dc * i
    i = np.where(dc * (i + 1) <= d, i + 1, i)
    i = np.clip(i, 0, K)
    top = np.minimum(i, K - 1)
    out = cum[top] + slopes[top] * (d - dc * top)
    return np.where(i == K, cum[K], out)


def age_at(f, d):
    return f.age_at(d)
