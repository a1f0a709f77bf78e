"""The t-walk: a self-adjusting MCMC sampler on the product of two copies of the space.

Two points ``x`` and ``x'`` are carried along; at each step one of them is
moved using the other as a reference, through one of four kernels
(traverse, walk, blow, hop). Kernel probabilities and tuning constants are
the published defaults and are not meant to be changed per problem.

The iteration loop is written once in numba-compatible Python. It runs
compiled when the energy is a jitted ``f(x, data)`` (see
:func:`run_twalk_compiled`) and interpreted for arbitrary Python callables
(:func:`run_twalk`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numba
import numpy as np

P_TRAVERSE = 0.4918
P_WALK = 0.4918
P_BLOW = 0.0082
P_HOP = 0.0082
A_WALK = 1.5
A_TRAVERSE = 6.0
N1_PHI = 4.0  # expected number of coordinates moved

MOVES = ("traverse", "walk", "blow", "hop")
_C0 = P_TRAVERSE
_C1 = P_TRAVERSE + P_WALK
_C2 = P_TRAVERSE + P_WALK + P_BLOW


class SamplerError(RuntimeError):
    pass


@dataclass
class ChainState:
    x: np.ndarray
    x_prime: np.ndarray
    u: float
    u_prime: float


@dataclass
class Chain:
    """Draws of the first point kept after burn-in and thinning, with energies."""

    draws: np.ndarray
    energies: np.ndarray
    seed: int | None
    acceptance_rate: float
    iterations: int
    burn_in: int
    thin: int
    move_counts: dict = field(default_factory=dict)
    move_accepts: dict = field(default_factory=dict)
    final_state: ChainState | None = None

    def __len__(self):
        return self.draws.shape[0]


def _twalk_loop(energy, data, x, xp, u, up, n_iter, seed, n_burn, thin, draws, energies, counts, accepts):
    """Run ``n_iter`` t-walk steps in place.

    ``energy(point, data)`` must return ``inf`` outside the support. Returns
    ``(stored, u, up, status)``; status is 0, or ``-(it + 1)`` when the
    energy returned NaN at iteration ``it``.
    """
    np.random.seed(seed)
    n = x.size
    pphi = min(n, N1_PHI) / n
    y = np.empty(n)
    mask = np.zeros(n, dtype=np.bool_)
    k = 0
    for it in range(n_iter):
        r = np.random.random()
        if r < _C0:
            kernel = 0
        elif r < _C1:
            kernel = 1
        elif r < _C2:
            kernel = 2
        else:
            kernel = 3
        counts[kernel] += 1
        move_x = np.random.random() < 0.5
        if move_x:
            a = x
            b = xp
            ua = u
        else:
            a = xp
            b = x
            ua = up

        nphi = 0
        for j in range(n):
            mask[j] = np.random.random() < pphi
            if mask[j]:
                nphi += 1
        ok = nphi > 0
        corr = 0.0
        if ok:
            if kernel == 0:
                # traverse: jump over the reference point
                if np.random.random() < (A_TRAVERSE - 1.0) / (2.0 * A_TRAVERSE):
                    beta = np.random.random() ** (1.0 / (A_TRAVERSE + 1.0))
                else:
                    beta = np.random.random() ** (1.0 / (1.0 - A_TRAVERSE))
                for j in range(n):
                    y[j] = b[j] + beta * (b[j] - a[j]) if mask[j] else a[j]
                corr = (nphi - 2) * math.log(beta)
            elif kernel == 1:
                # walk: scaled step along the line through both points
                for j in range(n):
                    if mask[j]:
                        v = np.random.random()
                        z = (A_WALK / (1.0 + A_WALK)) * (A_WALK * v * v + 2.0 * v - 1.0)
                        y[j] = a[j] + (a[j] - b[j]) * z
                    else:
                        y[j] = a[j]
            else:
                # blow (centred on the reference) or hop (centred on the moving point)
                scale = 0.0
                for j in range(n):
                    if mask[j]:
                        scale = max(scale, abs(b[j] - a[j]))
                if kernel == 3:
                    scale /= 3.0
                if scale == 0.0:
                    ok = False
                else:
                    for j in range(n):
                        if mask[j]:
                            centre = b[j] if kernel == 2 else a[j]
                            y[j] = centre + scale * np.random.standard_normal()
                        else:
                            y[j] = a[j]
                    back_scale = 0.0
                    fwd_ss = 0.0
                    back_ss = 0.0
                    for j in range(n):
                        if mask[j]:
                            back_scale = max(back_scale, abs(b[j] - y[j]))
                            if kernel == 2:
                                fwd_ss += (y[j] - b[j]) ** 2
                                back_ss += (a[j] - b[j]) ** 2
                            else:
                                fwd_ss += (y[j] - a[j]) ** 2
                                back_ss += (a[j] - y[j]) ** 2
                    if kernel == 3:
                        back_scale /= 3.0
                    if back_scale == 0.0:
                        ok = False
                    else:
                        log_fwd = -nphi * math.log(scale) - 0.5 * fwd_ss / scale**2
                        log_back = -nphi * math.log(back_scale) - 0.5 * back_ss / back_scale**2
                        corr = log_back - log_fwd
        if ok:
            uy = energy(y, data)
            if math.isnan(uy):
                return k, u, up, -(it + 1)
            if uy < math.inf:
                log_a = ua - uy + corr
                if log_a >= 0.0 or np.random.random() < math.exp(log_a):
                    accepts[kernel] += 1
                    if move_x:
                        x[:] = y
                        u = uy
                    else:
                        xp[:] = y
                        up = uy
        if it >= n_burn and (it - n_burn) % thin == 0:
            draws[k, :] = x
            energies[k] = u
            k += 1
    return k, u, up, 0


_twalk_loop_jit = numba.njit(_twalk_loop)


def _prepare(x0, x1, n_iter, burn_in, thin):
    x = np.array(x0, dtype=float)
    xp = np.array(x1, dtype=float)
    if x.shape != xp.shape or x.ndim != 1:
        raise ValueError("initial points must be vectors of equal length")
    if n_iter <= 0:
        raise ValueError("n_iter must be positive")
    if np.all(x == xp):
        raise ValueError("initial points must differ in at least one coordinate")
    n = x.size
    thin = n if thin is None else int(thin)
    if thin < 1:
        raise ValueError("thin must be at least 1")
    n_burn = int(burn_in * n_iter) if burn_in < 1 else int(burn_in)
    if n_burn >= n_iter:
        raise ValueError("burn-in removes every iteration")
    return x, xp, thin, n_burn


def _seed32(seed):
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1)[0])
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def _run(loop, energy, data, x0, x1, n_iter, seed, burn_in, thin):
    """``loop(data, x, xp, u, up, ...)`` runs the iterations with ``energy`` already bound."""
    x, xp, thin, n_burn = _prepare(x0, x1, n_iter, burn_in, thin)
    u = float(energy(x, data))
    up = float(energy(xp, data))
    if not (math.isfinite(u) and math.isfinite(up)):
        raise SamplerError("initial point outside the support (non-finite energy)")
    n_keep = (n_iter - n_burn + thin - 1) // thin
    draws = np.empty((n_keep, x.size))
    energies = np.empty(n_keep)
    counts = np.zeros(4, dtype=np.int64)
    accepts = np.zeros(4, dtype=np.int64)
    k, u, up, status = loop(
        data, x, xp, u, up, int(n_iter), _seed32(seed), n_burn, thin, draws, energies, counts, accepts
    )
    if status < 0:
        raise SamplerError(f"energy returned NaN at iteration {-status - 1}")
    return Chain(
        draws=draws[:k],
        energies=energies[:k],
        seed=seed,
        acceptance_rate=float(accepts.sum()) / n_iter,
        iterations=int(n_iter),
        burn_in=n_burn,
        thin=thin,
        move_counts=dict(zip(MOVES, counts.tolist())),
        move_accepts=dict(zip(MOVES, accepts.tolist())),
        final_state=ChainState(x.copy(), xp.copy(), u, up),
    )


def run_twalk(energy_fn, support_fn, x0, x1, n_iter, seed=None, burn_in=0.2, thin=None):
    """Run the t-walk on Python callables and keep the first point's trajectory.

    Parameters
    ----------
    energy_fn : callable
        Negative log target density; only evaluated where ``support_fn`` is true.
    support_fn : callable
        Whether a point lies in the support.
    x0, x1 : array_like
        Distinct starting points, both in the support.
    n_iter : int
        Number of iterations.
    seed : int, optional
        Chains are bit-identical for equal seeds.
    burn_in : float or int
        Fraction of iterations (if < 1) or number of iterations discarded.
    thin : int, optional
        Keep every ``thin``-th draw after burn-in; defaults to the dimension.

    Returns
    -------
    Chain
    """

    def energy(x, _data):
        if not support_fn(x):
            return math.inf
        return float(energy_fn(x))

    # the interpreted loop seeds numpy's legacy global generator; restore it afterwards
    state = np.random.get_state()
    try:
        return _run(partial(_twalk_loop, energy), energy, None, x0, x1, n_iter, seed, burn_in, thin)
    finally:
        np.random.set_state(state)


def run_twalk_compiled(energy_jit, data, x0, x1, n_iter, seed=None, burn_in=0.2, thin=None):
    """Compiled t-walk for a numba-jitted ``energy_jit(x, data)`` returning ``inf`` off-support.

    The first call for a new energy pays a few seconds of compilation.
    """
    return _run(partial(_twalk_loop_jit, energy_jit), energy_jit, data, x0, x1, n_iter, seed, burn_in, thin)
