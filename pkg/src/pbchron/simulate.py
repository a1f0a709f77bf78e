"""Synthetic lead-210 cores from a known constant supply and age-depth curve."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .data import CoreDataset, DatasetError, Measurement
from .physics import KG_M2_PER_G_CM2, LAMBDA, _unsupported

# reported errors of the published 30-slice simulation, Bq/kg
TABLE_SIGMA = (10,) + (9,) * 7 + (8,) * 7 + (7,) * 7 + (6,) * 7 + (5,)


@dataclass(frozen=True)
class SimulationSpec:
    """Truth and sampling design for one synthetic core.

    Ages follow ``t(x) = q2 x^2 + q1 x``. Areal density per cm of depth
    (kg/m^2 per cm) is ``b0 - b1 cos(x * period_factor)``; the default
    ``period_factor`` of pi/30 reproduces the density column of the
    published simulated core, and ``1 / (30 pi)`` gives the formula as
    printed (see :data:`PRINTED_PERIOD`).
    """

    phi: float = 150.0
    p_s: float = 20.0
    q2: float = 1.0 / 3.0
    q1: float = 0.5
    b0: float = 1.5
    b1: float = 0.05
    period_factor: float = math.pi / 30.0
    depths: tuple = tuple(float(d) for d in range(1, 31))
    thickness: float = 1.0
    sigma: tuple | float = TABLE_SIGMA
    seed: int | None = None
    lam: float = LAMBDA

    def __post_init__(self):
        if self.phi <= 0:
            raise ValueError("phi must be positive")
        if self.p_s < 0:
            raise ValueError("p_s must be non-negative")
        if self.thickness <= 0:
            raise ValueError("thickness must be positive")
        sig = self.sigmas
        if sig.shape != (len(self.depths),) or np.any(sig <= 0):
            raise ValueError("sigma must be positive, one per depth or a single constant")
        lo, hi = self.depths[0] - self.thickness, self.depths[-1]
        if lo < 0:
            raise ValueError("first slice extends above the surface")
        xs = np.linspace(lo, hi, 2001)
        if np.any(np.diff(self.age(xs)) <= 0) or self.age(lo) < 0:
            raise DatasetError("age function is not increasing over the simulated depths")
        if np.any(self.density(xs) <= 0):
            raise ValueError("density must be positive over the simulated depths")

    @property
    def sigmas(self):
        if np.ndim(self.sigma) == 0:
            return np.full(len(self.depths), float(self.sigma))
        return np.asarray(self.sigma, dtype=float)

    def age(self, x):
        x = np.asarray(x, dtype=float)
        return self.q2 * x * x + self.q1 * x

    def density(self, x):
        """Areal density per cm of depth, kg/m^2/cm."""
        return self.b0 - self.b1 * np.cos(np.asarray(x, dtype=float) * self.period_factor)

    def slice_mass(self, a, b):
        """Dry mass per unit area of the slice (a, b], kg/m^2."""
        w = self.period_factor
        if w == 0:
            return (self.b0 - self.b1) * (b - a)
        return self.b0 * (b - a) - self.b1 * (math.sin(w * b) - math.sin(w * a)) / w


PRINTED_PERIOD = 1.0 / (30.0 * math.pi)


def true_concentrations(spec):
    """Noise-free total concentrations (Bq/kg) and density column (g/cm^3)."""
    bottoms = np.asarray(spec.depths, dtype=float)
    tops = bottoms - spec.thickness
    if np.any(tops[1:] < bottoms[:-1] - 1e-9):
        raise DatasetError("simulated slices overlap")
    mass = np.array([spec.slice_mass(a, b) for a, b in zip(tops, bottoms)])
    unsup = _unsupported(spec.phi, spec.age(tops), spec.age(bottoms), spec.lam)
    conc = spec.p_s + unsup / mass
    density = mass / (KG_M2_PER_G_CM2 * spec.thickness)
    return conc, density


def simulate(spec=None, noise=True):
    """Draw a synthetic :class:`CoreDataset` from ``spec``.

    Each slice's concentration is the supported level plus its unsupported
    activity divided by its dry mass; Gaussian noise with the slice's
    reported sigma is added unless ``noise`` is false.
    """
    spec = spec or SimulationSpec()
    conc, density = true_concentrations(spec)
    sig = spec.sigmas
    if noise:
        rng = np.random.default_rng(spec.seed)
        conc = conc + sig * rng.standard_normal(conc.size)
    ms = [
        Measurement(depth_bottom=float(d), thickness=spec.thickness, density=float(r), total_pb=float(p), sigma=float(s))
        for d, r, p, s in zip(spec.depths, density, conc, sig)
    ]
    return CoreDataset(tuple(ms), label=f"simulated(seed={spec.seed})")


def quadrature_concentration(spec, a, b):
    """Concentration of slice (a, b] by direct integration, for cross-checks."""
    mass = spec.slice_mass(a, b)

    def integrand(x):
        slope = 2.0 * spec.q2 * x + spec.q1
        return spec.phi * slope * math.exp(-spec.lam * float(spec.age(x)))

    unsup, _ = quad(integrand, a, b, epsabs=0, epsrel=1e-12)
    return spec.p_s + unsup / mass


# -- scenarios ---------------------------------------------------------------

SCENARIOS = ("full", "odd_depths", "top_n", "drop_bottom", "skip_range")


@dataclass(frozen=True)
class Scenario:
    name: str
    args: tuple = field(default_factory=tuple)

    def __str__(self):
        return ":".join([self.name, *(f"{a:g}" for a in self.args)])


def parse_scenario(text):
    """Parse ``full``, ``odd_depths``, ``top_n:K``, ``drop_bottom:K`` or ``skip_range:LO:HI``.

    Whitespace may separate the arguments instead of colons.
    """
    if isinstance(text, Scenario):
        return text
    if isinstance(text, (list, tuple)):
        text = " ".join(str(t) for t in text)
    parts = text.replace(":", " ").split()
    if not parts:
        raise ValueError("empty scenario")
    name, raw = parts[0], parts[1:]
    arity = {"full": 0, "odd_depths": 0, "top_n": 1, "drop_bottom": 1, "skip_range": 2}
    if name not in arity:
        raise ValueError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}")
    if len(raw) != arity[name]:
        raise ValueError(f"scenario {name} takes {arity[name]} argument(s)")
    try:
        args = tuple(float(r) for r in raw)
    except ValueError:
        raise ValueError(f"bad scenario arguments {raw!r}") from None
    if name in ("top_n", "drop_bottom") and (args[0] != int(args[0]) or args[0] < 1):
        raise ValueError(f"{name} needs a positive integer")
    return Scenario(name, args)


def scenario_filter(ds, scenario):
    """Sub-dataset for one of the data-availability scenarios.

    ``top_n:K`` keeps the K shallowest slices and ``drop_bottom:K`` removes
    the K deepest; ``skip_range:LO:HI`` removes slices whose bottom depth
    lies in [LO, HI]; ``odd_depths`` keeps odd integer bottom depths.
    """
    sc = parse_scenario(scenario)
    depths = ds.depths
    n = len(ds)
    if sc.name == "full":
        keep = range(n)
    elif sc.name == "odd_depths":
        keep = [i for i, d in enumerate(depths) if d == int(d) and int(d) % 2 == 1]
    elif sc.name == "top_n":
        keep = range(min(n, int(sc.args[0])))
    elif sc.name == "drop_bottom":
        keep = range(max(0, n - int(sc.args[0])))
    else:
        lo, hi = sc.args
        keep = [i for i, d in enumerate(depths) if not lo <= d <= hi]
    if not keep:
        raise DatasetError(f"scenario {sc} leaves no measurements")
    return ds.subset(keep)
