"""Core-sample data types, CSV ingestion and supported-activity splitting."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

DEFAULT_THICKNESS = 1.0

REQUIRED_COLUMNS = ("depth_cm", "pb210_bqkg", "sigma_bqkg", "density")
THICKNESS_COLUMN = "thickness_cm"
SUPPORTED_COLUMNS = ("value_bqkg", "sigma_bqkg")


class DatasetError(ValueError):
    """Raised for malformed or physically invalid core data."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GapWarning(UserWarning):
    """Consecutive slices leave an unsampled depth interval."""


class DegenerateEstimateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Measurement:
    """One core slice covering (depth_bottom - thickness, depth_bottom].

    ``density`` is dry bulk density in g/cm^3; ``total_pb`` and ``sigma``
    are in Bq/kg.
    """

    depth_bottom: float
    thickness: float
    density: float
    total_pb: float
    sigma: float

    def __post_init__(self):
        for name in ("depth_bottom", "thickness", "density", "total_pb", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise DatasetError(f"{name} must be finite")
        if self.thickness <= 0:
            raise DatasetError(f"thickness must be positive at depth {self.depth_bottom}")
        if self.sigma <= 0:
            raise DatasetError(f"sigma must be positive at depth {self.depth_bottom}")
        if self.density <= 0:
            raise DatasetError(f"density must be positive at depth {self.depth_bottom}")
        if self.depth_bottom - self.thickness < -1e-12:
            raise DatasetError(f"slice at depth {self.depth_bottom} extends above the surface")

    @property
    def depth_top(self):
        return self.depth_bottom - self.thickness


@dataclass(frozen=True)
class SupportedDatum:
    value: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.sigma)):
            raise DatasetError("supported datum must be finite")
        if self.sigma <= 0:
            raise DatasetError("supported sigma must be positive")


@dataclass(frozen=True)
class CoreDataset:
    measurements: tuple[Measurement, ...]
    supported: tuple[SupportedDatum, ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "supported", tuple(self.supported))
        if not self.measurements:
            raise DatasetError("dataset has no measurements")
        for prev, cur in zip(self.measurements, self.measurements[1:]):
            if cur.depth_bottom <= prev.depth_bottom:
                raise DatasetError(
                    f"depths must be strictly increasing ({prev.depth_bottom} then {cur.depth_bottom})"
                )
            if cur.depth_top < prev.depth_bottom - 1e-9:
                raise DatasetError(
                    f"slice ending at {cur.depth_bottom} overlaps slice ending at {prev.depth_bottom}"
                )

    def __len__(self):
        return len(self.measurements)

    # column views, handy for vectorised code
    @property
    def depths(self):
        return np.array([m.depth_bottom for m in self.measurements])

    @property
    def tops(self):
        return np.array([m.depth_top for m in self.measurements])

    @property
    def thickness(self):
        return np.array([m.thickness for m in self.measurements])

    @property
    def density(self):
        return np.array([m.density for m in self.measurements])

    @property
    def total_pb(self):
        return np.array([m.total_pb for m in self.measurements])

    @property
    def sigma(self):
        return np.array([m.sigma for m in self.measurements])

    def gaps(self):
        """Unsampled (top, bottom) intervals between consecutive slices."""
        out = []
        for prev, cur in zip(self.measurements, self.measurements[1:]):
            if cur.depth_top > prev.depth_bottom + 1e-9:
                out.append((prev.depth_bottom, cur.depth_top))
        return out

    def subset(self, keep):
        """New dataset with only the measurements whose index is in ``keep``."""
        keep = sorted(set(keep))
        return replace(self, measurements=tuple(self.measurements[i] for i in keep))

    def with_supported(self, supported):
        return replace(self, supported=tuple(supported))


def _parse_float(text, column, line):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise DatasetError(f"column {column!r}: cannot parse {text!r} as a number", line) from None


def _rows(csv_text):
    reader = csv.reader(io.StringIO(csv_text), skipinitialspace=True)
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        yield lineno, [cell.strip() for cell in row]


def parse_dataset(csv_text, *, label="", default_thickness=DEFAULT_THICKNESS, header=True):
    """Parse a core CSV into a validated, depth-sorted :class:`CoreDataset`.

    The depth column is the slice bottom. When there is no ``thickness_cm``
    column every slice gets ``default_thickness`` and a :class:`GapWarning`
    is issued for jumps between consecutive depths larger than that.

    With ``header=False`` the columns are taken positionally as depth,
    pb210, sigma, density[, thickness].
    """
    rows = list(_rows(csv_text))
    if not rows:
        raise DatasetError("empty dataset file")

    columns = list(REQUIRED_COLUMNS)
    if header:
        lineno, names = rows.pop(0)
        missing = [c for c in REQUIRED_COLUMNS if c not in names]
        if missing:
            raise DatasetError(f"missing required column(s): {', '.join(missing)}", lineno)
        columns = names
        if not rows:
            raise DatasetError("dataset has a header but no data rows")
    index = {name: i for i, name in enumerate(columns)}
    has_thickness = THICKNESS_COLUMN in index or (not header and len(rows[0][1]) >= 5)
    if not header:
        index[THICKNESS_COLUMN] = 4

    parsed = []
    for lineno, row in rows:
        if len(row) < len(REQUIRED_COLUMNS) or (header and len(row) != len(columns)):
            raise DatasetError(f"expected {len(columns)} fields, got {len(row)}", lineno)
        vals = {c: _parse_float(row[index[c]], c, lineno) for c in REQUIRED_COLUMNS}
        thick = (
            _parse_float(row[index[THICKNESS_COLUMN]], THICKNESS_COLUMN, lineno)
            if has_thickness
            else default_thickness
        )
        try:
            m = Measurement(
                depth_bottom=vals["depth_cm"],
                thickness=thick,
                density=vals["density"],
                total_pb=vals["pb210_bqkg"],
                sigma=vals["sigma_bqkg"],
            )
        except DatasetError as exc:
            raise DatasetError(str(exc), lineno) from None
        parsed.append((lineno, m))

    parsed.sort(key=lambda item: item[1].depth_bottom)
    for (_, prev), (lineno, cur) in zip(parsed, parsed[1:]):
        if cur.depth_bottom == prev.depth_bottom:
            raise DatasetError(f"duplicate depth {cur.depth_bottom}", lineno)
        if cur.depth_top < prev.depth_bottom - 1e-9:
            raise DatasetError(
                f"slice ending at {cur.depth_bottom} overlaps slice ending at {prev.depth_bottom}",
                lineno,
            )

    ds = CoreDataset(tuple(m for _, m in parsed), label=label)
    if not has_thickness:
        for top, bottom in ds.gaps():
            warnings.warn(
                f"unsampled interval {top:g}-{bottom:g} cm (thickness defaulted to {default_thickness:g} cm)",
                GapWarning,
                stacklevel=2,
            )
    return ds


def parse_supported(csv_text):
    """Parse a ``value_bqkg,sigma_bqkg`` CSV of supported-activity data."""
    rows = list(_rows(csv_text))
    if not rows:
        raise DatasetError("empty supported-data file")
    lineno, names = rows.pop(0)
    missing = [c for c in SUPPORTED_COLUMNS if c not in names]
    if missing:
        raise DatasetError(f"missing required column(s): {', '.join(missing)}", lineno)
    index = {name: i for i, name in enumerate(names)}
    out = []
    for lineno, row in rows:
        if len(row) != len(names):
            raise DatasetError(f"expected {len(names)} fields, got {len(row)}", lineno)
        value = _parse_float(row[index["value_bqkg"]], "value_bqkg", lineno)
        sigma = _parse_float(row[index["sigma_bqkg"]], "sigma_bqkg", lineno)
        try:
            out.append(SupportedDatum(value, sigma))
        except DatasetError as exc:
            raise DatasetError(str(exc), lineno) from None
    if not out:
        raise DatasetError("supported-data file has no rows")
    return out


def to_csv(ds):
    """Serialise measurements; thickness is always written so it round-trips."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*REQUIRED_COLUMNS, THICKNESS_COLUMN])
    for m in ds.measurements:
        writer.writerow([repr(m.depth_bottom), repr(m.total_pb), repr(m.sigma), repr(m.density), repr(m.thickness)])
    return buf.getvalue()


def supported_to_csv(supported):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUPPORTED_COLUMNS)
    for s in supported:
        writer.writerow([repr(s.value), repr(s.sigma)])
    return buf.getvalue()


def read_dataset(path, **kwargs):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    kwargs.setdefault("label", str(path))
    return parse_dataset(text, **kwargs)


def read_supported(path):
    with open(path, encoding="utf-8") as fh:
        return parse_supported(fh.read())


def split_supported(ds, n_tail):
    """Move the deepest ``n_tail`` measurements into supported-activity data.

    Returns ``(chronology, supported)``; the chronology dataset carries the
    same supported data in its ``supported`` field.
    """
    n = len(ds)
    if not 1 <= n_tail < n:
        raise DatasetError(f"supported tail must be between 1 and {n - 1}, got {n_tail}")
    tail = ds.measurements[n - n_tail:]
    supported = [SupportedDatum(m.total_pb, m.sigma) for m in tail]
    chronology = replace(ds, measurements=ds.measurements[: n - n_tail], supported=tuple(supported))
    return chronology, supported


def tail_supported_estimate(supported):
    """Unweighted mean and sample standard deviation of supported data.

    A single datum yields sd 0 with a :class:`DegenerateEstimateWarning`.
    """
    values = np.array([s.value for s in supported], dtype=float)
    if values.size == 0:
        raise DatasetError("no supported data to average")
    if values.size == 1:
        warnings.warn("single supported datum: standard deviation set to 0", DegenerateEstimateWarning, stacklevel=2)
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1))


def _fixture_text(name):
    return resources.files("pbchron.fixtures").joinpath(name).read_text(encoding="utf-8")


def load_hp1c():
    """Havre-St-Pierre core HP1C (alpha spectrometry, 33 slices)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GapWarning)
        return parse_dataset(_fixture_text("hp1c.csv"), label="HP1C")


def load_simulated():
    """The frozen simulated core (30 one-centimetre slices)."""
    return parse_dataset(_fixture_text("simulated.csv"), label="simulated")
