"""Command-line interface: ``pbchron {plum,crs,simulate,run}``.

Every command writes its outputs and a ``metadata.json`` into ``--out``. On
failure an error JSON goes to stderr (and to ``<out>/error.json`` when an
output directory was given) and the exit status tells what went wrong:
0 success, 2 input error, 3 model infeasible, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .crs import CrsError, crs_ages
from .data import (
    DatasetError,
    read_dataset,
    read_supported,
    split_supported,
    tail_supported_estimate,
    to_csv,
)
from .fit import InfeasibleModelError, PlumConfig, run_plum
from .model import PriorConfig
from .simulate import SimulationSpec, parse_scenario, scenario_filter, simulate
from .summary import summarize, write_chronology_csv, write_draws_csv, write_metadata

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4

PRIOR_FLAGS = {
    "phi_shape": "phi_shape", "phi_mean": "phi_mean",
    "ps_shape": "ps_shape", "ps_mean": "ps_mean",
    "omega_a": "omega_a", "omega_b": "omega_b",
    "alpha_shape": "alpha_shape", "alpha_mean": "alpha_mean",
    "al": "a_l",
}

# hard defaults, applied after the config file
DEFAULTS = {
    "dc": 1.0,
    "seed": 0,
    "burn_in": 0.2,
    "anchor": "bottom",
    "mc": 5000,
    "scenario": "full",
    "model": "plum",
}


class InputError(Exception):
    """Bad arguments, config or input files (exit status 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def read_config(path):
    """Flat ``key=value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_grid(text):
    """``lo:hi:step`` into an inclusive array of depths."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"grid must be lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo or lo < 0:
        raise InputError(f"invalid grid {text!r}")
    n = int(np.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def _add_common(p):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def _add_core_input(p):
    p.add_argument("--input", help="core CSV (depth_cm,pb210_bqkg,sigma_bqkg,density[,thickness_cm])")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--supported-tail", type=int, dest="supported_tail", help="use the N deepest slices as supported data")
    g.add_argument("--supported-file", dest="supported_file", help="CSV of supported data (value_bqkg,sigma_bqkg)")


def _add_plum(p):
    p.add_argument("--dc", type=float, help="section length, cm")
    p.add_argument("--iters", type=int, help="t-walk iterations")
    p.add_argument("--burn-in", type=float, dest="burn_in")
    p.add_argument("--thin", type=int)
    p.add_argument("--max-depth", type=float, dest="max_depth", help="base of the section grid, cm")
    p.add_argument("--anchor", choices=("bottom", "top"))
    p.add_argument("--grid", help="output depths lo:hi:step")
    p.add_argument("--al", type=float, help="detection threshold a_l, Bq/m^2")
    for flag in ("phi-shape", "phi-mean", "ps-shape", "ps-mean", "omega-a", "omega-b", "alpha-shape", "alpha-mean"):
        p.add_argument(f"--{flag}", type=float, dest=flag.replace("-", "_"))


def _add_crs(p):
    p.add_argument("--mc", type=int, help="Monte Carlo replicates")
    p.add_argument("--extrapolate", action="store_true", default=None, help="extend the inventory below the deepest slice")


def build_parser():
    parser = _Parser(prog="pbchron", description="Lead-210 age-depth models.")
    parser.add_argument("--version", action="version", version=f"pbchron {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plum", help="Bayesian constant-supply age-depth model")
    _add_common(p)
    _add_core_input(p)
    _add_plum(p)

    p = sub.add_parser("crs", help="classical CRS ages with Monte Carlo bands")
    _add_common(p)
    _add_core_input(p)
    _add_crs(p)

    p = sub.add_parser("simulate", help="write a synthetic core (or filter an existing one)")
    _add_common(p)
    p.add_argument("--input", help="filter this CSV instead of simulating")
    p.add_argument("--scenario", nargs="+", help="full | odd_depths | top_n K | drop_bottom K | skip_range LO HI")
    p.add_argument("--no-noise", action="store_true", default=None, dest="no_noise")

    p = sub.add_parser("run", help="run --model plum|crs with the union of their flags")
    _add_common(p)
    _add_core_input(p)
    p.add_argument("--model", choices=("plum", "crs"))
    _add_plum(p)
    _add_crs(p)
    return parser


def resolve(args):
    """Merge flags over the config file over hard defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = read_config(args.config)
        known = set(vars(args))
        unknown = set(file_cfg) - known
        if unknown:
            raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    return cfg


def _typed(cfg, key, kind, default=None):
    value = cfg.get(key, default)
    if value is None:
        return None
    try:
        if kind is bool:
            return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes", "on")
        return kind(value)
    except (TypeError, ValueError):
        raise InputError(f"{key} must be {kind.__name__}, got {value!r}") from None


def _load_core(cfg):
    path = cfg.get("input")
    if not path:
        raise InputError("--input is required")
    if not Path(path).is_file():
        raise InputError(f"input file not found: {path}")
    tail = _typed(cfg, "supported_tail", int)
    sfile = cfg.get("supported_file")
    if tail is not None and sfile:
        raise InputError("--supported-tail and --supported-file are mutually exclusive")
    if tail is None and not sfile:
        raise InputError("one of --supported-tail or --supported-file is required")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ds = read_dataset(path)
    notes = [str(w.message) for w in caught]
    if tail is not None:
        chron, supported = split_supported(ds, tail)
    else:
        if not Path(sfile).is_file():
            raise InputError(f"supported file not found: {sfile}")
        supported = read_supported(sfile)
        chron = ds.with_supported(supported)
    return chron, list(supported), notes


def _out_dir(cfg):
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_metadata(command, cfg):
    return {
        "software": "pbchron",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(cfg.items()) if k != "func"},
    }


def cmd_plum(cfg):
    chron, supported, notes = _load_core(cfg)
    prior_kw = {field: _typed(cfg, key, float) for key, field in PRIOR_FLAGS.items() if cfg.get(key) is not None}
    try:
        prior = PriorConfig(**prior_kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    config = PlumConfig(
        dc=_typed(cfg, "dc", float),
        max_depth=_typed(cfg, "max_depth", float),
        n_iter=_typed(cfg, "iters", int),
        burn_in=_typed(cfg, "burn_in", float),
        thin=_typed(cfg, "thin", int),
        seed=_typed(cfg, "seed", int),
        anchor=cfg["anchor"],
        prior=prior,
    )
    ens = run_plum(chron, config, supported=supported)
    grid_text = cfg.get("grid")
    depths = parse_grid(grid_text) if grid_text else ens.grid.c
    if depths.max() > ens.grid.bottom * (1 + 1e-12):
        raise InputError(f"output grid extends below the model base ({ens.grid.bottom} cm)")
    s = summarize(ens, depths)

    out = _out_dir(cfg)
    write_draws_csv(ens, out / "draws.csv")
    write_chronology_csv(out / "chronology.csv", s.depth, s.mean, s.lo95, s.hi95)
    meta = _base_metadata("plum", cfg)
    meta.update(ens.metadata)
    meta["input_warnings"] = notes
    meta["phi"] = vars(s.phi)
    meta["p_s"] = vars(s.p_s)
    write_metadata(out / "metadata.json", meta)
    return EXIT_OK


def cmd_crs(cfg):
    chron, supported, notes = _load_core(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mean, sd = tail_supported_estimate(supported)
        result = crs_ages(
            chron, mean, sd,
            n_mc=_typed(cfg, "mc", int),
            seed=_typed(cfg, "seed", int),
            extrapolate=bool(_typed(cfg, "extrapolate", bool, False)),
        )
    notes += [str(w.message) for w in caught]

    out = _out_dir(cfg)
    cols = ("depth", "age", "age_mean", "age_sd", "age_lo95", "age_hi95")
    with open(out / "crs.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in result.records:
            fh.write(",".join(repr(rec[c]) for c in cols) + "\n")
    write_chronology_csv(out / "chronology.csv", result.depth, result.age_mean, result.age_lo95, result.age_hi95)
    meta = _base_metadata("crs", cfg)
    meta.update(
        label=chron.label,
        supported_mean=result.supported_mean,
        supported_sd=result.supported_sd,
        a0=result.a0,
        phi=result.phi,
        dropped_depths=result.dropped_depths,
        undated_depths=result.undated_depths,
        interpolated_gaps=result.interpolated_gaps,
        extrapolated=result.extrapolated,
        n_mc=result.n_mc,
        seed=result.seed,
        input_warnings=notes,
    )
    write_metadata(out / "metadata.json", meta)
    return EXIT_OK


def cmd_simulate(cfg):
    try:
        scenario = parse_scenario(cfg["scenario"])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    seed = _typed(cfg, "seed", int)
    if cfg.get("input"):
        if not Path(cfg["input"]).is_file():
            raise InputError(f"input file not found: {cfg['input']}")
        ds = read_dataset(cfg["input"])
    else:
        ds = simulate(SimulationSpec(seed=seed), noise=not _typed(cfg, "no_noise", bool, False))
    ds = scenario_filter(ds, scenario)

    out = _out_dir(cfg)
    (out / "dataset.csv").write_text(to_csv(ds), encoding="utf-8")
    meta = _base_metadata("simulate", cfg)
    meta.update(scenario=str(scenario), n_rows=len(ds), depths=ds.depths.tolist())
    write_metadata(out / "metadata.json", meta)
    return EXIT_OK


COMMANDS = {"plum": cmd_plum, "crs": cmd_crs, "simulate": cmd_simulate}


def _fail(code, kind, message, cfg):
    payload = {"status": "error", "exit_code": code, "error": kind, "message": message}
    text = json.dumps(payload)
    print(text, file=sys.stderr)
    out = (cfg or {}).get("out")
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    return code


def main(argv=None):
    cfg = None
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        command = cfg["model"] if args.command == "run" else args.command
        return COMMANDS[command](cfg)
    except InputError as exc:
        return _fail(EXIT_INPUT, "input", str(exc), cfg)
    except InfeasibleModelError as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(exc), cfg)
    except CrsError as exc:
        code = EXIT_INFEASIBLE if "no unsupported activity" in str(exc) else EXIT_INPUT
        return _fail(code, "infeasible" if code == EXIT_INFEASIBLE else "input", str(exc), cfg)
    except (DatasetError, ValueError) as exc:
        return _fail(EXIT_INPUT, "input", str(exc), cfg)
    except Exception as exc:  # noqa: BLE001 - last-resort report
        return _fail(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}", cfg)


if __name__ == "__main__":
    sys.exit(main())
