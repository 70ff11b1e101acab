"""Command-line front end: parameter sweeps, kernel export and validation.

A sweep configuration is a TOML file with exactly one parameter section,
``[reduced]`` (dimensionless ratios) or ``[physical]`` (SI fields), and a
``[sweep]`` table::

    [reduced]
    omega_q = 0.5

    [sweep]
    mode = "cond"
    output = "fig4.csv"

    [[sweep.axes]]
    name = "gamma"
    min = 0.1
    max = 10.0
    count = 40
    spacing = "log"

Instead of axes the sweep may name a ``preset``; values in the parameter
section then override the preset's fixed values.  Besides the
:class:`~optomech.model.ReducedParams` fields, ``[reduced]`` accepts
``quality``, ``mech_freq`` (rad/s) and ``temperature`` (K), from which
``gamma_m`` and ``omega_f`` are derived.  ``[physical]`` accepts the
:class:`~optomech.model.PhysicalParams` fields plus ``delta``, the detuning in
units of ``mech_freq``.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field, fields

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .control import optimal_controller
from .entangle import checked_log_negativity
from .errors import ConfigError, OptomechError, StationarityError
from .estimator import solve_point
from .model import (
    PhysicalParams,
    ReducedParams,
    damping_from_quality,
    experimental_params,
    reduce,
    thermal_frequency,
)

MODES = ("uncond", "cond", "ctrl", "entangle-uncond", "entangle-cond", "validate")
VALUE_COLUMNS = ("N_uncond", "N_eff_cond", "N_ctrl", "EN_uncond", "EN_cond")
SIG_DIGITS = 12

REDUCED_KEYS = tuple(f.name for f in fields(ReducedParams))
REDUCED_EXTRA = ("quality", "mech_freq", "temperature")
PHYSICAL_KEYS = tuple(f.name for f in fields(PhysicalParams))
PHYSICAL_EXTRA = ("delta",)

# which value columns each mode fills
MODE_COLUMNS = {
    "uncond": ("N_uncond",),
    "cond": ("N_uncond", "N_eff_cond"),
    "ctrl": ("N_uncond", "N_eff_cond", "N_ctrl"),
    "entangle-uncond": ("N_uncond", "EN_uncond"),
    "entangle-cond": ("N_uncond", "N_eff_cond", "EN_uncond", "EN_cond"),
}


@dataclass(frozen=True)
class Axis:
    """One sweep axis; ``endpoint=False`` excludes ``max`` on a linear axis."""

    name: str
    min: float
    max: float
    count: int
    spacing: str = "lin"
    endpoint: bool = True

    def values(self):
        if self.count == 1:
            return np.array([self.min])
        if self.spacing == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max), self.count,
                               endpoint=self.endpoint)
        return np.linspace(self.min, self.max, self.count, endpoint=self.endpoint)


@dataclass(frozen=True)
class SweepConfig:
    """Validated sweep description.

    Attributes
    ----------
    mode : str
        One of :data:`MODES`.
    kind : str
        ``"reduced"`` or ``"physical"``.
    fixed : dict
        Parameter values shared by every grid point.
    axes : tuple of Axis
        Grid axes in row-major order.
    output_path : str or None
        CSV destination.
    preset : str or None
        Name of the preset the configuration was built from.
    comments : tuple of str
        Lines written as ``#`` comments above the CSV header.
    """

    mode: str
    kind: str
    fixed: dict
    axes: tuple
    output_path: str = None
    preset: str = None
    comments: tuple = field(default=())

    def points(self):
        """Parameter dictionaries in row-major order over the axes."""
        grids = [ax.values() for ax in self.axes]
        for idx in np.ndindex(*[len(g) for g in grids]):
            vals = dict(self.fixed)
            coords = tuple(float(g[i]) for g, i in zip(grids, idx))
            vals.update({ax.name: c for ax, c in zip(self.axes, coords)})
            yield coords, vals


def _log_axis(name, lo, hi, count):
    return Axis(name, lo, hi, count, "log")


def _lin_axis(name, lo, hi, count, endpoint=True):
    return Axis(name, lo, hi, count, "lin", endpoint)


_RATIO_GRID = (_log_axis("gamma", 0.1, 10.0, 40), _lin_axis("delta", -3.0, 0.0, 40, False))
# Mechanical damping without bath noise is itself an unmonitored loss: the
# joint conditional state is then mixed by an amount linear in gamma_m.  The
# lossless presets take gamma_m small enough for that to stay below 1e-6.
_LOSSLESS_GM = 1e-12
_LOSSLESS_NOTE = ("lossless limit: gamma_m = 1e-12 so that damping without bath "
                  "noise leaves the conditional joint state pure to 1e-6")
_FIG26_MECH = dict(quality=5e5, mech_freq=2 * math.pi * 1e6, eta=1.0, zeta=0.0)

PRESETS = {
    "fig1": dict(mode="ctrl", kind="reduced", axes=_RATIO_GRID,
                 fixed=dict(omega_q=0.5, omega_f=0.0)),
    "fig2": dict(mode="entangle-cond", kind="reduced",
                 axes=(_log_axis("temperature", 1.0, 1e3, 61),),
                 fixed=dict(gamma=1.0, delta=-1.0, omega_q=1.0, **_FIG26_MECH),
                 comments=("conditional curve assumes eta = 1 and zeta = 0 "
                           "(detection parameters not specified for this figure)",)),
    "fig4": dict(mode="cond", kind="reduced", axes=_RATIO_GRID,
                 fixed=dict(omega_q=0.5, omega_f=0.0, eta=1.0, zeta=0.0, gamma_m=_LOSSLESS_GM),
                 comments=(_LOSSLESS_NOTE,)),
    "fig5": dict(mode="entangle-cond", kind="reduced", axes=_RATIO_GRID,
                 fixed=dict(omega_q=0.5, omega_f=0.0, eta=1.0, zeta=0.0, gamma_m=_LOSSLESS_GM),
                 comments=(_LOSSLESS_NOTE,)),
    "fig6": dict(mode="entangle-cond", kind="reduced",
                 axes=(_log_axis("gamma", 1.0, 100.0, 41),
                       _log_axis("temperature", 1.0, 1e4, 41)),
                 fixed=dict(delta=0.0, omega_q=1.0, **_FIG26_MECH)),
    "fig7": dict(mode="ctrl", kind="physical",
                 axes=(_log_axis("temperature", 1.0, 100.0, 41),
                       _lin_axis("delta", -2.0, 0.0, 41)),
                 fixed=dict(delta=-1.0)),
    "validate": dict(mode="validate", kind=None, axes=(), fixed={}),
}


def _allowed_keys(kind):
    if kind == "reduced":
        return REDUCED_KEYS + REDUCED_EXTRA
    return PHYSICAL_KEYS + PHYSICAL_EXTRA


def _check_number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _parse_axis(raw):
    if not isinstance(raw, dict):
        raise ConfigError("each axis must be a table")
    unknown = set(raw) - {"name", "min", "max", "count", "spacing", "endpoint"}
    if unknown:
        raise ConfigError(f"unknown axis keys {sorted(unknown)}")
    try:
        name = raw["name"]
        lo = _check_number("axis min", raw["min"])
        hi = _check_number("axis max", raw["max"])
        count = raw["count"]
    except KeyError as exc:
        raise ConfigError(f"axis is missing {exc.args[0]!r}") from None
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ConfigError("axis count must be an integer >= 1")
    spacing = raw.get("spacing", "lin")
    if spacing not in ("lin", "log"):
        raise ConfigError(f"axis spacing must be 'lin' or 'log', got {spacing!r}")
    if lo > hi:
        raise ConfigError(f"axis {name!r} has min > max")
    if spacing == "log" and lo <= 0:
        raise ConfigError(f"log axis {name!r} needs a positive minimum")
    return Axis(str(name), lo, hi, count, spacing, bool(raw.get("endpoint", True)))


def parse_config(data: dict, preset=None, output=None, single_point=False) -> SweepConfig:
    """Validate a parsed TOML document (and an optional preset override).

    With ``single_point`` a configuration without axes is accepted; it then
    describes the one point given by its ``[reduced]`` or ``[physical]`` table.
    """
    sections = [s for s in ("reduced", "physical") if s in data]
    unknown = set(data) - {"reduced", "physical", "sweep"}
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")
    if len(sections) > 1:
        raise ConfigError("give exactly one of [reduced] or [physical]")
    sweep = data.get("sweep", {})
    if not isinstance(sweep, dict):
        raise ConfigError("[sweep] must be a table")
    unknown = set(sweep) - {"mode", "axes", "output", "preset"}
    if unknown:
        raise ConfigError(f"unknown [sweep] keys {sorted(unknown)}")
    preset = preset or sweep.get("preset")
    raw_axes = sweep.get("axes", [])
    if preset is not None and raw_axes:
        raise ConfigError("give either a preset or grid axes, not both")
    output = output or sweep.get("output")

    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        entry = PRESETS[preset]
        if entry["mode"] == "validate":
            return SweepConfig("validate", "reduced", {}, (), output, preset)
        kind = entry["kind"]
        if sections and sections[0] != kind:
            raise ConfigError(f"preset {preset!r} takes a [{kind}] section")
        fixed = dict(entry["fixed"])
        if kind == "physical":
            base = experimental_params()
            fixed = {**{f.name: getattr(base, f.name) for f in fields(base)}, **fixed}
        fixed.update(data.get(kind, {}))
        mode = sweep.get("mode", entry["mode"])
        axes = entry["axes"]
        comments = entry.get("comments", ())
    else:
        if not raw_axes and not single_point:
            raise ConfigError("a sweep needs either a preset or at least one axis")
        if not sections:
            raise ConfigError("give exactly one of [reduced] or [physical]")
        kind = sections[0]
        fixed = dict(data[kind])
        mode = sweep.get("mode", "uncond")
        axes = tuple(_parse_axis(a) for a in raw_axes)
        comments = ()
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choose from {list(MODES)}")
    allowed = _allowed_keys(kind)
    for key, val in fixed.items():
        if key not in allowed:
            raise ConfigError(f"unknown [{kind}] field {key!r}")
        _check_number(key, val)
    names = [ax.name for ax in axes]
    for name in names:
        if name not in allowed:
            raise ConfigError(f"axis {name!r} is not a [{kind}] field")
    if len(set(names)) != len(names):
        raise ConfigError("axis names must be distinct")
    cfg = SweepConfig(mode, kind, fixed, tuple(axes), output, preset, tuple(comments))
    if mode != "validate":
        # fail early on a bad parameter domain at the first grid point
        try:
            to_reduced(kind, next(cfg.points())[1])
        except OptomechError as exc:
            raise ConfigError(f"invalid parameters: {exc}") from None
    return cfg


def load_config(path, preset=None, output=None, single_point=False) -> SweepConfig:
    """Read and validate a TOML configuration file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return parse_config(data, preset=preset, output=output, single_point=single_point)


def to_reduced(kind, values: dict) -> ReducedParams:
    """Map one grid point onto :class:`ReducedParams`."""
    vals = dict(values)
    if kind == "physical":
        if "delta" in vals:
            vals["detuning"] = vals.pop("delta") * vals["mech_freq"]
        return reduce(PhysicalParams(**vals))
    quality = vals.pop("quality", None)
    mech_freq = vals.pop("mech_freq", None)
    temperature = vals.pop("temperature", None)
    if quality is not None:
        vals["gamma_m"] = damping_from_quality(quality)
    if temperature is not None:
        if mech_freq is None:
            raise ConfigError("temperature in [reduced] needs mech_freq")
        vals["omega_f"] = thermal_frequency(temperature, vals.get("gamma_m", 1e-9), mech_freq)
    if "gamma" not in vals or "delta" not in vals or "omega_q" not in vals:
        raise ConfigError("[reduced] needs gamma, delta and omega_q")
    return ReducedParams(**vals)


def evaluate_point(mode, rp: ReducedParams):
    """Compute the value columns of one grid point.

    Returns
    -------
    tuple
        ``(stable, values, error)`` where ``values`` maps column names to
        floats and ``error`` is an empty string or the failing exception name.
        Columns already computed before an error are kept.
    """
    cols = MODE_COLUMNS[mode]
    conditional = any(c in cols for c in ("N_eff_cond", "N_ctrl", "EN_cond"))
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            ps = solve_point(rp, conditional=False)
        except StationarityError:
            return False, {}, ""
        except OptomechError as exc:
            return True, out, type(exc).__name__
        try:
            out["N_uncond"] = ps.uncond.n
            if "EN_uncond" in cols:
                out["EN_uncond"] = checked_log_negativity(rp, ps.uncond.v, False).e_n
            if conditional:
                ps = solve_point(rp)
                out["N_eff_cond"] = ps.cond.n_eff
            if "EN_cond" in cols:
                out["EN_cond"] = checked_log_negativity(rp, ps.cond.v, True).e_n
            if "N_ctrl" in cols:
                out["N_ctrl"] = optimal_controller(rp, ps.wiener, ps.cond, ps.transfers).n_ctrl
        except OptomechError as exc:
            return True, out, type(exc).__name__
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            return True, out, type(exc).__name__
    return True, out, ""


def _evaluate_task(task):
    mode, kind, values = task
    try:
        rp = to_reduced(kind, values)
    except OptomechError as exc:
        return True, {}, type(exc).__name__
    return evaluate_point(mode, rp)


def fmt(value):
    """Fixed 12-significant-digit formatting used for every CSV number."""
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{SIG_DIGITS}g}"


def resolve_workers(arg):
    """``--workers`` if given, else ``OPTOMECH_WORKERS``, else 1."""
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("OPTOMECH_WORKERS", "").strip()
        if not env:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"OPTOMECH_WORKERS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("worker count must be >= 1")
    return n


def run_sweep(cfg: SweepConfig, workers=1):
    """Evaluate every grid point and render the CSV text.

    Returns
    -------
    tuple
        ``(csv_text, n_errors)``.
    """
    coords, tasks = [], []
    for c, vals in cfg.points():
        coords.append(c)
        tasks.append((cfg.mode, cfg.kind, vals))
    if workers > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (8 * workers))
            results = list(pool.map(_evaluate_task, tasks, chunksize=chunk))
    else:
        results = [_evaluate_task(t) for t in tasks]

    buf = io.StringIO()
    buf.write(f"# mode: {cfg.mode}\n")
    if cfg.preset:
        buf.write(f"# preset: {cfg.preset}\n")
    fixed = ", ".join(f"{k}={fmt(v)}" for k, v in sorted(cfg.fixed.items())
                      if k not in {ax.name for ax in cfg.axes})
    buf.write(f"# fixed [{cfg.kind}]: {fixed}\n")
    for line in cfg.comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([ax.name for ax in cfg.axes] + ["stable", *VALUE_COLUMNS, "error_flag"])
    n_err = 0
    for c, (stable, vals, err) in zip(coords, results):
        n_err += bool(err)
        row = [fmt(x) for x in c] + ["true" if stable else "false"]
        row += [fmt(vals.get(col)) for col in VALUE_COLUMNS]
        row.append(err)
        writer.writerow(row)
    return buf.getvalue(), n_err


# -- export ------------------------------------------------------------------

def _coeff_list(poly):
    return [[float(c.real), float(c.imag)] for c in poly.coeffs]


def serialize_rational(rf):
    """``{"num": [[re, im], ...], "den": [...]}`` with ascending coefficients."""
    return {"num": _coeff_list(rf.num), "den": _coeff_list(rf.den)}


def deserialize_rational(obj):
    """Inverse of :func:`serialize_rational`."""
    from .ratcalc import Polynomial, RationalFunction

    num = Polynomial([complex(re, im) for re, im in obj["num"]])
    den = Polynomial([complex(re, im) for re, im in obj["den"]])
    return RationalFunction(num, den)


def export_kernels(rp: ReducedParams) -> dict:
    """Filter, controller and spectral-factor kernels at a stable point.

    Raises
    ------
    StationarityError
        If the point is not strictly stable.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ps = solve_point(rp)
        out = {
            "params": rp.as_dict(),
            "convention": "coefficients in ascending powers of the dimensionless "
                          "frequency W = Omega/omega_m, each as [real, imag]",
            "K_x": serialize_rational(ps.wiener.k["x"]),
            "K_p": serialize_rational(ps.wiener.k["p"]),
            "psi_plus": serialize_rational(ps.wiener.psi.psi_plus),
        }
        try:
            cs = optimal_controller(rp, ps.wiener, ps.cond, ps.transfers)
        except OptomechError as exc:
            out["C_opt"] = None
            out["C_opt_error"] = f"{type(exc).__name__}: {exc}"
        else:
            out["C_opt"] = serialize_rational(cs.c_opt)
    return out


def export_point(cfg: SweepConfig) -> ReducedParams:
    """The single parameter point of an export configuration (axes are ignored)."""
    return to_reduced(cfg.kind, cfg.fixed)


# -- command line -------------------------------------------------------------

def _print_suites(results, stream):
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: draws={r.draws} max_deviation={r.max_deviation:.3e} "
              f"tolerance={r.tolerance:.0e}", file=stream)
        ok &= r.passed
    return ok


def cmd_validate(draws, seed, stream=None):
    from .oracle import validate

    stream = sys.stdout if stream is None else stream
    return 0 if _print_suites(validate(draws=draws, seed=seed), stream) else 2


def cmd_run(args):
    cfg = load_config(args.config, preset=args.preset, output=args.out)
    if cfg.mode == "validate":
        return cmd_validate(100, 0)
    workers = resolve_workers(args.workers)
    text, n_err = run_sweep(cfg, workers=workers)
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {cfg.output_path}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    if n_err:
        print(f"{n_err} grid point(s) reported errors", file=sys.stderr)
        return 2
    return 0


def cmd_export(args):
    cfg = load_config(args.config, single_point=True)
    if cfg.axes and cfg.preset is None:
        raise ConfigError("export takes a single point; remove the sweep axes")
    rp = export_point(cfg)
    try:
        data = export_kernels(rp)
    except StationarityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        with open(args.out, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    return 2 if data["C_opt"] is None else 0


def build_parser():
    p = argparse.ArgumentParser(prog="optomech",
                                description="Cavity optomechanics sweeps and exports.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a parameter sweep and write CSV")
    r.add_argument("--config", required=True)
    r.add_argument("--preset")
    r.add_argument("--out")
    r.add_argument("--workers", type=int)
    v = sub.add_parser("validate", help="state-space equivalence suites")
    v.add_argument("--draws", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    e = sub.add_parser("export", help="export filter and controller kernels as JSON")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "validate":
            if args.draws < 1:
                raise ConfigError("--draws must be >= 1")
            return cmd_validate(args.draws, args.seed)
        return cmd_export(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
