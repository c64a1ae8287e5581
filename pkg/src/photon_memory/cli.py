"""Command-line interface: ``photon-memory {optimal-pulse,simulate,sweep,figure}``.

Data files hold numbers only (12 significant digits) and are byte-identical
for identical configurations; wall time and the effective configuration go to
a ``provenance.json`` sidecar in the output directory.

Exit codes: 0 success, 1 partial sweep failure, 2 invalid configuration or
input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, GridError, PhotonMemoryError
from .medium import MediumParams, norm_const
from .optimal_pulse import OptimalPulseSpec, build_optimal
from .propagation_metrics import atomic_amplitude, default_z_grid, propagate, simulate
from .signal_core import Signal, TimeGrid, default_grid, probability

log = logging.getLogger("photon_memory")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
FIG2_DEPTHS = (10.0, 100.0)
FIG3_DEPTHS = (10.0, 100.0, 1000.0)
UNIT_TOLERANCE = 1e-4


@dataclass
class RunConfig:
    alpha_L: list = field(default_factory=lambda: [100.0])
    T2: float = 1.0
    L: float | None = None
    alpha: float | None = None
    dt: float | None = None
    t_min: float | None = None
    t_max: float | None = None
    z_points: int | None = None
    input: str = "optimal"
    out: str = "out"
    format: str = "both"
    jobs: int = 1

    def validate(self):
        if self.alpha is not None and self.L is not None:
            self.alpha_L = [self.alpha * self.L]
        if not self.alpha_L:
            raise ConfigurationError("at least one --alphaL is required")
        for v in self.alpha_L:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"optical depth must be positive, got {v}")
        if not (self.T2 > 0 and math.isfinite(self.T2)):
            raise ConfigurationError("T2 must be positive")
        if self.L is not None and not self.L > 0:
            raise ConfigurationError("L must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.t_min is not None and self.t_max is not None and not self.t_max > self.t_min:
            raise ConfigurationError("t-max must exceed t-min")
        if self.z_points is not None and self.z_points < 2:
            raise ConfigurationError("z-points must be at least 2")
        if self.format not in ("csv", "json", "both"):
            raise ConfigurationError(f"unknown format {self.format!r}")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")
        return self

    @property
    def writes_csv(self) -> bool:
        return self.format in ("csv", "both")

    @property
    def writes_json(self) -> bool:
        return self.format in ("json", "both")

    def medium(self, alpha_L: float) -> MediumParams:
        # physical units only when alpha, L and T2 are all given
        if self.alpha is not None and self.L is not None:
            return MediumParams(self.alpha, self.L, self.T2)
        return MediumParams.from_optical_depth(alpha_L, self.T2)

    def grid(self, alpha_L: float) -> TimeGrid:
        base = default_grid(alpha_L, self.T2)
        if self.dt is None and self.t_min is None and self.t_max is None:
            return base
        dt = self.dt if self.dt is not None else base.dt
        lo = self.t_min if self.t_min is not None else base.t_start
        hi = self.t_max if self.t_max is not None else base.t_end
        n = int(math.floor((hi - lo) / dt + 1e-9)) + 1
        if n < 2:
            raise ConfigurationError("time window holds fewer than two samples")
        log.info("grid overridden: t_start=%g dt=%g n=%d", lo, dt, n)
        return TimeGrid(lo, dt, n)


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _grid_dict(g: TimeGrid) -> dict:
    return {"t_start": float(g.t_start), "dt": float(g.dt), "n": int(g.n)}


def _write_csv(path: Path, header, columns):
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, rows, fmt="%.12g", delimiter=",")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(_fmt(v)) if math.isfinite(v) else None
    return str(obj)


def _write_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _tag(alpha_L: float) -> str:
    return f"aL{alpha_L:g}"


def _provenance(cfg: RunConfig, grids: dict) -> dict:
    return {"config": asdict(cfg), "grids": grids, "version": __version__}


def read_input_csv(path: str) -> Signal:
    """Read a pulse from a ``t,re,im`` CSV on a uniform grid."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["t", "re", "im"]:
            raise ConfigurationError(f"{path}: header must be 't,re,im', got {','.join(header)!r}")
        t, re, im = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ConfigurationError(f"{path}: row {lineno} has {len(row)} columns, expected 3")
            for col, (name, dest) in enumerate(zip(("t", "re", "im"), (t, re, im)), start=1):
                try:
                    value = float(row[col - 1])
                except ValueError:
                    raise ConfigurationError(
                        f"{path}: row {lineno}, column {col} ({name}): not a number: {row[col - 1]!r}"
                    ) from None
                if not math.isfinite(value):
                    raise ConfigurationError(f"{path}: row {lineno}, column {col} ({name}): not finite")
                dest.append(value)
    if len(t) < 2:
        raise ConfigurationError(f"{path}: need at least two samples")
    try:
        return Signal.from_arrays(np.array(t), np.array(re) + 1j * np.array(im))
    except GridError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def _load_input(cfg: RunConfig, p: MediumParams, alpha_L: float) -> Signal:
    if cfg.input == "optimal":
        return build_optimal(OptimalPulseSpec(p, cfg.grid(alpha_L)))
    s = read_input_csv(cfg.input)
    total = probability(s)
    if total <= 0:
        raise ConfigurationError(f"{cfg.input}: input pulse carries no probability")
    if abs(total - 1.0) > UNIT_TOLERANCE:
        warnings.warn(f"input probability {total:.6g} renormalized to 1", stacklevel=2)
        s = s * (1.0 / math.sqrt(total))
    return s


def _z_grid(cfg: RunConfig, p: MediumParams):
    if cfg.z_points is None:
        return default_z_grid(p)
    return default_z_grid(p, n=cfg.z_points)


# -- subcommands --------------------------------------------------------------


def cmd_optimal_pulse(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    grids = {}
    for aL in cfg.alpha_L:
        p = cfg.medium(aL)
        spec = OptimalPulseSpec(p, cfg.grid(aL))
        pulse = build_optimal(spec)
        grids[_tag(aL)] = _grid_dict(pulse.grid)
        stem = f"optimal_pulse_{_tag(aL)}"
        if cfg.writes_csv:
            _write_csv(out / f"{stem}.csv", ["t_over_T2", "F_in"], [pulse.t / p.T2, pulse.samples.real])
        if cfg.writes_json:
            total = probability(pulse)
            _write_json(
                out / f"{stem}.json",
                {
                    "alpha_L": p.optical_depth,
                    "A": norm_const(p),
                    "normalization": total,
                    "normalization_residual": total - 1.0,
                    "provenance": {"grid": grids[_tag(aL)], "version": __version__},
                },
            )
    return EXIT_OK, grids


def _simulate_point(cfg: RunConfig, aL: float):
    p = cfg.medium(aL)
    s = _load_input(cfg, p, aL)
    return p, simulate(s, p, _z_grid(cfg, p))


def cmd_simulate(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    grids = {}
    for aL in cfg.alpha_L:
        p, res = _simulate_point(cfg, aL)
        grids[_tag(aL)] = _grid_dict(res.input.grid)
        stem = _tag(aL)
        if cfg.writes_csv:
            t = res.input.t
            _write_csv(out / f"input_{stem}.csv", ["t", "re", "im"], [t, res.input.samples.real, res.input.samples.imag])
            _write_csv(
                out / f"signals_{stem}.csv",
                ["t_over_T2", "F_in_re", "F_in_im", "F_out_re", "F_out_im"],
                [t / p.T2, res.input.samples.real, res.input.samples.imag, res.output.samples.real, res.output.samples.imag],
            )
            prof = res.profile
            _write_csv(
                out / f"profile_{stem}.csv",
                ["z_over_L", "c_re", "c_im", "abs_c_sqrtL"],
                [prof.z_grid / p.L, prof.c_values.real, prof.c_values.imag, prof.magnitude * math.sqrt(p.L)],
            )
        if cfg.writes_json:
            report = res.report.to_dict()
            meta = report.pop("metadata")
            report["alpha_L"] = p.optical_depth
            report["provenance"] = {"grid": grids[stem], "version": __version__, "details": meta}
            _write_json(out / f"metrics_{stem}.json", report)
    return EXIT_OK, grids


SWEEP_COLUMNS = [
    "alpha_L",
    "efficiency",
    "efficiency_asymptotic",
    "abs_delta",
    "p_abs",
    "p_abs_closed",
    "first_burst_fraction",
    "flatness_cv",
    "boundary_layer_width",
]


def _sweep_row(cfg: RunConfig, aL: float) -> dict:
    try:
        _, res = _simulate_point(cfg, aL)
    except Exception as exc:  # one failed point must not stop the sweep
        return {"alpha_L": aL, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    r = res.report
    return {
        "alpha_L": aL,
        "efficiency": r.efficiency,
        "efficiency_asymptotic": r.efficiency_asymptotic,
        "abs_delta": abs(r.efficiency - r.efficiency_asymptotic),
        "p_abs": r.p_abs,
        "p_abs_closed": r.p_abs_closed,
        "first_burst_fraction": r.first_burst_fraction,
        "flatness_cv": r.flatness_cv,
        "boundary_layer_width": r.boundary_layer_width,
        "status": "ok",
        "error": "",
    }


def cmd_sweep(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    if len(cfg.alpha_L) < 2:
        raise ConfigurationError("sweep needs at least two --alphaL values")
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_row, [cfg] * len(cfg.alpha_L), cfg.alpha_L))
    else:
        rows = [_sweep_row(cfg, aL) for aL in cfg.alpha_L]
    if cfg.writes_csv:
        with open(out / "sweep.csv", "w", newline="") as fh:
            fh.write(",".join(SWEEP_COLUMNS + ["status"]) + "\n")
            for row in rows:
                cells = [_fmt(row[c]) if c in row else "" for c in SWEEP_COLUMNS]
                fh.write(",".join(cells + [row["status"]]) + "\n")
    if cfg.writes_json:
        _write_json(out / "sweep.json", {"rows": rows, "provenance": {"version": __version__}})
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        print(f"alpha_L={r['alpha_L']:g} failed: {r['error']}", file=sys.stderr)
    grids = {_tag(aL): _grid_dict(cfg.grid(aL)) for aL in cfg.alpha_L}
    return (EXIT_PARTIAL if failed else EXIT_OK), grids


def cmd_figure(cfg: RunConfig, out: Path, name: str) -> tuple[int, dict]:
    grids = {}
    if name == "fig2":
        for aL in FIG2_DEPTHS:
            p = MediumParams.from_optical_depth(aL, cfg.T2)
            s = build_optimal(OptimalPulseSpec(p, cfg.grid(aL)))
            f_out = propagate(s, p, p.L)
            grids[_tag(aL)] = _grid_dict(s.grid)
            _write_csv(out / f"fig2_{_tag(aL)}.csv", ["t_over_T2", "F_in", "F_out"], [s.t / p.T2, s.samples.real, f_out.samples.real])
    elif name == "fig3":
        n = cfg.z_points or 512
        z_over_L = np.linspace(0.0, 1.0, n)
        columns, header = [z_over_L], ["z_over_L"]
        for aL in FIG3_DEPTHS:
            p = MediumParams.from_optical_depth(aL, cfg.T2)
            s = build_optimal(OptimalPulseSpec(p, cfg.grid(aL)))
            prof = atomic_amplitude(s, p, z_over_L * p.L, t=0.0)
            grids[_tag(aL)] = _grid_dict(s.grid)
            columns.append(prof.magnitude * math.sqrt(p.L))
            header.append(f"abs_c_sqrtL_{_tag(aL)}")
        _write_csv(out / "fig3.csv", header, columns)
    else:
        raise ConfigurationError(f"unknown figure {name!r}; choose fig2 or fig3")
    return EXIT_OK, grids


# -- argument handling ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alphaL", dest="alpha_L", type=float, action="append", help="optical depth (repeatable)")
    common.add_argument("--T2", type=float, help="coherence time (default 1)")
    common.add_argument("--L", type=float, help="sample length (physical units with --alpha and --T2)")
    common.add_argument("--alpha", type=float, help="absorption coefficient (physical units)")
    common.add_argument("--dt", type=float, help="time step override")
    common.add_argument("--t-min", dest="t_min", type=float, help="grid start override")
    common.add_argument("--t-max", dest="t_max", type=float, help="grid end override")
    common.add_argument("--z-points", dest="z_points", type=int, help="depth samples")
    common.add_argument("--input", help="'optimal' or a CSV file with header t,re,im")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--format", choices=["csv", "json", "both"], help="output formats")
    common.add_argument("--jobs", type=int, help="parallel sweep workers")
    common.add_argument("--config", help="JSON file with defaults for any of the above")

    parser = argparse.ArgumentParser(prog="photon-memory", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("optimal-pulse", parents=[common], help="emit the optimal input pulse")
    sub.add_parser("simulate", parents=[common], help="propagate a pulse and report metrics")
    sub.add_parser("sweep", parents=[common], help="metrics for several optical depths")
    fig = sub.add_parser("figure", parents=[common], help="emit figure data (fig2 or fig3)")
    fig.add_argument("name", help="fig2 or fig3")
    return parser


CONFIG_KEYS = {f for f in RunConfig.__dataclass_fields__}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then command-line flags."""
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{args.config}: expected a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        if "alphaL" in data:
            data["alpha_L"] = data.pop("alphaL")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ConfigurationError(f"{args.config}: unknown keys {sorted(unknown)}")
        if "alpha_L" in data and not isinstance(data["alpha_L"], list):
            data["alpha_L"] = [data["alpha_L"]]
        values.update(data)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
    return cfg.validate()


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "optimal-pulse":
            code, grids = cmd_optimal_pulse(cfg, out)
        elif args.command == "simulate":
            code, grids = cmd_simulate(cfg, out)
        elif args.command == "sweep":
            code, grids = cmd_sweep(cfg, out)
        else:
            code, grids = cmd_figure(cfg, out, args.name)
        prov = _provenance(cfg, grids)
        prov["command"] = args.command
        prov["wall_time_s"] = time.perf_counter() - started
        with open(out / "provenance.json", "w") as fh:
            json.dump(_clean(prov), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PhotonMemoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
