"""Command-line entry point: scenario configuration, built-in regression
examples, orchestration of the analyses, and deterministic data export.

Subcommands: ``floquet``, ``reach``, ``control-set``, ``sphere``,
``quasi-affine``, ``examples``.  Exit codes: 0 ok, 2 configuration error,
3 hypothesis violated, 4 numerical conditioning, 5 I/O failure.  All
floating-point CSV output uses 17 significant digits; with
``--reproducible`` no timestamps are emitted and repeated runs are
byte-identical for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .control_set import ControlSetSandwich, control_set_sandwich
from .directions import sample_directions
from .errors import (ConfigError, HypothesisViolatedError,
                     NumericalConditioningError, PeriodicControlError)
from .floquet import floquet_spaces
from .periodic_system import (BoxRange, ControlRange, ControlSignal,
                              PeriodicSystem)
from .poincare import (ProjectedControlSet, embed, equator_equilibria,
                       integrate_sphere, project_control_set)
from .quasi_affine import (AffineInputMap, ConstantInputMap, InputMap,
                           PeriodicParameterSignal, QuasiAffineSystem,
                           TableInputMap, generate_family, union_control_set)
from .reachable import reachable_fiber, support_profile

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_CONDITIONING = 4
EXIT_IO = 5

ANALYSES = ("floquet", "reach", "control-set", "sphere", "quasi-affine")


# ---------------------------------------------------------------------------
# built-in regression scenarios


def _example61() -> PeriodicSystem:
    # scalar two-rate decay: x' = a(t) x + u, a = -1 on [0,1), -2 on [1,2)
    segs = [(0.0, 1.0, [[-1.0]], [[1.0]]),
            (1.0, 2.0, [[-2.0]], [[1.0]])]
    return PeriodicSystem(segs, BoxRange([-1.0], [1.0]), label="example61")


def _example62() -> PeriodicSystem:
    # planar saddle: x' = x + u, y' = -y + u
    segs = [(0.0, 1.0, [[1.0, 0.0], [0.0, -1.0]], [[1.0], [1.0]])]
    return PeriodicSystem(segs, BoxRange([-1.0], [1.0]), label="example62")


def _example63() -> PeriodicSystem:
    # planar unstable node: x' = x + u, y' = 2y + u
    segs = [(0.0, 1.0, [[1.0, 0.0], [0.0, 2.0]], [[1.0], [1.0]])]
    return PeriodicSystem(segs, BoxRange([-1.0], [1.0]), label="example63")


BUILTINS = {
    "example61": ("scalar 2-periodic system, rates -1/-2, U=[-1,1]", _example61),
    "example62": ("planar saddle x'=x+u, y'=-y+u, U=[-1,1]", _example62),
    "example63": ("planar unstable node x'=x+u, y'=2y+u, U=[-1,1]", _example63),
}


def builtin_system(name: str) -> PeriodicSystem:
    try:
        return BUILTINS[name][1]()
    except KeyError:
        raise ConfigError(f"unknown builtin {name!r}; known: {sorted(BUILTINS)}") from None


# ---------------------------------------------------------------------------
# scenario configuration


@dataclass
class ScenarioConfig:
    """Resolved configuration for one CLI run."""

    analysis: str
    system_source: tuple[str, object] | None = None  # ("builtin"|"file"|"inline", payload)
    tau_grid_n: int = 8
    k_max: int = 32
    n_directions: int | None = None
    step: float = 1e-3
    t_end: float = 10.0
    quad_step: float = 0.01
    tol_group: float = 1e-9
    tol_center: float = 1e-8
    tol_conv: float = 1e-8
    tol_rank: float = 1e-10
    seed: int = 0
    out_dir: str = "out"
    format: str = "csv"
    reproducible: bool = False
    u_const: list[float] | None = None
    n_trajectories: int = 4
    start_radius: float = 2.0
    with_control_set: bool = False
    samples: int = 64
    family_segments: list[int] = field(default_factory=lambda: [1, 2])
    family_period: float = 1.0
    family_max: int = 16

    def validate(self) -> None:
        if self.analysis not in ANALYSES:
            raise ConfigError(f"unknown analysis {self.analysis!r}")
        for name in ("quad_step", "tol_group", "tol_center", "tol_conv",
                     "tol_rank", "step"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.tau_grid_n < 1 or self.k_max < 0:
            raise ConfigError("tau_grid_n must be >= 1 and k_max >= 0")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"unparseable JSON in {path}: {exc}") from exc


def _resolve_system(config: ScenarioConfig) -> PeriodicSystem:
    if config.system_source is None:
        raise ConfigError("no system specified (use --builtin, --system-file, or --config)")
    kind, payload = config.system_source
    if kind == "builtin":
        return builtin_system(str(payload))
    if kind == "file":
        record = _load_json(str(payload))
        return _periodic_from_record(record)
    if kind == "inline":
        return _periodic_from_record(payload)  # type: ignore[arg-type]
    raise ConfigError(f"unknown system source {kind!r}")


def _periodic_from_record(record: dict) -> PeriodicSystem:
    try:
        return PeriodicSystem.from_record(record)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system definition: {exc}") from exc


def input_map_from_record(record: dict) -> InputMap:
    kind = record.get("type", "constant")
    if kind == "constant":
        return ConstantInputMap(record["b0"])
    if kind == "affine":
        return AffineInputMap(record["b0"], record.get("terms", []))
    if kind == "table":
        return TableInputMap(record["axes"], np.asarray(record["values"], dtype=float))
    raise ConfigError(f"unknown input map type {kind!r}")


def quasi_affine_from_record(record: dict) -> QuasiAffineSystem:
    try:
        return QuasiAffineSystem(
            a0=record["a0"],
            a_terms=record.get("a_terms", []),
            input_map=input_map_from_record(record["input_map"]),
            control_range=ControlRange.from_record(record["control_range"]),
            parameter_range=ControlRange.from_record(record["parameter_range"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid quasi-affine definition: {exc}") from exc


# ---------------------------------------------------------------------------
# deterministic writers


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


class _Artifacts:
    """Collects tables and a summary, then writes them per output format."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.tables: list[tuple[str, list[str], list[tuple]]] = []
        self.summary: dict = {}

    def add_table(self, name: str, columns: list[str], rows: list[tuple]) -> None:
        self.tables.append((name, columns, rows))

    def write(self) -> list[str]:
        cfg = self.config
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        meta = {"seed": cfg.seed, "analysis": cfg.analysis, "version": __version__}
        written = []
        payload = {"meta": dict(meta), "summary": _sanitize(self.summary)}
        if not cfg.reproducible:
            payload["meta"]["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        if cfg.format == "csv":
            for name, columns, rows in self.tables:
                path = out / f"{name}.csv"
                with open(path, "w", encoding="utf-8", newline="\n") as fh:
                    for key in sorted(meta):
                        fh.write(f"# {key}={meta[key]}\n")
                    if not cfg.reproducible:
                        fh.write(f"# generated_at={payload['meta']['generated_at']}\n")
                    fh.write(",".join(columns) + "\n")
                    for row in rows:
                        fh.write(",".join(_fmt(v) for v in row) + "\n")
                written.append(str(path))
        else:
            payload["tables"] = {
                name: {"columns": columns, "rows": _sanitize([list(r) for r in rows])}
                for name, columns, rows in self.tables
            }
        path = out / f"{cfg.analysis.replace('-', '_')}.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(str(path))
        return written


# ---------------------------------------------------------------------------
# analyses


def _tau_grid(system: PeriodicSystem, n: int) -> np.ndarray:
    return np.arange(n) * (system.period / n)


def _run_floquet(config: ScenarioConfig, system: PeriodicSystem,
                 art: _Artifacts) -> None:
    taus = _tau_grid(system, config.tau_grid_n)
    spec_rows = []
    sub_rows = []
    exponents = []
    for tau in taus:
        dec = floquet_spaces(system, tau, config.tol_group, config.tol_center)
        for gi, grp in enumerate(dec.groups):
            for mu in grp.multipliers:
                spec_rows.append((tau, gi, grp.exponent, grp.multiplicity,
                                  mu.real, mu.imag, abs(mu)))
        named = [("stable", dec.stable), ("center", dec.center),
                 ("unstable", dec.unstable), ("center_stable", dec.center_stable),
                 ("center_unstable", dec.center_unstable)]
        named += [(f"group_{gi}", grp.basis) for gi, grp in enumerate(dec.groups)]
        for name, basis in named:
            for col in range(basis.shape[1]):
                sub_rows.append((tau, name, col, *basis[:, col]))
        exponents.append({"tau": tau,
                          "exponents": [g.exponent for g in dec.groups],
                          "multiplicities": [g.multiplicity for g in dec.groups],
                          "classifications": [g.classification for g in dec.groups]})
    d = system.dim
    art.add_table("floquet_spectrum",
                  ["tau", "group", "exponent", "multiplicity",
                   "multiplier_re", "multiplier_im", "modulus"], spec_rows)
    art.add_table("floquet_subspaces",
                  ["tau", "subspace", "column"] + [f"comp_{i}" for i in range(d)],
                  sub_rows)
    art.summary["per_tau"] = exponents


def _run_reach(config: ScenarioConfig, system: PeriodicSystem,
               art: _Artifacts) -> None:
    d = system.dim
    dirs = sample_directions(d, config.n_directions, seed=config.seed)
    taus = _tau_grid(system, config.tau_grid_n)
    rows = []
    diverged_info = []
    for tau in taus:
        k_values, h, _ = support_profile(system, dirs, k_max=config.k_max,
                                         end_phase=tau, start_time=0.0,
                                         quad_step=config.quad_step)
        finite_h = np.where(np.isfinite(h), h, np.nan)
        for ki, k in enumerate(k_values):
            for j in range(dirs.shape[0]):
                rows.append((tau, int(k), j, *dirs[j], finite_h[ki, j]))
        fiber = reachable_fiber(system, tau, config.k_max, dirs,
                                quad_step=config.quad_step, seed=config.seed)
        diverged_info.append({"tau": tau,
                              "diverged_directions":
                                  np.where(fiber.diverged)[0].tolist()
                                  if fiber.diverged is not None else []})
    art.add_table("reach",
                  ["tau", "k", "dir_index"] + [f"p_{i}" for i in range(d)] + ["support"],
                  rows)
    art.summary["directions"] = dirs
    art.summary["divergence"] = diverged_info


def _sandwich_tables(sandwich: ControlSetSandwich, art: _Artifacts,
                     prefix: str = "") -> None:
    d = sandwich.dim
    fiber_rows = []
    bound_rows = []
    center_rows = []
    for fiber in sandwich.fibers:
        for j in range(sandwich.directions.shape[0]):
            fiber_rows.append((fiber.tau, j, *sandwich.directions[j],
                               fiber.inner[j], fiber.outer[j],
                               int(fiber.unbounded_mask[j])))
            gap = fiber.bound_outer[j] - fiber.bound_inner[j]
            bound_rows.append((fiber.tau, j, fiber.bound_inner[j],
                               fiber.bound_outer[j], gap))
        for col in range(fiber.center_basis.shape[1]):
            center_rows.append((fiber.tau, col, *fiber.center_basis[:, col]))
    art.add_table(prefix + "control_set",
                  ["tau", "dir_index"] + [f"p_{i}" for i in range(d)]
                  + ["inner", "outer", "unbounded"], fiber_rows)
    art.add_table(prefix + "sandwich_bounds",
                  ["tau", "dir_index", "bound_inner", "bound_outer", "gap"],
                  bound_rows)
    art.add_table(prefix + "center_bases",
                  ["tau", "column"] + [f"comp_{i}" for i in range(d)], center_rows)


def _run_control_set(config: ScenarioConfig, system: PeriodicSystem,
                     art: _Artifacts) -> None:
    dirs = sample_directions(system.dim, config.n_directions, seed=config.seed)
    sandwich = control_set_sandwich(
        system, tau_grid=config.tau_grid_n, k_max=config.k_max, directions=dirs,
        tol_conv=config.tol_conv, quad_step=config.quad_step,
        tol_group=config.tol_group, tol_center=config.tol_center,
        gramian_tol_rank=config.tol_rank, seed=config.seed)
    _sandwich_tables(sandwich, art)
    art.summary.update({
        "unbounded": sandwich.unbounded,
        "center_dim": sandwich.center_dim,
        "k_minus": [f.k_minus for f in sandwich.fibers],
        "k_plus": [f.k_plus for f in sandwich.fibers],
        "basis_condition": [f.basis_condition for f in sandwich.fibers],
    })
    if system.dim == 1:
        art.add_table("band", ["tau", "lower", "upper"], _band_rows(sandwich))


def _band_rows(sandwich: ControlSetSandwich) -> list[tuple]:
    # d = 1 fiber intervals from the +/- direction supports
    dirs = sandwich.directions[:, 0]
    plus = int(np.argmax(dirs))
    minus = int(np.argmin(dirs))
    rows = []
    for fiber in sandwich.fibers:
        rows.append((fiber.tau, -fiber.inner[minus], fiber.inner[plus]))
    return rows


def _run_sphere(config: ScenarioConfig, system: PeriodicSystem,
                art: _Artifacts) -> None:
    d = system.dim
    m = system.input_dim
    uval = np.zeros(m) if config.u_const is None else np.asarray(config.u_const, dtype=float)
    if uval.shape != (m,):
        raise ConfigError(f"--u must have {m} components")
    u = ControlSignal.constant(uval, 0.0, config.t_end)
    starts = [embed(0.0, np.zeros(d))]
    for i in range(max(0, config.n_trajectories - 1)):
        angle = 2.0 * np.pi * i / max(1, config.n_trajectories - 1)
        x = np.zeros(d)
        x[0] = config.start_radius * np.cos(angle)
        if d > 1:
            x[1] = config.start_radius * np.sin(angle)
        starts.append(embed(0.0, x))
    traj_rows = []
    ortho_rows = []
    drifts = []
    trajectories = []
    for ti, p0 in enumerate(starts):
        traj = integrate_sphere(system, p0, u, config.t_end, config.step)
        trajectories.append(traj)
        drifts.append(traj.max_norm_drift)
        for i in range(len(traj)):
            t = traj.times[i]
            s = traj.states[i]
            traj_rows.append((ti, t, (p0.tau + t) % system.period, *s))
            ortho_rows.append((ti, t, *s[:d]))
    art.add_table("trajectories",
                  ["trajectory", "t", "tau"] + [f"s_{i}" for i in range(d + 1)],
                  traj_rows)
    art.add_table("orthographic",
                  ["trajectory", "t"] + [f"s_{i}" for i in range(d)], ortho_rows)
    art.summary["max_norm_drift"] = max(drifts) if drifts else 0.0
    if d == 2:
        eq = equator_equilibria(system, 0.0)
        art.add_table("equator_equilibria",
                      ["index", "angle"] + [f"s_{i}" for i in range(d)],
                      [(i, float(np.arctan2(p[1], p[0]) % (2 * np.pi)), *p)
                       for i, p in enumerate(eq)])
    if config.with_control_set:
        sandwich = control_set_sandwich(
            system, tau_grid=config.tau_grid_n, k_max=config.k_max,
            tol_conv=config.tol_conv, quad_step=config.quad_step,
            tol_group=config.tol_group, tol_center=config.tol_center,
            seed=config.seed)
        projected = project_control_set(sandwich, samples=config.samples,
                                        seed=config.seed)
        rows = []
        for kind, pts in (("inner", projected.inner_points),
                          ("outer", projected.outer_points),
                          ("equator", projected.equator_points)):
            for row in pts:
                rows.append((kind, *row))
        art.add_table("projected_set",
                      ["kind", "tau"] + [f"s_{i}" for i in range(d + 1)], rows)
        art.summary["projected_bounded"] = projected.bounded
        art.summary["min_upper_component"] = projected.min_upper_component


def _resolve_quasi_affine(config: ScenarioConfig) -> QuasiAffineSystem:
    if config.system_source is None:
        raise ConfigError("quasi-affine analysis needs --system-file or --config")
    kind, payload = config.system_source
    if kind == "file":
        return quasi_affine_from_record(_load_json(str(payload)))
    if kind == "inline":
        return quasi_affine_from_record(payload)  # type: ignore[arg-type]
    raise ConfigError("quasi-affine analysis accepts a definition file, not a builtin")


def _run_quasi_affine(config: ScenarioConfig, art: _Artifacts) -> None:
    qsys = _resolve_quasi_affine(config)
    family = generate_family(qsys, period=config.family_period,
                             n_segments=tuple(config.family_segments),
                             max_signals=config.family_max)
    dirs = sample_directions(qsys.dim, config.n_directions, seed=config.seed)
    union = union_control_set(
        qsys, family, tau_grid=config.tau_grid_n, k_max=config.k_max,
        directions=dirs, tol_conv=config.tol_conv, quad_step=config.quad_step,
        tol_center=config.tol_center, boundary_samples=config.samples,
        seed=config.seed)
    d = qsys.dim
    env_rows = [(j, *dirs[j], union.envelope[j]) for j in range(dirs.shape[0])]
    art.add_table("union_envelope",
                  ["dir_index"] + [f"p_{i}" for i in range(d)] + ["support"],
                  env_rows)
    art.add_table("union_cloud",
                  ["v_index", "tau"] + [f"x_{i}" for i in range(d)],
                  [tuple(row) for row in union.cloud])
    for i, analysis in enumerate(union.analyses):
        if analysis.sandwich is None:
            continue
        rows = []
        for fiber in analysis.sandwich.fibers:
            for j in range(dirs.shape[0]):
                rows.append((fiber.tau, j, fiber.inner[j], fiber.outer[j]))
        art.add_table(f"v{i}_fibers", ["tau", "dir_index", "inner", "outer"], rows)
    art.summary["metadata"] = union.metadata
    art.summary["family"] = [
        {"index": i,
         "period": a.signal.period,
         "values": a.signal.values,
         "skipped": a.skip_reason}
        for i, a in enumerate(union.analyses)]


# ---------------------------------------------------------------------------
# portrait export


def export_portrait(trajectories, sets, path, reproducible: bool = True,
                    equilibria: np.ndarray | None = None) -> str:
    """Write plot-ready portrait rows: orthographic trajectory projections,
    d = 1 fiber bands, projected-set samples, and equator equilibria.

    Raises when there is nothing to export.
    """
    trajectories = list(trajectories or [])
    rows = []
    if isinstance(sets, ControlSetSandwich) and sets.dim == 1:
        for tau, lower, upper in _band_rows(sets):
            rows.append(("band", tau, lower, upper))
    elif isinstance(sets, ProjectedControlSet):
        for kind, pts in (("set_inner", sets.inner_points),
                          ("set_outer", sets.outer_points),
                          ("set_equator", sets.equator_points)):
            for row in pts:
                rows.append((kind, *[float(v) for v in row[:-1]]))
    for ti, traj in enumerate(trajectories):
        d = traj.states.shape[1] - 1
        for i in range(len(traj)):
            rows.append(("trajectory", ti, float(traj.times[i]),
                         *[float(v) for v in traj.states[i][:d]]))
    if equilibria is not None:
        for i, p in enumerate(np.atleast_2d(equilibria)):
            angle = float(np.arctan2(p[1], p[0]) % (2 * np.pi)) if p.size > 1 else 0.0
            rows.append(("equator_equilibrium", i, angle, *[float(v) for v in p]))
    if not rows:
        raise ValueError("nothing to export: empty trajectory list and no sets")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if not reproducible:
            fh.write(f"# generated_at={time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
        fh.write("kind,values...\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return str(path)


# ---------------------------------------------------------------------------
# driver


def run(config: ScenarioConfig) -> int:
    """Execute one configured analysis; returns the process exit code."""
    try:
        config.validate()
        art = _Artifacts(config)
        if config.analysis == "quasi-affine":
            _run_quasi_affine(config, art)
        else:
            system = _resolve_system(config)
            if config.analysis == "floquet":
                _run_floquet(config, system, art)
            elif config.analysis == "reach":
                _run_reach(config, system, art)
            elif config.analysis == "control-set":
                _run_control_set(config, system, art)
            elif config.analysis == "sphere":
                _run_sphere(config, system, art)
        written = art.write()
        print("\n".join(written))
        return EXIT_OK
    except ConfigError as exc:
        _report_error(config, "config", exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except HypothesisViolatedError as exc:
        _report_error(config, "hypothesis_violated", exc, EXIT_HYPOTHESIS)
        return EXIT_HYPOTHESIS
    except NumericalConditioningError as exc:
        _report_error(config, "numerical_conditioning", exc, EXIT_CONDITIONING)
        return EXIT_CONDITIONING
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=_sys.stderr)
        return EXIT_IO


def _report_error(config: ScenarioConfig, kind: str, exc: Exception, code: int) -> None:
    print(f"error: {kind}: {exc}", file=_sys.stderr)
    try:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "error.json", "w", encoding="utf-8") as fh:
            json.dump({"error": kind, "exception": type(exc).__name__,
                       "message": str(exc), "exit_code": code}, fh, indent=2,
                      sort_keys=True)
            fh.write("\n")
    except OSError:
        pass


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--builtin", help="built-in scenario name")
    parser.add_argument("--system-file", help="JSON system definition file")
    parser.add_argument("--config", help="JSON scenario config (inline system allowed)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--reproducible", action="store_true",
                        help="suppress timestamps for byte-identical output")
    parser.add_argument("--tau-grid", type=int, default=None, dest="tau_grid")
    parser.add_argument("--k-max", type=int, default=None, dest="k_max")
    parser.add_argument("--directions", type=int, default=None,
                        help="number of support directions")
    parser.add_argument("--quad-step", type=float, default=None, dest="quad_step")
    parser.add_argument("--tol-group", type=float, default=None, dest="tol_group")
    parser.add_argument("--tol-center", type=float, default=None, dest="tol_center")
    parser.add_argument("--tol-conv", type=float, default=None, dest="tol_conv")
    parser.add_argument("--tol-rank", type=float, default=None, dest="tol_rank")


def _config_from_args(args: argparse.Namespace, analysis: str) -> ScenarioConfig:
    base: dict = {}
    if args.config:
        base = _load_json(args.config)
    config = ScenarioConfig(analysis=analysis)
    for key, value in base.items():
        if key == "system":
            config.system_source = ("inline", value)
        elif hasattr(config, key):
            setattr(config, key, value)
        else:
            raise ConfigError(f"unknown config field {key!r}")
    if args.builtin:
        config.system_source = ("builtin", args.builtin)
    elif args.system_file:
        config.system_source = ("file", args.system_file)
    overrides = {
        "tau_grid": "tau_grid_n", "k_max": "k_max", "directions": "n_directions",
        "quad_step": "quad_step", "tol_group": "tol_group",
        "tol_center": "tol_center", "tol_conv": "tol_conv",
        "tol_rank": "tol_rank",
    }
    for arg_name, field_name in overrides.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(config, field_name, value)
    config.out_dir = args.out
    config.format = args.format
    config.seed = args.seed
    config.reproducible = bool(args.reproducible)
    for extra in ("step", "t_end", "u", "n_trajectories", "with_control_set",
                  "samples", "family_segments", "family_period", "family_max"):
        value = getattr(args, extra, None)
        if value is not None:
            if extra == "u":
                config.u_const = [float(x) for x in value]
            elif extra == "family_segments":
                config.family_segments = [int(x) for x in str(value).split(",")]
            else:
                setattr(config, extra, value)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="periodic-control",
        description="Controllability analysis of periodic linear control systems")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    for name, helptext in (
            ("floquet", "monodromy spectra and spectral subspaces"),
            ("reach", "reachable-set support tables"),
            ("control-set", "inner/outer control set sandwich"),
            ("sphere", "projected dynamics on the compactification sphere"),
            ("quasi-affine", "frozen-parameter control sets and their union")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name == "sphere":
            p.add_argument("--step", type=float, default=None)
            p.add_argument("--t-end", type=float, default=None, dest="t_end")
            p.add_argument("--u", type=float, nargs="+", default=None,
                           help="constant control vector")
            p.add_argument("--n-trajectories", type=int, default=None,
                           dest="n_trajectories")
            p.add_argument("--with-control-set", action="store_true",
                           dest="with_control_set", default=None)
            p.add_argument("--samples", type=int, default=None)
        if name == "quasi-affine":
            p.add_argument("--family-segments", default=None,
                           help="comma list of segment counts, e.g. 1,2,4")
            p.add_argument("--family-period", type=float, default=None,
                           dest="family_period")
            p.add_argument("--family-max", type=int, default=None, dest="family_max")
            p.add_argument("--samples", type=int, default=None)
        if name == "control-set":
            p.add_argument("--samples", type=int, default=None)

    sub.add_parser("examples", help="list built-in scenarios")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors carry code 2
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(_sys.stderr)
        print("error: an analysis subcommand is required", file=_sys.stderr)
        return EXIT_CONFIG
    if args.command == "examples":
        for name in sorted(BUILTINS):
            print(f"{name}: {BUILTINS[name][0]}")
        return EXIT_OK
    try:
        config = _config_from_args(args, args.command)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    _sys.exit(main())
