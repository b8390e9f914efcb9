"""Scenario configs and the end-to-end experiment runner.

A scenario is one or more scene parameter sets, a surface, a list of
cut-offs and the measurement settings.  Each parameter set costs one forward
solve; every cut-off reuses that solve's (noisy) measurements.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import UpsilonTable, upsilon_scan
from .errors import SuperlensError
from .forward import Grid, solve_total_field
from .measurement import DEFAULT_M, DEFAULT_NOISE, apply_noise, sample_measurements, write_measurements
from .plotting import plot_overlay, plot_upsilon
from .profiles import BUILTIN_PROFILES, Profile
from .reconstruction import (ReconstructedProfile, mode_table_csv, profile_error, reconstruct_profile,
                             reconstruction_csv)
from .spectral import SceneParameters

SCHEMA = "superlens-scenario/1"
DEFAULT_SEED = 20240601

PARAMETER_ROWS = {
    1: SceneParameters(eps=1.0, mu=1.0),
    2: SceneParameters(eps=16.0, mu=1.0),
    3: SceneParameters(eps=-1.0, mu=-1.0),
    4: SceneParameters(eps=-1 + 0.05j, mu=-0.97),
    5: SceneParameters(eps=-1 + 0.1j, mu=-1.06),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one experiment.

    ``profile`` is either ``{"name": <builtin>}`` or a serialised
    :class:`Profile`; ``delta`` always overrides the profile's own amplitude.
    ``kind == "upsilon"`` runs the resolution scan up to ``n_max`` instead.
    """

    name: str
    params: tuple = (SceneParameters(),)
    profile: dict = field(default_factory=lambda: {"name": "smooth"})
    delta: float = 0.01
    cutoffs: tuple = (1, 3, 10)
    noise: float = DEFAULT_NOISE
    seed: int = DEFAULT_SEED
    M: int = DEFAULT_M
    grid: Grid = Grid()
    loss: float = 0.0
    kind: str = "reconstruction"
    n_max: int = 40

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "cutoffs", tuple(int(n) for n in self.cutoffs))
        if self.kind not in ("reconstruction", "upsilon"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not self.params:
            raise ValueError("at least one parameter set is required")
        if self.kind == "reconstruction":
            if self.delta < 0 or self.noise < 0 or self.loss < 0:
                raise ValueError("delta, noise and loss must be non-negative")
            if any(n < 0 for n in self.cutoffs):
                raise ValueError("cut-offs must be non-negative")
            if any(2 * n + 1 > self.M for n in self.cutoffs):
                raise ValueError(f"M={self.M} samples cannot resolve cut-off {max(self.cutoffs)}")
            if any(n > self.grid.max_mode for n in self.cutoffs):
                raise ValueError(f"grid nx={self.grid.nx} cannot resolve cut-off {max(self.cutoffs)}")
            prof = self.build_profile()
            if prof.delta * prof.max_abs_g() >= min(p.a for p in self.params):
                raise ValueError("surface amplitude reaches the slab")

    def build_profile(self) -> Profile:
        spec = dict(self.profile)
        if "name" in spec:
            if spec["name"] not in BUILTIN_PROFILES:
                raise ValueError(f"unknown profile {spec['name']!r}; builtins: {sorted(BUILTIN_PROFILES)}")
            return BUILTIN_PROFILES[spec["name"]](self.delta)
        return Profile.from_dict(spec).with_delta(self.delta)

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "name": self.name,
            "kind": self.kind,
            "params": [p.as_dict() for p in self.params],
            "profile": self.profile,
            "delta": self.delta,
            "cutoffs": list(self.cutoffs),
            "noise": self.noise,
            "seed": self.seed,
            "M": self.M,
            "grid": self.grid.as_dict(),
            "loss": self.loss,
            "n_max": self.n_max,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        """Build from JSON data; a ``base`` key names a builtin to override field by field."""
        d = dict(d)
        schema = d.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ValueError(f"unsupported config schema {schema!r} (expected {SCHEMA!r})")
        base = d.pop("base", None)
        merged = builtin_scenario(base).as_dict() if base else {}
        merged.pop("schema", None)
        if "grid" in d and isinstance(d["grid"], dict):
            d["grid"] = {**merged.get("grid", {}), **d["grid"]}
        merged.update(d)
        unknown = set(merged) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "params" in merged:
            merged["params"] = tuple(SceneParameters.from_dict(p) if isinstance(p, dict) else p
                                     for p in merged["params"])
        if "grid" in merged and isinstance(merged["grid"], dict):
            merged["grid"] = Grid(**merged["grid"])
        if "name" not in merged:
            raise ValueError("config needs a 'name'")
        return cls(**merged)


def _smooth(row: int, cutoffs=(1, 3, 10)) -> ScenarioConfig:
    return ScenarioConfig(f"smooth-row{row}", (PARAMETER_ROWS[row],), {"name": "smooth"}, 0.01, cutoffs)


BUILTINS = {
    **{f"smooth-row{r}": _smooth(r) for r in range(1, 6)},
    "nonsmooth-row1": ScenarioConfig("nonsmooth-row1", (PARAMETER_ROWS[1],), {"name": "tent"}, 0.01, (1, 2, 4)),
    "nonsmooth-row2": ScenarioConfig("nonsmooth-row2", (PARAMETER_ROWS[2],), {"name": "tent"}, 0.01, (1, 4, 5)),
    "nonsmooth-row3": ScenarioConfig("nonsmooth-row3", (PARAMETER_ROWS[3],), {"name": "tent"}, 0.01, (1, 4, 8)),
    "discontinuous-row1": ScenarioConfig("discontinuous-row1", (PARAMETER_ROWS[1],), {"name": "boxcar"},
                                         0.001, (1, 2, 3)),
    "discontinuous-row2": ScenarioConfig("discontinuous-row2", (PARAMETER_ROWS[2],), {"name": "boxcar"},
                                         0.001, (1, 2, 3)),
    "discontinuous-row3": ScenarioConfig("discontinuous-row3", (PARAMETER_ROWS[3],), {"name": "boxcar"},
                                         0.001, (1, 2, 20)),
    "upsilon": ScenarioConfig("upsilon", tuple(PARAMETER_ROWS.values()), kind="upsilon"),
}
ALIASES = {"noslab-row1": "smooth-row1"}


def builtin_names() -> list[str]:
    return sorted(BUILTINS) + sorted(ALIASES)


def builtin_scenario(name: str) -> ScenarioConfig:
    key = ALIASES.get(name, name)
    if key not in BUILTINS:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(builtin_names())}")
    cfg = BUILTINS[key]
    return cfg if key == name else replace(cfg, name=name)


def load_config(source: str) -> ScenarioConfig:
    """A builtin name or the path of a JSON config file."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        return ScenarioConfig.from_dict(json.loads(path.read_text()))
    return builtin_scenario(source)


# --- running ----------------------------------------------------------------------

@dataclass
class CellResult:
    """One (parameter set, cut-off) reconstruction."""

    set_index: int
    N: int
    status: str
    metrics: dict = field(default_factory=dict)
    noiseless_metrics: dict = field(default_factory=dict)
    error: str = ""
    recon: ReconstructedProfile | None = field(default=None, repr=False)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    cells: list = field(default_factory=list)
    solves: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    table: UpsilonTable | None = None

    @property
    def ok(self) -> bool:
        return (all(c.status == "ok" for c in self.cells)
                and all(s["status"] == "ok" for s in self.solves))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _summarise(err: dict) -> dict:
    return {
        "l2": err["l2"], "linf": err["linf"], "imag_residual": err["imag_residual"],
        "skipped": err["skipped"],
        "modes": {n: {k: m[k] for k in ("abs_error", "rel_error", "recon", "true")}
                  for n, m in err["modes"].items()},
    }


def _run_parameter_set(config: ScenarioConfig, index: int):
    """Forward solve, measurement and every cut-off for one parameter set."""
    p = config.params[index]
    prof = config.build_profile()
    solve = {"set_index": index, "params": p.as_dict(), "label": p.label()}
    try:
        fld = solve_total_field(prof, p, config.grid, loss=config.loss)
    except SuperlensError as exc:
        solve.update(status="failed", error=f"{config.name}/set{index}: {exc}")
        return solve, None, [CellResult(index, N, "failed", error=solve["error"]) for N in config.cutoffs]
    solve.update(status="ok", min_rcond=fld.info.min_rcond, min_rcond_level=fld.info.min_rcond_level,
                 growth=fld.info.growth, residual=fld.info.residual)
    clean = sample_measurements(fld.trace_at, p, config.M)
    noisy = apply_noise(clean, config.noise, config.seed + index)
    cells = []
    for N in config.cutoffs:
        cell = CellResult(index, N, "ok")
        try:
            cell.recon = reconstruct_profile(noisy, N)
            cell.metrics = _summarise(profile_error(cell.recon, prof))
            cell.noiseless_metrics = _summarise(profile_error(reconstruct_profile(clean, N), prof))
        except SuperlensError as exc:
            cell.status, cell.error = "failed", f"{config.name}/set{index}/N={N}: {exc}"
        cells.append(cell)
    return solve, noisy, cells


def _worker(args):
    config_dict, index = args
    return _run_parameter_set(ScenarioConfig.from_dict(config_dict), index)


def run_scenario(config: ScenarioConfig, out_dir=None, workers: int = 1) -> ScenarioResult:
    """Run every (parameter set, cut-off) cell; write artifacts if ``out_dir`` is given.

    Numerical failures do not abort the run: the affected cells are marked
    ``failed`` with the error message and the other cells are kept.
    """
    result = ScenarioResult(config)
    if config.kind == "upsilon":
        result.table = upsilon_scan(config.n_max, list(config.params))
        result.solves.append({"status": "ok", "skipped": result.table.skipped})
    else:
        indices = range(len(config.params))
        if workers > 1 and len(indices) > 1:
            jobs = [(config.as_dict(), i) for i in indices]
            with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
                outputs = list(pool.map(_worker, jobs))
        else:
            outputs = [_run_parameter_set(config, i) for i in indices]
        for i, (solve, ms, cells) in zip(indices, outputs):
            result.solves.append(solve)
            if ms is not None:
                result.measurements[i] = ms
            result.cells.extend(cells)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = emit_plots(result, out)
        _write_summary(result, out, files)
    return result


def emit_plots(result: ScenarioResult, out_dir) -> list[Path]:
    """Write the CSV tables and SVG figures of a result; returns the paths.

    One overlay per successful cell (with its reconstruction CSV and mode
    table), the measurement CSV per parameter set, and for a scan the
    ``|Upsilon_n|`` chart with its CSV.
    """
    out = Path(out_dir)
    files = []
    if result.table is not None:
        t = result.table
        csv_path, svg_path = out / "upsilon.csv", out / "upsilon.svg"
        csv_path.write_text(t.to_csv())
        plot_upsilon(t.modes, t.values, t.labels(), svg_path)
        files += [csv_path, svg_path]
    for i, ms in sorted(result.measurements.items()):
        path = out / f"set{i}_measurements.csv"
        write_measurements(ms, path)
        files.append(path)
    if result.cells:
        truth = result.config.build_profile()
    for cell in result.cells:
        if cell.recon is None:
            continue
        stem = f"set{cell.set_index}_N{cell.N}"
        rec, modes, svg = (out / f"{stem}_reconstruction.csv", out / f"{stem}_modes.csv",
                           out / f"{stem}_overlay.svg")
        rec.write_text(reconstruction_csv(cell.recon, truth))
        modes.write_text(mode_table_csv(cell.recon))
        label = result.config.params[cell.set_index].label()
        plot_overlay(cell.recon.x, truth.f(cell.recon.x), cell.recon.profile, svg,
                     title=f"{label}, N = {cell.N}")
        files += [rec, modes, svg]
    return files


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def metrics_record(result: ScenarioResult) -> dict:
    cells = [{"set_index": c.set_index, "N": c.N, "status": c.status, "error": c.error,
              "metrics": c.metrics, "noiseless_metrics": c.noiseless_metrics}
             for c in result.cells]
    return _jsonable({"scenario": result.config.name, "solves": result.solves, "cells": cells})


def _write_summary(result: ScenarioResult, out: Path, files: list[Path]) -> None:
    (out / "metrics.json").write_text(json.dumps(metrics_record(result), indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(result.config.to_json() + "\n")
    names = sorted({f.name for f in files} | {"metrics.json", "config.json"})
    manifest = {
        "scenario": result.config.name,
        "package_version": __version__,
        "status": "ok" if result.ok else "failed",
        "files": {name: _sha256(out / name) for name in names},
    }
    # written last: its presence marks a complete run
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
