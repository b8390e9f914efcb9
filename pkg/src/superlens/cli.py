"""Command-line interface.

Exit codes: 0 success, 1 failed validation, 2 configuration error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .errors import SuperlensError
from .forward import (Grid, read_trace_csv, solve_total_field, trigonometric_interpolation, write_field_binary,
                      write_trace_csv)
from .measurement import (DEFAULT_M, DEFAULT_NOISE, apply_noise, read_measurements, sample_measurements,
                          write_measurements)
from .spectral import SceneParameters

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# --- shared flag groups ----------------------------------------------------------------

def _scene_flags(ap: argparse.ArgumentParser, defaults: bool = True) -> None:
    g = ap.add_argument_group("scene")
    d = SceneParameters()
    for name, val in (("eps-re", 1.0), ("eps-im", 0.0), ("mu-re", 1.0), ("mu-im", 0.0),
                      ("a", d.a), ("b", d.b), ("wavelength", d.wavelength), ("period", d.period)):
        g.add_argument(f"--{name}", type=float, default=val if defaults else None)


def _grid_flags(ap: argparse.ArgumentParser, defaults: bool = True) -> None:
    g = ap.add_argument_group("grid")
    d = Grid()
    g.add_argument("--grid-nx", type=int, default=d.nx if defaults else None)
    g.add_argument("--grid-ny", type=int, default=d.ny_omega if defaults else None,
                   help="levels in the corrugated layer and in the slab")
    g.add_argument("--loss", type=float, default=0.0 if defaults else None,
                   help="artificial absorption added to Im(eps)")


def _scene(args, base: SceneParameters | None = None) -> SceneParameters:
    base = base or SceneParameters()
    eps = complex(args.eps_re if args.eps_re is not None else base.eps.real,
                  args.eps_im if args.eps_im is not None else base.eps.imag)
    mu = complex(args.mu_re if args.mu_re is not None else base.mu.real,
                 args.mu_im if args.mu_im is not None else base.mu.imag)
    kw = {k: getattr(args, k) for k in ("a", "b", "wavelength", "period") if getattr(args, k) is not None}
    return base.replace(eps=eps, mu=mu, **kw)


def _grid(args, base: Grid | None = None) -> Grid:
    base = base or Grid()
    ny = args.grid_ny
    return Grid(args.grid_nx or base.nx, ny or base.ny_omega, ny or base.ny_slab)


def _cutoffs(values) -> tuple[int, ...]:
    out = []
    for v in values or []:
        out += [int(x) for x in str(v).split(",") if x]
    return tuple(out)


def _profile(name: str, delta: float | None):
    from .profiles import BUILTIN_PROFILES, Profile

    if name in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[name](delta) if delta is not None else BUILTIN_PROFILES[name]()
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"unknown profile {name!r}: not a builtin ({', '.join(BUILTIN_PROFILES)}) or a file")
    prof = Profile.from_dict(json.loads(path.read_text()))
    return prof.with_delta(delta) if delta is not None else prof


# --- subcommands ------------------------------------------------------------------

def cmd_forward(args) -> int:
    p = _scene(args)
    prof = _profile(args.profile, args.delta)
    fld = solve_total_field(prof, p, _grid(args), loss=args.loss)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(fld, out / "trace.csv")
    if args.field:
        write_field_binary(fld, out / "field.bin")
    print(f"trace written to {out / 'trace.csv'} (min rcond {fld.info.min_rcond:.1e}, "
          f"residual {fld.info.residual:.1e})")
    return EXIT_OK


def cmd_measure(args) -> int:
    x, u, meta = read_trace_csv(args.trace)
    p = meta["params"]
    ms = sample_measurements(lambda t: trigonometric_interpolation(u, t, p.period), p, args.M)
    if args.noise > 0:
        ms = apply_noise(ms, args.noise, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_measurements(ms, out)
    print(f"{args.M + 1} samples written to {out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    from .plotting import plot_overlay
    from .reconstruction import profile_error, reconstruct_profile, write_mode_table, write_reconstruction

    ms = read_measurements(args.measurements)
    truth = _profile(args.profile, args.delta) if args.profile else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = {}
    for N in _cutoffs(args.cutoff) or (10,):
        rec = reconstruct_profile(ms, N)
        write_reconstruction(rec, out / f"N{N}_reconstruction.csv", truth)
        write_mode_table(rec, out / f"N{N}_modes.csv")
        plot_overlay(rec.x, truth.f(rec.x) if truth else None, rec.profile, out / f"N{N}_overlay.svg",
                     title=f"{ms.params.label()}, N = {N}")
        if truth is not None:
            err = profile_error(rec, truth)
            metrics[N] = {"l2": err["l2"], "linf": err["linf"]}
            print(f"N={N}: l2 {err['l2']:.3e}, linf {err['linf']:.3e}")
    if metrics:
        (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_upsilon(args) -> int:
    from .analytic import upsilon_scan
    from .experiment import PARAMETER_ROWS
    from .plotting import plot_upsilon

    explicit = any(getattr(args, k) is not None for k in ("eps_re", "eps_im", "mu_re", "mu_im"))
    sets = [_scene(args)] if explicit else list(PARAMETER_ROWS.values())
    table = upsilon_scan(args.n_max, sets)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "upsilon.csv").write_text(table.to_csv())
    plot_upsilon(table.modes, table.values, table.labels(), out / "upsilon.svg")
    for s, n, reason in table.skipped:
        print(f"skipped set {s} mode {n}: {reason}")
    print(f"|Upsilon_n| for n <= {args.n_max} written to {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .experiment import ScenarioConfig, builtin_names, load_config, run_scenario

    if args.list or not args.scenario:
        print("\n".join(builtin_names()))
        return EXIT_OK
    cfg = load_config(args.scenario)
    changes = {}
    for key in ("seed", "noise", "delta", "loss", "M"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    if args.cutoff:
        changes["cutoffs"] = _cutoffs(args.cutoff)
    if args.profile:
        changes["profile"] = {"name": args.profile}
    if any(getattr(args, k) is not None for k in ("grid_nx", "grid_ny")):
        changes["grid"] = _grid(args, cfg.grid)
    scene_keys = ("eps_re", "eps_im", "mu_re", "mu_im", "a", "b", "wavelength", "period")
    if any(getattr(args, k) is not None for k in scene_keys):
        changes["params"] = (_scene(args, cfg.params[0]),)
    if changes:
        cfg = ScenarioConfig.from_dict({**cfg.as_dict(), **_jsonable_changes(changes)})
    out = Path(args.out) / cfg.name
    result = run_scenario(cfg, out, workers=args.workers)
    for cell in result.cells:
        if cell.status == "ok":
            print(f"set {cell.set_index} N={cell.N}: l2 {cell.metrics['l2']:.3e} "
                  f"(noiseless {cell.noiseless_metrics['l2']:.3e})")
        else:
            print(f"set {cell.set_index} N={cell.N}: FAILED {cell.error}")
    print(f"artifacts in {out}")
    return EXIT_OK if result.ok else EXIT_NUMERIC


def _jsonable_changes(changes: dict) -> dict:
    out = dict(changes)
    if "grid" in out:
        out["grid"] = out["grid"].as_dict()
    if "params" in out:
        out["params"] = [p.as_dict() for p in out["params"]]
    if "cutoffs" in out:
        out["cutoffs"] = list(out["cutoffs"])
    return out


def cmd_validate(args) -> int:
    from .validation import CHECKS, run_checks

    numbers = sorted(set(args.check)) if args.check else sorted(CHECKS)
    bad = [k for k in numbers if k not in CHECKS]
    if bad:
        raise ConfigError(f"unknown check(s) {bad}; available 1..{max(CHECKS)}")
    results = run_checks(numbers, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_CHECK


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superlens", description=__doc__.splitlines()[0])
    from . import __version__

    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="solve the full-wave problem and dump the y=b trace")
    _scene_flags(f)
    _grid_flags(f)
    f.add_argument("--profile", default="smooth", help="builtin name (smooth, tent, boxcar) or profile JSON")
    f.add_argument("--delta", type=float, default=None)
    f.add_argument("--field", action="store_true", help="also write the full field as field.bin")
    f.add_argument("--out", default="out/forward")
    f.set_defaults(func=cmd_forward)

    m = sub.add_parser("measure", help="sample a trace and apply multiplicative noise")
    m.add_argument("trace", help="trace CSV written by 'forward'")
    m.add_argument("--M", type=int, default=DEFAULT_M)
    m.add_argument("--noise", type=float, default=DEFAULT_NOISE)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default="out/measurements.csv")
    m.set_defaults(func=cmd_measure)

    r = sub.add_parser("reconstruct", help="recover the surface from a measurement CSV")
    r.add_argument("measurements")
    r.add_argument("--cutoff", action="append", help="N; repeat or comma-separate")
    r.add_argument("--profile", default=None, help="true profile for overlays and error metrics")
    r.add_argument("--delta", type=float, default=None)
    r.add_argument("--out", default="out/reconstruction")
    r.set_defaults(func=cmd_reconstruct)

    u = sub.add_parser("upsilon", help="|Upsilon_n| scan (five builtin parameter sets unless eps/mu given)")
    _scene_flags(u, defaults=False)
    u.add_argument("--n-max", type=int, default=40)
    u.add_argument("--out", default="out/upsilon")
    u.set_defaults(func=cmd_upsilon)

    e = sub.add_parser("experiment", help="run a builtin scenario or a JSON config")
    e.add_argument("scenario", nargs="?", help="builtin name or config file")
    e.add_argument("--list", action="store_true", help="list builtin scenarios")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--seed", type=int)
    e.add_argument("--noise", type=float)
    e.add_argument("--cutoff", action="append")
    e.add_argument("--profile")
    e.add_argument("--delta", type=float)
    e.add_argument("--M", type=int)
    _scene_flags(e, defaults=False)
    _grid_flags(e, defaults=False)
    e.add_argument("--out", default="out")
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("validate", help="run the acceptance checks")
    v.add_argument("--check", type=int, action="append", help="run only these check numbers")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except SuperlensError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
